"""Periodic spectral toolbox on [0, 2pi).

Uniform grids, Fourier multiplier operators (Hilbert transforms in the disc
and lower-half-plane conventions, |d/da|, |d/da|^(1/2)), singular-integral
brackets with principal-value quadrature oracles, and the L2 / Linf / H-half
norms used by the energy functionals.

Conventions.  Fourier coefficients are f_hat(m) = (1/2pi) int_0^2pi
f(a) e^{-i m a} da, so f(a) = sum_m f_hat(m) e^{i m a}.  The tilde Hilbert
transform of the disc has symbol sgn(m) (sgn(0) = 0); the lower-half-plane
("line") convention has symbol -sgn(m).  The plus-average variants add the
mean back: H = Htilde + Av.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi

# Coefficient floor applied after nonlinear products (Krasny-style filter).
KRASNY_EPS = 1e-13


class SpectralError(ValueError):
    """Invalid grid, field, or operator input."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with nodes a_j = 2pi (j + offset) / n.

    n must be a power of two (>= 16).  cutoff is the largest retained |mode|
    after dealiasing; the default floor(n/3) is the two-thirds rule for
    quadratic products.  offset in [0, 1) shifts the nodes by a fraction of
    the spacing, used to keep singular crest points between nodes.
    """

    n: int
    offset: float = 0.0
    cutoff: int = 0  # 0 means "use the default floor(n/3)"

    def __post_init__(self):
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise SpectralError(f"grid size must be a power of two >= 16, got {self.n}")
        if not 0.0 <= self.offset < 1.0:
            raise SpectralError(f"grid offset must lie in [0, 1), got {self.offset}")
        if self.cutoff == 0:
            object.__setattr__(self, "cutoff", self.n // 3)
        if not 0 < self.cutoff <= self.n // 2:
            raise SpectralError(f"cutoff must lie in (0, n/2], got {self.cutoff}")

    @cached_property
    def nodes(self) -> np.ndarray:
        return TWO_PI * (np.arange(self.n) + self.offset) / self.n

    @cached_property
    def modes(self) -> np.ndarray:
        # FFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1
        return np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n)).astype(int)

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @cached_property
    def _phase(self) -> np.ndarray:
        # e^{-i m a_0-shift}: relates FFT output to coefficients on the offset grid.
        return np.exp(-1j * self.modes * (TWO_PI * self.offset / self.n))

    def shifted(self, delta: float) -> "Grid":
        """Grid with nodes moved by delta grid spacings (offset mod 1)."""
        return Grid(self.n, (self.offset + delta) % 1.0, self.cutoff)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a Grid with a lazily computed spectral view."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != (self.grid.n,):
            raise SpectralError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs: np.ndarray) -> "Field":
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (grid.n,):
            raise SpectralError(f"expected {grid.n} coefficients, got shape {coeffs.shape}")
        values = np.fft.ifft(coeffs / grid._phase) * grid.n
        f = cls(grid, values)
        object.__setattr__(f, "_coeffs_cache", coeffs.copy())
        return f

    @classmethod
    def constant(cls, grid: Grid, c: complex) -> "Field":
        return cls(grid, np.full(grid.n, c, dtype=np.complex128))

    @property
    def coeffs(self) -> np.ndarray:
        cached = getattr(self, "_coeffs_cache", None)
        if cached is None:
            cached = np.fft.fft(self.values) * self.grid._phase / self.grid.n
            object.__setattr__(self, "_coeffs_cache", cached)
        return cached

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    # -- pointwise algebra (no dealiasing; use nlmul for products feeding
    #    the evolution or norms of nonlinear quantities) --------------------

    def _lift(self, other) -> np.ndarray:
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise SpectralError("grid mismatch in field arithmetic")
            return other.values
        return np.asarray(other)

    def __add__(self, other):
        return Field(self.grid, self.values + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._lift(other))

    def __rsub__(self, other):
        return Field(self.grid, self._lift(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._lift(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._lift(other))

    def __rtruediv__(self, other):
        return Field(self.grid, self._lift(other) / self.values)

    def __neg__(self):
        return Field(self.grid, -self.values)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values))

    def real(self) -> "Field":
        return Field(self.grid, self.values.real.astype(np.complex128))

    def imag(self) -> "Field":
        """Im f as a real-valued field (not i Im f)."""
        return Field(self.grid, self.values.imag.astype(np.complex128))

    def mean(self) -> complex:
        return complex(np.mean(self.values))


class Multiplier(Enum):
    """Fourier multiplier operators; symbols act on coefficient m."""

    HILBERT_DISC = "hilbert_disc"          # sgn(m), mean -> 0
    HILBERT_DISC_AVG = "hilbert_disc_avg"  # sgn(m), mean kept (Htilde + Av)
    HILBERT_LINE = "hilbert_line"          # -sgn(m), mean -> 0
    HILBERT_LINE_AVG = "hilbert_line_avg"  # -sgn(m), mean kept
    ABS_D = "abs_d"                        # |m|
    ABS_D_HALF = "abs_d_half"              # |m|^(1/2)
    DERIV = "deriv"                        # i m
    PROJ_HOLO_DISC = "proj_holo_disc"      # keep m >= 0
    PROJ_ANTI_DISC = "proj_anti_disc"      # keep m <= -1
    PROJ_HOLO_LINE = "proj_holo_line"      # keep m <= 0
    PROJ_ANTI_LINE = "proj_anti_line"      # keep m >= 1


def _symbol(kind: Multiplier, modes: np.ndarray) -> np.ndarray:
    sgn = np.sign(modes)
    if kind is Multiplier.HILBERT_DISC:
        return sgn.astype(np.complex128)
    if kind is Multiplier.HILBERT_DISC_AVG:
        return (sgn + (modes == 0)).astype(np.complex128)
    if kind is Multiplier.HILBERT_LINE:
        return (-sgn).astype(np.complex128)
    if kind is Multiplier.HILBERT_LINE_AVG:
        return (-sgn + (modes == 0)).astype(np.complex128)
    if kind is Multiplier.ABS_D:
        return np.abs(modes).astype(np.complex128)
    if kind is Multiplier.ABS_D_HALF:
        return np.sqrt(np.abs(modes)).astype(np.complex128)
    if kind is Multiplier.DERIV:
        return 1j * modes
    if kind is Multiplier.PROJ_HOLO_DISC:
        return (modes >= 0).astype(np.complex128)
    if kind is Multiplier.PROJ_ANTI_DISC:
        return (modes <= -1).astype(np.complex128)
    if kind is Multiplier.PROJ_HOLO_LINE:
        return (modes <= 0).astype(np.complex128)
    if kind is Multiplier.PROJ_ANTI_LINE:
        return (modes >= 1).astype(np.complex128)
    raise SpectralError(f"unknown multiplier kind {kind}")


# Test hook: when True, the Hilbert symbols are corrupted (negative control
# for the verification suite; see cli.cmd_verify).
_CORRUPT_HILBERT = False


def apply_multiplier(kind: Multiplier, f: Field) -> Field:
    """Apply a Fourier multiplier; modes above the grid cutoff are zeroed."""
    if not f.is_finite():
        raise SpectralError("non-finite samples passed to apply_multiplier")
    modes = f.grid.modes
    sym = _symbol(kind, modes)
    if _CORRUPT_HILBERT and kind.value.startswith("hilbert"):
        sym = sym + 0.01 * (modes == 1)
    coeffs = f.coeffs * sym
    coeffs = np.where(np.abs(modes) <= f.grid.cutoff, coeffs, 0.0)
    return Field.from_coeffs(f.grid, coeffs)


def deriv(f: Field) -> Field:
    return apply_multiplier(Multiplier.DERIV, f)


def hilbert_tilde(f: Field, mode: str) -> Field:
    kind = Multiplier.HILBERT_DISC if mode == "disc" else Multiplier.HILBERT_LINE
    return apply_multiplier(kind, f)


def hilbert_avg(f: Field, mode: str) -> Field:
    kind = Multiplier.HILBERT_DISC_AVG if mode == "disc" else Multiplier.HILBERT_LINE_AVG
    return apply_multiplier(kind, f)


def dealias(f: Field) -> Field:
    modes = f.grid.modes
    coeffs = np.where(np.abs(modes) <= f.grid.cutoff, f.coeffs, 0.0)
    return Field.from_coeffs(f.grid, coeffs)


def krasny_filter(f: Field, eps: float = KRASNY_EPS) -> Field:
    """Zero Fourier coefficients below eps to suppress round-off seeding."""
    coeffs = np.where(np.abs(f.coeffs) >= eps, f.coeffs, 0.0)
    return Field.from_coeffs(f.grid, coeffs)


def nlmul(f: Field, g: Field, eps: float = KRASNY_EPS) -> Field:
    """Pointwise product with two-thirds dealiasing and the Krasny floor."""
    if f.grid != g.grid:
        raise SpectralError("grid mismatch in nlmul")
    return krasny_filter(dealias(Field(f.grid, f.values * g.values)), eps)


def average(f: Field) -> complex:
    return f.mean()


# ----------------------------------------------------------------------
# Norms
# ----------------------------------------------------------------------

def norm_l2(f: Field, weight: float = 1.0) -> float:
    """(weight * int |f|^2 da)^(1/2) by the trapezoid rule (exact on the grid)."""
    return float(np.sqrt(weight * np.sum(np.abs(f.values) ** 2) * f.grid.spacing))


def norm_linf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def norm_hhalf(f: Field, weight: float = 1.0) -> float:
    """Homogeneous H^(1/2) seminorm: (weight * 2pi sum |m| |f_hat(m)|^2)^(1/2)."""
    return float(np.sqrt(weight * TWO_PI * np.sum(np.abs(f.grid.modes) * np.abs(f.coeffs) ** 2)))


def norm_linf_cap_hhalf(f: Field, weight: float = 1.0) -> float:
    """Sum realization of the Linf intersect H-half norm."""
    return norm_linf(f) + norm_hhalf(f, weight)


def norm(kind: str, f: Field, weight: float = 1.0) -> float:
    if not f.is_finite():
        raise SpectralError("non-finite samples passed to norm")
    if kind == "l2":
        return norm_l2(f, weight)
    if kind == "linf":
        return norm_linf(f)
    if kind == "hhalf":
        return norm_hhalf(f, weight)
    if kind == "linf_cap_hhalf":
        return norm_linf_cap_hhalf(f, weight)
    raise SpectralError(f"unknown norm kind {kind!r}")


def hhalf_quadrature(f: Field, weight: float = 1.0) -> float:
    """H^(1/2) seminorm by the sine-kernel double integral,

        ||f||^2 = (1/8pi) int int |(f(a) - f(b)) / sin((b - a)/2)|^2 db da.

    The outer variable runs over the half-spacing-shifted grid so the
    principal value never hits a node; exact for band-limited f.
    """
    grid = f.grid
    targets = to_offset_grid(f, 0.5)
    a = targets.grid.nodes[:, None]
    b = grid.nodes[None, :]
    s = np.sin((b - a) / 2.0)
    diff = targets.values[:, None] - f.values[None, :]
    integrand = np.abs(diff / s) ** 2
    h = grid.spacing
    return float(np.sqrt(weight * np.sum(integrand) * h * h / (8.0 * np.pi)))


def hhalf_quadrature_fn(func, n: int) -> float:
    """Same double integral with the integrand built from direct evaluations
    of ``func`` at the n quadrature points (no sampling/interpolation), so it
    is an oracle independent of the spectral representation."""
    grid = Grid(n)
    a = (grid.nodes + 0.5 * grid.spacing)[:, None]
    b = grid.nodes[None, :]
    fa = np.asarray(func(a[:, 0]), dtype=np.complex128)[:, None]
    fb = np.asarray(func(b[0, :]), dtype=np.complex128)[None, :]
    integrand = np.abs((fa - fb) / np.sin((b - a) / 2.0)) ** 2
    h = grid.spacing
    return float(np.sqrt(np.sum(integrand) * h * h / (8.0 * np.pi)))


# ----------------------------------------------------------------------
# Interpolation / resampling
# ----------------------------------------------------------------------

def interpolate(f: Field, alpha) -> np.ndarray | complex:
    """Evaluate the trigonometric interpolant sum_m f_hat(m) e^{i m a}."""
    alphas = np.atleast_1d(np.asarray(alpha, dtype=float))
    phases = np.exp(1j * np.outer(alphas, f.grid.modes))
    out = phases @ f.coeffs
    if np.isscalar(alpha) or np.asarray(alpha).ndim == 0:
        return complex(out[0])
    return out


def to_offset_grid(f: Field, delta: float) -> Field:
    """Exact band-limited resample onto the grid shifted by delta spacings."""
    return Field.from_coeffs(f.grid.shifted(delta), f.coeffs)


def resample(f: Field, m: int, floor: float = KRASNY_EPS) -> tuple[Field, bool]:
    """Spectral zero-pad or truncation to an m-node grid.

    Returns (field, lossy): lossy is True when truncation removes coefficients
    above the Krasny floor.
    """
    new_grid = Grid(m, f.grid.offset)
    old_modes = f.grid.modes
    coeffs = f.coeffs
    keep = (old_modes >= -(m // 2)) & (old_modes <= m // 2 - 1)
    lossy = bool(np.any(np.abs(coeffs[~keep]) > floor)) if not np.all(keep) else False
    new_coeffs = np.zeros(m, dtype=np.complex128)
    new_mode_index = {int(mm): i for i, mm in enumerate(new_grid.modes)}
    for i, mm in enumerate(old_modes):
        if keep[i]:
            new_coeffs[new_mode_index[int(mm)]] = coeffs[i]
    return Field.from_coeffs(new_grid, new_coeffs), lossy


# ----------------------------------------------------------------------
# Singular-integral brackets
# ----------------------------------------------------------------------

def _bracket_mult_1(f: Field, g: Field, mode: str) -> Field:
    # [f, Htilde] g = f Htilde g - Htilde(f g)
    return nlmul(f, hilbert_tilde(g, mode)) - hilbert_tilde(nlmul(f, g), mode)


def _bracket_mult_2(f1: Field, f2: Field, g: Field, mode: str) -> Field:
    # Polarization of [f, f; g] = 2 [f, Htilde] d(f g) - [f^2, Htilde] d g:
    # [f1, f2; g] = [f1, Htilde] d(f2 g) + [f2, Htilde] d(f1 g) - [f1 f2, Htilde] d g
    return (
        _bracket_mult_1(f1, deriv(nlmul(f2, g)), mode)
        + _bracket_mult_1(f2, deriv(nlmul(f1, g)), mode)
        - _bracket_mult_1(nlmul(f1, f2), deriv(g), mode)
    )


def _bracket_mult_3(h: Field, f1: Field, f2: Field, g: Field, mode: str) -> Field:
    # Inverted Leibniz rule for the order-2 bracket:
    # [h, f1, f2; g] = (1/2) { [h df1, f2; g] + [f1, h df2; g]
    #                          + [f1, f2; d(h g)] - h d[f1, f2; g] }
    inner = _bracket_mult_2(f1, f2, g, mode)
    out = (
        _bracket_mult_2(nlmul(h, deriv(f1)), f2, g, mode)
        + _bracket_mult_2(f1, nlmul(h, deriv(f2)), g, mode)
        + _bracket_mult_2(f1, f2, deriv(nlmul(h, g)), mode)
        - nlmul(h, deriv(inner))
    )
    return Field(out.grid, 0.5 * out.values)


def _bracket_quad(order: int, fs: list[Field], g: Field, mode: str) -> Field:
    """Principal-value quadrature on the half-spacing-shifted target grid.

    Disc-convention kernels (beta - alpha argument); the line convention is
    the negative.  Exact for band-limited inputs, spectrally accurate else.
    """
    grid = g.grid
    targets = grid.shifted(0.5)
    a = targets.nodes[:, None]
    b = grid.nodes[None, :]
    fs_t = [to_offset_grid(f, 0.5).values[:, None] for f in fs]
    fs_b = [f.values[None, :] for f in fs]
    gb = g.values[None, :]
    h = grid.spacing
    if order == 1:
        ker = np.cos((b - a) / 2.0) / np.sin((b - a) / 2.0)
        integrand = (fs_t[0] - fs_b[0]) * ker * gb
        vals = integrand.sum(axis=1) * h / (TWO_PI * 1j)
    elif order == 2:
        s = np.sin((b - a) / 2.0)
        integrand = (fs_t[0] - fs_b[0]) * (fs_t[1] - fs_b[1]) / s**2 * gb
        vals = -integrand.sum(axis=1) * h / (4.0 * np.pi * 1j)
    elif order == 3:
        s = np.sin((b - a) / 2.0)
        integrand = (
            (fs_t[0] - fs_b[0]) * (fs_t[1] - fs_b[1]) * (fs_t[2] - fs_b[2])
            / s**3 * np.cos((b - a) / 2.0) * gb
        )
        vals = integrand.sum(axis=1) * h / (8.0 * np.pi * 1j)
    else:
        raise SpectralError(f"bracket order must be 1, 2 or 3, got {order}")
    if mode == "line":
        vals = -vals
    on_targets = Field(targets, vals)
    return dealias(to_offset_grid(on_targets, -0.5))


def bracket(order: int, fs: list[Field], g: Field, method: str = "multiplier",
            mode: str = "disc") -> Field:
    """Singular-integral bracket [f_1, ..., f_order; g].

    order=1 is the commutator [f, Htilde] g.  method="multiplier" evaluates
    through Hilbert-transform commutators (order 2 by polarization, order 3
    by the inverted Leibniz rule); method="quadrature" evaluates the
    principal-value sine/cotangent-kernel integral directly and serves as the
    independent oracle.
    """
    if len(fs) != order:
        raise SpectralError(f"bracket order {order} needs {order} f-fields, got {len(fs)}")
    for f in fs + [g]:
        if f.grid != g.grid:
            raise SpectralError("grid mismatch in bracket")
        if not f.is_finite():
            raise SpectralError("non-finite samples passed to bracket")
    if mode not in ("disc", "line"):
        raise SpectralError(f"unknown mode {mode!r}")
    if method == "quadrature":
        return _bracket_quad(order, fs, g, mode)
    if method != "multiplier":
        raise SpectralError(f"unknown bracket method {method!r}")
    if order == 1:
        return _bracket_mult_1(fs[0], g, mode)
    if order == 2:
        return _bracket_mult_2(fs[0], fs[1], g, mode)
    return _bracket_mult_3(fs[0], fs[1], fs[2], g, mode)
