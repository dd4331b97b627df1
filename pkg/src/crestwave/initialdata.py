"""Initial-data constructors: trivial and smooth disc states, periodic line
waves, and the symmetric two-crest pinch family.

The pinch family is built from the model conformal derivative

    Psi_z(z) = scale * (1 - z^2)^(nu - 1),   0 < nu < 1/2,

whose reciprocal vanishes at z = +-1, so the boundary carries two symmetric
crests of interior angle nu*pi at a = 0 and a = pi.  Z is the term-wise
integral of the binomial series of Psi_z truncated at taylor_terms, sampled
exactly on the offset grid, so Z is a polynomial in e^{ia} and exactly
holomorphic at the discrete level.  The initial velocity is the scaled
rotation-reversal field ztbar = -eps e^{ia} (crests approach head-on).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MODE_DISC, MODE_LINE, WaveState, derive, validate
from .spectral import Field, Grid, interpolate

TWO_PI = 2.0 * np.pi


class InitialDataError(ValueError):
    pass


def _state(mode, g, z, ztbar, labels=None, cell_weight=1.0) -> WaveState:
    labels = np.asarray([] if labels is None else labels, dtype=float)
    return WaveState(t=0.0, mode=mode, g=g, z=z, ztbar=ztbar,
                     label_alphas=labels, label_pos=labels.copy(),
                     cell_weight=cell_weight)


def disc_trivial(c: complex, n: int = 256, offset: float = 0.5) -> WaveState:
    """Unit circle translating rigidly with velocity c (zero-energy state)."""
    grid = Grid(n, offset)
    z = Field(grid, np.exp(1j * grid.nodes))
    ztbar = Field.constant(grid, np.conj(c))
    return _state(MODE_DISC, 0.0, z, ztbar)


def disc_smooth(R: float, delta: complex, m: int, vel_modes: dict | None = None,
                n: int = 256, offset: float = 0.5,
                labels=None) -> WaveState:
    """Perturbed circle Z = R e^{ia} + delta e^{i m a} with a holomorphic
    velocity given by ``vel_modes`` = {mode >= 0: coefficient of conj(Z_t)}."""
    if R <= abs(m) * abs(delta):
        raise InitialDataError("univalence margin violated: need R > |m| |delta|")
    grid = Grid(n, offset)
    al = grid.nodes
    z = Field(grid, R * np.exp(1j * al) + delta * np.exp(1j * m * al))
    vals = np.zeros(n, dtype=np.complex128)
    for mode, coef in (vel_modes or {}).items():
        if mode < 0:
            raise InitialDataError("conj(Z_t) modes must be >= 0 for a disc state")
        vals += coef * np.exp(1j * mode * al)
    state = _state(MODE_DISC, 0.0, z, Field(grid, vals), labels)
    problems = validate(state)
    if problems:
        raise InitialDataError("; ".join(problems))
    return state


def disc_rotation_reversal(eps: float, R: float = 1.0, n: int = 256,
                           offset: float = 0.5) -> WaveState:
    """The reference state used across the test oracles: circle of radius R
    with conj(Z_t) = -eps e^{ia} (A0 = eps^2 everywhere)."""
    return disc_smooth(R, 0.0, 2, {1: -eps}, n=n, offset=offset)


def line_wave(g: float, a: float, k: int, vel_amp: complex = 0.0,
              n: int = 256, offset: float = 0.0, labels=None) -> WaveState:
    """Periodic surrogate wave W = a e^{-i k a'} with optional holomorphic
    velocity conj(Z_t) = vel_amp e^{-i k a'} (modes <= 0 convention)."""
    if k < 1:
        raise InitialDataError("wavenumber k must be >= 1")
    if abs(a) * k >= 0.2:
        raise InitialDataError("graph margin violated: need |a| k < 0.2")
    grid = Grid(n, offset)
    al = grid.nodes
    w = Field(grid, a * np.exp(-1j * k * al))
    ztbar = Field(grid, vel_amp * np.exp(-1j * k * al))
    state = _state(MODE_LINE, g, w, ztbar, labels)
    problems = validate(state)
    if problems:
        raise InitialDataError("; ".join(problems))
    return state


# ----------------------------------------------------------------------
# Angled-crest pinch family
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CrestSpec:
    """Two-crest symmetric pinch data: corner angle nu*pi, velocity amplitude
    eps, binomial-series truncation, and the overall map scale."""

    nu: float
    eps: float
    taylor_terms: int = 200_000
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.nu < 0.5:
            raise InitialDataError(f"corner parameter nu must lie in (0, 1/2), got {self.nu}")
        if self.eps < 0.0:
            raise InitialDataError("eps must be nonnegative")
        if self.taylor_terms < 64:
            raise InitialDataError("taylor_terms must be >= 64")
        if self.scale <= 0.0:
            raise InitialDataError("scale must be positive")


def crest_series_coeffs(nu: float, terms: int) -> np.ndarray:
    """Binomial coefficients C_j of (1 - u)^(nu-1) = sum_j C_j u^j (all > 0)."""
    j = np.arange(1, terms + 1, dtype=float)
    return np.concatenate(([1.0], np.cumprod((j - nu) / j)))


def _sample_odd_polynomial(coeffs_odd: np.ndarray, grid: Grid) -> np.ndarray:
    """Exact samples of sum_j coeffs_odd[j] e^{i (2j+1) a} on the offset grid.

    Evaluates by placing the coefficients on a large FFT grid that contains
    the offset nodes exactly (offset must be a dyadic fraction).
    """
    n = grid.n
    deg = 2 * (len(coeffs_odd) - 1) + 1
    big = n
    while big < 2 * (deg + 1):
        big *= 2
    frac = grid.offset  # nodes at (j + frac)/n * 2pi = (j*big/n + frac*big/n)/big * 2pi
    shift = frac * big / n
    if abs(shift - round(shift)) > 1e-12:
        # fall back to direct evaluation (non-dyadic offset)
        al = grid.nodes
        out = np.zeros(n, dtype=np.complex128)
        z = np.exp(2j * al)
        acc = np.exp(1j * al)
        for c in coeffs_odd:
            out += c * acc
            acc = acc * z
        return out
    spec = np.zeros(big, dtype=np.complex128)
    spec[1:deg + 1:2] = coeffs_odd
    vals = np.fft.ifft(spec) * big
    idx = (np.arange(n) * (big // n) + int(round(shift))) % big
    return vals[idx]


def disc_crest_pinch(spec: CrestSpec, n: int = 2048, offset: float = 0.5,
                     extra_labels=None, band_limit: int | None = None) -> WaveState:
    """Symmetric two-crest state with crests at a = 0 and a = pi.

    Z(a) = scale * sum_j C_j e^{i(2j+1)a}/(2j+1), the term-wise integral of
    the binomial series of (1 - z^2)^(nu-1) truncated at taylor_terms and
    additionally at the grid's dealiasing band (modes 2j+1 <= cutoff), so the
    sampled Z is a polynomial in e^{ia}: exactly holomorphic and alias-free
    at the discrete level.  conj(Z_t) = -eps e^{ia}, so the crests approach
    head-on with closing speed v = 2 eps.  Labels at the two crests are
    always tracked; ``extra_labels`` appends a ladder.

    The truncation floor leaves an interpolated crest trace |1/Z_a| of size
    about (0.9 / scale) * J^(nu-1) with J the effective number of terms; a
    larger ``scale`` pushes it down without changing the crest angle.

    ``band_limit`` (default: the grid's dealiasing cutoff) fixes both the
    series taper and the grid's retained band, so the same polynomial map and
    operator band can be sampled on grids of different size for refinement
    comparisons.
    """
    grid = Grid(n, offset) if band_limit is None else Grid(n, offset, band_limit)
    band = grid.cutoff
    if band > n // 2:
        raise InitialDataError("band_limit exceeds the grid's representable band")
    j_band = max(1, (band - 1) // 2)
    j_eff = min(spec.taylor_terms, j_band)
    cj = crest_series_coeffs(spec.nu, j_eff)
    zcoef = spec.scale * cj / (2.0 * np.arange(len(cj)) + 1.0)
    if spec.taylor_terms < j_band:
        # the requested truncation under-uses the grid: the first omitted
        # coefficient must be negligible for the state to be grid-converged
        omitted = crest_series_coeffs(spec.nu, spec.taylor_terms + 1)[-1] \
            / (2.0 * spec.taylor_terms + 3.0)
        if omitted > 1e-10:
            raise InitialDataError(
                f"series tail {omitted:.2e} above 1e-10 at taylor_terms="
                f"{spec.taylor_terms}; increase taylor_terms (grid band holds "
                f"{j_band} terms)")
    else:
        # smooth (8th-order exponential) taper to the band edge: a hard cut
        # leaves Gibbs ringing at the crest whose reciprocal pollutes the
        # derived fields; the tapered map is still an exact polynomial
        modes_used = 2.0 * np.arange(len(zcoef)) + 1.0
        zcoef = zcoef * np.exp(np.log(1e-16) * (modes_used / band) ** 8)
    zvals = _sample_odd_polynomial(zcoef, grid)
    z = Field(grid, zvals)
    ztbar = Field(grid, -spec.eps * np.exp(1j * grid.nodes))
    labels = [0.0, np.pi]
    if extra_labels is not None:
        labels.extend(float(x) for x in extra_labels)
    state = _state(MODE_DISC, 0.0, z, ztbar, labels)
    if np.max(np.abs(ztbar.values)) > 0 and validate(state, holo_tol=1e-6):
        raise InitialDataError("; ".join(validate(state)))
    return state


def pinch_geometry(state: WaveState) -> dict:
    """Crest separation d, closing speed v, and the crest traces of the state."""
    f = derive(state)
    crest = np.array([0.0, np.pi])
    zvals = interpolate(state.z, crest)
    ztvals = np.conj(interpolate(state.ztbar, crest))
    inv = interpolate(f.inv_zap, crest)
    d = float(np.abs(zvals[0] - zvals[1]))
    v = float(np.abs(ztvals[0] - ztvals[1]))
    return {
        "d": d,
        "v": v,
        "zt_crest": ztvals,
        "inv_zap_crest": np.abs(inv),
        "sigma": float(np.abs(zvals[0])),
    }
