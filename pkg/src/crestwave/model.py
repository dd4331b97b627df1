"""Water-wave state in conformal boundary coordinates and the right-hand
sides of the boundary evolution systems.

Two modes are supported.  "disc": the fluid fills a bounded simply-connected
domain, parametrized from the unit disc; the system is

    b      = Re (I - Htilde) ((Z_t - Av Z_t) / Z_a)
    A0     = Im [Z_t, Htilde] conj(Z_t)_a           (nonnegative)
    Ztt_b  = i A0 / Z_a
    d_t Z  = Z_t - b Z_a,   d_t conj(Z_t) = Ztt_b - b d_a conj(Z_t)

"line": a 2pi-periodic surrogate of the unbounded (lower-half-plane) problem
with gravity g >= 0, Z(a) = a + W(a) with W periodic, and

    b      = Re (I - H) (Z_t / Z_a)
    A_g    = g + A0
    Ztt_b  = i g - i A_g / Z_a

The prognostic variables are (Z, conj(Z_t)) (W in place of Z in line mode);
Z_a and 1/Z_a are diagnosed spectrally.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .spectral import (
    Field,
    Grid,
    average,
    dealias,
    deriv,
    hilbert_avg,
    hilbert_tilde,
    interpolate,
    krasny_filter,
    nlmul,
    norm_l2,
)

MODE_DISC = "disc"
MODE_LINE = "line"

# |Z_a| below this at a grid node means the crest has collided with the grid.
NEAR_SINGULAR_TOL = 1e-8


class ModelError(ValueError):
    pass


class NearSingularNodeError(ModelError):
    """|Z_a| fell below tolerance at a grid node."""


class NumericalConsistencyError(ModelError):
    """A derived quantity violated a structural sign/reality constraint."""


@dataclass(frozen=True, eq=False)
class WaveState:
    """State (Z, conj(Z_t)) at time t plus tracked label positions.

    In line mode ``z`` stores the periodic part W, Z(a) = a + W(a), and
    ``cell_weight`` is the measure weight for integral norms (1 for a state
    occupying one 2pi periodization cell; scaling transforms adjust it).
    """

    t: float
    mode: str
    g: float
    z: Field
    ztbar: Field
    label_alphas: np.ndarray
    label_pos: np.ndarray
    cell_weight: float = 1.0

    def __post_init__(self):
        if self.mode not in (MODE_DISC, MODE_LINE):
            raise ModelError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_DISC and self.g != 0.0:
            raise ModelError("disc mode has no gravity term")
        if self.g < 0.0:
            raise ModelError("gravity must be nonnegative")
        la = np.asarray(self.label_alphas, dtype=float).copy()
        lp = np.asarray(self.label_pos, dtype=float).copy()
        if la.shape != lp.shape:
            raise ModelError("label arrays must have matching shapes")
        la.setflags(write=False)
        lp.setflags(write=False)
        object.__setattr__(self, "label_alphas", la)
        object.__setattr__(self, "label_pos", lp)

    @property
    def grid(self) -> Grid:
        return self.z.grid

    def zt(self) -> Field:
        return self.ztbar.conj()

    def z_values(self) -> Field:
        """Z samples (line mode: a + W, not periodic; for geometry output)."""
        if self.mode == MODE_DISC:
            return self.z
        return Field(self.grid, self.grid.nodes + self.z.values)

    def z_at(self, alpha) -> np.ndarray | complex:
        """Z evaluated at arbitrary positions via the spectral interpolant."""
        if self.mode == MODE_DISC:
            return interpolate(self.z, alpha)
        return np.asarray(alpha) + interpolate(self.z, alpha)


def hilbert_for_mode(state_mode: str):
    """The mode's plus-average Hilbert transform H = Htilde + Av."""
    def op(f: Field) -> Field:
        return hilbert_avg(f, state_mode)
    return op


def holo_residual(state: WaveState) -> float:
    """|| (I - H_mode) conj(Z_t) ||_2 / max(1, ||conj(Z_t)||_2)."""
    r = state.ztbar - hilbert_avg(state.ztbar, state.mode)
    return norm_l2(r) / max(1.0, norm_l2(state.ztbar))


def winding_number(state: WaveState) -> int:
    if state.mode != MODE_DISC:
        raise ModelError("winding is defined for disc states")
    zc = state.z.values - np.mean(state.z.values)
    dtheta = np.angle(np.roll(zc, -1) / zc)
    return int(np.rint(np.sum(dtheta) / (2.0 * np.pi)))


def validate(state: WaveState, holo_tol: float = 1e-6) -> list[str]:
    """Structural sanity checks; returns a list of violation messages."""
    problems = []
    if not (state.z.is_finite() and state.ztbar.is_finite()):
        problems.append("non-finite samples")
        return problems
    if holo_residual(state) > holo_tol:
        problems.append(f"holomorphicity residual {holo_residual(state):.3e} > {holo_tol:g}")
    zap = _zap(state)
    if np.min(np.abs(zap.values)) <= NEAR_SINGULAR_TOL:
        problems.append("|Z_a| vanishes at a grid node")
    if state.mode == MODE_DISC:
        if winding_number(state) != 1:
            problems.append(f"winding {winding_number(state)} != 1")
    else:
        if np.max(np.abs(state.z.values)) >= np.pi:
            problems.append("||W||_inf >= pi")
    return problems


def _zap(state: WaveState) -> Field:
    if state.mode == MODE_DISC:
        return deriv(state.z)
    return 1.0 + deriv(state.z)


@dataclass(frozen=True, eq=False)
class DerivedFields:
    """Per-state cache of the diagnosed fields entering the evolution and
    the energy functionals."""

    zap: Field          # Z_a
    inv_zap: Field      # 1 / Z_a
    omega: Field        # Z_a / |Z_a|
    b: Field            # real coordinate drift
    bap: Field          # b_a
    a: Field            # A0 (disc) or A_g = g + A0 (line); real, >= 0
    sqrt_a: Field
    zt_ap: Field        # d_a Z_t
    ztbar_ap: Field     # d_a conj(Z_t)
    dap_zt: Field       # D_a Z_t
    dap_ztbar: Field    # D_a conj(Z_t)
    zttbar: Field       # conj(Z_tt)
    dt_inv_zap: Field   # D_t (1/Z_a)
    q: Field | None     # e^{ia} / Z_a (disc only)
    dt_q: Field | None  # D_t q (disc only)


def compute_A(state: WaveState, method: str = "multiplier") -> Field:
    """The Taylor-sign weight: A0 (disc) or A_g = g + A0 (line).

    A0 = Im [Z_t, Htilde_disc] conj(Z_t)_a in both modes (the line system's
    -Im [Z_t, H] conj(Z_t)_a reduces to this under periodization), equal to
    the positive sine-kernel quadrature (1/8pi) int |DZ_t / sin|^2 db'.
    """
    from .spectral import bracket

    zt = state.zt()
    ztbar_ap = deriv(state.ztbar)
    if method == "quadrature":
        br = bracket(2, [zt, state.ztbar], Field.constant(state.grid, 1.0), "quadrature", "disc")
        a0vals = (-0.5j * br.values).real
    else:
        br = bracket(1, [zt], ztbar_ap, "multiplier", state.mode)
        sign = 1.0 if state.mode == MODE_DISC else -1.0
        a0vals = sign * br.values.imag
    scale = 1.0 + float(np.max(np.abs(a0vals)))
    if np.min(a0vals) < -1e-8 * scale:
        raise NumericalConsistencyError(
            f"A went negative beyond tolerance: min {np.min(a0vals):.3e}")
    a0vals = np.where(a0vals < 0.0, 0.0, a0vals)
    g = state.g if state.mode == MODE_LINE else 0.0
    return Field(state.grid, a0vals + g)


def compute_b(state: WaveState, inv_zap: Field | None = None) -> tuple[Field, Field]:
    """Coordinate drift b and its derivative b_a.

    disc: b = Re (I - Htilde) ((Z_t - Av Z_t)/Z_a)
    line: b = Re (I - H) (Z_t/Z_a) with the plus-average H.
    """
    if inv_zap is None:
        inv_zap = 1.0 / _zap(state)
    zt = state.zt()
    if state.mode == MODE_DISC:
        w = nlmul(zt - average(zt), inv_zap)
        bfield = (w - hilbert_tilde(w, MODE_DISC)).real()
    else:
        w = nlmul(zt, inv_zap)
        bfield = (w - hilbert_avg(w, MODE_LINE)).real()
    return bfield, deriv(bfield)


def compute_Zttbar(state: WaveState, a: Field | None = None,
                   inv_zap: Field | None = None) -> Field:
    """conj(Z_tt) = i A0 / Z_a (disc) or i g - i A_g / Z_a (line)."""
    if a is None:
        a = compute_A(state)
    if inv_zap is None:
        inv_zap = 1.0 / _zap(state)
    core = nlmul(a, inv_zap)
    if state.mode == MODE_DISC:
        return 1j * core
    return Field(state.grid, 1j * state.g - 1j * core.values)


def derive(state: WaveState) -> DerivedFields:
    """Diagnose every derived field from the prognostic pair (Z, conj(Z_t))."""
    if not (state.z.is_finite() and state.ztbar.is_finite()):
        raise ModelError("non-finite state")
    zap = _zap(state)
    absz = np.abs(zap.values)
    if np.min(absz) <= NEAR_SINGULAR_TOL:
        raise NearSingularNodeError(
            f"min |Z_a| = {np.min(absz):.3e} at a grid node; crest hit the grid")
    inv_zap = Field(state.grid, 1.0 / zap.values)
    omega = Field(state.grid, zap.values / absz)
    zt = state.zt()
    zt_ap = deriv(zt)
    ztbar_ap = deriv(state.ztbar)
    b, bap = compute_b(state, inv_zap)
    imb = np.max(np.abs(b.values.imag))
    if imb > 1e-8 * (1.0 + np.max(np.abs(b.values))):
        raise NumericalConsistencyError(f"b not real: max |Im b| = {imb:.3e}")
    a = compute_A(state)
    ima = np.max(np.abs(a.values.imag))
    if ima > 1e-8 * (1.0 + np.max(np.abs(a.values))):
        raise NumericalConsistencyError(f"A not real: max |Im A| = {ima:.3e}")
    sqrt_a = Field(state.grid, np.sqrt(a.values.real).astype(np.complex128))
    dap_zt = nlmul(zt_ap, inv_zap)
    dap_ztbar = nlmul(ztbar_ap, inv_zap)
    zttbar = compute_Zttbar(state, a, inv_zap)
    # D_t (1/Z_a) = (1/Z_a)(b_a - D_a Z_t)
    dt_inv_zap = nlmul(inv_zap, bap - dap_zt)
    q = dt_q = None
    if state.mode == MODE_DISC:
        e_ia = np.exp(1j * state.grid.nodes)
        q = Field(state.grid, e_ia * inv_zap.values)
        # D_t (e^{ia}/Z_a) = (e^{ia}/Z_a)(b_a - D_a Z_t + i b)
        dt_q = nlmul(q, bap - dap_zt + 1j * b)
    return DerivedFields(
        zap=zap, inv_zap=inv_zap, omega=omega, b=b, bap=bap, a=a, sqrt_a=sqrt_a,
        zt_ap=zt_ap, ztbar_ap=ztbar_ap, dap_zt=dap_zt, dap_ztbar=dap_ztbar,
        zttbar=zttbar, dt_inv_zap=dt_inv_zap, q=q, dt_q=dt_q,
    )


def rhs(state: WaveState, fields: DerivedFields | None = None):
    """Time derivatives of the prognostic fields and tracked labels.

    d_t Z = Z_t - b Z_a (in line mode the W-derivative Z_t - b (1 + W_a)),
    d_t conj(Z_t) = conj(Z_tt) - b d_a conj(Z_t), dh/dt = b(h).
    """
    if fields is None:
        fields = derive(state)
    zt = state.zt()
    dz = zt - nlmul(fields.b, fields.zap)
    dztbar = fields.zttbar - nlmul(fields.b, fields.ztbar_ap)
    dz = krasny_filter(dealias(dz))
    dztbar = krasny_filter(dealias(dztbar))
    if state.label_pos.size:
        dlabels = np.real(interpolate(fields.b, state.label_pos))
    else:
        dlabels = np.zeros(0)
    return dz, dztbar, dlabels


def material_derivative_chain(state: WaveState, which: str,
                              fields: DerivedFields | None = None) -> Field:
    """Material derivatives assembled through the commutator identities.

    which = "inv_zap":      D_t (1/Z_a) = (1/Z_a)(b_a - D_a Z_t)
    which = "dap_q":        D_t d_a(e^{ia}/Z_a) = d_a(D_t q) - b_a d_a q   (disc)
    which = "dap_inv_zap":  D_t d_a(1/Z_a) = d_a(D_t (1/Z_a)) - b_a d_a(1/Z_a)
    which = "dap2_ztbar":   D_t D_a^2 conj(Z_t) via [D_a, D_t] = (D_a Z_t) D_a
                            applied twice to D_t conj(Z_t) = conj(Z_tt)
    """
    if fields is None:
        fields = derive(state)
    f = fields
    if which == "inv_zap":
        return f.dt_inv_zap
    if which == "dap_inv_zap":
        return deriv(f.dt_inv_zap) - nlmul(f.bap, deriv(f.inv_zap))
    if which == "dap_q":
        if state.mode != MODE_DISC:
            raise ModelError("dap_q is a disc-mode quantity")
        return deriv(f.dt_q) - nlmul(f.bap, deriv(f.q))
    if which == "dap2_ztbar":
        dap = lambda u: nlmul(f.inv_zap, deriv(u))
        dap2_ztbar = dap(f.dap_ztbar)
        # D_t D_a v = D_a(D_t v) - (D_a Z_t)(D_a v) with v = conj(Z_t)
        dt_dap = dap(f.zttbar) - nlmul(f.dap_zt, f.dap_ztbar)
        return dap(dt_dap) - nlmul(f.dap_zt, dap2_ztbar)
    raise ModelError(f"unknown material-derivative chain {which!r}")


def tail_energy_fraction(f: Field) -> float:
    """Spectral-energy fraction above half the dealiasing cutoff."""
    c2 = np.abs(f.coeffs) ** 2
    total = float(np.sum(c2))
    if total == 0.0:
        return 0.0
    tail = float(np.sum(c2[np.abs(f.grid.modes) > f.grid.cutoff // 2]))
    return tail / total


def with_fields(state: WaveState, z: Field, ztbar: Field, t: float,
                label_pos: np.ndarray) -> WaveState:
    return replace(state, z=z, ztbar=ztbar, t=t, label_pos=label_pos)
