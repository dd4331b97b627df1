"""Energy functionals, boundary-trace energy forms, and blow-up functionals.

Line mode (periodized lower half plane, gravity g >= 0), with
f1 = d_a (1/Z_a) and D_a = (1/Z_a) d_a:

    E1 = (||ztbar_a||^2 + g) ||f1||^2
    E2 = (||ztbar_a||^2 + g) { ||D_t f1||^2 + ||(sqrt(A_g)/Z_a) f1||_{H1/2}^2 }
    E3 = (||ztbar_a||^2 + g) { ||D_t D_a^2 ztbar||^2
                               + ||(sqrt(A_g)/Z_a) D_a^2 ztbar||_{H1/2}^2 }
    Ea = (E1^2 + E2)^(1/2),   E = (E1^3 + E2^(3/2) + E3)^(1/3)

Disc mode replaces f1 by d_a(e^{ia}/Z_a) inside E2, adds ||1/Z_a||^2 to the
E1 bracket, and drops gravity (the tilde family).  The boundary-trace forms
("ecal") and the g = 0 variant ecal_b follow the same pattern with D_a^2
quantities in place of material derivatives.  All material derivatives are
assembled analytically through the commutator identities, so a report is a
pure function of one state.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .model import (
    MODE_DISC,
    WaveState,
    DerivedFields,
    derive,
    holo_residual,
    material_derivative_chain,
)
from .spectral import Field, deriv, nlmul, norm_hhalf, norm_l2, norm_linf_cap_hhalf


@dataclass(frozen=True)
class EnergyReport:
    """One row of the energy hierarchy at a fixed time."""

    t: float
    E1: float
    E2: float
    E3: float
    Ea: float
    E: float
    Ecal: float
    Ecal_b: float          # line mode only; nan for disc
    blowup_B: float
    holo_residual: float
    flagged: str = ""      # name of the first non-finite term, if any

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dc_fields(self)}


CSV_FIELDS = ["E1", "E2", "E3", "Ea", "E", "Ecal", "blowup_B", "holo_residual"]


def _dap(f: DerivedFields, u: Field) -> Field:
    return nlmul(f.inv_zap, deriv(u))


def _dt_dap2_ztbar(f: DerivedFields) -> Field:
    # D_t D_a^2 ztbar = D_a(D_a zttbar - (D_a Z_t)(D_a ztbar)) - (D_a Z_t) D_a^2 ztbar
    dap2_ztbar = _dap(f, f.dap_ztbar)
    dt_dap = _dap(f, f.zttbar) - nlmul(f.dap_zt, f.dap_ztbar)
    return _dap(f, dt_dap) - nlmul(f.dap_zt, dap2_ztbar)


def blowup_functional(state: WaveState, f: DerivedFields | None = None) -> float:
    """The blow-up criterion quantity B(t).

    line: ||D_a ztbar||_{Linf cap H1/2} + (||ztbar_a|| + sqrt(g)) ||d_a(1/Z_a)||
    disc: ||D_a ztbar||_{Linf cap H1/2}
          + ||ztbar_a|| (||d_a(1/Z_a)|| + ||1/Z_a||)
    Scales like ||grad u||_inf under the two-parameter scaling family.
    """
    if f is None:
        f = derive(state)
    w = state.cell_weight
    lead = norm_linf_cap_hhalf(f.dap_ztbar, w)
    nz = norm_l2(f.ztbar_ap, w)
    n_inv_ap = norm_l2(deriv(f.inv_zap), w)
    if state.mode == MODE_DISC:
        return lead + nz * (n_inv_ap + norm_l2(f.inv_zap, w))
    return lead + (nz + np.sqrt(state.g)) * n_inv_ap


def energy_report(state: WaveState, f: DerivedFields | None = None) -> EnergyReport:
    """Compute the full energy hierarchy for one state."""
    if f is None:
        f = derive(state)
    w = state.cell_weight
    flagged = ""

    nz2 = norm_l2(f.ztbar_ap, w) ** 2
    lead = nz2 + (state.g if state.mode != MODE_DISC else 0.0)

    f1 = deriv(f.inv_zap)
    dap2_ztbar = _dap(f, f.dap_ztbar)
    dt_dap2_ztbar = _dt_dap2_ztbar(f)
    weight_field = nlmul(f.sqrt_a, f.inv_zap)

    if state.mode == MODE_DISC:
        E1 = nz2 * (norm_l2(f1, w) ** 2 + norm_l2(f.inv_zap, w) ** 2)
        dap_q = deriv(f.q)
        dt_dap_q = material_derivative_chain(state, "dap_q", f)
        E2 = nz2 * (norm_l2(dt_dap_q, w) ** 2
                    + norm_hhalf(nlmul(weight_field, dap_q), w) ** 2)
        E3 = nz2 * (norm_l2(dt_dap2_ztbar, w) ** 2
                    + norm_hhalf(nlmul(weight_field, dap2_ztbar), w) ** 2)
    else:
        E1 = lead * norm_l2(f1, w) ** 2
        dt_f1 = material_derivative_chain(state, "dap_inv_zap", f)
        E2 = lead * (norm_l2(dt_f1, w) ** 2
                     + norm_hhalf(nlmul(weight_field, f1), w) ** 2)
        E3 = lead * (norm_l2(dt_dap2_ztbar, w) ** 2
                     + norm_hhalf(nlmul(weight_field, dap2_ztbar), w) ** 2)

    Ea = np.sqrt(E1 ** 2 + E2)
    Etot = (E1 ** 3 + E2 ** 1.5 + E3) ** (1.0 / 3.0)
    ecal, ecal_b = ecal_report(state, f)
    B = blowup_functional(state, f)

    vals = {"E1": E1, "E2": E2, "E3": E3, "Ea": Ea, "E": Etot,
            "Ecal": ecal, "blowup_B": B}
    for name, v in vals.items():
        if not np.isfinite(v):
            flagged = name
            break

    return EnergyReport(
        t=state.t, E1=float(E1), E2=float(E2), E3=float(E3), Ea=float(Ea),
        E=float(Etot), Ecal=float(ecal), Ecal_b=float(ecal_b),
        blowup_B=float(B), holo_residual=float(holo_residual(state)),
        flagged=flagged,
    )


def ecal_report(state: WaveState, f: DerivedFields | None = None) -> tuple[float, float]:
    """Boundary-trace energy forms: (ecal, ecal_b).

    line:  ecal_1 = (||ztbar_a||^2+g) ||d_a(1/Z_a)||^2
           ecal_2 = (.) ||D_a^2 ztbar||^2 + (.)^2 ||D_a(1/Z_a)||_{H1/2}^2
           ecal_3 = (.)^3 ||D_a^2 (1/Z_a)||^2 + (.)^2 ||(1/Z_a) D_a^2 ztbar||_{H1/2}^2
           plus the g = 0 modification ecal_b with d_a(ztbar_a/Z_a^2) and
           d_a((A_g/Z_a^2) d_a(1/Z_a)) terms.
    disc:  same structure with e^{ia}/Z_a in place of 1/Z_a and plain
           ||ztbar_a||^2 powers (no gravity); ecal_b is nan.
    """
    if f is None:
        f = derive(state)
    w = state.cell_weight
    nz2 = norm_l2(f.ztbar_ap, w) ** 2
    dap2_ztbar = _dap(f, f.dap_ztbar)

    if state.mode == MODE_DISC:
        dap_q = deriv(f.q)
        e1 = nz2 * (norm_l2(dap_q, w) ** 2 + norm_l2(f.inv_zap, w) ** 2)
        e2 = (nz2 * norm_l2(dap2_ztbar, w) ** 2
              + nz2 ** 2 * norm_hhalf(nlmul(f.inv_zap, dap_q), w) ** 2)
        dap2_q = _dap(f, _dap(f, f.q))
        e3 = (nz2 ** 3 * norm_l2(dap2_q, w) ** 2
              + nz2 ** 2 * norm_hhalf(nlmul(f.q, dap2_ztbar), w) ** 2)
        ecal = (e1 ** 3 + e2 ** 1.5 + e3) ** (1.0 / 3.0)
        return float(ecal), float("nan")

    lead = nz2 + state.g
    f1 = deriv(f.inv_zap)
    e1 = lead * norm_l2(f1, w) ** 2
    e2 = (lead * norm_l2(dap2_ztbar, w) ** 2
          + lead ** 2 * norm_hhalf(_dap(f, f.inv_zap), w) ** 2)
    dap2_inv = _dap(f, _dap(f, f.inv_zap))
    e3 = (lead ** 3 * norm_l2(dap2_inv, w) ** 2
          + lead ** 2 * norm_hhalf(nlmul(f.inv_zap, dap2_ztbar), w) ** 2)
    ecal = (e1 ** 3 + e2 ** 1.5 + e3) ** (1.0 / 3.0)

    # ecal_b (used when g = 0): eq-level replacement of material derivatives
    # by d_a(ztbar_a / Z_a^2) and d_a((A_g / Z_a^2) d_a (1/Z_a)).
    u = nlmul(f.ztbar_ap, nlmul(f.inv_zap, f.inv_zap))
    b2 = lead * (norm_l2(deriv(u), w) ** 2
                 + norm_hhalf(nlmul(nlmul(f.sqrt_a, f.inv_zap), f1), w) ** 2)
    v = nlmul(nlmul(f.a, nlmul(f.inv_zap, f.inv_zap)), f1)
    b3 = lead * (norm_l2(deriv(v), w) ** 2
                 + norm_hhalf(nlmul(nlmul(f.sqrt_a, f.inv_zap), deriv(u)), w) ** 2)
    ecal_b = (e1 ** 3 + b2 ** 1.5 + b3) ** (1.0 / 3.0)
    return float(ecal), float(ecal_b)
