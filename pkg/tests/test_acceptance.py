"""Acceptance suite: one test per primary criterion, each printing a
pass/fail line at its registered tolerance.  Run with -s to see the lines.
"""

import numpy as np
import pytest

from crestwave.energies import blowup_functional, energy_report
from crestwave.initialdata import (
    CrestSpec,
    disc_crest_pinch,
    disc_rotation_reversal,
    disc_smooth,
    disc_trivial,
    line_wave,
)
from crestwave.model import WaveState, compute_A, derive
from crestwave.scaling import ScalingParams, check_covariance, check_covariance_evolved, scale_state
from crestwave.spectral import (
    Field,
    Grid,
    Multiplier,
    apply_multiplier,
    hhalf_quadrature_fn,
    norm_hhalf,
    resample,
)
from crestwave.stepper import StepControl, evolve, rk4_step
from crestwave.verify import (
    CORE_TOL,
    energy_observer,
    monitor_apriori,
    pinch_experiment,
    refinement_gap_decay,
    rigidity_observer,
    rigidity_track,
    run_identity_suite,
)


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ----------------------------------------------------------------------
# 1. Multiplier exactness
# ----------------------------------------------------------------------

def test_acceptance_01_multiplier_exactness():
    grid = Grid(256)
    worst = 0.0
    kinds = {
        Multiplier.HILBERT_DISC: lambda k: np.sign(k),
        Multiplier.HILBERT_LINE: lambda k: -np.sign(k),
        Multiplier.ABS_D: lambda k: abs(k),
    }
    index = {int(m): i for i, m in enumerate(grid.modes)}
    for k in range(-grid.cutoff, grid.cutoff + 1):
        if k == 0:
            continue
        coeffs = np.zeros(grid.n, dtype=complex)
        coeffs[index[k]] = 1.0
        f = Field.from_coeffs(grid, coeffs)
        for kind, sym in kinds.items():
            out = apply_multiplier(kind, f)
            worst = max(worst, float(np.max(np.abs(out.values - sym(k) * f.values))))
    report("multiplier exactness (|m| <= n/3, n=256)", worst <= 1e-12,
           f"node-wise error {worst:.3e} <= 1e-12")


# ----------------------------------------------------------------------
# 2. H-half identity: multiplier norm vs double quadrature
# ----------------------------------------------------------------------

# Analytic fields; the first three are nearly singular (analyticity width
# delta), so their spectral tails are in the measurable range at n = 256.
ANALYTIC_FIELDS = [
    lambda a: (np.sin(a / 2) ** 2 + 0.003 ** 2) ** 0.75 + 0.0j,
    lambda a: (np.sin((a - 2.5) / 2) ** 2 + 0.001 ** 2) ** 0.95 + 0.0j,
    lambda a: np.exp(1j * a) * (np.sin((a - 0.5) / 2) ** 2 + 0.002 ** 2) ** 0.8,
    lambda a: 1.0 / (1.0 - 0.9 * np.exp(1j * a)),
    lambda a: np.exp(0.8 * np.exp(1j * a)),
]


def test_acceptance_02_hhalf_identity():
    # multiplier norm of the sampled field vs the sine-kernel double integral
    # evaluated directly from the analytic field (independent oracle)
    gaps = {}
    for n in (256, 512):
        grid = Grid(n)
        worst = 0.0
        for func in ANALYTIC_FIELDS:
            m = norm_hhalf(Field(grid, func(grid.nodes)))
            q = hhalf_quadrature_fn(func, n)
            worst = max(worst, abs(m - q) / q)
        gaps[n] = worst
    ratio = gaps[256] / max(gaps[512], 1e-300)
    ok = gaps[256] <= 1e-6 and ratio >= 8.0
    report("H-half multiplier vs double quadrature",
           ok, f"rel gap {gaps[256]:.3e} <= 1e-6 at n=256, improves {ratio:.1f}x at n=512")


# ----------------------------------------------------------------------
# 3. A-formula equivalence and nonnegativity
# ----------------------------------------------------------------------

def test_acceptance_03_a_formula():
    rng = np.random.default_rng(42)
    vel = {m: 0.1 * complex(*rng.standard_normal(2)) * 0.6**m for m in range(6)}
    st = disc_smooth(1.0, 0.02 + 0.01j, 2, vel, n=256)
    am = compute_A(st, "multiplier")
    aq = compute_A(st, "quadrature")
    rel = float(np.max(np.abs(am.values - aq.values)) / np.max(np.abs(aq.values)))
    amin = float(np.min(am.values.real))
    eps = 0.1
    rot = disc_rotation_reversal(eps, n=256)
    closed = float(np.max(np.abs(compute_A(rot).values - eps**2)))
    ok = rel <= 1e-8 and amin >= -1e-10 and closed <= 1e-12
    report("A-formula equivalence and nonnegativity", ok,
           f"commutator-vs-quadrature rel {rel:.2e} <= 1e-8, min A {amin:.2e} >= -1e-10, "
           f"A0=eps^2 error {closed:.2e}")


# ----------------------------------------------------------------------
# 4. Identity suite (12 registered identities)
# ----------------------------------------------------------------------

def test_acceptance_04_identity_suite():
    states = [(disc_rotation_reversal(0.1, n=256), "rotational-dilation")]
    for seed in (1, 2, 3):
        rng = np.random.default_rng(seed)
        vel = {m: 0.05 * complex(*rng.standard_normal(2)) * 0.5**m for m in range(6)}
        states.append((disc_smooth(1.0, 0.03 * complex(*rng.standard_normal(2)), 3,
                                   vel, n=256), f"random-{seed}"))
    worst = 0.0
    n_core = 0
    for st, desc in states:
        core = [r for r in run_identity_suite(st, desc) if r.tol <= CORE_TOL]
        n_core = len(core)
        worst = max(worst, max(r.rel_gap for r in core))
    decay = refinement_gap_decay(64)
    ok = worst <= 1e-8 and n_core == 12 and decay["ratio"] >= 8.0
    report("identity suite (12 registered identities)", ok,
           f"worst rel {worst:.2e} <= 1e-8 on 4 states, refinement decay "
           f"{decay['ratio']:.0f}x >= 8x")


# ----------------------------------------------------------------------
# 5. Trivial dynamics
# ----------------------------------------------------------------------

def test_acceptance_05_trivial_dynamics():
    c = 0.3 + 0.2j
    st = disc_trivial(c, n=128)
    series = evolve(st, StepControl(dt_init=0.02, cfl=0.5, dt_max=0.05, t_final=1.0))
    err_disc = float(np.max(np.abs(series.final_state.z.values - st.z.values - c)))
    rest = line_wave(1.0, 0.0, 1, n=128)
    series2 = evolve(rest, StepControl(dt_init=0.02, cfl=0.5, dt_max=0.05, t_final=1.0))
    err_line = max(float(np.max(np.abs(series2.final_state.z.values - rest.z.values))),
                   float(np.max(np.abs(series2.final_state.ztbar.values - rest.ztbar.values))))
    ok = err_disc <= 1e-10 and err_line <= 1e-12
    report("trivial dynamics", ok,
           f"translation error {err_disc:.2e} <= 1e-10 at T=1, "
           f"hydrostatic rest error {err_line:.2e} <= 1e-12")


# ----------------------------------------------------------------------
# 6. Integrator order
# ----------------------------------------------------------------------

def test_acceptance_06_integrator_order():
    st0 = disc_smooth(1.0, 0.04 + 0.02j, 3,
                      {0: 0.1j, 1: -0.4, 2: 0.08, 3: -0.025j}, n=128)

    def run(dt, T=0.5):
        s = st0
        for _ in range(int(round(T / dt))):
            s = rk4_step(s, dt)
        return s

    sols = {dt: run(dt) for dt in (1e-2, 5e-3, 2.5e-3)}

    def dist(a, b):
        return max(np.max(np.abs(a.z.values - b.z.values)),
                   np.max(np.abs(a.ztbar.values - b.ztbar.values)))

    e1 = dist(sols[1e-2], sols[5e-3])
    e2 = dist(sols[5e-3], sols[2.5e-3])
    ratio = e1 / e2
    ok = 16 * 0.7 <= ratio <= 16 * 1.3
    report("integrator order (RK4 self-convergence)", ok,
           f"halving ratio {ratio:.2f} within 16 +- 30%")


# ----------------------------------------------------------------------
# 7. Scaling covariance
# ----------------------------------------------------------------------

def test_acceptance_07_scaling_covariance():
    wave = line_wave(1.0, 0.05, 2, 0.03 + 0.01j, n=256)
    worst0 = 0.0
    worst_b = 0.0
    for (p, q, s) in ((2, 1, 0.5), (2, 1, 1.0), (1, 2, 0.0)):
        params = ScalingParams(p, q, s)
        res = check_covariance(wave, params)
        for name, (_, _, rel) in res.items():
            if name == "blowup_B":
                worst_b = max(worst_b, rel)
            else:
                worst0 = max(worst0, rel)
    # matched positive times between co-run trajectories
    worst_t = 0.0
    for (p, q, s) in ((2, 1, 0.5), (2, 1, 1.0), (1, 2, 0.0)):
        res = check_covariance_evolved(wave, ScalingParams(p, q, s),
                                       t_check=0.25, dt=5e-3)
        worst_t = max(worst_t, max(v[2] for v in res.values()))
    ok = worst0 <= 1e-5 and worst_t <= 1e-3 and worst_b <= 1e-5
    report("scaling covariance", ok,
           f"t=0 relgap {worst0:.2e} <= 1e-5, evolved relgap {worst_t:.2e} <= 1e-3, "
           f"blow-up functional scales as lam^s to {worst_b:.2e} <= 1e-5")


# ----------------------------------------------------------------------
# 8. A-priori inequality
# ----------------------------------------------------------------------

def test_acceptance_08_apriori_inequality():
    def run_rows(state, T, dt):
        ctrl = StepControl(dt_init=dt, cfl=0.0, dt_max=dt, t_final=T)
        return evolve(state, ctrl, observers=[energy_observer()]).rows

    def refine(st, f=2):
        z2, _ = resample(st.z, st.grid.n * f)
        zt2, _ = resample(st.ztbar, st.grid.n * f)
        return WaveState(t=st.t, mode=st.mode, g=st.g, z=z2, ztbar=zt2,
                         label_alphas=st.label_alphas, label_pos=st.label_pos,
                         cell_weight=st.cell_weight)

    cases = [
        ("disc-a", disc_smooth(1.0, 0.02 + 0.01j, 3, {0: 0.03j, 1: -0.2, 2: 0.04},
                               n=128), 1.0, 0.01),
        ("disc-b", disc_smooth(1.0, 0.015, 3, {0: 0.02j, 1: -0.15, 2: 0.02},
                               n=128), 1.0, 0.01),
        ("line", line_wave(1.0, 0.05, 2, 0.03 + 0.01j, n=128), 2.0, 0.01),
    ]
    worst_var = 0.0
    worst_env = 0.0
    for name, st, T, dt in cases:
        base = monitor_apriori(run_rows(st, T, dt))
        c0 = base["fitted_c"]
        assert np.isfinite(c0) and c0 >= 0.0
        for alt_rows in (run_rows(refine(st), T, dt), run_rows(st, T, dt / 2)):
            c1 = monitor_apriori(alt_rows)["fitted_c"]
            worst_var = max(worst_var, abs(c1 - c0) / max(c0, 1e-300))
        worst_env = max(worst_env, base["envelope_margin"])
    ok = worst_var <= 0.20 and worst_env <= 1e-2
    report("a-priori inequality monitor", ok,
           f"fitted c varies {worst_var:.2%} <= 20% under refinement, "
           f"Gronwall envelope margin {worst_env:.2e} <= 1%")


# ----------------------------------------------------------------------
# 9. Rigidity
# ----------------------------------------------------------------------

def test_acceptance_09_rigidity():
    ladder = [0.4, 0.2, 0.1, 0.05, 0.025]
    st = disc_crest_pinch(CrestSpec(nu=0.3, eps=0.1, scale=300.0), n=2048,
                          extra_labels=ladder)
    ctrl = StepControl(dt_init=1e-3, cfl=0.4, dt_max=0.02, t_final=0.2)
    series = evolve(st, ctrl, observers=[energy_observer(), rigidity_observer(st)],
                    record_every=5)
    trace = rigidity_track(series, st)
    v = trace.verdicts
    ok = (v["inv_zap_small"] and v["ztt_small"] and v["velocity_constant"]
          and v["angle_ratio_ok"] and series.stop_reason == "completed")
    report("rigidity (nu=0.3, eps=0.1, n=2048, T=0.2)", ok,
           f"|1/Z_a| {v['inv_zap_max']:.2e} and |Z_tt| {v['ztt_max']:.2e} <= "
           f"{v['tol']:.1e} at crests, velocity drift {v['velocity_drift_max']:.2e}, "
           f"|angle ratio - 1| {v['angle_ratio_err_max']:.2e} <= 1e-2")


# ----------------------------------------------------------------------
# 10. Pinch experiment
# ----------------------------------------------------------------------

def test_acceptance_10_pinch_experiment():
    r1 = pinch_experiment(CrestSpec(nu=0.3, eps=0.1), n=1024, record_every=5)
    r2 = pinch_experiment(CrestSpec(nu=0.3, eps=0.2), n=1024, record_every=5)
    low_ratio = r2["bracket_low"] / r1["bracket_low"]
    high_ratio = r2["bracket_high"] / r1["bracket_high"]
    ok = (r1["line_deviation"] <= 0.01
          and r1["b_increasing"]
          and r1["t_stop"] <= 1.1 * r1["d_over_v"]
          and abs(low_ratio - 0.5) <= 0.05 * 0.5
          and abs(high_ratio - 0.5) <= 0.05 * 0.5)
    report("pinch experiment", ok,
           f"d(t) vs d - v t deviation {r1['line_deviation']:.2%} <= 1%, "
           f"B eventually increasing: {r1['b_increasing']}, "
           f"t_stop {r1['t_stop']:.2f} <= 1.1 d/v = {1.1 * r1['d_over_v']:.2f}, "
           f"eps-doubling bracket ratios {low_ratio:.3f}, {high_ratio:.3f} (target 0.5 +- 5%)")
