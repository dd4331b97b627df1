import numpy as np
import pytest

from crestwave.initialdata import (
    disc_rotation_reversal,
    disc_smooth,
    disc_trivial,
    line_wave,
)
from crestwave.model import (
    NearSingularNodeError,
    WaveState,
    compute_A,
    compute_Zttbar,
    compute_b,
    derive,
    holo_residual,
    material_derivative_chain,
    rhs,
    tail_energy_fraction,
    validate,
    winding_number,
)
from crestwave.spectral import Field, Grid, interpolate, norm_l2

EPS = 0.1


@pytest.fixture
def rot():
    """Unit circle with conj(Z_t) = -eps e^{ia}: every derived field has a
    closed form (A0 = eps^2, b = 2 eps sin 2a, conj(Z_tt) = eps^2 e^{-ia})."""
    return disc_rotation_reversal(EPS, n=256)


class TestComputeA:
    def test_rotation_closed_form(self, rot):
        a = compute_A(rot)
        assert np.max(np.abs(a.values - EPS**2)) < 1e-12

    def test_quadrature_oracle_agrees(self, rot):
        aq = compute_A(rot, "quadrature")
        am = compute_A(rot, "multiplier")
        assert np.max(np.abs(aq.values - am.values)) < 1e-12

    def test_constant_velocity_zero(self):
        st = disc_trivial(1.0 - 0.5j, n=128)
        assert np.max(np.abs(compute_A(st).values)) < 1e-13

    def test_line_rest_gravity(self):
        st = line_wave(1.0, 0.0, 1, n=128)
        a = compute_A(st)
        assert np.max(np.abs(a.values - 1.0)) < 1e-13

    def test_nonnegative_on_random_states(self):
        for seed in range(4):
            rng = np.random.default_rng(seed)
            vel = {m: 0.1 * complex(*rng.standard_normal(2)) * 0.6**m for m in range(5)}
            st = disc_smooth(1.0, 0.02, 3, vel, n=128)
            assert np.min(compute_A(st).values.real) >= -1e-10

    def test_commutator_vs_quadrature_random(self):
        rng = np.random.default_rng(11)
        vel = {m: 0.1 * complex(*rng.standard_normal(2)) * 0.6**m for m in range(6)}
        st = disc_smooth(1.0, 0.02 + 0.01j, 2, vel, n=256)
        am = compute_A(st, "multiplier")
        aq = compute_A(st, "quadrature")
        rel = np.max(np.abs(am.values - aq.values)) / np.max(np.abs(aq.values))
        assert rel <= 1e-8


class TestComputeB:
    def test_rotation_closed_form(self, rot):
        b, bap = compute_b(rot)
        al = rot.grid.nodes
        assert np.max(np.abs(b.values - 2 * EPS * np.sin(2 * al))) < 1e-12
        assert np.max(np.abs(bap.values - 4 * EPS * np.cos(2 * al))) < 1e-12

    def test_constant_velocity(self):
        st = disc_trivial(0.7j, n=128)
        b, _ = compute_b(st)
        assert np.max(np.abs(b.values)) < 1e-13

    def test_line_zero_velocity(self):
        st = line_wave(1.0, 0.05, 2, 0.0, n=128)
        b, _ = compute_b(st)
        assert np.max(np.abs(b.values)) < 1e-13

    def test_b_real(self):
        rng = np.random.default_rng(3)
        vel = {m: 0.1 * complex(*rng.standard_normal(2)) * 0.6**m for m in range(5)}
        st = disc_smooth(1.0, 0.03, 4, vel, n=128)
        b, _ = compute_b(st)
        assert np.max(np.abs(b.values.imag)) < 1e-12


class TestZttbar:
    def test_rotation_closed_form(self, rot):
        zttbar = compute_Zttbar(rot)
        expect = EPS**2 * np.exp(-1j * rot.grid.nodes)
        assert np.max(np.abs(zttbar.values - expect)) < 1e-12

    def test_constant_velocity(self):
        st = disc_trivial(1.0, n=128)
        assert np.max(np.abs(compute_Zttbar(st).values)) < 1e-13

    def test_hydrostatic_balance(self):
        st = line_wave(1.0, 0.0, 1, n=128)
        assert np.max(np.abs(compute_Zttbar(st).values)) < 1e-13


class TestRhs:
    def test_rigid_translation(self):
        c = 0.4 - 0.3j
        st = disc_trivial(c, n=128)
        dz, dztbar, _ = rhs(st)
        assert np.max(np.abs(dz.values - c)) < 1e-13
        assert np.max(np.abs(dztbar.values)) < 1e-13

    def test_line_rest(self):
        st = line_wave(1.0, 0.0, 1, n=128)
        dz, dztbar, _ = rhs(st)
        assert np.max(np.abs(dz.values)) < 1e-13
        assert np.max(np.abs(dztbar.values)) < 1e-13

    def test_rotation_assembled(self, rot):
        dz, dztbar, _ = rhs(rot)
        al = rot.grid.nodes
        f = derive(rot)
        expect = EPS**2 * np.exp(-1j * al) \
            - 2 * EPS * np.sin(2 * al) * (-1j * EPS * np.exp(1j * al))
        assert np.max(np.abs(dztbar.values - expect)) < 1e-12

    def test_near_singular_node_error(self):
        grid = Grid(128, offset=0.0)
        al = grid.nodes
        # Z_a = i e^{ia}(1 + e^{ia}) vanishes at a = pi, a node when offset=0
        z = Field(grid, np.exp(1j * al) + 0.5 * np.exp(2j * al))
        st = WaveState(t=0, mode="disc", g=0.0, z=z,
                       ztbar=Field.constant(grid, 0.0),
                       label_alphas=np.zeros(0), label_pos=np.zeros(0))
        with pytest.raises(NearSingularNodeError):
            derive(st)


class TestMaterialDerivatives:
    def test_dt_q_closed_form(self, rot):
        f = derive(rot)
        expect = -3j * EPS * np.exp(2j * rot.grid.nodes)
        assert np.max(np.abs(f.dt_q.values - expect)) < 1e-12

    def test_dt_dap_q_closed_form(self, rot):
        out = material_derivative_chain(rot, "dap_q")
        expect = 6 * EPS * np.exp(2j * rot.grid.nodes)
        assert np.max(np.abs(out.values - expect)) < 1e-12

    def test_trivial_all_zero(self):
        st = disc_trivial(1.0 + 1.0j, n=128)
        for which in ("inv_zap", "dap_q", "dap_inv_zap", "dap2_ztbar"):
            out = material_derivative_chain(st, which)
            assert np.max(np.abs(out.values)) < 1e-12, which

    def test_flow_finite_difference(self, rot):
        # ((1/Z_a) at t + dt) - (at t - dt)) / 2dt + b d_a(1/Z_a) ~ D_t(1/Z_a)
        from crestwave.stepper import rk4_step
        from crestwave.spectral import deriv

        delta = 1e-3
        plus = derive(rk4_step(rot, delta))
        f0 = derive(rot)
        # backward state via two forward half-steps of the time-reversed field
        minus_state = rk4_step(rk4_step(rot, delta), delta)
        fpp = derive(minus_state)
        # centered difference between t and t+2dt, evaluated at t+dt
        dfdt = (fpp.inv_zap.values - f0.inv_zap.values) / (2 * delta)
        lhs = dfdt + plus.b.values * deriv(plus.inv_zap).values
        gap = np.max(np.abs(lhs - plus.dt_inv_zap.values))
        assert gap < 5e-5  # O(delta^2)


class TestInvariants:
    def test_holo_residual_trivial(self, rot):
        assert holo_residual(rot) < 1e-12

    def test_winding(self, rot):
        assert winding_number(rot) == 1

    def test_validate_clean(self, rot):
        assert validate(rot) == []

    def test_bap_reality_combination(self, rot):
        f = derive(rot)
        combo = f.bap.values - 2 * f.dap_zt.values.real
        assert np.max(np.abs(combo.imag)) < 1e-12

    def test_taylor_sign_weight(self):
        # A / |Z_a| >= 0 on a random smooth state
        rng = np.random.default_rng(5)
        vel = {m: 0.1 * complex(*rng.standard_normal(2)) * 0.6**m for m in range(5)}
        st = disc_smooth(1.0, 0.02, 2, vel, n=128)
        f = derive(st)
        w = f.a.values.real / np.abs(f.zap.values)
        assert np.min(w) >= -1e-10

    def test_tail_energy_fraction(self):
        grid = Grid(128)
        f = Field(grid, np.exp(1j * grid.nodes))
        assert tail_energy_fraction(f) <= 1e-20
        hi = Field(grid, np.exp(1j * (grid.cutoff // 2 + 2) * grid.nodes))
        assert tail_energy_fraction(hi) > 0.9

    def test_holomorphicity_propagation(self, rot):
        # residual growth <= 1e-8 per unit time on a smooth run
        from crestwave.stepper import StepControl, evolve

        r0 = holo_residual(rot)
        series = evolve(rot, StepControl(dt_init=5e-3, cfl=0.0, dt_max=5e-3, t_final=1.0))
        r1 = holo_residual(series.final_state)
        assert r1 - r0 <= 1e-8
