import numpy as np
import pytest

from crestwave.energies import blowup_functional, energy_report
from crestwave.initialdata import disc_rotation_reversal, line_wave
from crestwave.scaling import (
    ScalingError,
    ScalingParams,
    check_covariance,
    check_covariance_evolved,
    scale_state,
)


@pytest.fixture
def wave():
    return line_wave(g=1.0, a=0.05, k=2, vel_amp=0.03 + 0.01j, n=256)


class TestScaleState:
    def test_identity(self, wave):
        out = scale_state(wave, ScalingParams(1, 1, 0.7))
        assert not out.lossy
        assert out.g == wave.g
        assert np.max(np.abs(out.state.z.values - wave.z.values)) < 1e-13

    def test_gravity_preserving(self, wave):
        out = scale_state(wave, ScalingParams(2, 1, 0.5))
        assert out.g == pytest.approx(wave.g)  # s = 1/2 keeps g

    def test_gravity_power(self, wave):
        out = scale_state(wave, ScalingParams(2, 1, 1.0))
        assert out.g == pytest.approx(2.0 * wave.g)

    def test_disc_unsupported(self):
        with pytest.raises(ScalingError):
            scale_state(disc_rotation_reversal(0.1, n=128), ScalingParams(2, 1, 0.5))

    def test_lossy_flag(self):
        # k = 1 wave has mode -1, not divisible by q = 2
        st = line_wave(g=1.0, a=0.05, k=1, vel_amp=0.0, n=128)
        out = scale_state(st, ScalingParams(1, 2, 0.0))
        assert out.lossy

    def test_cell_weight_and_labels(self, wave):
        st = line_wave(g=1.0, a=0.05, k=2, vel_amp=0.0, n=128, labels=[1.0])
        out = scale_state(st, ScalingParams(2, 1, 0.5))
        assert out.state.cell_weight == pytest.approx(0.5)
        assert out.state.label_pos[0] == pytest.approx(0.5)

    def test_composition(self, wave):
        # scale(2, s) then scale(2, s) = scale(4, s)
        s = 0.5
        once = scale_state(scale_state(wave, ScalingParams(2, 1, s)).state,
                           ScalingParams(2, 1, s)).state
        both = scale_state(wave, ScalingParams(4, 1, s)).state
        assert np.max(np.abs(once.z.values - both.z.values)) < 1e-10
        assert np.max(np.abs(once.ztbar.values - both.ztbar.values)) < 1e-10
        assert once.cell_weight == pytest.approx(both.cell_weight)


class TestCovariance:
    def test_identity_zero_gap(self, wave):
        res = check_covariance(wave, ScalingParams(1, 1, 0.3))
        assert max(v[2] for v in res.values()) < 1e-13

    @pytest.mark.parametrize("pqs", [(2, 1, 0.5), (2, 1, 1.0), (1, 2, 0.0)])
    def test_initial_time_covariance(self, wave, pqs):
        p, q, s = pqs
        res = check_covariance(wave, ScalingParams(p, q, s))
        for name, (lhs, rhs, rel) in res.items():
            assert rel <= 1e-6, (name, rel)

    def test_blowup_scales_like_lam_s(self, wave):
        params = ScalingParams(2, 1, 0.5)
        scaled = scale_state(wave, params)
        b0 = blowup_functional(wave)
        b1 = blowup_functional(scaled.state)
        assert b1 == pytest.approx(2 ** 0.5 * b0, rel=1e-6)

    def test_componentwise_powers(self, wave):
        # E1 ~ lam^{2s}, E2 ~ lam^{4s}, E3 ~ lam^{6s}
        params = ScalingParams(2, 1, 1.0)
        scaled = scale_state(wave, params)
        r0, r1 = energy_report(wave), energy_report(scaled.state)
        assert r1.E1 == pytest.approx(4.0 * r0.E1, rel=1e-9)
        assert r1.E2 == pytest.approx(16.0 * r0.E2, rel=1e-9)
        assert r1.E3 == pytest.approx(64.0 * r0.E3, rel=1e-9)

    def test_evolved_covariance(self, wave):
        res = check_covariance_evolved(wave, ScalingParams(2, 1, 0.5),
                                       t_check=0.2, dt=5e-3)
        assert max(v[2] for v in res.values()) <= 1e-4
