import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from jc_discord import oracle
from jc_discord.closed_form import ThermalWeights, evolution_angles
from jc_discord.core import binary_entropy, hermitian_eigenvalues
from jc_discord.measurement_discord import (
    MeasurementBasis,
    UndefinedConditionalState,
    conditional_cavity_state,
    conditional_entropy,
    conditional_spectrum,
    discord,
    discord_printed_formula,
    discord_value,
    minimize_discord,
    outcome_probabilities,
)

lambda0s = st.floats(0.0, 1.0)
taus = st.floats(0.0, 60.0)
photons = st.integers(0, 10)
thetas = st.floats(0.0, 2 * math.pi)


class TestBasis:
    def test_kets_orthonormal(self):
        k0, k1 = MeasurementBasis(0.4, 1.3).kets()
        assert abs(np.vdot(k0, k1)) < 1e-15
        assert np.vdot(k0, k0).real == pytest.approx(1.0)

    def test_projectors_complete(self):
        p0, p1 = MeasurementBasis(1.1, 2.0).projectors()
        assert_allclose(p0 + p1, np.eye(2), atol=1e-15)


class TestProbabilities:
    @given(lambda0s, taus, photons, thetas)
    @settings(max_examples=200, deadline=None)
    def test_sum_to_one(self, l0, tau, n, theta):
        p0, p1 = outcome_probabilities(ThermalWeights.from_lambda0(l0), evolution_angles(n, tau),
                                       MeasurementBasis(theta))
        assert p0 >= 0 and p1 >= 0
        assert p0 + p1 == pytest.approx(1.0, abs=1e-12)

    def test_initial_time(self):
        c2 = math.cos(0.3) ** 2
        p0, p1 = outcome_probabilities(ThermalWeights(0.7, 0.3), evolution_angles(5, 0.0), MeasurementBasis(0.3))
        assert p0 == pytest.approx(0.7 * c2 + 0.3 * (1 - c2))
        assert p1 == pytest.approx(0.7 * (1 - c2) + 0.3 * c2)

    def test_computational_basis(self):
        w, ang = ThermalWeights(0.6, 0.4), evolution_angles(3, 1.2)
        p0, p1 = outcome_probabilities(w, ang, MeasurementBasis(0.0))
        assert p0 == pytest.approx(0.6 * ang.cn**2 + 0.4 * ang.snp1**2)
        assert p1 == pytest.approx(0.6 * ang.sn**2 + 0.4 * ang.cnp1**2)


class TestConditionalState:
    def test_pure_at_initial_time(self):
        out = conditional_cavity_state(ThermalWeights(0.5, 0.5), evolution_angles(3, 0.0), MeasurementBasis(0.7), 0)
        expected = np.zeros((3, 3))
        expected[1, 1] = 1.0
        assert_allclose(out.state.data, expected, atol=1e-15)
        assert out.y == 0.0
        assert_allclose(out.spectrum(), [0, 0, 1], atol=1e-15)

    def test_y_in_computational_basis(self):
        w, ang = ThermalWeights(0.6, 0.4), evolution_angles(3, 1.2)
        out = conditional_cavity_state(w, ang, MeasurementBasis(0.0), 0)
        p0 = out.probability
        assert out.y == pytest.approx(0.24 * ang.cn**2 * ang.snp1**2 / p0**2, rel=1e-12)

    def test_spectrum_matches_matrix(self, rng):
        for _ in range(200):
            w = ThermalWeights.from_lambda0(rng.uniform())
            ang = evolution_angles(int(rng.integers(1, 11)), rng.uniform(0, 40))
            b = MeasurementBasis(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
            for j in (0, 1):
                out = conditional_cavity_state(w, ang, b, j)
                out.state.validate()
                assert_allclose(hermitian_eigenvalues(out.state), out.spectrum(), atol=1e-10)

    def test_matches_oracle(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 9))
            l0, tau = rng.uniform(), rng.uniform(0, 40)
            b = MeasurementBasis(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
            w = ThermalWeights.from_lambda0(l0)
            rho = oracle.evolved_state(n, w.lambda0, w.lambda1, tau)
            for j in (0, 1):
                p, state = oracle.condition_on_measurement(rho, b, j)
                if p < 1e-8:
                    continue
                out = conditional_cavity_state(w, evolution_angles(n, tau), b, j)
                assert out.probability == pytest.approx(p, abs=1e-12)
                assert_allclose(out.state.data, state.data[n - 1:n + 2, n - 1:n + 2], atol=1e-10)

    def test_zero_probability_outcome(self):
        # ground-state atom and cavity at tau=0 never give |pi_1> = -|1> for theta=0
        with pytest.raises(UndefinedConditionalState):
            conditional_cavity_state(ThermalWeights(1.0, 0.0), evolution_angles(2, 0.0), MeasurementBasis(0.0), 1)

    def test_bad_outcome(self):
        with pytest.raises(ValueError):
            conditional_cavity_state(ThermalWeights(1.0, 0.0), evolution_angles(2, 0.3), MeasurementBasis(0.0), 2)


class TestConditionalSpectrum:
    @pytest.mark.parametrize("y, expected", [(0.0, [0, 0, 1]), (0.25, [0, 0.5, 0.5]), (0.09, [0, 0.1, 0.9])])
    def test_values(self, y, expected):
        assert_allclose(conditional_spectrum(y), expected, atol=1e-15)

    def test_small_y_keeps_precision(self):
        lo = conditional_spectrum(1e-20)[1]
        assert lo == pytest.approx(1e-20, rel=1e-12)


class TestDiscord:
    def test_zero_at_initial_time(self, weights):
        for theta in np.linspace(0, math.pi, 13):
            assert discord_value(weights, evolution_angles(4, 0.0), theta) == pytest.approx(0.0, abs=1e-12)

    @given(lambda0s, taus, photons, thetas, st.floats(0, 2 * math.pi))
    @settings(max_examples=200, deadline=None)
    def test_phase_independent(self, l0, tau, n, theta, phi):
        w = ThermalWeights.from_lambda0(l0)
        ang = evolution_angles(n, tau)
        assert discord(w, ang, MeasurementBasis(theta, phi)).discord == pytest.approx(
            discord(w, ang, MeasurementBasis(theta, 0.0)).discord, abs=1e-12)

    @given(lambda0s, taus, photons, thetas)
    @settings(max_examples=200, deadline=None)
    def test_quarter_turn_periodic(self, l0, tau, n, theta):
        w = ThermalWeights.from_lambda0(l0)
        ang = evolution_angles(n, tau)
        assert discord_value(w, ang, theta + math.pi / 2) == pytest.approx(discord_value(w, ang, theta), abs=1e-12)

    @given(lambda0s, taus, photons, thetas)
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, l0, tau, n, theta):
        d = discord_value(ThermalWeights.from_lambda0(l0), evolution_angles(n, tau), theta)
        assert d >= -1e-12

    def test_breakdown_consistent(self):
        w, ang = ThermalWeights(0.7, 0.3), evolution_angles(5, 2.3)
        r = discord(w, ang, MeasurementBasis(0.9))
        assert r.discord == pytest.approx(r.mutual_info_i - r.mutual_info_j, abs=1e-14)
        assert r.s_joint == pytest.approx(binary_entropy(0.7))
        assert r.s_conditional == pytest.approx(conditional_entropy(w, ang, MeasurementBasis(0.9)))

    def test_matches_oracle(self, rng):
        for _ in range(300):
            n = int(rng.integers(0, 9))
            l0, tau = rng.uniform(), rng.uniform(0, 40)
            b = MeasurementBasis(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
            w = ThermalWeights.from_lambda0(l0)
            num = oracle.discord_numeric(oracle.evolved_state(n, w.lambda0, w.lambda1, tau), b)
            assert discord_value(w, evolution_angles(n, tau), b.theta) == pytest.approx(num, abs=1e-10)

    def test_printed_form_is_one_bit_low(self, rng):
        for _ in range(500):
            w = ThermalWeights.from_lambda0(rng.uniform())
            ang = evolution_angles(int(rng.integers(0, 11)), rng.uniform(0, 40))
            b = MeasurementBasis(rng.uniform(0, math.pi))
            assert discord(w, ang, b).discord - discord_printed_formula(w, ang, b) == pytest.approx(1.0, abs=1e-12)

    def test_printed_form_at_initial_time(self):
        d = discord_printed_formula(ThermalWeights(0.5, 0.5), evolution_angles(3, 0.0), MeasurementBasis(0.4))
        assert d == pytest.approx(-1.0, abs=1e-12)


class TestMinimize:
    @pytest.mark.parametrize("n", [1, 4])
    def test_pure_state(self, n):
        w = ThermalWeights(1.0, 0.0)
        for tau in np.linspace(0.05, 10, 17):
            m = minimize_discord(w, evolution_angles(n, tau))
            assert m.delta == pytest.approx(binary_entropy(math.cos(tau * math.sqrt(n)) ** 2), abs=1e-8)

    def test_one_bit(self):
        m = minimize_discord(ThermalWeights(1.0, 0.0), evolution_angles(1, math.pi / 4))
        assert m.delta == pytest.approx(1.0, abs=1e-12)

    def test_not_above_probes(self, rng):
        for _ in range(100):
            w = ThermalWeights.from_lambda0(rng.uniform())
            ang = evolution_angles(int(rng.integers(1, 11)), rng.uniform(0, 40))
            m = minimize_discord(w, ang)
            probes = discord_value(w, ang, np.array([0.0, math.pi / 4, math.pi / 2]))
            assert m.delta <= probes.min() + 1e-15
            assert 0 <= m.theta_star <= math.pi / 2

    def test_vectorised_matches_scalar(self):
        w = ThermalWeights(0.5, 0.5)
        tau = np.linspace(0, 12, 40)
        vec = minimize_discord(w, evolution_angles(3, tau), chunk=7)
        for k in (0, 11, 39):
            one = minimize_discord(w, evolution_angles(3, tau[k]))
            assert vec.delta[k] == one.delta
            assert vec.theta_star[k] == one.theta_star

    def test_matches_oracle(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 9))
            w = ThermalWeights.from_lambda0(rng.uniform())
            tau = rng.uniform(0, 30)
            num, _, _ = oracle.minimize_discord_numeric(oracle.evolved_state(n, w.lambda0, w.lambda1, tau))
            assert minimize_discord(w, evolution_angles(n, tau)).delta == pytest.approx(num, abs=1e-8)

    def test_too_few_grid_points(self):
        with pytest.raises(ValueError):
            minimize_discord(ThermalWeights(0.5, 0.5), evolution_angles(1, 1.0), grid_points=2)
