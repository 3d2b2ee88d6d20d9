import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from jc_discord import oracle
from jc_discord.closed_form import (
    ThermalWeights,
    atom_reduced,
    evolution_angles,
    evolve_basis_ket,
    inversion,
    inversion_via_trace,
    joint_labels,
    joint_spectrum,
    joint_state,
    weights_from_temperature,
)
from jc_discord.core import hermitian_eigenvalues, von_neumann_entropy

lambda0s = st.floats(0.0, 1.0)
taus = st.floats(0.0, 60.0)
photons = st.integers(0, 12)


class TestWeights:
    def test_ln3(self):
        w = weights_from_temperature(math.log(3.0))
        assert_allclose([w.lambda0, w.lambda1], [0.75, 0.25], atol=1e-15)

    def test_infinite_temperature(self):
        w = weights_from_temperature(0.0)
        assert (w.lambda0, w.lambda1) == (0.5, 0.5)

    def test_low_temperature_limit(self):
        w = weights_from_temperature(50.0)
        assert w.lambda1 == pytest.approx(math.exp(-50.0), rel=1e-12)

    @pytest.mark.parametrize("x", [-1.0, float("inf"), float("nan")])
    def test_bad_ratio(self, x):
        with pytest.raises(ValueError):
            weights_from_temperature(x)

    def test_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ThermalWeights(0.5, 0.6)


class TestAngles:
    def test_values(self):
        ang = evolution_angles(4, math.pi / 4)
        assert ang.psi_n == pytest.approx(math.pi / 2)
        assert ang.cn == pytest.approx(0.0, abs=1e-15)
        assert ang.sn == pytest.approx(1.0)
        assert ang.cnp1 == pytest.approx(math.cos(math.pi * math.sqrt(5) / 4))
        assert ang.snp1 == pytest.approx(math.sin(math.pi * math.sqrt(5) / 4))

    def test_rejects_negative_n(self):
        with pytest.raises(ValueError):
            evolution_angles(-1, 0.3)

    def test_broadcasts(self):
        ang = evolution_angles(3, np.linspace(0, 1, 5))
        assert ang.cn.shape == (5,)


class TestBasisKets:
    def test_ground_level(self):
        ang = evolution_angles(4, 0.3)
        k = evolve_basis_ket(0, 4, ang)
        assert k == {"|0,4>": pytest.approx(math.cos(0.6)), "|1,3>": pytest.approx(-1j * math.sin(0.6))}

    def test_excited_level(self):
        ang = evolution_angles(4, 0.3)
        k = evolve_basis_ket(1, 4, ang)
        r5 = 0.3 * math.sqrt(5)
        assert k["|1,4>"] == pytest.approx(math.cos(r5))
        assert k["|0,5>"] == pytest.approx(-1j * math.sin(r5))

    def test_vacuum_ground_is_stationary(self):
        assert evolve_basis_ket(0, 0, evolution_angles(0, 2.0)) == {"|0,0>": 1.0}

    def test_matches_numerical_propagation(self):
        n, tau = 3, 1.7
        space = oracle.TruncatedSpace.for_photons(n)
        u = oracle.propagator(oracle.build_interaction_hamiltonian(space), tau)
        labels = space.labels()
        for which in (0, 1):
            col = u[:, space.index(which, n)]
            expected = evolve_basis_ket(which, n, evolution_angles(n, tau))
            for lab, amp in zip(labels, col):
                assert amp == pytest.approx(expected.get(lab, 0.0), abs=1e-12)

    def test_mismatched_n(self):
        with pytest.raises(ValueError):
            evolve_basis_ket(0, 3, evolution_angles(4, 0.1))


class TestJointState:
    def test_labels(self):
        assert joint_labels(5) == ("|0,4>", "|0,5>", "|0,6>", "|1,4>", "|1,5>", "|1,6>")

    def test_initial_state(self):
        rho = joint_state(ThermalWeights(0.75, 0.25), evolution_angles(5, 0.0))
        expected = np.zeros((6, 6))
        expected[1, 1], expected[4, 4] = 0.75, 0.25
        assert_allclose(rho.data, expected, atol=0)

    @given(lambda0s, taus, photons)
    @settings(max_examples=200, deadline=None)
    def test_valid_state_with_fixed_spectrum(self, l0, tau, n):
        w = ThermalWeights.from_lambda0(l0)
        rho = joint_state(w, evolution_angles(n, tau)).validate()
        assert_allclose(hermitian_eigenvalues(rho), joint_spectrum(w), atol=1e-12)

    def test_continuous_in_tau(self):
        w = ThermalWeights(0.6, 0.4)
        a = joint_state(w, evolution_angles(7, 3.0)).data
        b = joint_state(w, evolution_angles(7, 3.0 + 1e-9)).data
        assert np.max(np.abs(a - b)) < 1e-7

    def test_pure_when_fully_ground(self):
        rho = joint_state(ThermalWeights(1.0, 0.0), evolution_angles(6, 2.2))
        assert_allclose(rho.data @ rho.data, rho.data, atol=1e-14)
        assert von_neumann_entropy(hermitian_eigenvalues(rho)) == pytest.approx(0.0, abs=1e-12)


class TestAtomReduced:
    def test_value(self):
        ang = evolution_angles(1, math.pi / 2)
        s2 = math.sin(math.pi * math.sqrt(2) / 2) ** 2
        rho = atom_reduced(ThermalWeights(0.5, 0.5), ang)
        assert_allclose(np.diag(rho.data).real, [0.5 * s2, 0.5 + 0.5 * (1 - s2)], atol=1e-15)

    @given(lambda0s, taus, photons)
    @settings(max_examples=100, deadline=None)
    def test_partial_trace(self, l0, tau, n):
        w = ThermalWeights.from_lambda0(l0)
        ang = evolution_angles(n, tau)
        num = oracle.partial_trace(oracle.evolved_state(n, w.lambda0, w.lambda1, tau), "atom")
        assert_allclose(atom_reduced(w, ang).data, num.data, atol=1e-12)


class TestInversion:
    @given(lambda0s, taus)
    @settings(max_examples=100, deadline=None)
    def test_vacuum(self, l0, tau):
        w = ThermalWeights.from_lambda0(l0)
        got = inversion(w, evolution_angles(0, tau))
        assert got == pytest.approx(w.lambda0 - w.lambda1 * math.cos(2 * tau), abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 4, 8, 15])
    def test_factorises_at_equal_weights(self, n):
        tau = np.linspace(0, 100, 1000)
        got = inversion(ThermalWeights(0.5, 0.5), evolution_angles(n, tau))
        a, b = math.sqrt(n + 1), math.sqrt(n)
        assert np.max(np.abs(got - np.sin(tau * (a + b)) * np.sin(tau * (a - b)))) < 1e-12

    def test_trace_form(self, rng):
        for _ in range(1000):
            w = ThermalWeights.from_lambda0(rng.uniform())
            ang = evolution_angles(int(rng.integers(0, 11)), rng.uniform(0, 60))
            assert inversion_via_trace(joint_state(w, ang)) == pytest.approx(inversion(w, ang), abs=1e-12)

    @given(lambda0s, taus, photons)
    @settings(max_examples=100, deadline=None)
    def test_bounded(self, l0, tau, n):
        assert abs(inversion(ThermalWeights.from_lambda0(l0), evolution_angles(n, tau))) <= 1 + 1e-12
