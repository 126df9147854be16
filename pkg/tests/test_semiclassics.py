import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ringtheta.semiclassics import (
    DilutenessWarning,
    SemiclassicsError,
    diga_circle_expectations,
    diga_effective_hamiltonian,
    diga_hop_probability,
    diga_spectrum,
    instanton_action_quadrature,
    instanton_density,
    instanton_profile,
    instanton_quantities,
)

# Printed two- and three-well special cases serve as oracles for the
# general-n amplitude sum (they are not separate code paths).


def n2_p00(omega, theta, t):
    d = instanton_density(2, omega)
    return np.cos(2 * omega * d * np.cos(theta / 2) * t) ** 2


def n2_p01(omega, theta, t):
    d = instanton_density(2, omega)
    return np.sin(2 * omega * d * np.cos(theta / 2) * t) ** 2


def n3_highsym(omega, t):
    d = instanton_density(3, omega)
    p00 = 1 - (8 / 9) * np.sin(1.5 * omega * d * t) ** 2
    p01 = (4 / 9) * np.sin(1.5 * omega * d * t) ** 2
    return p00, p01, p01


def n3_halfpi(omega, t):
    d = instanton_density(3, omega)
    x = (math.sqrt(3) / 2) * omega * d * t
    p00 = (1 / 9) * (1 + 2 * np.cos(math.sqrt(3) * omega * d * t)) ** 2
    p01 = (16 / 9) * np.sin(x) ** 2 * np.cos(x - math.pi / 6) ** 2
    p02 = (16 / 9) * np.sin(x) ** 2 * np.cos(x + math.pi / 6) ** 2
    return p00, p01, p02


class TestInstantonQuantities:
    def test_reference_point(self):
        q = instanton_quantities(2, 2.0)
        assert q.action_real == pytest.approx(4.0, abs=1e-15)
        assert q.density == pytest.approx(0.0292275310, abs=1e-9)
        assert q.spectrum[0] == pytest.approx(0.8830898761, abs=1e-9)
        assert q.spectrum[1] == pytest.approx(1.1169101239, abs=1e-9)
        assert q.chi_t == pytest.approx(0.0292275310, abs=1e-9)

    def test_even_n_degenerate_at_pi(self):
        spec = diga_spectrum(2, 2.0, math.pi)
        assert spec[0] == pytest.approx(1.0, abs=1e-14)
        assert spec[1] == pytest.approx(1.0, abs=1e-14)

    def test_monodromy_cyclic_relabeling(self):
        # E_k(theta + 2pi) = E_{k+1 mod n}(theta), branch index shifted by one
        for n in (2, 3, 5):
            E1 = diga_spectrum(n, 3.0, 0.7 + 2 * math.pi)
            E0 = diga_spectrum(n, 3.0, 0.7)
            assert np.max(np.abs(E1 - np.roll(E0, -1))) < 1e-12

    def test_chi_t_second_difference(self):
        for n, omega in [(2, 2.0), (3, 3.0), (4, 6.0)]:
            q = instanton_quantities(n, omega)
            h = 1e-3
            d2 = (diga_spectrum(n, omega, h)[0] - 2 * diga_spectrum(n, omega, 0.0)[0]
                  + diga_spectrum(n, omega, -h)[0]) / h**2
            assert q.chi_t == pytest.approx(d2, rel=1e-6)

    def test_diluteness_warning(self):
        with pytest.warns(DilutenessWarning):
            instanton_quantities(4, 1.0)  # action = 0.5

    def test_domain_checks(self):
        with pytest.raises(SemiclassicsError):
            instanton_quantities(1, 2.0)
        with pytest.raises(SemiclassicsError):
            instanton_quantities(2, -1.0)


class TestEffectiveHamiltonian:
    def test_n2_explicit(self):
        q = instanton_quantities(2, 2.0, theta=0.9)
        H = diga_effective_hamiltonian(2, 2.0, 0.9).entries
        # both links merge on a 2-ring: off-diagonal -(I + Ibar) = -2 w d cos(theta/2)
        off = -2 * 2.0 * q.density * math.cos(0.45)
        assert H[0, 1] == pytest.approx(off, abs=1e-14)
        w = np.linalg.eigvalsh(H)
        assert np.allclose(np.sort(w), np.sort(diga_spectrum(2, 2.0, 0.9)), atol=1e-14)

    @pytest.mark.parametrize("n", range(2, 9))
    def test_spectrum_matches_closed_form(self, n, rng):
        theta = rng.uniform(-math.pi, math.pi)
        H = diga_effective_hamiltonian(n, 2.5, theta).entries
        w = np.linalg.eigvalsh(H)
        assert np.max(np.abs(np.sort(w) - np.sort(diga_spectrum(n, 2.5, theta)))) < 1e-12

    def test_theta_reflection_conjugates(self):
        Hp = diga_effective_hamiltonian(3, 3.0, 0.8).entries
        Hm = diga_effective_hamiltonian(3, 3.0, -0.8).entries
        assert np.max(np.abs(Hm - Hp.conj())) < 1e-15
        assert np.allclose(np.linalg.eigvalsh(Hp), np.linalg.eigvalsh(Hm), atol=1e-13)


class TestHopProbabilities:
    def test_n2_closed_forms(self):
        t = np.linspace(0.0, 80.0, 300)
        for theta in (0.0, 1.1, math.pi / 2, math.pi):
            p00 = diga_hop_probability(2, 2.0, theta, 0, 0, t)
            p01 = diga_hop_probability(2, 2.0, theta, 0, 1, t)
            assert np.max(np.abs(p00 - n2_p00(2.0, theta, t))) < 1e-12
            assert np.max(np.abs(p01 - n2_p01(2.0, theta, t))) < 1e-12

    def test_n2_frozen_at_pi(self):
        t = np.linspace(0.0, 500.0, 50)
        assert np.max(diga_hop_probability(2, 2.0, math.pi, 0, 1, t)) < 1e-25

    def test_n3_highsym_closed_forms(self):
        t = np.linspace(0.0, 60.0, 211)
        for theta in (0.0, math.pi):
            ref = n3_highsym(3.0, t)
            for l in range(3):
                got = diga_hop_probability(3, 3.0, theta, 0, l, t)
                assert np.max(np.abs(got - ref[l])) < 1e-12

    def test_n3_quarter_period_values(self):
        d = instanton_density(3, 3.0)
        t_q = (math.pi / 2) / (1.5 * 3.0 * d)
        assert diga_hop_probability(3, 3.0, 0.0, 0, 0, t_q) == pytest.approx(1 / 9, abs=1e-12)
        assert diga_hop_probability(3, 3.0, 0.0, 0, 1, t_q) == pytest.approx(4 / 9, abs=1e-12)
        assert diga_hop_probability(3, 3.0, 0.0, 0, 2, t_q) == pytest.approx(4 / 9, abs=1e-12)

    def test_n3_halfpi_chirality(self):
        d = instanton_density(3, 3.0)
        t = np.linspace(0.0, 40.0, 111)
        ref = n3_halfpi(3.0, t)
        for l in range(3):
            got = diga_hop_probability(3, 3.0, math.pi / 2, 0, l, t)
            assert np.max(np.abs(got - ref[l])) < 1e-12
        t_s = (math.pi / 6) / ((math.sqrt(3) / 2) * 3.0 * d)
        assert diga_hop_probability(3, 3.0, math.pi / 2, 0, 1, t_s) == pytest.approx(4 / 9, abs=1e-12)
        assert diga_hop_probability(3, 3.0, math.pi / 2, 0, 2, t_s) == pytest.approx(1 / 9, abs=1e-12)

    def test_matrix_exponential_oracle(self):
        t_grid = np.linspace(0.0, 30.0, 7)
        for n, theta in [(2, 0.6), (3, 0.6), (3, math.pi / 2)]:
            H = diga_effective_hamiltonian(n, 2.5, theta).entries
            for t in t_grid:
                U = expm(-1j * H * t)
                for l in range(n):
                    got = diga_hop_probability(n, 2.5, theta, 0, l, t)
                    assert abs(got - abs(U[l, 0]) ** 2) < 1e-10


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(2, 6),
    theta=st.floats(-math.pi, math.pi),
    omega=st.floats(1.0, 6.0),
    t=st.floats(0.0, 200.0),
)
def test_hop_probability_unitarity(n, theta, omega, t):
    total = sum(diga_hop_probability(n, omega, theta, 0, l, t) for l in range(n))
    assert total == pytest.approx(1.0, abs=1e-12)


class TestCircleExpectations:
    def test_initial_values(self):
        c, s = diga_circle_expectations(3, 3.0, 0.0, 0.0)
        assert c == pytest.approx(1.0, abs=1e-12)
        assert s == pytest.approx(0.0, abs=1e-12)

    def test_printed_forms_n3(self):
        d = instanton_density(3, 3.0)
        t = np.linspace(0.0, 50.0, 201)
        c0, s0 = diga_circle_expectations(3, 3.0, 0.0, t)
        assert np.max(np.abs(c0 - (1 + 2 * np.cos(3 * 3.0 * d * t)) / 3)) < 1e-12
        assert np.max(np.abs(s0)) < 1e-12
        ch, sh = diga_circle_expectations(3, 3.0, math.pi / 2, t)
        x = math.sqrt(3) * 3.0 * d * t
        assert np.max(np.abs(ch - (2 * np.cos(x) + np.cos(2 * x)) / 3)) < 1e-12
        assert np.max(np.abs(sh - (2 * np.sin(x) - np.sin(2 * x)) / 3)) < 1e-12

    def test_half_turn_value(self):
        d = instanton_density(3, 3.0)
        t_c = math.pi / (math.sqrt(3) * 3.0 * d)
        c, s = diga_circle_expectations(3, 3.0, math.pi / 2, t_c)
        assert c == pytest.approx(-1 / 3, abs=1e-12)
        assert s == pytest.approx(0.0, abs=1e-12)

    def test_theta_pi_equals_zero(self):
        t = np.linspace(0.0, 100.0, 301)
        c0, s0 = diga_circle_expectations(3, 3.0, 0.0, t)
        cp, sp = diga_circle_expectations(3, 3.0, math.pi, t)
        assert np.max(np.abs(c0 - cp)) < 1e-12
        assert np.max(np.abs(s0 - sp)) < 1e-12


class TestInstantonProfile:
    def test_midpoint(self):
        assert instanton_profile(0.0, 0.0, 2, 2.0) == pytest.approx(math.pi / 2, abs=1e-14)
        assert instanton_profile(0.0, 0.0, 3, 3.0, sign=-1) == pytest.approx(-math.pi / 3, abs=1e-14)

    def test_saturation(self):
        n, omega = 2, 2.0
        x = instanton_profile(20.0 / omega, 0.0, n, omega)
        assert abs(x - 2 * math.pi / n) < 1e-8
        assert abs(instanton_profile(-20.0 / omega, 0.0, n, omega)) < 1e-8

    @pytest.mark.parametrize("n,omega", [(2, 2.0), (3, 3.0), (2, 5.0)])
    def test_action_quadrature(self, n, omega):
        q = instanton_action_quadrature(n, omega)
        assert q == pytest.approx(8.0 * omega / n**2, rel=1e-6)
