import math

import numpy as np
import pytest
from scipy.integrate import quad

from kinklab.field import (
    FieldState,
    Grid,
    PerturbationState,
    d1,
    d2,
    energy,
    energy_density,
    norm_E_alpha,
    norm_L2_weighted,
    norm_Linf,
    norm_W,
    snapshot_to_csv,
)
from kinklab.kink import SolitonParams, soliton_state

SQRT2 = math.sqrt(2.0)


class TestGrid:
    def test_zero_is_a_node_and_count_odd(self):
        g = Grid.make(20.0, 0.05)
        assert g.n % 2 == 1
        assert 0.0 in g.x
        assert g.x[0] == -20.0 and g.x[-1] == 20.0

    def test_non_integer_ratio_rejected(self):
        with pytest.raises(ValueError):
            Grid.make(20.0, 0.0513)

    def test_state_validation(self):
        g = Grid.make(1.0, 0.5)
        with pytest.raises(ValueError):
            FieldState(g, np.zeros(4), np.zeros(g.n))
        with pytest.raises(ValueError):
            FieldState(g, np.full(g.n, np.nan), np.zeros(g.n))


class TestEnergy:
    def test_vacuum_energy_zero(self, quartic):
        g = Grid.make(10.0, 0.05)
        Y = FieldState(g, np.ones(g.n), np.zeros(g.n))
        assert energy(Y, quartic) == pytest.approx(0.0, abs=1e-14)
        assert np.max(np.abs(energy_density(Y, quartic))) == 0.0

    def test_static_kink_energy(self, quartic, quartic_profile):
        g = Grid.make(20.0, 0.01)
        Y = soliton_state(quartic_profile, SolitonParams(0.0, 0.0), g)
        # 1/2 s'^2 + U(s) = s'^2 by the first integral; integral of
        # (1/2) sech^4(x / sqrt 2) is 2 sqrt(2) / 3
        assert energy(Y, quartic) == pytest.approx(2.0 * SQRT2 / 3.0, abs=1e-5)

    def test_density_consistency(self, quartic, quartic_profile):
        g = Grid.make(20.0, 0.01)
        Y = soliton_state(quartic_profile, SolitonParams(0.0, 0.0), g)
        e = energy_density(Y, quartic)
        assert np.trapezoid(e, dx=g.h) == pytest.approx(energy(Y, quartic), abs=1e-14)
        i0 = np.argmin(np.abs(g.x))
        # e(0) = s'(0)^2 = 1/2 from the closed form s'(0) = 1 / sqrt(2)
        assert e[i0] == pytest.approx(0.5, abs=1e-5)


class TestNorms:
    def test_zero_states(self):
        g = Grid.make(10.0, 0.05)
        X = PerturbationState.zero(g)
        assert norm_E_alpha(X, 0.0) == 0.0
        assert norm_W(X) == 0.0
        assert norm_Linf(X.psi) == 0.0

    def test_gaussian_energy_norm_against_analytic(self):
        g = Grid.make(15.0, 0.01)
        X = PerturbationState(g, np.exp(-(g.x**2)), np.zeros(g.n))
        # |psi|_2 = |psi'|_2 = (pi/2)^(1/4) for exp(-x^2)
        exact = 2.0 * (math.pi / 2.0) ** 0.25
        assert norm_E_alpha(X, 0.0) == pytest.approx(exact, abs=1e-4)

    def test_weight_ordering(self):
        g = Grid.make(15.0, 0.02)
        X = PerturbationState(g, np.exp(-(g.x**2)), 0.5 * np.exp(-((g.x - 1) ** 2)))
        assert norm_E_alpha(X, -2.6) <= norm_E_alpha(X, 2.6)

    def test_W_norm_against_quadrature_oracle(self):
        g = Grid.make(20.0, 0.005)
        X = PerturbationState(g, 1.0 / np.cosh(g.x), np.zeros(g.n))
        sech = lambda x: 1.0 / math.cosh(x)
        l1 = quad(sech, -30, 30)[0]
        l1d = quad(lambda x: abs(sech(x) * math.tanh(x)), -30, 30)[0]
        l1dd = quad(lambda x: abs(sech(x) * (1 - 2 * sech(x) ** 2)), -30, 30)[0]
        assert norm_W(X) == pytest.approx(l1 + l1d + l1dd, abs=1e-3)

    def test_homogeneity_and_triangle(self, rng):
        g = Grid.make(10.0, 0.05)
        for _ in range(5):
            a = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
            b = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
            ab = PerturbationState(g, a.psi + b.psi, a.pi + b.pi)
            twice = PerturbationState(g, 2 * a.psi, 2 * a.pi)
            for norm in (lambda X: norm_E_alpha(X, -1.3), lambda X: norm_E_alpha(X, 0.7), norm_W):
                assert norm(twice) == pytest.approx(2 * norm(a), rel=1e-12)
                assert norm(ab) <= norm(a) + norm(b) + 1e-12

    def test_sup_norm(self, quartic_profile):
        assert norm_Linf(quartic_profile.s_prime) == pytest.approx(1.0 / SQRT2, abs=1e-9)
        assert norm_Linf(-quartic_profile.s_prime) == norm_Linf(quartic_profile.s_prime)

    def test_alpha_zero_matches_unweighted_formula(self, rng):
        g = Grid.make(10.0, 0.05)
        X = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
        h = g.h
        manual = (
            math.sqrt(np.trapezoid(X.psi**2, dx=h))
            + math.sqrt(np.trapezoid(d1(X.psi, h) ** 2, dx=h))
            + math.sqrt(np.trapezoid(X.pi**2, dx=h))
        )
        assert norm_E_alpha(X, 0.0) == pytest.approx(manual, rel=1e-14)

    def test_refinement_convergence(self):
        # halving h changes each norm of a smooth state by O(h^2)
        vals = {}
        for h in (0.2, 0.1, 0.05):
            g = Grid.make(12.0, h)
            X = PerturbationState(g, np.exp(-g.x**2), np.sin(g.x) * np.exp(-g.x**2))
            vals[h] = (norm_E_alpha(X, -1.0), norm_W(X))
        for i in range(2):
            d1_ = abs(vals[0.2][i] - vals[0.1][i])
            d2_ = abs(vals[0.1][i] - vals[0.05][i])
            assert d2_ < d1_ / 2.5

    def test_weighted_l2(self):
        g = Grid.make(15.0, 0.01)
        psi = np.exp(-(g.x**2))
        val = norm_L2_weighted(psi, g, 2.75)
        oracle = math.sqrt(quad(lambda x: (1 + abs(x)) ** 5.5 * math.exp(-2 * x * x), -15, 15)[0])
        assert val == pytest.approx(oracle, rel=1e-5)


def test_derivative_helpers_second_order():
    g = Grid.make(5.0, 0.01)
    y = np.sin(g.x)
    assert np.max(np.abs(d1(y, g.h) - np.cos(g.x))) < 1e-4
    assert np.max(np.abs(d2(y, g.h) + np.sin(g.x))) < 1e-3


def test_snapshot_csv_round_trip(tmp_path, quartic_profile):
    g = Grid.make(5.0, 0.1)
    Y = soliton_state(quartic_profile, SolitonParams(0.0, 0.2), g)
    path = tmp_path / "snap.csv"
    snapshot_to_csv(Y, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (g.n, 3)
    assert np.allclose(data[:, 1], Y.psi)
    assert open(path).readline().strip() == "x,psi,pi"
