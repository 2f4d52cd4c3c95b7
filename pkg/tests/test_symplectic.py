import math

import numpy as np
import pytest

from kinklab.field import Grid, PerturbationState, norm_E_alpha
from kinklab.kink import SolitonParams, soliton_state
from kinklab.symplectic import (
    ProjectionError,
    modulation_rhs,
    nonlinearity_N,
    omega,
    project,
    projector_split,
    tangent_frame,
    transversal_part,
)

SQRT2 = math.sqrt(2.0)


class TestOmega:
    def test_antisymmetry_exact(self, rng):
        g = Grid.make(10.0, 0.05)
        for _ in range(5):
            a = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
            b = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
            assert omega(a, a) == 0.0
            assert omega(a, b) == -omega(b, a)

    def test_bilinearity(self, rng):
        g = Grid.make(10.0, 0.05)
        a = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
        b = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
        c = PerturbationState(g, a.psi + 2 * b.psi, a.pi + 2 * b.pi)
        d = PerturbationState(g, rng.standard_normal(g.n), rng.standard_normal(g.n))
        assert omega(c, d) == pytest.approx(omega(a, d) + 2 * omega(b, d), rel=1e-12, abs=1e-12)

    def test_grid_mismatch_rejected(self):
        a = PerturbationState.zero(Grid.make(10.0, 0.05))
        b = PerturbationState.zero(Grid.make(10.0, 0.1))
        with pytest.raises(ValueError):
            omega(a, b)


class TestTangentFrame:
    def test_gram_scalar_rest_frame(self, quartic_profile, grid_coarse):
        fr = tangent_frame(quartic_profile, 0.0, grid_coarse)
        # gamma^4 <s'(g y), s'(g y)> = integral of sech^4(x/sqrt2)/2 = 2 sqrt2/3
        assert fr.omega12 == pytest.approx(2.0 * SQRT2 / 3.0, abs=1e-4)

    @pytest.mark.parametrize("v", [0.3, 0.5])
    def test_gram_scalar_boosted(self, quartic_profile, grid_coarse, v):
        fr = tangent_frame(quartic_profile, v, grid_coarse)
        gamma = 1.0 / math.sqrt(1 - v * v)
        # change of variables: Omega(tau1, tau2) = gamma^3 int s'(u)^2 du
        oracle = gamma**3 * np.trapezoid(quartic_profile.s_prime**2, dx=0.01)
        assert fr.omega12 == pytest.approx(oracle, rel=1e-4)

    def test_rest_frame_boost_vector(self, quartic_profile, grid_coarse):
        fr = tangent_frame(quartic_profile, 0.0, grid_coarse)
        assert np.max(np.abs(fr.tau2.psi)) == 0.0
        assert np.max(np.abs(fr.tau2.pi + quartic_profile.s_prime_at(grid_coarse.x))) < 1e-12

    def test_matches_velocity_finite_differences(self, quartic_profile, grid_coarse):
        v, dv = 0.5, 1e-4
        fr = tangent_frame(quartic_profile, v, grid_coarse)
        Yp = soliton_state(quartic_profile, SolitonParams(0.0, v + dv), grid_coarse)
        Ym = soliton_state(quartic_profile, SolitonParams(0.0, v - dv), grid_coarse)
        fd_psi = (Yp.psi - Ym.psi) / (2 * dv)
        fd_pi = (Yp.pi - Ym.pi) / (2 * dv)
        assert np.max(np.abs(fd_psi - fr.tau2.psi)) <= 1e-5
        assert np.max(np.abs(fd_pi - fr.tau2.pi)) <= 1e-5

    def test_frame_derivatives_match_finite_differences(self, quartic_profile, grid_coarse):
        v, dv = 0.4, 1e-4
        fr = tangent_frame(quartic_profile, v, grid_coarse)
        frp = tangent_frame(quartic_profile, v + dv, grid_coarse)
        frm = tangent_frame(quartic_profile, v - dv, grid_coarse)
        for name, analytic, plus, minus in (
            ("dtau1_dv", fr.dtau1_dv, frp.tau1, frm.tau1),
            ("dtau2_dv", fr.dtau2_dv, frp.tau2, frm.tau2),
        ):
            fd_psi = (plus.psi - minus.psi) / (2 * dv)
            fd_pi = (plus.pi - minus.pi) / (2 * dv)
            assert np.max(np.abs(fd_psi - analytic.psi)) <= 1e-4, name
            assert np.max(np.abs(fd_pi - analytic.pi)) <= 1e-4, name
        # y-derivatives against centered differences of the frame fields
        h = grid_coarse.h
        for analytic, base in ((fr.dtau1_dy, fr.tau1), (fr.dtau2_dy, fr.tau2)):
            fd = np.gradient(base.psi, h, edge_order=2)
            inner = slice(5, -5)
            assert np.max(np.abs(fd[inner] - analytic.psi[inner])) <= 2e-3

    def test_fredholm_positivity(self, quartic_profile, grid_coarse):
        for v in (0.0, 0.3, 0.6):
            fr = tangent_frame(quartic_profile, v, grid_coarse)
            gamma = fr.gamma
            sp = gamma * quartic_profile.s_prime_at(gamma * grid_coarse.x)
            val = float(np.trapezoid(sp * sp, dx=grid_coarse.h))
            assert val > 1e-6
            if v == 0.0:
                assert val == pytest.approx(2.0 * SQRT2 / 3.0, abs=1e-4)


class TestProject:
    def test_exact_soliton_fixed_point(self, quartic_profile, grid_coarse):
        Y = soliton_state(quartic_profile, SolitonParams(0.3, 0.2), grid_coarse)
        sig, X, frame, res = project(Y, SolitonParams(0.0, 0.0), quartic_profile)
        assert abs(sig.b - 0.3) <= 1e-8
        assert abs(sig.v - 0.2) <= 1e-8
        assert norm_E_alpha(X, 0.0) <= 1e-10

    def test_recovery_against_grid_search_oracle(self, quartic_profile, grid_coarse):
        Y = soliton_state(quartic_profile, SolitonParams(0.3, 0.2), grid_coarse)
        best = None
        for b in np.linspace(0.0, 0.6, 25):
            for v in np.linspace(0.0, 0.4, 17):
                X = transversal_part(Y, SolitonParams(b, v), quartic_profile)
                r = norm_E_alpha(X, 0.0)
                if best is None or r < best[0]:
                    best = (r, b, v)
        assert best[1] == pytest.approx(0.3, abs=0.03)
        assert best[2] == pytest.approx(0.2, abs=0.03)

    def test_perturbed_orthogonality(self, quartic_profile, grid_coarse):
        Y = soliton_state(quartic_profile, SolitonParams(0.3, 0.2), grid_coarse)
        Y.psi = Y.psi + 1e-3 * np.exp(-((grid_coarse.x - 1.0) ** 2))
        sig, X, frame, res = project(Y, SolitonParams(0.0, 0.0), quartic_profile)
        scale = norm_E_alpha(X, 0.0)
        for j, tau in enumerate((frame.tau1, frame.tau2)):
            assert abs(res[j]) <= 1e-10 * scale * norm_E_alpha(tau, 0.0)

    def test_translation_covariance(self, quartic_profile, grid_coarse):
        base = soliton_state(quartic_profile, SolitonParams(0.3, 0.2), grid_coarse)
        base.psi = base.psi + 1e-3 * np.exp(-((grid_coarse.x - 1.0) ** 2))
        sig0, _, _, _ = project(base, SolitonParams(0.0, 0.0), quartic_profile)
        q_shift = 0.5  # a grid multiple, so the translation is exact
        shifted = soliton_state(quartic_profile, SolitonParams(0.3 + q_shift, 0.2), grid_coarse)
        shifted.psi = shifted.psi + 1e-3 * np.exp(-((grid_coarse.x - q_shift - 1.0) ** 2))
        sig1, _, _, _ = project(shifted, SolitonParams(0.0, 0.0), quartic_profile)
        assert sig1.b - sig0.b == pytest.approx(q_shift, abs=1e-9)
        assert sig1.v == pytest.approx(sig0.v, abs=1e-9)

    def test_velocity_cap_error(self, quartic_profile, grid_coarse):
        Y = soliton_state(quartic_profile, SolitonParams(0.0, 0.9), grid_coarse)
        with pytest.raises(ProjectionError):
            project(Y, SolitonParams(0.0, 0.85), quartic_profile, v_cap=0.6)


class TestProjectorSplit:
    def test_projector_on_its_range(self, quartic_profile, grid_coarse):
        fr = tangent_frame(quartic_profile, 0.2, grid_coarse)
        Xd, Xc = projector_split(fr.tau1, fr)
        assert norm_E_alpha(Xc, 0.0) <= 1e-10 * norm_E_alpha(fr.tau1, 0.0)

    def test_idempotence_and_orthogonality(self, quartic_profile, grid_coarse, rng):
        fr = tangent_frame(quartic_profile, 0.2, grid_coarse)
        X = PerturbationState(
            grid_coarse, rng.standard_normal(grid_coarse.n), rng.standard_normal(grid_coarse.n)
        )
        Xd, Xc = projector_split(X, fr)
        scale = norm_E_alpha(X, 0.0) * max(
            norm_E_alpha(fr.tau1, 0.0), norm_E_alpha(fr.tau2, 0.0)
        )
        assert abs(omega(Xc, fr.tau1)) <= 1e-10 * scale
        assert abs(omega(Xc, fr.tau2)) <= 1e-10 * scale
        Xd2, _ = projector_split(Xc, fr)
        assert norm_E_alpha(Xd2, 0.0) <= 1e-10 * norm_E_alpha(X, 0.0)

    def test_degenerate_gram_rejected(self, quartic_profile, grid_coarse):
        fr = tangent_frame(quartic_profile, 0.2, grid_coarse)
        fr.omega12 = 1e-13
        with pytest.raises(ProjectionError):
            projector_split(fr.tau1, fr)


class TestNonlinearity:
    def test_zero_at_zero(self, quartic, quartic_profile, grid_coarse):
        N = nonlinearity_N(0.2, np.zeros(grid_coarse.n), quartic, quartic_profile, grid_coarse)
        assert np.max(np.abs(N)) == 0.0

    def test_quartic_cubic_identity(self, quartic, quartic_profile, grid_coarse):
        psi_pert = 0.01 * np.exp(-grid_coarse.x**2)
        N = nonlinearity_N(0.0, psi_pert, quartic, quartic_profile, grid_coarse)
        s = quartic_profile.s_at(grid_coarse.x)
        # F cubic: N = -(3 s Psi^2 + Psi^3) / a^2 exactly
        assert np.max(np.abs(N + 3 * s * psi_pert**2 + psi_pert**3)) <= 1e-12

    def test_quadratic_leading_order(self, quartic, quartic_profile, grid_coarse):
        psi_pert = 1e-3 * np.exp(-grid_coarse.x**2)
        n1 = np.max(np.abs(nonlinearity_N(0.0, psi_pert, quartic, quartic_profile, grid_coarse)))
        n2 = np.max(np.abs(nonlinearity_N(0.0, 0.5 * psi_pert, quartic, quartic_profile, grid_coarse)))
        assert n1 / n2 == pytest.approx(4.0, rel=0.05)


class TestModulation:
    def test_zero_perturbation_is_stationary(self, quartic, quartic_profile, grid_coarse):
        fr = tangent_frame(quartic_profile, 0.2, grid_coarse)
        cdot, vdot = modulation_rhs(
            SolitonParams(0.0, 0.2), PerturbationState.zero(grid_coarse), fr, quartic, quartic_profile
        )
        assert cdot == 0.0 and vdot == 0.0

    def test_quadratic_scaling(self, quartic, quartic_profile, grid_coarse):
        fr = tangent_frame(quartic_profile, 0.2, grid_coarse)
        X = PerturbationState(
            grid_coarse,
            1e-3 * np.exp(-grid_coarse.x**2),
            5e-4 * np.exp(-((grid_coarse.x - 0.5) ** 2)),
        )
        Xh = PerturbationState(grid_coarse, 0.5 * X.psi, 0.5 * X.pi)
        c1, v1 = modulation_rhs(SolitonParams(0.0, 0.2), X, fr, quartic, quartic_profile)
        c2, v2 = modulation_rhs(SolitonParams(0.0, 0.2), Xh, fr, quartic, quartic_profile)
        assert (abs(c1) + abs(v1)) / (abs(c2) + abs(v2)) == pytest.approx(4.0, rel=0.10)

    def test_degenerate_system_rejected(self, quartic, quartic_profile, grid_coarse):
        # craft X so the Gram corrections cancel the leading omega12^2 term
        fr = tangent_frame(quartic_profile, 0.2, grid_coarse)
        Z = PerturbationState(grid_coarse, fr.dtau1_dv.pi.copy(), -fr.dtau1_dv.psi.copy())
        lam = -fr.omega12 / omega(Z, fr.dtau1_dv)
        X = PerturbationState(grid_coarse, lam * Z.psi, lam * Z.pi)
        with pytest.raises(ProjectionError):
            modulation_rhs(SolitonParams(0.0, 0.2), X, fr, quartic, quartic_profile)
