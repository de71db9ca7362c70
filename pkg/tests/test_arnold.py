import numpy as np
import pytest

from alphaeuler import spectral
from alphaeuler.arnold import (
    DomainSpec,
    INCONCLUSIVE,
    STABLE,
    arnold_first_verdict,
    arnold_second_verdict,
    build_regularization_example,
    lambda_min_alpha,
    lambda_table,
    reconstruct_f_prime,
)
from alphaeuler.domain import (
    Grid1D,
    Profile1D,
    build_steady_shear,
    torus_state_from_streamfunction,
)
from alphaeuler.errors import AllSingular, AssumptionViolated, NoNontrivialSolution

import oracles
from conftest import (
    couette_state,
    cubic_shear_state,
    poiseuille_state,
    sinusoidal_torus_state,
)


class TestFPrimeReconstruction:
    def test_sinusoidal_torus_constant(self):
        for m, alpha in ((1, 0.5), (2, 0.5), (3, 0.25)):
            state = sinusoidal_torus_state(m=m, alpha=alpha)
            fp = reconstruct_f_prime(state)
            expected = 1.0 / (m**2 * (1 + alpha**2 * m**2))
            values = np.array([v for _, v in fp.samples])
            np.testing.assert_allclose(values, expected, atol=1e-8)
            assert not fp.singular

    def test_cubic_shear_bounds(self, funstable_state):
        # -F' = V/U'' = -(1 - y^2)/6 on the cubic profile
        fp = reconstruct_f_prime(funstable_state)
        assert fp.K1 == pytest.approx(-1.0 / 6.0, abs=1e-3)
        assert fp.K2 == pytest.approx(-1.0 / 9.0, abs=1e-6)
        assert not fp.singular  # V vanishes with U'': the ratio stays bounded
        assert fp.singular_points  # the U'' zero itself is reported

    def test_singular_flag_for_noncancelling_zero(self):
        # U'' vanishes at y = 0 but V(0) != 0: F' genuinely unbounded
        g = Grid1D(-1.0, 1.0, 65)
        from alphaeuler.domain import PolynomialDescriptor

        # V' = (1 - y^2) y^2 keeps walls; V(0) > 0 after integration constant
        dv = np.polynomial.polynomial.Polynomial((0.0, 0.0, 1.0, 0.0, -1.0))
        V_poly = dv.integ() + 1.0
        V = Profile1D.from_descriptor(g, PolynomialDescriptor(tuple(V_poly.coef)))
        st = build_steady_shear(from_v=V, alpha=0.2)
        fp = reconstruct_f_prime(st)
        assert fp.singular

    def test_all_singular_raises(self):
        with pytest.raises(AllSingular):
            reconstruct_f_prime(couette_state())

    def test_two_shell_field_violates_assumption(self):
        n = 64
        x = np.linspace(0, 2 * np.pi, n, endpoint=False)
        X, Y = np.meshgrid(x, x, indexing="ij")
        phi = np.sin(Y) + 0.8 * np.sin(2 * X)
        state = torus_state_from_streamfunction(np.fft.fft2(phi), 0.3)
        with pytest.raises(AssumptionViolated):
            reconstruct_f_prime(state)

    def test_constant_vorticity_rejected(self):
        state = torus_state_from_streamfunction(np.zeros((16, 16), complex), 0.3)
        with pytest.raises(AssumptionViolated):
            reconstruct_f_prime(state)


class TestLambdaMin:
    @pytest.mark.parametrize("alpha", [0.0, 0.1, 0.5, 1.0])
    def test_square_torus(self, alpha):
        res = lambda_min_alpha(DomainSpec.torus(), alpha, 16)
        assert res.value == pytest.approx(1.0 + alpha**2, abs=1e-12)
        assert abs(res.numeric - res.value) <= 1e-8 * res.value
        assert res.mu_min == pytest.approx(1.0)

    def test_periodic_channel(self):
        mu = np.pi**2 / 4.0
        for alpha in (0.0, 0.3):
            res = lambda_min_alpha(DomainSpec.periodic_channel(), alpha, 96)
            assert res.value == pytest.approx(mu * (1 + alpha**2 * mu), rel=1e-12)
            assert abs(res.numeric - res.value) <= 1e-8 * res.value
            assert res.mode == (0, 1)

    def test_width_pi_channel_normalisation(self):
        # the regularization channel: -Lap has lowest eigenvalue 1 (sine mode)
        res = lambda_min_alpha(DomainSpec.channel_interval(-np.pi / 2, np.pi / 2), 0.0, 64)
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_anisotropic_torus(self):
        res = lambda_min_alpha(DomainSpec.torus(4 * np.pi, 2 * np.pi), 0.2, 16)
        mu = 0.25  # (2 pi / Lx)^2 from the long direction
        assert res.value == pytest.approx(mu * (1 + 0.04 * mu), rel=1e-12)

    def test_monotone_in_alpha(self):
        values = [r.value for r in lambda_table(DomainSpec.torus(), [0.0, 0.2, 0.5, 1.0], 16)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_negative_alpha_rejected(self):
        with pytest.raises(ValueError):
            lambda_min_alpha(DomainSpec.torus(), -0.1)


class TestRayleighRitzInequality:
    def test_random_fields_satisfy_bound(self):
        # || curl (1 - a^2 Lap) v ||^2 >= lambda_min (||v||^2 + a^2 ||grad v||^2)
        alpha = 0.35
        lam = lambda_min_alpha(DomainSpec.torus(), alpha, 16).value
        nx = 32
        from alphaeuler.domain import torus_wavenumbers

        _, _, k2 = torus_wavenumbers(nx, nx, 2 * np.pi, 2 * np.pi)
        rng = np.random.default_rng(123)
        for _ in range(200):
            phi_hat = np.fft.fft2(rng.standard_normal((nx, nx)))
            phi_hat[0, 0] = 0.0
            mu = k2
            lhs = np.sum((mu * (1 + alpha**2 * mu)) ** 2 * np.abs(phi_hat) ** 2)
            rhs = lam * np.sum((mu + alpha**2 * mu**2) * np.abs(phi_hat) ** 2)
            assert lhs >= rhs * (1 - 1e-12)

    def test_minimizing_mode_achieves_equality(self):
        alpha = 0.35
        lam = lambda_min_alpha(DomainSpec.torus(), alpha, 16).value
        n = 32
        y = np.linspace(0, 2 * np.pi, n, endpoint=False)
        phi = np.broadcast_to(np.sin(y)[None, :], (n, n))
        state = torus_state_from_streamfunction(np.fft.fft2(phi), alpha)
        from alphaeuler.evolve import _parseval_sum
        from alphaeuler.domain import torus_wavenumbers, torus_phi_hat

        _, _, k2 = torus_wavenumbers(n, n, 2 * np.pi, 2 * np.pi)
        phi_hat = torus_phi_hat(state)
        lhs = np.sum((k2 * (1 + alpha**2 * k2) * np.abs(phi_hat)) ** 2)
        rhs = lam * np.sum((k2 + alpha**2 * k2**2) * np.abs(phi_hat) ** 2)
        assert lhs == pytest.approx(rhs, rel=1e-6)


class TestArnoldFirst:
    def test_no_inflection_profile_stable_after_shift(self):
        report = arnold_first_verdict(poiseuille_state(alpha=0.2))
        assert report.verdict == STABLE
        assert report.K1 > 0
        assert report.shift_used != 0.0

    def test_one_signed_ratio_with_inflection_stable(self):
        # U'' changes sign but V/U'' = (1 + y^2)/2 > 0 by construction
        from alphaeuler.criteria import NOT_RULED_OUT, rayleigh_check

        n, a, b, alpha = 64, -1.0, 1.0, 0.3
        d1 = spectral.cheb_diff_matrix(n, a, b, 1)
        d2 = spectral.cheb_diff_matrix(n, a, b, 2)
        d4 = spectral.cheb_diff_matrix(n, a, b, 4)
        y = spectral.cheb_nodes(n, a, b)
        ratio = 0.5 * (1.0 + y**2)
        op = d2 - alpha**2 * d4 - np.diag(1.0 / ratio)
        system = np.vstack([op, d1[0, :], d1[-1, :]])
        _, _, vt = np.linalg.svd(system)
        g1, g2 = vt[-1], vt[-2]
        sym = np.column_stack([g1 + g1[::-1], g2 + g2[::-1]])
        _, _, wt = np.linalg.svd(sym, full_matrices=False)
        v = wt[-1, 0] * g1 + wt[-1, 1] * g2
        v /= np.max(np.abs(v))
        state = build_steady_shear(from_v=Profile1D(Grid1D(a, b, n), v), alpha=alpha)
        assert rayleigh_check(state).verdict == NOT_RULED_OUT
        report = arnold_first_verdict(state)
        assert report.verdict == STABLE
        assert report.K1 == pytest.approx(0.5, abs=1e-3)
        assert report.K2 == pytest.approx(1.0, abs=1e-3)

    def test_cubic_profile_inconclusive(self, funstable_state):
        report = arnold_first_verdict(funstable_state)
        assert report.verdict == INCONCLUSIVE
        assert report.shift_used == 0.0  # any other frame is unbounded
        assert report.K1 == pytest.approx(-1.0 / 6.0, abs=1e-3)

    def test_torus_sinusoidal_inconclusive(self):
        report = arnold_first_verdict(sinusoidal_torus_state(m=1, alpha=0.5))
        assert report.verdict == INCONCLUSIVE
        assert report.K1 < 0  # -F' is negative on the torus state

    def test_verdict_invariant_under_amplitude_rescale(self, funstable_state):
        st = funstable_state
        for a in (0.5, 3.0):
            scaled = build_steady_shear(from_v=st.V.scaled(a), alpha=st.alpha)
            assert arnold_first_verdict(scaled).verdict == arnold_first_verdict(st).verdict
        rep = arnold_first_verdict(build_steady_shear(from_v=poiseuille_state(0.2).V.scaled(2.0), alpha=0.2))
        assert rep.verdict == arnold_first_verdict(poiseuille_state(0.2)).verdict == STABLE


class TestArnoldSecond:
    @pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
    def test_regularization_example_stable(self, alpha):
        state = build_regularization_example(alpha)
        spec = DomainSpec.channel_interval(-np.pi / 2, np.pi / 2)
        report = arnold_second_verdict(state, spec)
        assert report.verdict == STABLE
        expected = (1 + alpha**2) - 1.0 / (1 + alpha**2)
        assert report.margin == pytest.approx(expected, abs=1e-6)
        assert report.lambda_min == pytest.approx(1 + alpha**2, abs=1e-12)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_sinusoidal_torus_inconclusive(self, m):
        state = sinusoidal_torus_state(m=m, alpha=0.5)
        report = arnold_second_verdict(state, DomainSpec.torus())
        assert report.verdict == INCONCLUSIVE
        if m == 1:
            # equality case: margin is zero up to reconstruction error
            assert abs(report.margin) < 1e-8

    def test_unbounded_f_prime_inconclusive(self):
        g = Grid1D(-1.0, 1.0, 65)
        from alphaeuler.domain import PolynomialDescriptor

        dv = np.polynomial.polynomial.Polynomial((0.0, 0.0, 1.0, 0.0, -1.0))
        V = Profile1D.from_descriptor(g, PolynomialDescriptor(tuple((dv.integ() + 1.0).coef)))
        st = build_steady_shear(from_v=V, alpha=0.2)
        report = arnold_second_verdict(st, DomainSpec.channel_interval(-1.0, 1.0))
        assert report.verdict == INCONCLUSIVE
        assert "unbounded" in report.detail


class TestRegularizationConstruction:
    def test_matches_closed_form(self):
        for alpha in (0.1, 0.5, 1.0):
            state = build_regularization_example(alpha)
            y = state.grid.nodes
            g_exact = oracles.regularization_closed_form(alpha, y)
            g_pkg = state.phi0.values
            # match up to scale and additive constant: compare derivatives
            d1 = state.grid.diff_matrix(1)
            v_exact = d1 @ g_exact
            scale = np.linalg.lstsq(
                v_exact[:, None], state.V.values, rcond=None
            )[0][0]
            assert np.max(np.abs(state.V.values - scale * v_exact)) < 1e-7

    def test_relation_between_streamfunction_and_vorticity(self):
        state = build_regularization_example(0.5)
        # phi0 = (1 + alpha^2) omega0 up to the additive normalisation of phi0
        shifted = state.phi0.values - state.phi0.values + (
            state.phi0.values - (1 + 0.25) * state.omega0.values
        )
        assert np.max(np.abs(shifted - shifted[0])) < 1e-9

    def test_f_prime_exact(self):
        state = build_regularization_example(0.5)
        fp = reconstruct_f_prime(state)
        np.testing.assert_allclose(
            [v for _, v in fp.samples], 1.25, rtol=0, atol=1e-6
        )

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError, match="width"):
            build_regularization_example(0.5, DomainSpec.channel_interval(-1.0, 1.0))

    def test_non_eigenvalue_resolution_detected(self):
        # at n = 20 with alpha = 0.01 the wall layer is unresolvable and the
        # eigenvalue cannot be matched at the required residual
        with pytest.raises(NoNontrivialSolution):
            build_regularization_example(0.01, n=20)
