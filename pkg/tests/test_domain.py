import io

import numpy as np
import pytest

from alphaeuler.domain import (
    CHEBYSHEV,
    UNIFORM,
    Grid1D,
    PolynomialDescriptor,
    Profile1D,
    TorusState,
    TrigDescriptor,
    build_steady_shear,
    helmholtz_filter,
    invert_helmholtz,
    profile_from_csv,
    torus_state_from_streamfunction,
    torus_velocity,
    torus_vorticity,
)
from alphaeuler.errors import BoundaryConditionViolation

from conftest import CUBIC_HALF_WIDTH, cubic_shear_state


class TestGrid:
    def test_nodes_increasing_and_pinned(self):
        for kind in (CHEBYSHEV, UNIFORM):
            g = Grid1D(-2.0, 3.0, 33, kind)
            assert g.nodes[0] == -2.0 and g.nodes[-1] == 3.0
            assert np.all(np.diff(g.nodes) > 0)

    def test_too_coarse_rejected(self):
        with pytest.raises(ValueError, match="too coarse"):
            Grid1D(0.0, 1.0, 7)

    def test_reversed_interval_rejected(self):
        with pytest.raises(ValueError):
            Grid1D(1.0, 0.0, 16)


class TestProfile:
    def test_descriptor_mismatch_rejected(self):
        g = Grid1D(-1.0, 1.0, 16)
        vals = g.nodes**2 + 1e-6
        with pytest.raises(ValueError, match="descriptor"):
            Profile1D(g, vals, PolynomialDescriptor((0.0, 0.0, 1.0)))

    def test_csv_roundtrip(self):
        g = Grid1D(-1.0, 1.0, 21)
        p = Profile1D.from_descriptor(g, PolynomialDescriptor((1.0, 2.0)))
        buf = io.StringIO()
        p.to_csv(buf)
        buf.seek(0)
        q = profile_from_csv(buf)
        assert q.grid.kind == CHEBYSHEV
        np.testing.assert_allclose(q.values, p.values, rtol=0, atol=1e-15)

    def test_csv_rejects_unknown_nodes(self):
        buf = io.StringIO("y,value\n0.0,1.0\n0.5,1.0\n0.6,1.0\n1.0,1.0\n")
        with pytest.raises(ValueError, match="neither uniform nor Chebyshev"):
            profile_from_csv(buf)

    def test_derivative_matches_descriptor_on_uniform(self):
        g = Grid1D(0.0, np.pi, 201, UNIFORM)
        p = Profile1D.from_descriptor(g, TrigDescriptor(2.0, 1.0, 0.0))
        d = p.derivative()  # exact, via the descriptor
        np.testing.assert_allclose(d.values, 2.0 * np.cos(g.nodes), atol=1e-12)
        tab = Profile1D(g, p.values).derivative()  # finite differences
        np.testing.assert_allclose(tab.values, d.values, atol=1e-6)


class TestHelmholtzFilter:
    @pytest.mark.parametrize("alpha", [0.05, 0.1, 0.5])
    def test_cubic_profile(self, alpha):
        # V = y - y^3 gives U = y - y^3 + 6 alpha^2 y
        g = Grid1D(-CUBIC_HALF_WIDTH, CUBIC_HALF_WIDTH, 65)
        V = Profile1D.from_descriptor(g, PolynomialDescriptor((0.0, 1.0, 0.0, -1.0)))
        U = helmholtz_filter(V, alpha)
        expected = g.nodes - g.nodes**3 + 6.0 * alpha**2 * g.nodes
        np.testing.assert_allclose(U.values, expected, rtol=0, atol=1e-15)

    def test_constant_profile_unchanged(self):
        g = Grid1D(0.0, 1.0, 33)
        V = Profile1D.from_descriptor(g, PolynomialDescriptor((3.5,)))
        U = helmholtz_filter(V, 0.7)
        np.testing.assert_allclose(U.values, 3.5, rtol=0, atol=1e-14)

    def test_cos_eigenprofile(self):
        # V'' = -V forces U = (1 + alpha^2) V
        g = Grid1D(0.0, np.pi, 33)
        V = Profile1D.from_descriptor(g, TrigDescriptor(1.0, 1.0, np.pi / 2))
        U = helmholtz_filter(V, 0.3)
        np.testing.assert_allclose(U.values, (1 + 0.09) * V.values, rtol=1e-14, atol=1e-15)

    def test_tabulated_path(self):
        g = Grid1D(-1.0, 1.0, 65)
        V = Profile1D(g, np.exp(g.nodes))
        U = helmholtz_filter(V, 0.2)
        np.testing.assert_allclose(U.values, (1 - 0.04) * np.exp(g.nodes), atol=1e-9)

    def test_rejects_nonpositive_alpha(self):
        g = Grid1D(0.0, 1.0, 16)
        V = Profile1D.from_descriptor(g, PolynomialDescriptor((1.0,)))
        with pytest.raises(ValueError, match="alpha"):
            helmholtz_filter(V, 0.0)

    def test_linearity(self):
        g = Grid1D(-1.0, 1.0, 33)
        rng = np.random.default_rng(0)
        v1 = Profile1D(g, rng.standard_normal(33))
        v2 = Profile1D(g, rng.standard_normal(33))
        a, b = 2.0, -3.0
        lhs = helmholtz_filter(Profile1D(g, a * v1.values + b * v2.values), 0.4).values
        rhs = a * helmholtz_filter(v1, 0.4).values + b * helmholtz_filter(v2, 0.4).values
        scale = np.max(np.abs(rhs))
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * scale)

    def test_small_alpha_limit(self):
        g = Grid1D(-1.0, 1.0, 49)
        V = Profile1D.from_descriptor(g, PolynomialDescriptor((0.0, 0.0, 0.0, 1.0)))
        U = helmholtz_filter(V, 1e-6)
        d2_max = np.max(np.abs(6.0 * g.nodes))
        assert np.max(np.abs(U.values - V.values)) <= 1e-10 * d2_max * 10


class TestInvertHelmholtz:
    def test_forward_backward_roundtrip(self):
        g = Grid1D(-CUBIC_HALF_WIDTH, CUBIC_HALF_WIDTH, 65)
        V = Profile1D.from_descriptor(g, PolynomialDescriptor((0.0, 1.0, 0.0, -1.0)))
        back = invert_helmholtz(helmholtz_filter(V, 0.2), 0.2)
        assert np.max(np.abs(back.values - V.values)) < 1e-9

    def test_roundtrip_banded_uniform(self):
        g = Grid1D(-CUBIC_HALF_WIDTH, CUBIC_HALF_WIDTH, 201, UNIFORM)
        V = Profile1D.from_descriptor(g, PolynomialDescriptor((0.0, 1.0, 0.0, -1.0)))
        back = invert_helmholtz(helmholtz_filter(V, 0.2), 0.2)
        assert np.max(np.abs(back.values - V.values)) < 1e-9

    def test_constant(self):
        g = Grid1D(0.0, 2.0, 33)
        U = Profile1D.from_descriptor(g, PolynomialDescriptor((-1.25,)))
        V = invert_helmholtz(U, 0.5)
        np.testing.assert_allclose(V.values, -1.25, rtol=0, atol=1e-12)

    def test_closed_form_linear_profile(self):
        # U = y on [0, 1], alpha = 1: V = y + A cosh y - sinh y, A = (cosh 1 - 1)/sinh 1
        g = Grid1D(0.0, 1.0, 65)
        U = Profile1D.from_descriptor(g, PolynomialDescriptor((0.0, 1.0)))
        V = invert_helmholtz(U, 1.0)
        A = (np.cosh(1.0) - 1.0) / np.sinh(1.0)
        exact = g.nodes + A * np.cosh(g.nodes) - np.sinh(g.nodes)
        assert np.max(np.abs(V.values - exact)) < 1e-10

    def test_cos_known_inverse(self):
        g = Grid1D(0.0, np.pi, 49)
        alpha = 0.35
        U = Profile1D.from_descriptor(g, TrigDescriptor(1 + alpha**2, 1.0, np.pi / 2))
        V = invert_helmholtz(U, alpha)
        np.testing.assert_allclose(V.values, np.cos(g.nodes), atol=1e-10)


class TestSteadyShear:
    def test_cubic_accepted(self, funstable_state):
        st = funstable_state
        # U = V - alpha^2 V'' pointwise
        np.testing.assert_allclose(
            st.U.values,
            st.V.values - st.alpha**2 * st.V.derivative(2).values,
            atol=1e-12,
        )
        # omega0 = -U'
        np.testing.assert_allclose(st.omega0.values, -st.U.derivative().values, atol=1e-12)
        # wall condition
        assert abs(st.dV.values[0]) < 1e-10 * max(1.0, st.V.max_abs())
        assert abs(st.dV.values[-1]) < 1e-10 * max(1.0, st.V.max_abs())

    def test_linear_profile_rejected(self):
        g = Grid1D(0.0, 1.0, 33)
        V = Profile1D.from_descriptor(g, PolynomialDescriptor((0.0, 1.0)))
        with pytest.raises(BoundaryConditionViolation):
            build_steady_shear(from_v=V, alpha=0.1)

    def test_from_momentum_profile(self):
        g = Grid1D(-1.0, 1.0, 65)
        U = Profile1D.from_descriptor(g, PolynomialDescriptor((1.0, 0.0, -1.0)))
        st = build_steady_shear(from_u=U, alpha=0.2)
        np.testing.assert_allclose(st.d2U.values, -2.0, rtol=0, atol=1e-14)
        np.testing.assert_allclose(st.omega0.values, 2.0 * g.nodes, atol=1e-13)
        assert abs(st.dV.values[0]) < 1e-10 and abs(st.dV.values[-1]) < 1e-10

    def test_pressure_gradient_consistency(self, funstable_state):
        # d(pi)/dy = -V V' + alpha^2 V' V''
        st = funstable_state
        d1 = st.grid.diff_matrix(1)
        lhs = d1 @ st.pressure.values
        rhs = -st.V.values * st.dV.values + st.alpha**2 * st.dV.values * (d1 @ st.dV.values)
        assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_stream_functions(self, funstable_state):
        st = funstable_state
        d1 = st.grid.diff_matrix(1)
        np.testing.assert_allclose(d1 @ st.phi0.values, st.V.values, atol=1e-10)
        np.testing.assert_allclose(d1 @ st.psi0.values, st.U.values, atol=1e-10)
        assert st.phi0.values[0] == 0.0 and st.psi0.values[0] == 0.0


class TestTorusState:
    def test_sinusoidal_vorticity(self):
        for m, alpha in ((1, 0.5), (3, 0.2)):
            n = 64
            y = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
            phi = np.broadcast_to(np.sin(m * y)[None, :], (n, n))
            state = torus_state_from_streamfunction(np.fft.fft2(phi), alpha)
            expected = m**2 * (1 + alpha**2 * m**2) * np.sin(m * y)
            np.testing.assert_allclose(
                torus_vorticity(state), np.broadcast_to(expected[None, :], (n, n)), atol=1e-10
            )
            vx, vy = torus_velocity(state)
            np.testing.assert_allclose(vx[0], m * np.cos(m * y), atol=1e-10)
            np.testing.assert_allclose(vy, 0.0, atol=1e-10)

    def test_zero_field(self):
        state = torus_state_from_streamfunction(np.zeros((16, 16), complex), 0.3)
        assert np.all(state.omega_hat == 0)
        vx, vy = torus_velocity(state)
        assert np.max(np.abs(vx)) == 0 and np.max(np.abs(vy)) == 0

    def test_non_real_field_rejected(self):
        phi_hat = np.zeros((16, 16), complex)
        phi_hat[1, 0] = 1.0  # no conjugate partner: complex physical field
        with pytest.raises(ValueError, match="not conjugate symmetric|not real"):
            torus_state_from_streamfunction(phi_hat, 0.2)

    def test_mean_vorticity_rejected(self):
        omega_hat = np.zeros((16, 16), complex)
        omega_hat[0, 0] = 5.0
        with pytest.raises(ValueError, match="zero mean"):
            TorusState(alpha=0.1, omega_hat=omega_hat)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError, match="powers of two"):
            TorusState(alpha=0.1, omega_hat=np.zeros((12, 16), complex))

    def test_spectral_recovery_idempotent(self):
        # omega -> phi -> omega is a diagonal roundtrip
        from alphaeuler.domain import torus_phi_hat, torus_wavenumbers

        state = torus_state_from_streamfunction(
            np.fft.fft2(np.random.default_rng(1).standard_normal((32, 32))), 0.4
        )
        _, _, k2 = torus_wavenumbers(32, 32, 2 * np.pi, 2 * np.pi)
        back = k2 * (1 + 0.4**2 * k2) * torus_phi_hat(state)
        scale = np.max(np.abs(state.omega_hat))
        assert np.max(np.abs(back - state.omega_hat)) < 1e-13 * scale
