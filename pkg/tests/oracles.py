"""Independent reference computations used to check the solvers.

Everything here deliberately avoids the package's collocation machinery:
the mode eigenvalues are recomputed by adaptive shooting integration, the
regularization stream function from its closed form, and the classical
eigenproblem from a from-scratch assembly.
"""

import numpy as np
from scipy.integrate import solve_ivp


def shooting_determinant(c, V_fn, d2U_fn, alpha, k, a, b, rtol=1e-11, atol=1e-13):
    """Wall-condition determinant for the fourth-order mode equation.

    Two solutions are integrated from y = a, both with phi(a) = phi''(a) = 0,
    spanning the admissible subspace; the determinant of their (phi, phi'')
    values at y = b vanishes exactly at eigenvalues c.
    """
    a2 = alpha**2
    c1 = 1.0 + 2.0 * a2 * k**2
    c0 = k**2 * (1.0 + a2 * k**2)

    def rhs(y, s):
        s = s.view(complex)
        out = np.empty(8, complex)
        for j in (0, 4):
            phi, dphi, d2phi, d3phi = s[j:j + 4]
            f4 = (c1 * d2phi - c0 * phi - d2U_fn(y) * phi / (V_fn(y) - c)) / a2
            out[j:j + 4] = (dphi, d2phi, d3phi, f4)
        return out.view(float)

    s0 = np.zeros(8, complex)
    s0[1] = 1.0      # first solution: phi'(a) = 1
    s0[4 + 3] = 1.0  # second solution: phi'''(a) = 1
    sol = solve_ivp(rhs, (a, b), s0.view(float), method="DOP853", rtol=rtol, atol=atol)
    sf = sol.y[:, -1].view(complex)
    return sf[0] * sf[6] - sf[4] * sf[2]


def shooting_determinant_classical(c, U_fn, d2U_fn, k, a, b, rtol=1e-11, atol=1e-13):
    """phi(b) of the classical second-order mode equation with phi(a) = 0."""

    def rhs(y, s):
        s = s.view(complex)
        phi, dphi = s
        return np.array([dphi, k**2 * phi + d2U_fn(y) * phi / (U_fn(y) - c)]).view(float)

    s0 = np.array([0.0, 1.0], complex)
    sol = solve_ivp(rhs, (a, b), s0.view(float), method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1].view(complex)[0]


def shooting_eigenvalue(c0, det_fn, steps=40, tol=1e-13):
    """Secant refinement of a mode eigenvalue starting from c0."""
    c1 = c0 * (1 + 1e-5) + 1e-6j
    f0, f1 = det_fn(c0), det_fn(c1)
    for _ in range(steps):
        if f1 == f0:
            break
        c2 = c1 - f1 * (c1 - c0) / (f1 - f0)
        c0, f0 = c1, f1
        c1, f1 = c2, det_fn(c2)
        if abs(c1 - c0) < tol * max(1.0, abs(c1)):
            break
    return c1


def classical_rayleigh_matrices(U_vals, d2U_vals, nodes, d2, k):
    """Independent assembly of the classical (second-order) eigenproblem
    (diag(U) (D2 - k^2 I) - diag(U'')) phi = c (D2 - k^2 I) phi with
    Dirichlet rows dropped."""
    n = len(nodes)
    L = d2 - k**2 * np.eye(n)
    A = np.diag(U_vals) @ L - np.diag(d2U_vals)
    return A[1:-1, 1:-1], L[1:-1, 1:-1]


def regularization_closed_form(alpha, y):
    """Even solution of a^2 g'''' - g'' - g/(1+a^2) = 0 with g''(+-pi/2) = 0,
    normalised to peak amplitude 1: a cosh(Lp y) + c cos(Mm y) with the wall
    condition fixing the coefficient ratio."""
    disc = np.sqrt(1.0 + 4.0 * alpha**2 / (1.0 + alpha**2))
    s_plus = (1.0 + disc) / (2.0 * alpha**2)
    s_minus = (1.0 - disc) / (2.0 * alpha**2)
    lam, mu = np.sqrt(s_plus), np.sqrt(-s_minus)
    ca = mu**2 * np.cos(mu * np.pi / 2)
    cc = lam**2 * np.cosh(lam * np.pi / 2)
    g = ca * np.cosh(lam * y) + cc * np.cos(mu * y)
    return g / g[np.argmax(np.abs(g))]
