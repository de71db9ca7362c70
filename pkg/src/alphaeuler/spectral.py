"""Collocation building blocks: Chebyshev nodes, differentiation matrices,
Clenshaw-Curtis weights, barycentric interpolation, and finite differences.

Everything is cached on the reference interval [-1, 1] and rescaled, so
repeated assemblies at the same resolution are cheap.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=128)
def _cheb_reference(n: int):
    """Nodes (increasing), barycentric weights and D on [-1, 1]."""
    if n < 2:
        raise ValueError("need at least 2 Chebyshev nodes")
    j = np.arange(n)
    x = np.cos(np.pi * (n - 1 - j) / (n - 1))
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry, x[0] = -1, x[-1] = 1
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))  # negative-sum trick
    x.setflags(write=False)
    w.setflags(write=False)
    D.setflags(write=False)
    return x, w, D


def cheb_nodes(n: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """Chebyshev extrema nodes on [a, b], strictly increasing."""
    x, _, _ = _cheb_reference(n)
    return 0.5 * (a + b) + 0.5 * (b - a) * x


def cheb_barycentric_weights(n: int) -> np.ndarray:
    return _cheb_reference(n)[1]


@lru_cache(maxsize=128)
def _cheb_diff_powers(n: int, order: int):
    _, _, D = _cheb_reference(n)
    M = np.linalg.matrix_power(D, order)
    M.setflags(write=False)
    return M


def cheb_diff_matrix(n: int, a: float, b: float, order: int = 1) -> np.ndarray:
    """Spectral differentiation matrix of the given order on [a, b]."""
    scale = (2.0 / (b - a)) ** order
    return scale * _cheb_diff_powers(n, order)


@lru_cache(maxsize=128)
def _clencurt_reference(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] for n extrema nodes."""
    N = n - 1
    if N < 1:
        raise ValueError("need at least 2 nodes for quadrature")
    theta = np.pi * np.arange(1, N) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[-1] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2.0 * k * theta) / (4.0 * k**2 - 1)
        v -= np.cos(N * theta) / (N**2 - 1)
    else:
        w[0] = w[-1] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta) / (4.0 * k**2 - 1)
    w[1:-1] = 2.0 * v / N
    w = w[::-1].copy()  # nodes stored increasing; weights are symmetric anyway
    w.setflags(write=False)
    return w


def clencurt_weights(n: int, a: float, b: float) -> np.ndarray:
    """Quadrature weights matching cheb_nodes(n, a, b)."""
    return 0.5 * (b - a) * _clencurt_reference(n)


def barycentric_interpolate(nodes, values, x, weights=None):
    """Evaluate the polynomial interpolant of (nodes, values) at points x.

    Exact hits on nodes are returned verbatim. `weights` defaults to the
    Chebyshev-extrema barycentric weights for len(nodes).
    """
    nodes = np.asarray(nodes)
    values = np.asarray(values)
    if weights is None:
        weights = cheb_barycentric_weights(len(nodes))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[:, None] - nodes[None, :]
    hit_rows, hit_cols = np.nonzero(diff == 0.0)
    diff[hit_rows, :] = 1.0  # avoid division by zero; rows overwritten below
    ratio = weights[None, :] / diff
    denom = ratio.sum(axis=1)
    denom[hit_rows] = 1.0  # alternating weights can sum to zero on replaced rows
    out = ratio @ values / denom
    out[hit_rows] = values[hit_cols]
    return out


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at z from nodes x.

    Returns an array of shape (len(x), m + 1); column k holds the weights
    of the k-th derivative. Standard recursive algorithm.
    """
    x = np.asarray(x, dtype=float)
    nnodes = len(x)
    c = np.zeros((nnodes, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, nnodes):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


@lru_cache(maxsize=64)
def _fd_reference(n: int, order: int, stencil: int):
    x = np.linspace(0.0, 1.0, n)
    D = np.zeros((n, n))
    half = stencil // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - stencil)
        idx = np.arange(lo, lo + stencil)
        D[i, idx] = fornberg_weights(x[i], x[idx], order)[:, order]
    D.setflags(write=False)
    return D


def fd_diff_matrix(n: int, a: float, b: float, order: int = 1) -> np.ndarray:
    """4th-order finite-difference derivative matrix on a uniform grid."""
    stencil = order + 4  # 5 points for d/dy, 6 for d2/dy2: 4th order incl. edges
    if n < stencil:
        raise ValueError(f"need at least {stencil} nodes for order-{order} stencils")
    return fd_diff_matrix_scaled(n, order, stencil) / (b - a) ** order


def fd_diff_matrix_scaled(n: int, order: int, stencil: int) -> np.ndarray:
    return _fd_reference(n, order, stencil)


def band_widths(matrix: np.ndarray, tol: float = 0.0) -> tuple[int, int]:
    """(lower, upper) bandwidths of a matrix, ignoring entries |a_ij| <= tol."""
    rows, cols = np.nonzero(np.abs(matrix) > tol)
    if len(rows) == 0:
        return 0, 0
    return int(np.max(rows - cols, initial=0)), int(np.max(cols - rows, initial=0))


def to_banded(matrix: np.ndarray, lower: int, upper: int) -> np.ndarray:
    """Pack a banded matrix into scipy.linalg.solve_banded layout."""
    n = matrix.shape[0]
    ab = np.zeros((lower + upper + 1, n))
    for i in range(n):
        for j in range(max(0, i - lower), min(n, i + upper + 1)):
            ab[upper + i - j, j] = matrix[i, j]
    return ab
