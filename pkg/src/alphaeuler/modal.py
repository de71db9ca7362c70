"""Normal-mode eigenvalue analysis of channel shear states.

Perturbation stream functions phi(y) e^{ik(x - ct)} satisfy the fourth-order
problem L phi = U'' phi / (V - c) with

    L phi = -alpha^2 phi'''' + (1 + 2 alpha^2 k^2) phi'' - k^2 (1 + alpha^2 k^2) phi

and phi = phi'' = 0 at the walls. Multiplying by (V - c) turns it into the
generalized matrix problem (diag(V) L - diag(U'')) phi = c L phi, which is
solved densely after eliminating the boundary conditions. Collocation of
critical-layer problems pollutes the spectrum along the range of V, so
eigenpairs are filtered by residual, wave-speed magnitude, and agreement
under grid refinement before anything is reported.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import spectral
from .domain import CHEBYSHEV, Grid1D, Profile1D, SteadyShearState
from .errors import EigensolverError

TOL_GROWTH = 1e-8  # growth rates below this count as neutral

_RESIDUAL_TOL = 1e-3
_DRIFT_TOL = 1e-4
_SPEED_CAP_FACTOR = 1e3
_REFINE_STEP = 32
_CRITICAL_LAYER_WIDTH = 1e-6


@dataclass(frozen=True, eq=False)
class ModalProblem:
    """Assembled generalized eigenproblem A phi = c B phi at wavenumber k."""

    alpha: float
    k: float
    n: int
    A: np.ndarray
    B: np.ndarray
    grid: Grid1D
    elimination: np.ndarray  # maps interior unknowns to all n nodes
    V: Profile1D
    U: Profile1D
    d2U: Profile1D


@dataclass(frozen=True, eq=False)
class ModalSolution:
    """One retained eigenpair; phi is max-normalised to 1."""

    c: complex
    k: float
    growth_rate: float  # k * Im(c)
    phi: Profile1D
    psi: Profile1D
    residual: float           # sup |ODE residual| over the collocated interior
    residual_relative: float  # residual / largest term of the operator (backward error)
    near_critical_layer: bool = False


@dataclass(frozen=True)
class ModalResidualReport:
    """Pointwise residual of the mode equation on a refined grid.

    `value` is the sup norm over the collocated interior (the two boundary
    cells carry no collocation rows; wall compliance is `bc_violation`).
    `relative` divides by the largest operator term, making the measure
    invariant under rescaling the equation.
    """

    value: float
    relative: float
    bc_violation: float
    near_critical_layer: bool


@dataclass(frozen=True)
class GrowthPoint:
    k: float
    sigma: float
    c: complex | None
    n_retained: int


@dataclass(frozen=True)
class GrowthCurve:
    points: tuple[GrowthPoint, ...]

    @property
    def max_growth(self) -> float:
        return max((p.sigma for p in self.points), default=0.0)

    @property
    def spectrally_stable(self) -> bool:
        return self.max_growth <= TOL_GROWTH

    def to_csv(self, path_or_buf) -> None:
        import csv
        import io

        buf = path_or_buf if hasattr(path_or_buf, "write") else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "sigma", "re_c", "im_c"])
        for p in self.points:
            re_c = repr(float(p.c.real)) if p.c is not None else "nan"
            im_c = repr(float(p.c.imag)) if p.c is not None else "nan"
            writer.writerow([repr(float(p.k)), repr(float(p.sigma)), re_c, im_c])
        if buf is not path_or_buf:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(buf.getvalue())


def eigenfunction_to_csv(solution: ModalSolution, path_or_buf) -> None:
    import csv
    import io

    buf = path_or_buf if hasattr(path_or_buf, "write") else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["y", "re_phi", "im_phi", "re_psi", "im_psi"])
    for y, p, s in zip(solution.phi.grid.nodes, solution.phi.values, solution.psi.values):
        writer.writerow([repr(float(y)), repr(p.real), repr(p.imag), repr(s.real), repr(s.imag)])
    if buf is not path_or_buf:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(buf.getvalue())


def mode_operator(n: int, a: float, b: float, alpha: float, k: float) -> np.ndarray:
    """L = -alpha^2 D4 + (1 + 2 alpha^2 k^2) D2 - k^2 (1 + alpha^2 k^2) I."""
    d2 = spectral.cheb_diff_matrix(n, a, b, 2)
    L = (1.0 + 2.0 * alpha**2 * k**2) * d2 - k**2 * (1.0 + alpha**2 * k**2) * np.eye(n)
    if alpha > 0:
        L = L - alpha**2 * spectral.cheb_diff_matrix(n, a, b, 4)
    return L


def boundary_elimination(n: int, a: float, b: float, alpha: float) -> tuple[np.ndarray, slice]:
    """Prolongation from interior unknowns to all nodes, and the collocation rows.

    alpha > 0: phi = 0 at the walls is imposed directly and the phi'' = 0 rows
    eliminate the first and last interior values, leaving n - 4 unknowns.
    alpha = 0: the problem is second order; only phi = 0 applies (n - 2).
    """
    if alpha == 0.0:
        E = np.zeros((n, n - 2))
        E[1:-1, :] = np.eye(n - 2)
        return E, slice(1, n - 1)
    d2 = spectral.cheb_diff_matrix(n, a, b, 2)
    corner = np.array([[d2[0, 1], d2[0, n - 2]], [d2[n - 1, 1], d2[n - 1, n - 2]]])
    rest = np.vstack([d2[0, 2:n - 2], d2[n - 1, 2:n - 2]])
    coupling = -np.linalg.solve(corner, rest)
    E = np.zeros((n, n - 4))
    E[2:n - 2, :] = np.eye(n - 4)
    E[1, :] = coupling[0, :]
    E[n - 2, :] = coupling[1, :]
    return E, slice(2, n - 2)


def assemble_modal_from_profiles(
    V: Profile1D, U: Profile1D, alpha: float, k: float, n: int
) -> ModalProblem:
    """Assemble the eigenproblem from velocity profiles, resampled to a
    Chebyshev grid with n nodes. alpha = 0 collapses to the classical
    second-order problem (pass V = U there)."""
    alpha, k, n = float(alpha), float(k), int(n)
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    if n < 32:
        raise ValueError(f"need n >= 32 collocation nodes, got {n}")
    a, b = V.grid.a, V.grid.b
    grid = Grid1D(a, b, n, CHEBYSHEV)
    nodes = grid.nodes
    v_vals = np.asarray(V.evaluate(nodes), dtype=float)
    d2u_vals = np.asarray(U.derivative(2).evaluate(nodes), dtype=float)
    L = mode_operator(n, a, b, alpha, k)
    E, rows = boundary_elimination(n, a, b, alpha)
    A_full = v_vals[:, None] * L - np.diag(d2u_vals)
    A = A_full[rows, :] @ E
    B = L[rows, :] @ E
    V_res = Profile1D(grid, v_vals, V.descriptor)
    U_res = Profile1D(grid, np.asarray(U.evaluate(nodes), dtype=float), U.descriptor)
    d2U_res = Profile1D(grid, d2u_vals, U.descriptor.derivative(2) if U.descriptor else None)
    return ModalProblem(
        alpha=alpha, k=k, n=n, A=A, B=B, grid=grid,
        elimination=E, V=V_res, U=U_res, d2U=d2U_res,
    )


def assemble_modal(state: SteadyShearState, k: float, n: int) -> ModalProblem:
    """Assemble the eigenproblem for a steady shear state."""
    return assemble_modal_from_profiles(state.V, state.U, state.alpha, k, n)


def _raw_eigenpairs(problem: ModalProblem):
    try:
        eigvals, eigvecs = scipy.linalg.eig(problem.A, problem.B)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigensolverError(
            f"generalized eigensolver failed at k = {problem.k}: {exc}; "
            f"cond(A) = {np.linalg.cond(problem.A):.3e}, cond(B) = {np.linalg.cond(problem.B):.3e}"
        ) from exc
    return eigvals, eigvecs


def _residual_core(problem: ModalProblem, phi_full: np.ndarray, c: complex, fine_factor: int = 4):
    """Residual of the mode equation on a refined grid.

    Evaluated termwise by barycentric interpolation of phi and its nodal
    derivatives (interpolating D^m phi reproduces the derivatives of the
    interpolant exactly). Points inside the collocated interval between the
    second and second-to-last nodes count; a velocity-space neighbourhood
    |V - c| < 1e-6 around critical layers is excluded and flagged.
    """
    n, a, b = problem.n, problem.grid.a, problem.grid.b
    alpha, k = problem.alpha, problem.k
    nodes = problem.grid.nodes
    d2 = spectral.cheb_diff_matrix(n, a, b, 2)
    phi2 = d2 @ phi_full
    fine = spectral.cheb_nodes(fine_factor * n, a, b)
    phi_f = spectral.barycentric_interpolate(nodes, phi_full, fine)
    phi2_f = spectral.barycentric_interpolate(nodes, phi2, fine)
    if alpha > 0:
        phi4 = spectral.cheb_diff_matrix(n, a, b, 4) @ phi_full
        phi4_f = spectral.barycentric_interpolate(nodes, phi4, fine)
    else:
        phi4_f = np.zeros_like(phi_f)
    v_f = np.asarray(problem.V.evaluate(fine), dtype=float)
    d2u_f = np.asarray(problem.d2U.evaluate(fine), dtype=float)
    denom = v_f - c
    scale_v = max(1.0, float(np.max(np.abs(v_f))))
    away_from_critical = np.abs(denom) >= _CRITICAL_LAYER_WIDTH * scale_v
    near_critical = bool(np.any(~away_from_critical))
    interior = (fine >= nodes[2]) & (fine <= nodes[-3])
    keep = away_from_critical & interior
    terms = (
        -alpha**2 * phi4_f,
        (1.0 + 2.0 * alpha**2 * k**2) * phi2_f,
        -k**2 * (1.0 + alpha**2 * k**2) * phi_f,
        np.where(away_from_critical, -d2u_f * phi_f / np.where(away_from_critical, denom, 1.0), 0.0),
    )
    if np.any(keep):
        res = sum(t[keep] for t in terms)
        value = float(np.max(np.abs(res)))
        scale = max(float(np.max(np.abs(t[keep]))) for t in terms)
        relative = value / max(scale, 1e-300)
    else:
        value = 0.0
        relative = 0.0
    bc = max(abs(phi_full[0]), abs(phi_full[-1]))
    if alpha > 0:
        bc = max(bc, abs(phi2[0]), abs(phi2[-1]))
    return value, relative, float(bc), near_critical


def modal_residual(state: SteadyShearState, solution: ModalSolution, k: float) -> ModalResidualReport:
    """Residual of a solved eigenpair, recomputed on a 4x finer grid."""
    problem = assemble_modal(state, k, solution.phi.grid.n)
    value, relative, bc, near = _residual_core(problem, np.asarray(solution.phi.values), solution.c)
    return ModalResidualReport(value=value, relative=relative, bc_violation=bc, near_critical_layer=near)


def solve_modal(
    problem: ModalProblem,
    *,
    residual_tol: float = _RESIDUAL_TOL,
    drift_tol: float = _DRIFT_TOL,
    speed_cap_factor: float = _SPEED_CAP_FACTOR,
    refine_step: int = _REFINE_STEP,
) -> list[ModalSolution]:
    """All retained eigenpairs, sorted by descending Im(c).

    Filters (defaults): |c| <= 1e3 max|V|, relative ODE residual <= 1e-3,
    relative eigenvalue drift <= 1e-4 against the problem re-assembled with
    refine_step extra nodes. Collocation of critical-layer problems fills
    the range of V with spurious eigenvalues; their residuals are O(1) in
    the relative measure while converged discrete modes sit orders below.
    """
    eigvals, eigvecs = _raw_eigenpairs(problem)
    speed_cap = speed_cap_factor * max(problem.V.max_abs(), 1e-30)
    finite = np.isfinite(eigvals.real) & np.isfinite(eigvals.imag)
    keep = finite & (np.abs(eigvals) <= speed_cap)
    if not np.any(keep):
        return []
    refined = assemble_modal_from_profiles(
        problem.V, problem.U, problem.alpha, problem.k, problem.n + refine_step
    )
    ref_vals, _ = _raw_eigenpairs(refined)
    ref_vals = ref_vals[np.isfinite(ref_vals.real) & np.isfinite(ref_vals.imag)]

    alpha, k = problem.alpha, problem.k
    d2 = spectral.cheb_diff_matrix(problem.n, problem.grid.a, problem.grid.b, 2)
    solutions = []
    for idx in np.nonzero(keep)[0]:
        c = complex(eigvals[idx])
        if len(ref_vals):
            drift = float(np.min(np.abs(c - ref_vals))) / max(1.0, abs(c))
        else:
            drift = np.inf
        if drift > drift_tol:
            continue
        phi_full = problem.elimination @ eigvecs[:, idx]
        peak = phi_full[np.argmax(np.abs(phi_full))]
        phi_full = phi_full / peak
        value, relative, _, near = _residual_core(problem, phi_full, c)
        if relative > residual_tol:
            continue
        psi_full = (1.0 + alpha**2 * k**2) * phi_full - alpha**2 * (d2 @ phi_full)
        solutions.append(
            ModalSolution(
                c=c,
                k=k,
                growth_rate=k * c.imag,
                phi=Profile1D(problem.grid, phi_full),
                psi=Profile1D(problem.grid, psi_full),
                residual=value,
                residual_relative=relative,
                near_critical_layer=near,
            )
        )
    solutions.sort(key=lambda s: (-s.c.imag, -s.c.real))
    return solutions


def scan_wavenumbers(
    state: SteadyShearState,
    k_grid: np.ndarray,
    n: int,
    jobs: int | None = None,
    **solve_kwargs,
) -> GrowthCurve:
    """Leading growth rate sigma(k) = k max Im(c) over a wavenumber grid.

    Wavenumbers are solved independently (optionally in a thread pool) and
    merged in k order, so the result is deterministic.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if np.any(k_grid <= 0) or np.any(np.diff(k_grid) <= 0):
        raise ValueError("k_grid must be positive and strictly increasing")

    def solve_one(k: float) -> GrowthPoint:
        sols = solve_modal(assemble_modal(state, k, n), **solve_kwargs)
        if not sols:
            return GrowthPoint(k=float(k), sigma=0.0, c=None, n_retained=0)
        lead = sols[0]
        return GrowthPoint(k=float(k), sigma=lead.growth_rate, c=lead.c, n_retained=len(sols))

    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(solve_one, k_grid))
    else:
        points = [solve_one(k) for k in k_grid]
    return GrowthCurve(points=tuple(points))
