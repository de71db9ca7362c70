"""Time evolution used for verification.

Two integrators: a per-wavenumber linearized channel stepper (validates
modal growth rates against measured exponential growth) and a dealiased
pseudo-spectral solver for the nonlinear vorticity transport on the torus
(validates the conservation laws and the stability-norm estimate). Both use
classical RK4; the spatial treatment is spectral so that drift in conserved
quantities measures the time integrator, not the discretization.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import spectral
from .domain import (
    Grid1D,
    Profile1D,
    SteadyShearState,
    TorusState,
    dealias_mask,
    torus_phi_hat,
    torus_velocity,
    torus_vorticity,
    torus_wavenumbers,
)
from .errors import CflViolation, NanEncountered
from .modal import ModalSolution, boundary_elimination, mode_operator

_CFL = 0.5


# ---------------------------------------------------------------------------
# Linearized channel stepper
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearChannelState:
    """Single-wavenumber perturbation carried by q = psi'' - k^2 psi.

    q and phi are linked by L phi = q with phi = phi'' = 0 at the walls,
    the same operator and boundary conditions as the modal module.
    """

    k: float
    q: np.ndarray      # complex, on all n Chebyshev nodes
    phi: np.ndarray    # complex, on all n Chebyshev nodes
    t: float


@lru_cache(maxsize=8)
def _channel_operators(alpha: float, a: float, b: float, n: int, k: float,
                       v_bytes: bytes, d2u_bytes: bytes):
    v = np.frombuffer(v_bytes).copy()
    d2u = np.frombuffer(d2u_bytes).copy()
    L = mode_operator(n, a, b, alpha, k)
    E, rows = boundary_elimination(n, a, b, alpha)
    L_int = L[rows, :] @ E
    lu = scipy.linalg.lu_factor(L_int)
    return L, E, rows, lu, v[rows], d2u[rows]


def _operators_for(steady: SteadyShearState, k: float, n: int):
    grid = Grid1D(steady.grid.a, steady.grid.b, n, "chebyshev-extrema")
    nodes = grid.nodes
    v = np.asarray(steady.V.evaluate(nodes), dtype=float)
    d2u = np.asarray(steady.d2U.evaluate(nodes), dtype=float)
    ops = _channel_operators(steady.alpha, grid.a, grid.b, n, k, v.tobytes(), d2u.tobytes())
    return grid, ops


def linear_channel_state(
    steady: SteadyShearState, k: float, q_interior: np.ndarray, n: int, t: float = 0.0
) -> LinearChannelState:
    """Assemble a full-grid state from interior values of q."""
    grid, (L, E, rows, lu, _, _) = _operators_for(steady, k, n)
    phi_int = scipy.linalg.lu_solve(lu, q_interior)
    phi = E @ phi_int
    return LinearChannelState(k=k, q=L @ phi, phi=phi, t=t)


def state_from_mode(steady: SteadyShearState, solution: ModalSolution) -> LinearChannelState:
    """Initial condition q = L phi for a solved eigenfunction."""
    n = solution.phi.grid.n
    grid, (L, E, rows, lu, _, _) = _operators_for(steady, solution.k, n)
    phi = np.asarray(solution.phi.values, dtype=complex)
    return LinearChannelState(k=solution.k, q=L @ phi, phi=phi, t=0.0)


def step_linear_channel(
    state: LinearChannelState, steady: SteadyShearState, dt: float
) -> LinearChannelState:
    """One RK4 step of q_t = -ik (V q - U'' phi), recovering phi from
    L phi = q at every stage.

    dt must satisfy dt <= 0.5 / (k max|V|).
    """
    k = state.k
    n = len(state.q)
    grid, (L, E, rows, lu, v_int, d2u_int) = _operators_for(steady, k, n)
    vmax = steady.V.max_abs()
    if vmax > 0 and dt > _CFL / (k * vmax):
        raise CflViolation(f"dt = {dt} exceeds {_CFL}/(k max|V|) = {_CFL / (k * vmax)}")

    def rhs(q_int):
        phi_int = scipy.linalg.lu_solve(lu, q_int)
        return -1j * k * (v_int * q_int - d2u_int * phi_int)

    q = np.asarray(state.q, dtype=complex)[rows]
    k1 = rhs(q)
    k2 = rhs(q + 0.5 * dt * k1)
    k3 = rhs(q + 0.5 * dt * k2)
    k4 = rhs(q + dt * k3)
    q_new = q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    phi_int = scipy.linalg.lu_solve(lu, q_new)
    phi = E @ phi_int
    return LinearChannelState(k=k, q=L @ phi, phi=phi, t=state.t + dt)


def run_linear_channel(
    state: LinearChannelState,
    steady: SteadyShearState,
    dt: float,
    t_end: float,
    record_every: int = 1,
):
    """Advance to t_end; returns (final state, times, L2 norms of q)."""
    n = len(state.q)
    grid, _ = _operators_for(steady, state.k, n)
    weights = spectral.clencurt_weights(n, grid.a, grid.b)
    times = [state.t]
    norms = [float(np.sqrt(weights @ np.abs(state.q) ** 2))]
    nsteps = int(round(t_end / dt))
    for i in range(nsteps):
        state = step_linear_channel(state, steady, dt)
        if (i + 1) % record_every == 0 or i == nsteps - 1:
            times.append(state.t)
            norms.append(float(np.sqrt(weights @ np.abs(state.q) ** 2)))
    return state, np.asarray(times), np.asarray(norms)


def fit_growth_rate(times: np.ndarray, norms: np.ndarray) -> float:
    """Least-squares slope of log norms over the final half of the record,
    discarding the transient."""
    m = len(times) // 2
    t, h = times[m:], norms[m:]
    if np.any(h <= 0):
        return -np.inf
    return float(np.polyfit(t, np.log(h), 1)[0])


def channel_mode_norm(phi: np.ndarray, k: float, alpha: float, grid: Grid1D) -> float:
    """Quadratic stability norm of a single-k perturbation (per unit x-length):
    |v|^2 + alpha^2 |grad v|^2 + |omega|^2 integrated across the channel."""
    n = grid.n
    d1 = spectral.cheb_diff_matrix(n, grid.a, grid.b, 1)
    w = spectral.clencurt_weights(n, grid.a, grid.b)
    L = mode_operator(n, grid.a, grid.b, alpha, k)
    dphi = d1 @ phi
    d2phi = d1 @ dphi
    q = L @ phi
    v2 = np.abs(dphi) ** 2 + k**2 * np.abs(phi) ** 2
    grad_v2 = np.abs(d2phi) ** 2 + 2.0 * k**2 * np.abs(dphi) ** 2 + k**4 * np.abs(phi) ** 2
    return float(w @ (v2 + alpha**2 * grad_v2 + np.abs(q) ** 2))


# ---------------------------------------------------------------------------
# Nonlinear torus solver
# ---------------------------------------------------------------------------


def cfl_timestep(state: TorusState, cfl: float = _CFL) -> float:
    """dt = cfl * min(dx, dy) / max |v|."""
    vx, vy = torus_velocity(state)
    vmax = float(np.max(np.hypot(vx, vy)))
    dx = state.Lx / state.nx
    dy = state.Ly / state.ny
    if vmax == 0.0:
        return cfl * min(dx, dy)
    return cfl * min(dx, dy) / vmax


def _torus_rhs(omega_hat: np.ndarray, alpha: float, nx: int, ny: int, Lx: float, Ly: float):
    kx, ky, k2 = torus_wavenumbers(nx, ny, Lx, Ly)
    sym = k2 * (1.0 + alpha**2 * k2)
    inv = np.where(sym == 0.0, 0.0, 1.0 / np.where(sym == 0.0, 1.0, sym))
    phi_hat = omega_hat * inv
    vx = np.fft.ifft2(1j * ky * phi_hat).real
    vy = np.fft.ifft2(-1j * kx * phi_hat).real
    wx = np.fft.ifft2(1j * kx * omega_hat).real
    wy = np.fft.ifft2(1j * ky * omega_hat).real
    rhs = np.fft.fft2(-(vx * wx + vy * wy))
    rhs *= dealias_mask(nx, ny)
    rhs[0, 0] = 0.0  # zero mode untouched: the mean of omega is preserved exactly
    return rhs


def step_torus_nonlinear(state: TorusState, dt: float) -> TorusState:
    """One RK4 step of the vorticity transport omega_t + v . grad omega = 0.

    The velocity is recovered spectrally each stage; dt must satisfy the
    advective bound dt <= 0.5 min(dx, dy) / max|v|. The bound is enforced
    against the instantaneous velocity with 50% slack (RK4 tolerates ~2.8x
    the half-CFL step), so a dt chosen at the initial CFL limit survives
    velocity fluctuations during the run.
    """
    bound = cfl_timestep(state)
    if dt > 1.5 * bound:
        raise CflViolation(f"dt = {dt} exceeds the advective bound {bound}")
    nx, ny, Lx, Ly, alpha = state.nx, state.ny, state.Lx, state.Ly, state.alpha
    w = state.omega_hat
    k1 = _torus_rhs(w, alpha, nx, ny, Lx, Ly)
    k2 = _torus_rhs(w + 0.5 * dt * k1, alpha, nx, ny, Lx, Ly)
    k3 = _torus_rhs(w + 0.5 * dt * k2, alpha, nx, ny, Lx, Ly)
    k4 = _torus_rhs(w + dt * k3, alpha, nx, ny, Lx, Ly)
    w_new = w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(w_new.view(float))):
        raise NanEncountered(f"non-finite vorticity after step at t = {state.t}")
    return TorusState(alpha=alpha, omega_hat=w_new, Lx=Lx, Ly=Ly, t=state.t + dt)


# ---------------------------------------------------------------------------
# Invariants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CasimirSpec:
    """Integrand C of the Casimir functional: polynomial (degree <= 4),
    sine, or a tabulated function applied pointwise to the vorticity."""

    kind: str  # 'polynomial' | 'sin' | 'tabulated'
    coeffs: tuple[float, ...] = ()
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("polynomial", "sin", "tabulated"):
            raise ValueError(f"unknown casimir kind {self.kind!r}")
        if self.kind == "polynomial" and len(self.coeffs) > 5:
            raise ValueError("polynomial casimirs are limited to degree 4")

    def __call__(self, w: np.ndarray) -> np.ndarray:
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(w, np.asarray(self.coeffs))
        if self.kind == "sin":
            return np.sin(w)
        pts = np.asarray(self.table)
        return np.interp(w, pts[:, 0], pts[:, 1])


@dataclass(frozen=True)
class InvariantLedger:
    """One row of conserved-quantity monitors at time t."""

    t: float
    H: float
    Hc: float
    casimirs: dict
    Mx: float
    stability_norm: float

    CSV_HEADER = ["t", "H", "Hc", "omega_int", "enstrophy", "casimir", "Mx", "stab_norm"]

    def csv_row(self) -> list[str]:
        cells = (
            self.t, self.H, self.Hc,
            self.casimirs["omega_int"], self.casimirs["enstrophy"],
            self.casimirs["casimir"], self.Mx, self.stability_norm,
        )
        return [repr(float(c)) for c in cells]


def ledger_to_csv(rows, path_or_buf) -> None:
    import csv
    import io

    buf = path_or_buf if hasattr(path_or_buf, "write") else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(InvariantLedger.CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_row())
    if buf is not path_or_buf:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _spectral_integral(field_hat: np.ndarray, Lx: float, Ly: float) -> float:
    nx, ny = field_hat.shape
    return float(field_hat[0, 0].real) * Lx * Ly / (nx * ny)


def _parseval_sum(a_hat: np.ndarray, b_hat: np.ndarray, Lx: float, Ly: float) -> float:
    nx, ny = a_hat.shape
    return float(np.sum((a_hat * np.conj(b_hat)).real)) * Lx * Ly / (nx * ny) ** 2


def kinetic_energy(state: TorusState) -> float:
    """H = 1/2 int v . (1 - alpha^2 Lap) v, evaluated spectrally."""
    _, _, k2 = torus_wavenumbers(state.nx, state.ny, state.Lx, state.Ly)
    phi_hat = torus_phi_hat(state)
    v2 = k2 * np.abs(phi_hat) ** 2  # |v_hat|^2 summed over components
    return 0.5 * float(np.sum((1.0 + state.alpha**2 * k2) * v2)) * state.Lx * state.Ly / (state.nx * state.ny) ** 2


def kinetic_energy_quadrature(state: TorusState) -> float:
    """H by direct physical-space quadrature of v . u (an independent route)."""
    from .domain import torus_momentum_velocity_hat

    vx, vy = torus_velocity(state)
    ux_hat, uy_hat = torus_momentum_velocity_hat(state)
    ux = np.fft.ifft2(ux_hat).real
    uy = np.fft.ifft2(uy_hat).real
    da = (state.Lx / state.nx) * (state.Ly / state.ny)
    return 0.5 * float(np.sum(vx * ux + vy * uy)) * da


def stability_norm(state: TorusState, steady: TorusState) -> float:
    """||v - v0||^2 + alpha^2 ||grad(v - v0)||^2 + ||omega - omega0||^2."""
    _, _, k2 = torus_wavenumbers(state.nx, state.ny, state.Lx, state.Ly)
    alpha = state.alpha
    d_omega = state.omega_hat - steady.omega_hat
    sym = k2 * (1.0 + alpha**2 * k2)
    inv = np.where(sym == 0.0, 0.0, 1.0 / np.where(sym == 0.0, 1.0, sym))
    d_phi = d_omega * inv
    norm_hat = (k2 + alpha**2 * k2**2) * np.abs(d_phi) ** 2 + np.abs(d_omega) ** 2
    return float(np.sum(norm_hat)) * state.Lx * state.Ly / (state.nx * state.ny) ** 2


def _casimir_integral(state: TorusState, casimir: CasimirSpec, pad: int = 2) -> float:
    """int C(omega) by physical-space quadrature on a zero-padded grid."""
    nx, ny = state.nx, state.ny
    px, py = pad * nx, pad * ny
    padded = np.zeros((px, py), dtype=complex)
    half_x, half_y = nx // 2, ny // 2
    src = np.fft.fftshift(state.omega_hat)
    padded[px // 2 - half_x : px // 2 + half_x, py // 2 - half_y : py // 2 + half_y] = src
    w_fine = np.fft.ifft2(np.fft.ifftshift(padded)).real * (px * py) / (nx * ny)
    da = (state.Lx / px) * (state.Ly / py)
    return float(np.sum(casimir(w_fine))) * da


def compute_invariants(
    state: TorusState,
    steady: TorusState | None = None,
    casimir: CasimirSpec | None = None,
) -> InvariantLedger:
    """Evaluate the conserved-quantity monitors for one state.

    H is the filtered kinetic energy, Mx the x momentum of u, enstrophy and
    the vorticity integral are spectral sums, int C(omega) a dealiased
    physical-space quadrature. The stability norm needs a steady reference
    and is NaN otherwise.
    """
    Lx, Ly = state.Lx, state.Ly
    H = kinetic_energy(state)
    omega_int = _spectral_integral(state.omega_hat, Lx, Ly)
    enstrophy = _parseval_sum(state.omega_hat, state.omega_hat, Lx, Ly)
    cas = _casimir_integral(state, casimir) if casimir is not None else 0.0
    from .domain import torus_momentum_velocity_hat

    ux_hat, _ = torus_momentum_velocity_hat(state)
    Mx = _spectral_integral(ux_hat, Lx, Ly)
    stab = stability_norm(state, steady) if steady is not None else float("nan")
    return InvariantLedger(
        t=state.t,
        H=H,
        Hc=H + cas,
        casimirs={"omega_int": omega_int, "enstrophy": enstrophy, "casimir": cas},
        Mx=Mx,
        stability_norm=stab,
    )


@dataclass(frozen=True)
class TorusRun:
    final: TorusState
    ledgers: tuple[InvariantLedger, ...]
    aborted: bool = False


def evolve_torus(
    state: TorusState,
    dt: float,
    t_end: float,
    steady: TorusState | None = None,
    casimir: CasimirSpec | None = None,
    record_every: int = 1,
) -> TorusRun:
    """Step to t_end recording the invariant ledger; on NaN the run aborts
    and the ledger collected so far is returned with aborted=True."""
    ledgers = [compute_invariants(state, steady, casimir)]
    nsteps = int(round((t_end - state.t) / dt))
    for i in range(nsteps):
        try:
            state = step_torus_nonlinear(state, dt)
        except NanEncountered:
            return TorusRun(final=state, ledgers=tuple(ledgers), aborted=True)
        if (i + 1) % record_every == 0 or i == nsteps - 1:
            ledgers.append(compute_invariants(state, steady, casimir))
    return TorusRun(final=state, ledgers=tuple(ledgers), aborted=False)


def stability_norm_experiment(
    steady: TorusState,
    epsilon: float,
    horizon: float,
    seed: int = 0,
    dt: float | None = None,
    spec=None,
    record_every: int = 1,
) -> dict:
    """Perturb a torus steady state and track the ratio
    R(t) = stability_norm(t) / stability_norm(0).

    If the steady state carries an Arnold second-theorem Stable verdict the
    sup of R is a bound check; otherwise the run is labeled exploratory and
    no pass/fail is implied. epsilon = 0 degenerates to R(t) = 1.
    """
    from .arnold import DomainSpec, arnold_second_verdict
    from .errors import AssumptionViolated

    if spec is None:
        spec = DomainSpec.torus(steady.Lx, steady.Ly)
    try:
        verdict = arnold_second_verdict(steady, spec).verdict
    except AssumptionViolated:
        verdict = "AssumptionViolated"
    exploratory = verdict != "Stable"

    rng = np.random.default_rng(seed)
    nx, ny = steady.nx, steady.ny
    noise = rng.standard_normal((nx, ny))
    noise_hat = np.fft.fft2(noise)
    mask = dealias_mask(nx, ny).copy()
    _, _, k2 = torus_wavenumbers(nx, ny, steady.Lx, steady.Ly)
    noise_hat *= mask * np.exp(-k2)  # smooth, band-limited perturbation
    noise_hat[0, 0] = 0.0
    scale = np.sqrt(_parseval_sum(noise_hat, noise_hat, steady.Lx, steady.Ly))
    if scale > 0:
        noise_hat *= 1.0 / scale

    perturbed = TorusState(
        alpha=steady.alpha,
        omega_hat=steady.omega_hat + epsilon * noise_hat,
        Lx=steady.Lx,
        Ly=steady.Ly,
        t=steady.t,
    )
    norm0 = stability_norm(perturbed, steady)
    if norm0 == 0.0:
        return {
            "verdict_available": not exploratory,
            "exploratory": exploratory,
            "sup_ratio": 1.0,
            "times": [steady.t],
            "ratios": [1.0],
            "note": "no perturbation",
        }
    if dt is None:
        dt = cfl_timestep(perturbed)
    run = evolve_torus(perturbed, dt, steady.t + horizon, steady=steady, record_every=record_every)
    times = [row.t for row in run.ledgers]
    ratios = [row.stability_norm / norm0 for row in run.ledgers]
    return {
        "verdict_available": not exploratory,
        "exploratory": exploratory,
        "sup_ratio": max(ratios),
        "times": times,
        "ratios": ratios,
        "aborted": run.aborted,
    }


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

_MAGIC = b"AEVC"
_HEADER = struct.Struct("<4sII dd dd")


def save_checkpoint(state: TorusState, path) -> None:
    """Flat binary checkpoint: header (magic, nx, ny, alpha, t, Lx, Ly)
    followed by the raw complex vorticity coefficients."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, state.nx, state.ny, state.alpha, state.t, state.Lx, state.Ly))
        fh.write(np.ascontiguousarray(state.omega_hat, dtype=np.complex128).tobytes())


def load_checkpoint(path) -> TorusState:
    with open(path, "rb") as fh:
        magic, nx, ny, alpha, t, Lx, Ly = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype=np.complex128).reshape(nx, ny)
    return TorusState(alpha=alpha, omega_hat=data, Lx=Lx, Ly=Ly, t=t)
