"""Channel grids, velocity profiles, steady shear states, and torus fields.

The model couples two velocities: the filtered velocity v and the momentum
velocity u = (1 - alpha^2 Lap) v. A channel steady state is determined by a
profile V(y) with V'(wall) = 0; the associated momentum profile is
U = V - alpha^2 V''. On the doubly periodic torus the state is carried by
the spectral vorticity, from which stream function and velocities follow by
diagonal inversion.

All types are immutable after construction and every operation is a pure
function, so values can be shared freely across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev as ncheb
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import CubicSpline

from . import spectral
from .errors import BoundaryConditionViolation

UNIFORM = "uniform"
CHEBYSHEV = "chebyshev-extrema"

_DESCRIPTOR_MATCH_RTOL = 1e-12


@dataclass(frozen=True)
class PolynomialDescriptor:
    """Exact polynomial profile, coefficients in ascending powers of y."""

    coeffs: tuple[float, ...]

    def __call__(self, y):
        return npoly.polyval(np.asarray(y, dtype=float), self.coeffs)

    def derivative(self, order: int = 1) -> "PolynomialDescriptor":
        return PolynomialDescriptor(tuple(npoly.polyder(self.coeffs, order)))

    def antiderivative(self) -> "PolynomialDescriptor":
        return PolynomialDescriptor(tuple(npoly.polyint(self.coeffs)))

    def scaled(self, factor: float) -> "PolynomialDescriptor":
        return PolynomialDescriptor(tuple(factor * c for c in self.coeffs))


@dataclass(frozen=True)
class TrigDescriptor:
    """Exact profile amplitude * sin(frequency * y + phase).

    cos profiles are the phase = pi/2 case; the family is closed under
    differentiation and antidifferentiation.
    """

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __call__(self, y):
        return self.amplitude * np.sin(self.frequency * np.asarray(y, dtype=float) + self.phase)

    def derivative(self, order: int = 1) -> "TrigDescriptor":
        amp = self.amplitude * self.frequency**order
        return TrigDescriptor(amp, self.frequency, self.phase + order * np.pi / 2)

    def antiderivative(self) -> "TrigDescriptor":
        if self.frequency == 0.0:
            raise ValueError("zero-frequency trig profile has no trig antiderivative")
        return TrigDescriptor(self.amplitude / self.frequency, self.frequency, self.phase - np.pi / 2)

    def scaled(self, factor: float) -> "TrigDescriptor":
        return TrigDescriptor(factor * self.amplitude, self.frequency, self.phase)


Descriptor = PolynomialDescriptor | TrigDescriptor


@dataclass(frozen=True)
class Grid1D:
    """Collocation grid on [a, b]; nodes are strictly increasing with
    node[0] = a and node[-1] = b."""

    a: float
    b: float
    n: int
    kind: str = CHEBYSHEV

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")
        if self.n < 8:
            raise ValueError(f"grid too coarse: n = {self.n} < 8")
        if self.kind not in (UNIFORM, CHEBYSHEV):
            raise ValueError(f"unknown grid kind {self.kind!r}")

    @property
    def nodes(self) -> np.ndarray:
        return _grid_nodes(self.a, self.b, self.n, self.kind)

    def diff_matrix(self, order: int = 1) -> np.ndarray:
        if self.kind == CHEBYSHEV:
            return spectral.cheb_diff_matrix(self.n, self.a, self.b, order)
        return spectral.fd_diff_matrix(self.n, self.a, self.b, order)

    def quad_weights(self) -> np.ndarray:
        if self.kind != CHEBYSHEV:
            raise ValueError("quadrature weights implemented for Chebyshev grids only")
        return spectral.clencurt_weights(self.n, self.a, self.b)


@lru_cache(maxsize=256)
def _grid_nodes(a: float, b: float, n: int, kind: str) -> np.ndarray:
    if kind == CHEBYSHEV:
        nodes = spectral.cheb_nodes(n, a, b)
    else:
        nodes = np.linspace(a, b, n)
    nodes.setflags(write=False)
    return nodes


@dataclass(frozen=True, eq=False)
class Profile1D:
    """Sampled function of y, optionally backed by an exact descriptor.

    When a descriptor is present the samples must match it to 1e-12
    relative, and all calculus on the profile is done symbolically.
    """

    grid: Grid1D
    values: np.ndarray
    descriptor: Descriptor | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != (self.grid.n,):
            raise ValueError(f"values shape {values.shape} does not match grid n = {self.grid.n}")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.descriptor is not None:
            exact = self.descriptor(self.grid.nodes)
            scale = max(np.max(np.abs(exact)), 1e-300)
            if np.max(np.abs(values - exact)) > _DESCRIPTOR_MATCH_RTOL * scale:
                raise ValueError("sampled values do not match the analytic descriptor")

    @classmethod
    def from_descriptor(cls, grid: Grid1D, descriptor: Descriptor) -> "Profile1D":
        return cls(grid, descriptor(grid.nodes), descriptor)

    @classmethod
    def from_callable(cls, grid: Grid1D, fn) -> "Profile1D":
        return cls(grid, np.asarray(fn(grid.nodes)))

    def derivative(self, order: int = 1) -> "Profile1D":
        if self.descriptor is not None:
            return Profile1D.from_descriptor(self.grid, self.descriptor.derivative(order))
        return Profile1D(self.grid, self.grid.diff_matrix(order) @ self.values)

    def antiderivative(self) -> "Profile1D":
        """Antiderivative vanishing at the left endpoint."""
        if self.descriptor is not None:
            try:
                anti = self.descriptor.antiderivative()
            except ValueError:
                anti = None
            if anti is not None:
                vals = anti(self.grid.nodes)
                return Profile1D(self.grid, vals - vals[0])
        if self.grid.kind == CHEBYSHEV:
            # map to [-1,1], interpolate in the Chebyshev basis, integrate exactly
            x = (2.0 * self.grid.nodes - (self.grid.a + self.grid.b)) / (self.grid.b - self.grid.a)
            coeffs = ncheb.chebfit(x, self.values, deg=self.grid.n - 1)
            anti = ncheb.chebint(coeffs) * (self.grid.b - self.grid.a) / 2.0
            vals = ncheb.chebval(x, anti)
        else:
            from scipy.integrate import cumulative_simpson

            vals = cumulative_simpson(self.values, x=self.grid.nodes, initial=0.0)
        return Profile1D(self.grid, vals - vals[0])

    def evaluate(self, y):
        """Interpolate the profile at arbitrary points inside [a, b]."""
        if self.descriptor is not None:
            return self.descriptor(y)
        if self.grid.kind == CHEBYSHEV:
            out = spectral.barycentric_interpolate(self.grid.nodes, self.values, y)
            return out[0] if np.ndim(y) == 0 else out
        return CubicSpline(self.grid.nodes, self.values)(y)

    def scaled(self, factor: float) -> "Profile1D":
        desc = self.descriptor.scaled(factor) if self.descriptor is not None else None
        return Profile1D(self.grid, factor * self.values, desc)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def to_csv(self, path_or_buf) -> None:
        _write_profile_csv(self, path_or_buf)


def profile_from_csv(path_or_buf, descriptor: Descriptor | None = None) -> Profile1D:
    """Read a `y,value` CSV and classify the node distribution."""
    if hasattr(path_or_buf, "read"):
        rows = list(csv.reader(path_or_buf))
    else:
        with open(path_or_buf, newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["y", "value"]:
        raise ValueError("profile CSV must start with header 'y,value'")
    data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    y, vals = data[:, 0], data[:, 1]
    if np.any(np.diff(y) <= 0):
        raise ValueError("profile nodes must be strictly increasing")
    n, a, b = len(y), y[0], y[-1]
    scale = max(b - a, 1e-300)
    if np.max(np.abs(y - np.linspace(a, b, n))) <= 1e-9 * scale:
        kind = UNIFORM
    elif np.max(np.abs(y - spectral.cheb_nodes(n, a, b))) <= 1e-9 * scale:
        kind = CHEBYSHEV
    else:
        raise ValueError("nodes are neither uniform nor Chebyshev extrema")
    return Profile1D(Grid1D(a, b, n, kind), vals, descriptor)


def _write_profile_csv(profile: Profile1D, path_or_buf) -> None:
    buf = path_or_buf if hasattr(path_or_buf, "write") else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["y", "value"])
    for y, v in zip(profile.grid.nodes, profile.values):
        writer.writerow([repr(float(y)), repr(float(v))])
    if buf is not path_or_buf:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(buf.getvalue())


# ---------------------------------------------------------------------------
# Helmholtz filter and its inverse
# ---------------------------------------------------------------------------


def helmholtz_filter(profile: Profile1D, alpha: float) -> Profile1D:
    """Momentum profile U = V - alpha^2 V'' on the same grid.

    Exact for polynomial/trig descriptors; differentiation-matrix based
    otherwise.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    desc = profile.descriptor
    if isinstance(desc, PolynomialDescriptor):
        d2 = desc.derivative(2).coeffs
        coeffs = list(desc.coeffs)
        for i, c in enumerate(d2):
            coeffs[i] -= alpha**2 * c
        return Profile1D.from_descriptor(profile.grid, PolynomialDescriptor(tuple(coeffs)))
    if isinstance(desc, TrigDescriptor):
        # V'' = -f^2 V, so U = (1 + alpha^2 f^2) V
        return Profile1D.from_descriptor(profile.grid, desc.scaled(1.0 + alpha**2 * desc.frequency**2))
    d2 = profile.grid.diff_matrix(2)
    return Profile1D(profile.grid, profile.values - alpha**2 * (d2 @ profile.values))


def invert_helmholtz(profile: Profile1D, alpha: float) -> Profile1D:
    """Solve V - alpha^2 V'' = U with V'(a) = V'(b) = 0.

    The operator is positive definite under Neumann conditions, so the
    solution is unique. Uniform grids use a banded solve; Chebyshev grids
    a dense one.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    grid = profile.grid
    d1 = grid.diff_matrix(1)
    d2 = grid.diff_matrix(2)
    mat = np.eye(grid.n) - alpha**2 * d2
    mat[0, :] = d1[0, :]
    mat[-1, :] = d1[-1, :]
    rhs = profile.values.astype(float).copy()
    rhs[0] = 0.0
    rhs[-1] = 0.0
    if grid.kind == UNIFORM:
        lo, up = spectral.band_widths(mat)
        vals = scipy.linalg.solve_banded((lo, up), spectral.to_banded(mat, lo, up), rhs)
    else:
        vals = scipy.linalg.solve(mat, rhs)
    return Profile1D(grid, vals)


# ---------------------------------------------------------------------------
# Channel steady states
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SteadyShearState:
    """Parallel shear steady state on the channel [a, b].

    Velocities are v0 = (V(y), 0) and u0 = (U(y), 0) with U = V - alpha^2 V'',
    stream functions phi0' = V and psi0' = U (normalised to vanish at the left
    wall), vorticity omega0 = -U', and pressure
    pi = p0 - V^2/2 + (alpha^2/2) V'^2.
    """

    alpha: float
    V: Profile1D
    U: Profile1D
    dV: Profile1D
    d2U: Profile1D
    phi0: Profile1D
    psi0: Profile1D
    omega0: Profile1D
    pressure: Profile1D
    p0: float

    @property
    def grid(self) -> Grid1D:
        return self.V.grid


_BC_RTOL = 1e-8


def build_steady_shear(
    *,
    from_v: Profile1D | None = None,
    from_u: Profile1D | None = None,
    alpha: float,
    p0: float = 0.0,
) -> SteadyShearState:
    """Construct a steady shear state from either velocity profile.

    `from_v` requires V'(wall) = 0 (raises BoundaryConditionViolation
    otherwise); `from_u` recovers V by the Neumann Helmholtz solve, which
    enforces the wall condition automatically.
    """
    if (from_v is None) == (from_u is None):
        raise ValueError("provide exactly one of from_v / from_u")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")

    if from_v is not None:
        V = from_v
        dV = V.derivative(1)
        scale = max(1.0, dV.max_abs())
        worst = max(abs(dV.values[0]), abs(dV.values[-1]))
        if worst > _BC_RTOL * scale:
            raise BoundaryConditionViolation(
                f"V'(wall) = {dV.values[0]:.3e}, {dV.values[-1]:.3e}; "
                "profiles must satisfy V'(a) = V'(b) = 0 to be steady states"
            )
        U = helmholtz_filter(V, alpha)
    else:
        U = from_u
        V = invert_helmholtz(U, alpha)
        dV = V.derivative(1)

    dU = U.derivative(1)
    omega0 = dU.scaled(-1.0)
    d2U = U.derivative(2)
    phi0 = V.antiderivative()
    psi0 = U.antiderivative()
    pressure = Profile1D(V.grid, p0 - 0.5 * V.values**2 + 0.5 * alpha**2 * dV.values**2)
    return SteadyShearState(
        alpha=alpha, V=V, U=U, dV=dV, d2U=d2U,
        phi0=phi0, psi0=psi0, omega0=omega0, pressure=pressure, p0=p0,
    )


# ---------------------------------------------------------------------------
# Torus states
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def torus_wavenumbers(nx: int, ny: int, Lx: float, Ly: float):
    """(kx, ky, |k|^2) broadcastable arrays; axis 0 is x, axis 1 is y."""
    kx = (2.0 * np.pi / Lx) * np.fft.fftfreq(nx, d=1.0 / nx).reshape(nx, 1)
    ky = (2.0 * np.pi / Ly) * np.fft.fftfreq(ny, d=1.0 / ny).reshape(1, ny)
    k2 = kx**2 + ky**2
    for arr in (kx, ky, k2):
        arr.setflags(write=False)
    return kx, ky, k2


@lru_cache(maxsize=32)
def dealias_mask(nx: int, ny: int) -> np.ndarray:
    """2/3-rule mask: True on retained modes."""
    mx = np.abs(np.fft.fftfreq(nx, d=1.0 / nx)).reshape(nx, 1) <= nx / 3
    my = np.abs(np.fft.fftfreq(ny, d=1.0 / ny)).reshape(1, ny) <= ny / 3
    mask = mx & my
    mask.setflags(write=False)
    return mask


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class TorusState:
    """Doubly periodic state carried by the spectral vorticity omega_hat.

    omega_hat has shape (nx, ny) in numpy fft layout (axis 0 = x), zero mean
    mode, and conjugate symmetry (the physical field is real). The stream
    function follows from phi_hat = omega_hat / (|k|^2 (1 + alpha^2 |k|^2)).
    """

    alpha: float
    omega_hat: np.ndarray
    Lx: float = 2.0 * np.pi
    Ly: float = 2.0 * np.pi
    t: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if self.Lx <= 0 or self.Ly <= 0:
            raise ValueError("periods must be positive")
        om = np.asarray(self.omega_hat, dtype=complex).copy()
        if om.ndim != 2 or not (_is_power_of_two(om.shape[0]) and _is_power_of_two(om.shape[1])):
            raise ValueError(f"omega_hat shape {om.shape} must be powers of two")
        scale = max(np.max(np.abs(om)), 1e-300)
        if abs(om[0, 0]) > 1e-12 * scale:
            raise ValueError("vorticity must have zero mean")
        om[0, 0] = 0.0
        field = np.fft.ifft2(om)
        if np.max(np.abs(field.imag)) > 1e-10 * max(np.max(np.abs(field.real)), 1e-300):
            raise ValueError("omega_hat is not conjugate symmetric: physical field is not real")
        om.setflags(write=False)
        object.__setattr__(self, "omega_hat", om)

    @property
    def nx(self) -> int:
        return self.omega_hat.shape[0]

    @property
    def ny(self) -> int:
        return self.omega_hat.shape[1]


def torus_state_from_streamfunction(
    phi_hat: np.ndarray,
    alpha: float,
    Lx: float = 2.0 * np.pi,
    Ly: float = 2.0 * np.pi,
) -> TorusState:
    """Build a TorusState from spectral stream-function coefficients."""
    phi = np.asarray(phi_hat, dtype=complex)
    nx, ny = phi.shape
    _, _, k2 = torus_wavenumbers(nx, ny, Lx, Ly)
    omega_hat = k2 * (1.0 + alpha**2 * k2) * phi
    return TorusState(alpha=alpha, omega_hat=omega_hat, Lx=Lx, Ly=Ly)


def torus_phi_hat(state: TorusState) -> np.ndarray:
    """phi_hat = omega_hat / (|k|^2 (1 + alpha^2 |k|^2)), zero mean."""
    _, _, k2 = torus_wavenumbers(state.nx, state.ny, state.Lx, state.Ly)
    sym = k2 * (1.0 + state.alpha**2 * k2)
    sym = np.where(sym == 0.0, 1.0, sym)
    phi = state.omega_hat / sym
    phi[0, 0] = 0.0
    return phi


def torus_velocity_hat(state: TorusState) -> tuple[np.ndarray, np.ndarray]:
    """Spectral filtered velocity v = (phi_y, -phi_x)."""
    kx, ky, _ = torus_wavenumbers(state.nx, state.ny, state.Lx, state.Ly)
    phi = torus_phi_hat(state)
    return 1j * ky * phi, -1j * kx * phi


def torus_velocity(state: TorusState) -> tuple[np.ndarray, np.ndarray]:
    """Physical filtered velocity components (vx, vy)."""
    vx_hat, vy_hat = torus_velocity_hat(state)
    return np.fft.ifft2(vx_hat).real, np.fft.ifft2(vy_hat).real


def torus_momentum_velocity_hat(state: TorusState) -> tuple[np.ndarray, np.ndarray]:
    """Spectral momentum velocity u = (1 - alpha^2 Lap) v."""
    _, _, k2 = torus_wavenumbers(state.nx, state.ny, state.Lx, state.Ly)
    vx_hat, vy_hat = torus_velocity_hat(state)
    factor = 1.0 + state.alpha**2 * k2
    return factor * vx_hat, factor * vy_hat


def torus_vorticity(state: TorusState) -> np.ndarray:
    """Physical vorticity field."""
    return np.fft.ifft2(state.omega_hat).real
