import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from alphaeuler.domain import (
    Grid1D,
    PolynomialDescriptor,
    Profile1D,
    TorusState,
    TrigDescriptor,
    build_steady_shear,
    torus_state_from_streamfunction,
    torus_vorticity,
    torus_wavenumbers,
)

CUBIC_HALF_WIDTH = 1.0 / np.sqrt(3.0)


def cubic_shear_state(alpha=0.1, n=65):
    """V = y - y^3 on [-1/sqrt(3), 1/sqrt(3)]: monotone, one inflection."""
    grid = Grid1D(-CUBIC_HALF_WIDTH, CUBIC_HALF_WIDTH, n)
    V = Profile1D.from_descriptor(grid, PolynomialDescriptor((0.0, 1.0, 0.0, -1.0)))
    return build_steady_shear(from_v=V, alpha=alpha)


def couette_state(alpha=0.1, n=65):
    """U = y on [0, 1]."""
    grid = Grid1D(0.0, 1.0, n)
    U = Profile1D.from_descriptor(grid, PolynomialDescriptor((0.0, 1.0)))
    return build_steady_shear(from_u=U, alpha=alpha)


def poiseuille_state(alpha=0.1, n=65):
    """U = 1 - y^2 on [-1, 1]."""
    grid = Grid1D(-1.0, 1.0, n)
    U = Profile1D.from_descriptor(grid, PolynomialDescriptor((1.0, 0.0, -1.0)))
    return build_steady_shear(from_u=U, alpha=alpha)


def oscillatory_shear_state(alpha=0.1, n=101):
    """V = sin(3 pi y / 2) on [-1, 1]: admissible and modally unstable."""
    grid = Grid1D(-1.0, 1.0, n)
    V = Profile1D.from_descriptor(grid, TrigDescriptor(1.0, 1.5 * np.pi, 0.0))
    return build_steady_shear(from_v=V, alpha=alpha)


def sinusoidal_torus_state(m=1, alpha=0.5, n=64):
    """phi0 = sin(m y) on the 2pi x 2pi torus."""
    y = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    phi = np.broadcast_to(np.sin(m * y)[None, :], (n, n))
    return torus_state_from_streamfunction(np.fft.fft2(phi), alpha)


def random_smooth_torus_state(nx=64, alpha=0.25, seed=11, amplitude=0.45,
                              kwidth=1.5, kmax=3.0):
    """Band-limited random vorticity with unit-normalised amplitude."""
    rng = np.random.default_rng(seed)
    noise_hat = np.fft.fft2(rng.standard_normal((nx, nx)))
    _, _, k2 = torus_wavenumbers(nx, nx, 2.0 * np.pi, 2.0 * np.pi)
    noise_hat *= np.exp(-k2 / (2.0 * kwidth**2)) * (k2 <= kmax**2)
    noise_hat[0, 0] = 0.0
    state = TorusState(alpha=alpha, omega_hat=noise_hat)
    w = torus_vorticity(state)
    return TorusState(alpha=alpha, omega_hat=noise_hat * (amplitude / np.max(np.abs(w))))


@pytest.fixture(scope="session")
def funstable_state():
    return cubic_shear_state()


@pytest.fixture(scope="session")
def oscillatory_state():
    return oscillatory_shear_state()
