"""Stability analysis toolkit for the 2D alpha-Euler equations.

The model regularizes ideal 2D flow through the Helmholtz filter
u = (1 - alpha^2 Lap) v: the momentum u is transported by the smoothed
velocity v. This package constructs steady shear states on a channel and
spectral states on the torus, runs the sign-based necessary conditions for
instability (inflection-point and shifted-product checks), solves the
fourth-order normal-mode eigenproblem, evaluates energy-Casimir stability
verdicts, and verifies conservation laws by time integration.
"""

from .domain import (
    Grid1D,
    PolynomialDescriptor,
    Profile1D,
    SteadyShearState,
    TorusState,
    TrigDescriptor,
    build_steady_shear,
    helmholtz_filter,
    invert_helmholtz,
    profile_from_csv,
    torus_state_from_streamfunction,
)
from .criteria import (
    CriterionReport,
    fjortoft_check,
    fjortoft_generalized_check,
    rayleigh_check,
)
from .modal import (
    GrowthCurve,
    ModalProblem,
    ModalSolution,
    assemble_modal,
    modal_residual,
    scan_wavenumbers,
    solve_modal,
)
from .arnold import (
    ArnoldReport,
    DomainSpec,
    FPrimeProfile,
    arnold_first_verdict,
    arnold_second_verdict,
    build_regularization_example,
    lambda_min_alpha,
    reconstruct_f_prime,
)
from .evolve import (
    CasimirSpec,
    InvariantLedger,
    LinearChannelState,
    compute_invariants,
    evolve_torus,
    stability_norm_experiment,
    step_linear_channel,
    step_torus_nonlinear,
)

__version__ = "0.1.0"
