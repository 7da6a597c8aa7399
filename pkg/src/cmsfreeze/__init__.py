"""Exact and numerical solutions of the freezing-limit ODEs of Calogero-Moser-Sutherland
particle systems on the Weyl chambers of the root systems A_{N-1}, B_N and D_N."""
from __future__ import annotations

__version__ = "0.1.0"

from .chamber import (  # noqa: E402
    ChamberPoint,
    Kind,
    RootSystemSpec,
    Trajectory,
    boundary_distance,
    drift,
    in_chamber,
    log_weight,
    sort_into_chamber,
)
from .errors import (  # noqa: E402
    BracketError,
    ChamberError,
    CMSError,
    DegenerateNuZeroError,
    DimensionError,
    DomainError,
    NegativeSquareError,
    NonRealRootsError,
    SingularInputError,
    StepUnderflowError,
    SubstepExhaustedError,
)
from .integrator import IntegratorConfig, integrate, profile_convergence, solve_hybrid  # noqa: E402
from .orthopoly import (  # noqa: E402
    ZeroSet,
    hermite_zeros,
    laguerre_zeros,
    special_solution,
    stationary_profile,
    stieltjes_residual,
)
from .sde import SdeConfig, freezing_deviation, mean_square_rate, simulate_path  # noqa: E402
from .symflow import (  # noqa: E402
    SymmetricState,
    TimePolynomialSet,
    backward_extension_time,
    discriminant,
    evaluate_flow,
    from_symmetric,
    propagate,
    solve_trajectory,
    to_symmetric,
)

__all__ = [name for name in dir() if not name.startswith("_")]
