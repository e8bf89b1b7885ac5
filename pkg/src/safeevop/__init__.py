"""Safe-excitation certificates and feasible-side EVOP optimization.

The package certifies "safe excitation balls" around an operating point via
Lipschitz constraint back-offs and uses the certificate inside an
evolutionary-operation optimizer that improves noisy experimental systems
without violating their safety constraints. Simulated plants and a batch
harness support verification; an HTTP ask-tell service supports live,
operator-run campaigns.
"""

from .backoff import (
    BoundPolicy,
    Chebyshev,
    ConstraintBackoff,
    ExcitationBall,
    GaussianThreeSigma,
    LipschitzPolytope,
    LipschitzVector,
    NoiseModel,
    SafetyCertificate,
    affine_ball_max,
    certify_ball,
    estimate_lipschitz,
    lipschitz_upper_bound,
    polytope_contains,
    required_backoff,
    robust_upper_bound,
    shrink_delta,
)
from .engine import (
    CycleData,
    CycleReport,
    EvopConfig,
    EvopSession,
    Measurement,
    SessionState,
    Suggestion,
    new_session,
)
from .errors import SafeEvopError
from .harness import RunSpec, RunSummary, TrajectoryRow, aggregate, run_trajectory
from .linalg import LagrangeSolution, LinearModelFit, least_squares_fit, solve_lagrange
from .plants import (
    CATALOG,
    OracleResult,
    Plant,
    PlantReading,
    Polynomial,
    evaluate,
    get_plant,
    grid_oracle,
    load_plant_file,
)
from .space import DecisionSpace, ScaledPoint, scale_point, unscale_point

__version__ = "0.1.0"

__all__ = [
    "BoundPolicy",
    "CATALOG",
    "Chebyshev",
    "ConstraintBackoff",
    "CycleData",
    "CycleReport",
    "DecisionSpace",
    "EvopConfig",
    "EvopSession",
    "ExcitationBall",
    "GaussianThreeSigma",
    "LagrangeSolution",
    "LinearModelFit",
    "LipschitzPolytope",
    "LipschitzVector",
    "Measurement",
    "NoiseModel",
    "OracleResult",
    "Plant",
    "PlantReading",
    "Polynomial",
    "RunSpec",
    "RunSummary",
    "SafeEvopError",
    "SafetyCertificate",
    "ScaledPoint",
    "SessionState",
    "Suggestion",
    "TrajectoryRow",
    "affine_ball_max",
    "aggregate",
    "certify_ball",
    "estimate_lipschitz",
    "evaluate",
    "get_plant",
    "grid_oracle",
    "least_squares_fit",
    "lipschitz_upper_bound",
    "load_plant_file",
    "new_session",
    "polytope_contains",
    "required_backoff",
    "robust_upper_bound",
    "run_trajectory",
    "scale_point",
    "shrink_delta",
    "solve_lagrange",
    "unscale_point",
]
