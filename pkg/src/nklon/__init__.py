"""Local optima networks of NK landscapes with neutrality (NK, NKp, NKq)."""

__version__ = "0.1.0"

from .basins import BasinDistribution, exact_basin_distributions, hill_climb, monte_carlo_basins
from .errors import (
    CapacityError,
    ConsistencyError,
    ConvergenceError,
    DivergenceError,
    DocumentError,
    ParameterError,
    ZeroVarianceError,
)
from .landscape import (
    ModelSpec,
    NkInstance,
    deserialize_instance,
    fitness,
    generate_instance,
    neighbors,
    serialize_instance,
)
from .lon import GlobalOptimumTieError, LocalOptimaNetwork, build_lon
from .metrics import MetricsReport, compute_metrics
from .neutrality import NeutralPartition, neutral_degree, neutral_partition

__all__ = [
    "BasinDistribution", "exact_basin_distributions", "hill_climb", "monte_carlo_basins",
    "CapacityError", "ConsistencyError", "ConvergenceError", "DivergenceError",
    "DocumentError", "ParameterError", "ZeroVarianceError",
    "ModelSpec", "NkInstance", "deserialize_instance", "fitness", "generate_instance",
    "neighbors", "serialize_instance",
    "GlobalOptimumTieError", "LocalOptimaNetwork", "build_lon",
    "MetricsReport", "compute_metrics",
    "NeutralPartition", "neutral_degree", "neutral_partition",
]
