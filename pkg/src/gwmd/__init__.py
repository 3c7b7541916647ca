"""Galton-Watson offspring-mean inference with self-normalized statistics.

Simulation of supercritical Galton-Watson processes, the Lotka-Nagaev and
Harris estimators, time- and space-type self-normalized statistics,
confidence intervals built from them, and a reproducible Monte Carlo harness
that checks their normal approximations.
"""

SCHEMA_VERSION = 1

from .errors import (  # noqa: E402
    DegenerateDenominator,
    DomainError,
    GWMDError,
    InvalidLaw,
    NoRealInterval,
    NonfiniteMoment,
    PopulationCapExceeded,
    PopulationOverflow,
    SurvivalRejectionLimit,
    ValidationError,
    ZeroPopulation,
)
from .gaussian import gaussian_tail_bounds, normal_cdf, normal_quantile  # noqa: E402
from .inference import (  # noqa: E402
    ci_infectious,
    ci_known_variance,
    ci_space_type,
    ci_space_type_large_dev,
    ci_time_type,
    p_value_time_type,
)
from .offspring import (  # noqa: E402
    PRESETS,
    BinarySplit,
    ShiftedGeometric,
    ShiftedPoisson,
    TablePmf,
    moments,
    pmf,
    sample_generation_sum,
    sample_offspring,
)
from .rng import RngStream, derive_stream  # noqa: E402
from .simulate import (  # noqa: E402
    GenerationObservation,
    Trajectory,
    simulate_generation_observation,
    simulate_trajectory,
)
from .stats import (  # noqa: E402
    harris_estimator,
    lotka_nagaev,
    statistic_H,
    statistic_M,
    statistic_T,
    statistic_T_tilde,
)
