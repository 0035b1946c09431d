"""Plug-in diversity indices on countable alphabets and their moderate deviations."""

from .distributions import (
    CountableDistribution,
    Custom,
    Finite,
    Geometric,
    TriangularFamily,
    TwoPointPerturbed,
    Zeta,
    fixed_family,
    mass,
    sample_counts,
    shrinking_geometric_family,
    tail_mass_bound,
    two_point_family,
)
from .estimation import (
    DegenerateVarianceError,
    EmpiricalSample,
    EstimateReport,
    confidence_interval,
    estimate,
    plugin_sigma_sq,
    plugin_theta,
    population_sigma_sq,
)
from .indices import HolderClass, IndexFamily, g_eval, g_prime, holder_class, holder_exponent, theta
from .mdp import (
    MdpContext,
    MdpScale,
    ScaleConditionError,
    log_power_scale,
    mdp_tail_approximation,
    power_scale,
    rate_function,
    tail_threshold,
    validate_scale,
)
from .montecarlo import (
    ExperimentConfig,
    RateCurve,
    clt_diagnostic,
    exact_plugin_distribution,
    remainder_diagnostic,
    run_experiment,
    simulate_plugin,
)

__version__ = "0.1.0"
