"""Deterministic simulator of direct load control on a stressed grid."""

from .consumption import (
    ApplianceSamples,
    EmpiricalCdf,
    filter_outliers,
    fit_cdf,
    hourly_draw,
    sample_inverse,
)
from .engine import SimConfig, run
from .homes import HOME_CLASSES, DisconnectivityMatrix, Home, build_dm, consumption
from .levels import CAP_FRACTION, PowerLevel, UtilityParams, utility
from .metrics import EdgeFractions, MetricsLog, level_distribution, mean_utility, sci, ulw
from .policies import (
    DistributionProfile,
    StressSignal,
    alg1_home_decision,
    alg2_step,
    baseline_step,
    eligible_lower_levels,
    reset_hourly,
)
from .topology import SupplyModel, Topology, build_topology, demand, stress_level

__version__ = "0.1.0"
