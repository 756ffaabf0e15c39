"""Directed information-flow networks and high-order dependencies.

Builds pairwise Granger-causality networks over asset return series and
quantifies redundant/synergistic multiplet structure via the (dynamic)
O-information, with synthetic ground-truth generators and a batch CLI.
"""

__version__ = "0.1.0"

from .errors import ConfigError, ConsistencyError, DegenerateDataError, InfoflowError
from .gaussian import (
    CovModel,
    RidgePolicy,
    conditional_mi,
    dual_total_correlation,
    estimate_covariance,
    gaussian_entropy,
    mutual_information,
    o_information,
    total_correlation,
)
from .granger import (
    GcEdge,
    GrangerNetwork,
    VarFit,
    embed,
    fit_var,
    gc_matrix,
    pairwise_gc,
    select_order_bic,
    transfer_entropy_gaussian,
)
from .ingest import (
    AssetMeta,
    MinuteBar,
    ReturnPanel,
    ReturnSeries,
    TradeRecord,
    WindowCalendar,
    aggregate_minutes,
    build_calendar,
    load_registry,
    log_returns,
    parse_trades,
    slice_windows,
)
from .network import (
    AdjacencyMatrix,
    WindowCorrelation,
    age_strength_correlation,
    average_network,
    strengths,
    window_correlation,
    window_indicators,
)
from .oinfo import (
    MultipletResult,
    MultipletSearch,
    best_pair,
    class_fractions,
    dynamic_o_information,
    greedy_extend,
    membership_counts,
    multiplet_scan,
    o_info_gain,
    surrogate_doinfo,
)
from .synth import CouplingSpec, analytic_var_gc, gen_planted_highorder, gen_var, stationary_covariance

__all__ = [
    "AdjacencyMatrix",
    "AssetMeta",
    "ConfigError",
    "ConsistencyError",
    "CouplingSpec",
    "CovModel",
    "DegenerateDataError",
    "GcEdge",
    "GrangerNetwork",
    "InfoflowError",
    "MinuteBar",
    "MultipletResult",
    "MultipletSearch",
    "ReturnPanel",
    "ReturnSeries",
    "RidgePolicy",
    "TradeRecord",
    "VarFit",
    "WindowCalendar",
    "WindowCorrelation",
    "age_strength_correlation",
    "aggregate_minutes",
    "analytic_var_gc",
    "average_network",
    "best_pair",
    "build_calendar",
    "class_fractions",
    "conditional_mi",
    "dual_total_correlation",
    "dynamic_o_information",
    "embed",
    "estimate_covariance",
    "fit_var",
    "gaussian_entropy",
    "gc_matrix",
    "gen_planted_highorder",
    "gen_var",
    "greedy_extend",
    "load_registry",
    "log_returns",
    "membership_counts",
    "multiplet_scan",
    "mutual_information",
    "o_info_gain",
    "o_information",
    "pairwise_gc",
    "parse_trades",
    "select_order_bic",
    "slice_windows",
    "stationary_covariance",
    "strengths",
    "surrogate_doinfo",
    "total_correlation",
    "transfer_entropy_gaussian",
    "window_correlation",
    "window_indicators",
]
