"""Monitoring of dynamic weighted networks with a degree-corrected block model."""

__version__ = "0.1.0"

from .graphs import (
    CommunityAssignment,
    DynamicNetwork,
    WeightedGraph,
    average_graph,
    block_weight_matrix,
    degrees,
    read_edge_list,
    write_edge_list,
)
from .model import (
    ChangeSpec,
    DcsbmParams,
    MleResult,
    draw_labels,
    draw_theta,
    expected_weights,
    log_likelihood,
    merge_communities,
    mle,
    parse_param_file,
    reduction_checks,
    simulate_dynamic,
    simulate_graph,
    split_community,
    write_param_file,
)
from .community import align_labels, regularized_spectral_clustering
from .charts import (
    ControlChart,
    PhaseIEstimate,
    RunLength,
    chart_to_csv,
    chart_to_svg,
    ewma,
    phase1_estimate,
    run_length,
    shewhart,
)
from .surveillance import (
    ChartBank,
    StatVector,
    monitor,
    monitor_with_detection,
    stat_labels,
    stat_series,
    stat_vector,
)
from .experiments import ArlStat, ArlSummary, ScenarioSpec, run_scenario, table_report
from .senate import (
    RollCall,
    SenateSequence,
    covoting_graph,
    parse_rollcall,
    senate_sequence,
    write_synthetic_rollcalls,
)

__all__ = [
    "__version__",
    # graphs
    "WeightedGraph", "DynamicNetwork", "CommunityAssignment",
    "degrees", "block_weight_matrix", "average_graph",
    "read_edge_list", "write_edge_list",
    # model
    "DcsbmParams", "ChangeSpec", "MleResult",
    "draw_labels", "draw_theta", "simulate_graph", "simulate_dynamic",
    "log_likelihood", "mle", "expected_weights", "reduction_checks",
    "merge_communities", "split_community",
    "parse_param_file", "write_param_file",
    # community
    "regularized_spectral_clustering", "align_labels",
    # charts
    "PhaseIEstimate", "ControlChart", "RunLength",
    "phase1_estimate", "shewhart", "ewma", "run_length",
    "chart_to_csv", "chart_to_svg",
    # surveillance
    "StatVector", "ChartBank",
    "stat_vector", "stat_series", "stat_labels",
    "monitor", "monitor_with_detection",
    # experiments
    "ScenarioSpec", "ArlStat", "ArlSummary", "run_scenario", "table_report",
    # senate
    "RollCall", "SenateSequence",
    "parse_rollcall", "covoting_graph", "senate_sequence",
    "write_synthetic_rollcalls",
]
