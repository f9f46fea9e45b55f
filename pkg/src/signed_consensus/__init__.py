"""Monte-Carlo simulation of consensus over signed random networks with
relative-state flipping along negative arcs."""
from .analysis import (
    ClassificationCriteria,
    InvalidAlpha,
    SpreadMetrics,
    TheoremConstants,
    Verdict,
    classify_trajectory,
    spread_metrics,
    theorem_constants,
)
from .dynamics import (
    DynamicsParams,
    NonFiniteState,
    StateVector,
    negative_recommendation,
    positive_recommendation,
    step,
)
from .env import (
    AssumptionReport,
    AttentionSchedule,
    GraphSchedule,
    InteractionGraph,
    check_assumptions,
    sample_attention,
    sample_interaction_graph,
    schedule_graph,
)
from .graph import (
    Connectivity,
    PositiveClusterPartition,
    SignConflict,
    SignedDigraph,
    connectivity,
    parse_graph,
    positive_cluster_partition,
    read_graph,
    subgraph_by_sign,
    union_graph,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentSummary,
    InitialSpec,
    Trajectory,
    run_experiment,
    run_trial,
)
from .presets import PRESETS, preset

__version__ = "0.1.0"
