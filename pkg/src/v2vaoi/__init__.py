"""V2V channel simulator: interference-limited links, max-min SNR power
allocation, information-age accounting, and a perception-quality proxy."""

from .allocator import (
    AllocationProblem,
    AllocationResult,
    FeasibilityReport,
    GeneticConfig,
    GreedyConfig,
    check_feasible,
    default_pa,
    genetic_pa,
    greedy_pa,
    oracle_pa,
    project_to_feasible,
)
from .aoi import AoiConfig, AoIRecord, AoiSummary, aoi_summary, build_aoi_records, probabilistic_round
from .channel import (
    ChannelParams,
    DistanceMatrix,
    LinkMetrics,
    PowerMatrix,
    SnrClampWarning,
    compute_delay_matrix,
    compute_snr_batch,
    compute_snr_matrix,
    link_metrics,
    offdiag_mask,
    offdiag_values,
)
from .metrics import (
    ComparisonConfig,
    StrategyComparison,
    delay_mean,
    delay_rmse,
    delay_variance,
    run_comparison,
)
from .proxy import (
    BACKBONE_CURVE,
    CONSTANT_TRANSMISSION_CURVE,
    DEFAULT_CURVES,
    LINEAR_COEFFICIENT_CURVE,
    DegradationCurve,
    SceneApEstimate,
    estimate_ap,
    estimate_scene_ap,
    load_curve,
    save_curve,
)
from .scenario import (
    ScenarioSpec,
    generate_scene,
    load_distance_matrix,
    save_distance_matrix,
)
from .seeds import derive_seed, splitmix64

__version__ = "0.1.0"
