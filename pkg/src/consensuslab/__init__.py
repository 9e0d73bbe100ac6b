"""Deterministic simulation and analysis of delayed averaging consensus.

The package simulates continuous Laplacian-type flows and discrete
averaging over time-varying graphs with bounded communication delays,
builds connectivity certificates for them, and turns the structural
results about such systems (window monotonicity, substochastic
transition matrices, geometric contraction, containment) into
executable checks.
"""

from .connectivity import (
    AnalysisReport,
    AqscSearchFailure,
    ConnectivityCertificate,
    NitsCheck,
    build_analysis_report,
    check_aqsc,
    check_arc_balance,
    check_nits,
    check_strong_aperiodicity,
    compute_mu,
    find_aqsc_sequence,
    thin_by_dwell,
    uniform_sequence,
)
from .dynamics import (
    CouplingFunction,
    DisturbanceSignal,
    InitialCondition,
    LeaderConfig,
    PiecewiseVector,
    TargetSet,
    Trajectory,
    initial_from_trajectory,
    inverse_square_gain,
    simulate_containment,
    simulate_continuous,
    simulate_damped,
    simulate_discrete,
    simulate_leader_following,
    simulate_nonlinear,
    simulate_target_aggregation,
    verify_leader_shift,
)
from .errors import (
    ConsensusLabError,
    CouplingContractError,
    InvariantViolation,
    KindError,
    OutOfRangeError,
    ReductionDomainError,
)
from .evolution import (
    CauchyReport,
    ConsensusVerdict,
    EvolutionaryMatrix,
    compute_evolutionary,
    consensus_from_rows,
    reconstruct_cauchy,
    verify_row_sum_floor,
    verify_segment_structure,
)
from .metrics import (
    ContractionReport,
    DiameterSeries,
    DisturbanceReport,
    WindowExtrema,
    contraction_fit,
    diameter_series,
    disturbance_bound_check,
    hull_distance,
    hull_margins,
    window_extrema,
)
from .reduction import ReductionResult, reduce_discrete, verify_reduction
from .schedule import (
    DelaySchedule,
    SkeletonGraph,
    WeightSchedule,
    epsilon_skeleton,
    is_quasi_strongly_connected,
    is_strongly_connected,
    make_intermittent,
    persistent_graph_estimate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
