"""Consensus protocols with state-dependent interaction weights.

Continuous- and discrete-time first- and second-order laws, the sufficient
initial-state conditions that guarantee agreement, Lyapunov monitors and a
small CLI for reproducible experiments.
"""
from .conditions import (
    ConditionReport,
    check_gain_constraints,
    check_initial_condition,
    predict_consensus_state,
)
from .dynamics import (
    IntegrationBlowup,
    Law,
    ProtocolSpec,
    SystemState,
    TrajectoryRecord,
    control_input,
    simulate,
    step_continuous,
    step_discrete,
)
from .graph import (
    LaplacianMatrix,
    WeightedGraph,
    algebraic_connectivity,
    build_laplacian,
    count_disjoint_paths,
    lambda2_lower_bound,
    vertex_connectivity,
)
from .monitors import Verdict, detect_consensus, disagreement, evaluate_monitor
from .scenarios import ScenarioConfig, build_builtin, evenly_spaced_opinions, random_initial
from .weights import (
    Constant,
    CuckerSmale,
    LinearDecay,
    SmoothedConfidence,
    StepConfidence,
    WeightFunction,
    evaluate_weight,
    integral_weight,
    staircase_w,
)

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
