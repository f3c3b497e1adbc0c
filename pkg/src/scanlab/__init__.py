"""scanlab: prefix-scan engine for expensive, imbalanced operators.

Library surface: value domains and cost models (operators), staged scan
circuits with exact depth/work analyzers (circuits), distributed strategies
and predictors (distributed), the work-stealing reduce phase (stealing), a
deterministic discrete-event simulator (sim), a threaded executor
(executor), and report writers (report).  The ``scanlab`` command drives
verification, benchmarks and predictions.
"""

from .operators import (
    CallCounter,
    CostModel,
    ModularAffine,
    RigidTransform2D,
    ScanOperator,
    compose,
    constant_cost,
    exponential_cost,
    int_add,
    make_operator,
    mod_affine_op,
    mod_compose,
    rigid_op,
    sequential_scan,
)
from .circuits import (
    Circuit,
    CircuitMetrics,
    build,
    build_binomial,
    build_blelloch,
    build_dissemination,
    build_ladner_fischer,
    build_sequential,
    evaluate,
    export_text,
    ladner_fischer_metrics,
    metrics,
    validate,
)
from .distributed import (
    DepthWorkPrediction,
    SegmentAssignment,
    StrategyPlan,
    flat_plan,
    hierarchical_plan,
    hierarchical_scan,
    imbalance,
    partition,
    predict,
    predict_hierarchical,
    reduce_then_scan,
    scan_then_map,
    speedup_bound,
    weak_scaling_delta,
)
from .stealing import (
    Gap,
    LaneProgress,
    choose_direction,
    dynamic_hierarchical_scan,
    steal_reduce,
)
from .sim import (
    CostPlan,
    SimConfig,
    SimResult,
    Trace,
    critical_path,
    make_inputs,
    run_plan,
    simulate,
    work_account,
)
from .executor import ExecConfig, Stats, repeat_and_summarize, run, run_values, summarize

__version__ = "0.1.0"
