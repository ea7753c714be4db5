"""OpenMP region instrumentation, profiling, and SMT thread-count tuning."""

from .advisor import (
    DecisionTree,
    LabeledSample,
    SmtClass,
    export_tree,
    import_tree,
    predict,
    recommend_threads,
    train,
)
from .counters import (
    CANONICAL_EVENTS,
    FEATURE_ORDER,
    FeatureVector,
    SyntheticCounterModel,
    SyntheticCounterProvider,
    derive_features,
)
from .regions import (
    InstrumentationConfig,
    Region,
    RegionKind,
    SelectionEntry,
    parse_config,
    scan_source,
    select_regions,
)
from .rewrite import (
    InstrumentationOptions,
    RegionManifest,
    emit_manifest,
    instrument,
    parse_manifest,
    strip,
    verify_manifest,
)
from .runtime import (
    ProfileRuntime,
    RegionProfile,
    RunResult,
    ThreadPlan,
    VisitRecord,
    emit_plan,
    emit_result,
    emit_viz,
    parse_plan,
    parse_result,
)
from .tuner import (
    CommandExecutor,
    CostModelParams,
    SyntheticExecutor,
    TrialResult,
    build_plan,
    default_candidates,
    fit_cost_model,
    model_time,
    run_trials,
    speedup,
)

__version__ = "0.1.0"
