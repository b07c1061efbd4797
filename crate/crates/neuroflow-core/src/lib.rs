//! NeuroFlow core: dataflow graph analysis, synthetic workload and platform
//! models, an attention-based per-platform runtime predictor, and a
//! discrete-event scheduler simulation comparing dispatch policies.
//!
//! Everything here is deterministic: all randomness flows from a single run
//! seed through labelled sub-streams (see [`rngutil`]), so identical inputs
//! reproduce identical artifacts byte for byte.

pub mod flowgraph;
pub mod platform;
pub mod predictor;
pub mod rngutil;
pub mod scheduler;
pub mod simulator;
pub mod workload;

pub use flowgraph::{
    build_graph, extract_subgraphs, merged_priorities, topological_order, FlowGraph, GraphError,
    NodeKind, ProgramNode, Subgraph,
};
pub use platform::{
    sample_telemetry, Admission, PlatformDescriptor, PlatformError, PlatformKind, PlatformSnapshot,
    PlatformState,
};
pub use predictor::{
    evaluate, fit_baseline, fit_normalizer, train, BaselinePredictor, MetricsReport, Normalizer,
    Prediction, PredictorError, PredictorParams, RuntimePredictor, StaticTablePredictor,
    TrainConfig, TrainLog, TrainedPredictor, PARAM_BUDGET_BYTES,
};
pub use scheduler::{
    classify, nice_to_weight, EventKind, Policy, SchedError, SchedState, ScheduleEvent,
    TaskInstance, TaskKind,
};
pub use simulator::{
    audit_event_log, compare_policies, generate_traces, preset, run, RunOutput, Scenario,
    SimError, SimReport, TraceRecord,
};
pub use workload::{
    builtin_catalog, default_oracle, flops_breakdown, latency_ground_truth, LatencyOracleParams,
    LayerSpec, ModelDescriptor, WorkloadError,
};
