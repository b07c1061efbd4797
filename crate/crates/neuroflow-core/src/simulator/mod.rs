//! Scenario configuration, trace generation, and the discrete-event engine.

pub mod engine;
pub mod report;
pub mod scenario;
pub mod traces;

use thiserror::Error;

pub use engine::{run, RunOutput};
pub use report::{
    audit_event_log, compare_policies, format_comparison, format_report, AuditStats,
    ComparisonReport, PercentileSummary, PolicyRow, SimReport,
};
pub use scenario::{
    apply_override, default_pipeline_graph, preset, BackgroundLoad, BatchChoice, Scenario,
    ScenarioFile, PRESET_NAMES,
};
pub use traces::{
    generate_traces, manifest_path_for, read_manifest, read_trace_jsonl, write_trace_bundle,
    TraceManifest, TraceRecord,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] crate::flowgraph::GraphError),
    #[error(transparent)]
    Workload(#[from] crate::workload::WorkloadError),
    #[error(transparent)]
    Platform(#[from] crate::platform::PlatformError),
    #[error(transparent)]
    Predictor(#[from] crate::predictor::PredictorError),
    #[error(transparent)]
    Sched(#[from] crate::scheduler::SchedError),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
}

impl SimError {
    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        SimError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
