//! Per-platform runtime prediction.
//!
//! A model's anatomy token queries platform telemetry tokens through one
//! attention step; the mixed representation feeds a latency head (strictly
//! positive output per platform) and a platform classifier head. Training
//! minimizes MSE on the executed platform's measured latency plus
//! cross-entropy against the fastest feasible platform.

pub mod baseline;
pub mod features;
pub mod metrics;
pub mod network;
pub mod train;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::platform::PlatformSnapshot;
use crate::workload::ModelDescriptor;

pub use baseline::{fit_baseline, BaselinePredictor};
pub use features::{featurize, fit_normalizer, FeatureVector, Normalizer, TOKEN_DIM};
pub use metrics::{
    acc_within_pct, evaluate, format_acc10_comparison, format_table, rmse, rmspe_pct,
    MetricsReport, PlatformMetrics,
};
pub use network::{loss_and_grad, loss_only, PredictorParams, Sample, PARAM_BUDGET_BYTES};
pub use train::{train, TrainConfig, TrainLog};

#[derive(Debug, Error, PartialEq)]
pub enum PredictorError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset has {got} records, need at least {need}")]
    TooFewRecords { got: usize, need: usize },
    #[error("dataset needs at least 2 distinct executed platforms")]
    DegenerateLabels,
    #[error("record {index} has non-positive measured latency; relative metrics are undefined")]
    ZeroTarget { index: usize },
    #[error("serialized parameters take {bytes} bytes, budget is {budget}")]
    BudgetExceeded { bytes: usize, budget: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("no telemetry snapshot for platform {platform:?}")]
    MissingSnapshot { platform: String },
    #[error("platform {platform:?} is not part of the trained platform set")]
    UnknownPlatform { platform: String },
    #[error("model {model:?} is not in the catalog")]
    UnknownModel { model: String },
    #[error("training produced a non-finite {what}")]
    NonFinite { what: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
}

impl PredictorError {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        PredictorError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

/// Per-platform latency estimates plus platform-choice logits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prediction {
    pub latency_ms: BTreeMap<String, f64>,
    pub platform_logits: BTreeMap<String, f64>,
}

impl Prediction {
    /// Argmax-logit platform; ties resolve to the lexicographically first id.
    pub fn best_platform(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (id, &logit) in &self.platform_logits {
            if best.map_or(true, |(_, b)| logit > b) {
                best = Some((id.as_str(), logit));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Argmin predicted latency; ties resolve to the first id.
    pub fn fastest_platform(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (id, &ms) in &self.latency_ms {
            if best.map_or(true, |(_, b)| ms < b) {
                best = Some((id.as_str(), ms));
            }
        }
        best.map(|(id, _)| id)
    }
}

/// Anything that can estimate per-platform runtime for a model invocation.
pub trait RuntimePredictor {
    fn name(&self) -> &str;
    /// Platform ids covered by every [`Prediction`], sorted.
    fn platform_ids(&self) -> &[String];
    fn predict(
        &self,
        model: &ModelDescriptor,
        snapshots: &[PlatformSnapshot],
        batch: u32,
    ) -> Result<Prediction, PredictorError>;
}

/// The trained attention predictor: normalizer plus network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPredictor {
    pub norm: Normalizer,
    pub params: PredictorParams,
}

impl TrainedPredictor {
    pub fn save(&self, path: &std::path::Path) -> Result<(), PredictorError> {
        network::save_trained(self, path)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, PredictorError> {
        network::load_trained(path)
    }

    pub fn serialized_size(&self) -> usize {
        network::encode_trained(self).len()
    }
}

impl RuntimePredictor for TrainedPredictor {
    fn name(&self) -> &str {
        "neuroflow"
    }

    fn platform_ids(&self) -> &[String] {
        self.norm.platform_ids()
    }

    fn predict(
        &self,
        model: &ModelDescriptor,
        snapshots: &[PlatformSnapshot],
        batch: u32,
    ) -> Result<Prediction, PredictorError> {
        let fv = featurize(model, snapshots, batch, &self.norm)?;
        network::forward(&self.params, &fv)
    }
}

/// Degraded-mode fallback when no trained parameters are available: predicts
/// the static unloaded base latency scaled by the model's batch growth law,
/// ignoring telemetry entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticTablePredictor {
    /// model id -> platform id -> batch-1 base latency in ms.
    base_ms: BTreeMap<String, BTreeMap<String, f64>>,
    platform_ids: Vec<String>,
}

impl StaticTablePredictor {
    pub fn new(
        base_ms: BTreeMap<String, BTreeMap<String, f64>>,
        mut platform_ids: Vec<String>,
    ) -> Self {
        platform_ids.sort_unstable();
        platform_ids.dedup();
        Self {
            base_ms,
            platform_ids,
        }
    }
}

impl RuntimePredictor for StaticTablePredictor {
    fn name(&self) -> &str {
        "static-table"
    }

    fn platform_ids(&self) -> &[String] {
        &self.platform_ids
    }

    fn predict(
        &self,
        model: &ModelDescriptor,
        _snapshots: &[PlatformSnapshot],
        batch: u32,
    ) -> Result<Prediction, PredictorError> {
        let row = self
            .base_ms
            .get(&model.id)
            .ok_or_else(|| PredictorError::UnknownModel {
                model: model.id.clone(),
            })?;
        let steps = f64::from(batch.max(1) - 1);
        let factor = if model.tracking_style {
            1.0 + model.batch_alpha * steps * steps
        } else {
            1.0 + model.batch_alpha * steps
        };
        let mut latency_ms = BTreeMap::new();
        let mut platform_logits = BTreeMap::new();
        for id in &self.platform_ids {
            let base = row.get(id).copied().ok_or_else(|| {
                PredictorError::UnknownPlatform {
                    platform: id.clone(),
                }
            })?;
            let ms = base * factor;
            latency_ms.insert(id.clone(), ms);
            platform_logits.insert(id.clone(), -ms);
        }
        Ok(Prediction {
            latency_ms,
            platform_logits,
        })
    }
}
