//! Feature extraction and min-max normalization.
//!
//! One model token (anatomy + batch) and one token per platform (telemetry +
//! static compute capacity), each 7-dimensional. Bounds are fitted per
//! dimension and per token slot on the training split only; a dimension that
//! never varies maps to 0, and out-of-range values clamp to [0, 1].

use serde::{Deserialize, Serialize};

use super::PredictorError;
use crate::platform::{PlatformDescriptor, PlatformSnapshot};
use crate::simulator::traces::TraceRecord;
use crate::workload::ModelDescriptor;

pub const TOKEN_DIM: usize = 7;

/// Normalized network input: every component lies in [0, 1], and
/// `platform_tokens` follows the normalizer's fixed platform order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub model_token: [f64; TOKEN_DIM],
    pub platform_tokens: Vec<[f64; TOKEN_DIM]>,
}

/// Per-dimension (min, max) bounds plus the platform set that defines token
/// order and static platform attributes. Bounds are stored as f32 so that a
/// save/load round trip is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    platforms: Vec<PlatformDescriptor>,
    platform_ids: Vec<String>,
    pub model_bounds: [(f32, f32); TOKEN_DIM],
    /// One bounds row per platform slot, same order as `platforms`.
    pub platform_bounds: Vec<[(f32, f32); TOKEN_DIM]>,
}

pub(crate) fn raw_model_token(model: &ModelDescriptor, batch: u32) -> [f64; TOKEN_DIM] {
    [
        model.conv_flops,
        model.linear_flops,
        model.total_flops,
        f64::from(model.conv_layers),
        f64::from(model.linear_layers),
        model.total_params() as f64,
        f64::from(batch),
    ]
}

pub(crate) fn raw_platform_token(
    snapshot: &PlatformSnapshot,
    descriptor: &PlatformDescriptor,
) -> [f64; TOKEN_DIM] {
    [
        snapshot.cpu_util,
        snapshot.cpu_iowait,
        snapshot.context_switches_per_s,
        snapshot.gpu_util,
        snapshot.mem_used_mb / descriptor.memory_mb,
        f64::from(snapshot.queue_depth),
        descriptor.fp32_tflops,
    ]
}

fn normalize(raw: &[f64; TOKEN_DIM], bounds: &[(f32, f32); TOKEN_DIM]) -> [f64; TOKEN_DIM] {
    let mut out = [0.0; TOKEN_DIM];
    for d in 0..TOKEN_DIM {
        let (lo, hi) = (f64::from(bounds[d].0), f64::from(bounds[d].1));
        out[d] = if hi > lo {
            ((raw[d] - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    out
}

impl Normalizer {
    pub fn platform_ids(&self) -> &[String] {
        &self.platform_ids
    }

    pub fn platforms(&self) -> &[PlatformDescriptor] {
        &self.platforms
    }

    pub fn platform_index(&self, id: &str) -> Result<usize, PredictorError> {
        self.platform_ids
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| PredictorError::UnknownPlatform {
                platform: id.to_string(),
            })
    }

    pub(crate) fn from_parts(
        mut platforms: Vec<PlatformDescriptor>,
        model_bounds: [(f32, f32); TOKEN_DIM],
        platform_bounds: Vec<[(f32, f32); TOKEN_DIM]>,
    ) -> Self {
        platforms.sort_by(|a, b| a.id.cmp(&b.id));
        let platform_ids = platforms.iter().map(|p| p.id.clone()).collect();
        Self {
            platforms,
            platform_ids,
            model_bounds,
            platform_bounds,
        }
    }
}

/// Fit per-dimension bounds over the given records. `models` resolves model
/// anatomy, `platforms` fixes the token order (sorted by id) and static
/// attributes. Records must cover only known models and platforms.
pub fn fit_normalizer(
    records: &[TraceRecord],
    models: &[ModelDescriptor],
    platforms: &[PlatformDescriptor],
) -> Result<Normalizer, PredictorError> {
    if records.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    let mut sorted: Vec<PlatformDescriptor> = platforms.to_vec();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut model_bounds = [(f64::INFINITY, f64::NEG_INFINITY); TOKEN_DIM];
    let mut platform_bounds = vec![[(f64::INFINITY, f64::NEG_INFINITY); TOKEN_DIM]; sorted.len()];
    let widen = |bounds: &mut [(f64, f64); TOKEN_DIM], raw: &[f64; TOKEN_DIM]| {
        for d in 0..TOKEN_DIM {
            bounds[d].0 = bounds[d].0.min(raw[d]);
            bounds[d].1 = bounds[d].1.max(raw[d]);
        }
    };

    for record in records {
        let model = models
            .iter()
            .find(|m| m.id == record.model_id)
            .ok_or_else(|| PredictorError::UnknownModel {
                model: record.model_id.clone(),
            })?;
        widen(&mut model_bounds, &raw_model_token(model, record.batch));
        for (slot, descriptor) in sorted.iter().enumerate() {
            let snapshot = find_snapshot(&record.snapshots, &descriptor.id)?;
            widen(
                &mut platform_bounds[slot],
                &raw_platform_token(snapshot, descriptor),
            );
        }
    }

    let quantize = |(lo, hi): (f64, f64)| (lo as f32, hi as f32);
    Ok(Normalizer::from_parts(
        sorted,
        model_bounds.map(quantize),
        platform_bounds
            .into_iter()
            .map(|row| row.map(quantize))
            .collect(),
    ))
}

fn find_snapshot<'a>(
    snapshots: &'a [PlatformSnapshot],
    platform_id: &str,
) -> Result<&'a PlatformSnapshot, PredictorError> {
    snapshots
        .iter()
        .find(|s| s.platform_id == platform_id)
        .ok_or_else(|| PredictorError::MissingSnapshot {
            platform: platform_id.to_string(),
        })
}

/// Normalized model token alone, for estimators that ignore platform state.
pub(crate) fn normalized_model_token(
    model: &ModelDescriptor,
    batch: u32,
    norm: &Normalizer,
) -> [f64; TOKEN_DIM] {
    normalize(&raw_model_token(model, batch), &norm.model_bounds)
}

/// Build the normalized feature vector for one invocation. Requires exactly
/// the trained platform set: a snapshot for an unknown platform is an error,
/// as is a missing one.
pub fn featurize(
    model: &ModelDescriptor,
    snapshots: &[PlatformSnapshot],
    batch: u32,
    norm: &Normalizer,
) -> Result<FeatureVector, PredictorError> {
    for s in snapshots {
        if !norm.platform_ids.iter().any(|id| *id == s.platform_id) {
            return Err(PredictorError::UnknownPlatform {
                platform: s.platform_id.clone(),
            });
        }
    }
    let model_token = normalize(&raw_model_token(model, batch), &norm.model_bounds);
    let mut platform_tokens = Vec::with_capacity(norm.platforms.len());
    for (slot, descriptor) in norm.platforms.iter().enumerate() {
        let snapshot = find_snapshot(snapshots, &descriptor.id)?;
        platform_tokens.push(normalize(
            &raw_platform_token(snapshot, descriptor),
            &norm.platform_bounds[slot],
        ));
    }
    Ok(FeatureVector {
        model_token,
        platform_tokens,
    })
}
