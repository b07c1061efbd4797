//! Model-feature-only comparison arm.
//!
//! One linear least-squares regressor per platform over the normalized model
//! token plus a bias, blind to telemetry. It captures how a model's anatomy
//! and batch size map to latency on each device, but cannot react to load,
//! which is exactly the gap the platform-level estimator is meant to close.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::features::{fit_normalizer, normalized_model_token, Normalizer, TOKEN_DIM};
use super::{Prediction, PredictorError, RuntimePredictor};
use crate::platform::{PlatformDescriptor, PlatformSnapshot};
use crate::simulator::traces::TraceRecord;
use crate::workload::ModelDescriptor;

const N_COEF: usize = TOKEN_DIM + 1;

#[derive(Debug, Clone)]
pub struct BaselinePredictor {
    norm: Normalizer,
    /// One coefficient row per platform slot: token weights then bias.
    weights: Vec<[f64; N_COEF]>,
}

impl RuntimePredictor for BaselinePredictor {
    fn name(&self) -> &str {
        "model-only"
    }

    fn platform_ids(&self) -> &[String] {
        self.norm.platform_ids()
    }

    fn predict(
        &self,
        model: &ModelDescriptor,
        _snapshots: &[PlatformSnapshot],
        batch: u32,
    ) -> Result<Prediction, PredictorError> {
        let token = normalized_model_token(model, batch, &self.norm);
        let mut latency_ms = BTreeMap::new();
        let mut platform_logits = BTreeMap::new();
        for (slot, id) in self.norm.platform_ids().iter().enumerate() {
            let w = &self.weights[slot];
            let mut ms = w[TOKEN_DIM];
            for d in 0..TOKEN_DIM {
                ms += w[d] * token[d];
            }
            latency_ms.insert(id.clone(), ms);
            platform_logits.insert(id.clone(), -ms);
        }
        Ok(Prediction {
            latency_ms,
            platform_logits,
        })
    }
}

fn solve_ls(rows: &[[f64; N_COEF]], targets: &[f64]) -> Result<[f64; N_COEF], PredictorError> {
    let x = DMatrix::from_fn(rows.len(), N_COEF, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(targets);
    let w = x
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|_| PredictorError::NonFinite {
            what: "baseline least-squares solve".into(),
        })?;
    let mut out = [0.0; N_COEF];
    for (d, slot) in out.iter_mut().enumerate() {
        *slot = w[d];
        if !slot.is_finite() {
            return Err(PredictorError::NonFinite {
                what: "baseline coefficients".into(),
            });
        }
    }
    Ok(out)
}

/// Fit the model-only regressors on the given records. Normalization bounds
/// come from the same records, mirroring the training protocol of the
/// platform-level estimator. A platform with no executed samples falls back
/// to a pooled fit over all samples.
pub fn fit_baseline(
    records: &[TraceRecord],
    models: &[ModelDescriptor],
    platforms: &[PlatformDescriptor],
) -> Result<BaselinePredictor, PredictorError> {
    if records.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    for (index, r) in records.iter().enumerate() {
        if !(r.measured_latency_ms > 0.0) {
            return Err(PredictorError::ZeroTarget { index });
        }
    }
    let norm = fit_normalizer(records, models, platforms)?;

    let n_platforms = norm.platform_ids().len();
    let mut rows: Vec<Vec<[f64; N_COEF]>> = vec![Vec::new(); n_platforms];
    let mut targets: Vec<Vec<f64>> = vec![Vec::new(); n_platforms];
    let mut all_rows = Vec::with_capacity(records.len());
    let mut all_targets = Vec::with_capacity(records.len());
    for r in records {
        let model = models
            .iter()
            .find(|m| m.id == r.model_id)
            .ok_or_else(|| PredictorError::UnknownModel {
                model: r.model_id.clone(),
            })?;
        let slot = norm.platform_index(&r.platform_id)?;
        let token = normalized_model_token(model, r.batch, &norm);
        let mut row = [1.0; N_COEF];
        row[..TOKEN_DIM].copy_from_slice(&token);
        rows[slot].push(row);
        targets[slot].push(r.measured_latency_ms);
        all_rows.push(row);
        all_targets.push(r.measured_latency_ms);
    }

    let pooled = solve_ls(&all_rows, &all_targets)?;
    let mut weights = Vec::with_capacity(n_platforms);
    for slot in 0..n_platforms {
        if rows[slot].is_empty() {
            weights.push(pooled);
        } else {
            weights.push(solve_ls(&rows[slot], &targets[slot])?);
        }
    }
    Ok(BaselinePredictor { norm, weights })
}
