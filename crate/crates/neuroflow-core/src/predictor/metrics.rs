//! Estimator quality metrics and report formatting.
//!
//! RMSE, RMSPE, and inclusive ±k% accuracy per executed platform, plus
//! classification accuracy against the ground-truth fastest feasible
//! platform. Pairs are sorted by value before reduction, so reports are
//! exactly invariant under dataset permutation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PredictorError, RuntimePredictor};
use crate::simulator::traces::TraceRecord;
use crate::workload::ModelDescriptor;

/// Root mean square error over (prediction, target) pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> f64 {
    reduce_mean(pairs, |(p, t)| (p - t) * (p - t)).sqrt()
}

/// Root mean square percentage error, in percent. Targets must be nonzero.
pub fn rmspe_pct(pairs: &[(f64, f64)]) -> f64 {
    100.0 * reduce_mean(pairs, |(p, t)| {
        let r = (p - t) / t;
        r * r
    })
    .sqrt()
}

/// Share of pairs with |p - t| / t <= k/100, inclusive, in percent.
pub fn acc_within_pct(pairs: &[(f64, f64)], k: f64) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs
        .iter()
        .filter(|(p, t)| ((p - t) / t).abs() <= k / 100.0)
        .count();
    100.0 * hits as f64 / pairs.len() as f64
}

/// Mean of f over pairs, summed in a canonical order so the result does not
/// depend on input order.
fn reduce_mean(pairs: &[(f64, f64)], f: impl Fn(&(f64, f64)) -> f64) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let mut terms: Vec<f64> = pairs.iter().map(f).collect();
    terms.sort_by_key(|v| v.to_bits());
    terms.iter().sum::<f64>() / terms.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformMetrics {
    pub platform_id: String,
    pub n: usize,
    pub rmse_ms: f64,
    pub rmspe_pct: f64,
    pub acc5_pct: f64,
    pub acc10_pct: f64,
    pub cls_acc_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub predictor: String,
    pub n_records: usize,
    /// Classification accuracy over the whole dataset, in percent.
    pub cls_acc_pct: f64,
    /// One row per executed platform with at least one sample, sorted by id.
    pub per_platform: Vec<PlatformMetrics>,
    /// The same metrics over all samples together.
    pub overall: PlatformMetrics,
}

impl MetricsReport {
    pub fn platform(&self, id: &str) -> Option<&PlatformMetrics> {
        self.per_platform.iter().find(|m| m.platform_id == id)
    }
}

fn metrics_row(id: &str, pairs: &[(f64, f64)], cls_hits: usize, cls_total: usize) -> PlatformMetrics {
    PlatformMetrics {
        platform_id: id.to_string(),
        n: pairs.len(),
        rmse_ms: rmse(pairs),
        rmspe_pct: rmspe_pct(pairs),
        acc5_pct: acc_within_pct(pairs, 5.0),
        acc10_pct: acc_within_pct(pairs, 10.0),
        cls_acc_pct: if cls_total == 0 {
            0.0
        } else {
            100.0 * cls_hits as f64 / cls_total as f64
        },
    }
}

/// Run the predictor over every record and score it: regression metrics
/// compare the prediction for the executed platform against the measured
/// latency; classification compares the argmax logit against the recorded
/// best platform.
pub fn evaluate(
    predictor: &dyn RuntimePredictor,
    records: &[TraceRecord],
    models: &[ModelDescriptor],
) -> Result<MetricsReport, PredictorError> {
    if records.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    struct Bucket {
        pairs: Vec<(f64, f64)>,
        cls_hits: usize,
        cls_total: usize,
    }
    let mut buckets: BTreeMap<String, Bucket> = BTreeMap::new();
    let mut all_pairs = Vec::with_capacity(records.len());
    let mut cls_hits = 0usize;

    for (index, r) in records.iter().enumerate() {
        if !(r.measured_latency_ms > 0.0) {
            return Err(PredictorError::ZeroTarget { index });
        }
        let model = models
            .iter()
            .find(|m| m.id == r.model_id)
            .ok_or_else(|| PredictorError::UnknownModel {
                model: r.model_id.clone(),
            })?;
        let pred = predictor.predict(model, &r.snapshots, r.batch)?;
        let yhat = pred
            .latency_ms
            .get(&r.platform_id)
            .copied()
            .ok_or_else(|| PredictorError::UnknownPlatform {
                platform: r.platform_id.clone(),
            })?;
        let hit = pred.best_platform() == Some(r.best_platform_id.as_str());
        if hit {
            cls_hits += 1;
        }
        let bucket = buckets.entry(r.platform_id.clone()).or_insert(Bucket {
            pairs: Vec::new(),
            cls_hits: 0,
            cls_total: 0,
        });
        bucket.pairs.push((yhat, r.measured_latency_ms));
        bucket.cls_total += 1;
        if hit {
            bucket.cls_hits += 1;
        }
        all_pairs.push((yhat, r.measured_latency_ms));
    }

    let per_platform = buckets
        .iter()
        .map(|(id, b)| metrics_row(id, &b.pairs, b.cls_hits, b.cls_total))
        .collect();
    Ok(MetricsReport {
        predictor: predictor.name().to_string(),
        n_records: records.len(),
        cls_acc_pct: 100.0 * cls_hits as f64 / records.len() as f64,
        per_platform,
        overall: metrics_row("all", &all_pairs, cls_hits, records.len()),
    })
}

/// Aligned table in the column order RMSE | RMSPE | ±5% | ±10% | Cls. Acc.
pub fn format_table(report: &MetricsReport) -> String {
    let mut rows = vec![format!(
        "{:<12} {:>6} {:>10} {:>10} {:>8} {:>9} {:>13}",
        "Platform", "N", "RMSE (ms)", "RMSPE (%)", "±5% (%)", "±10% (%)", "Cls. Acc. (%)"
    )];
    let fmt = |m: &PlatformMetrics| {
        format!(
            "{:<12} {:>6} {:>10.2} {:>10.2} {:>8.1} {:>9.1} {:>13.1}",
            m.platform_id, m.n, m.rmse_ms, m.rmspe_pct, m.acc5_pct, m.acc10_pct, m.cls_acc_pct
        )
    };
    for m in &report.per_platform {
        rows.push(fmt(m));
    }
    rows.push(fmt(&report.overall));
    format!("predictor: {}\n{}\n", report.predictor, rows.join("\n"))
}

/// Side-by-side ±10% accuracy per platform: the platform-aware estimator
/// against the model-only baseline.
pub fn format_acc10_comparison(platform_level: &MetricsReport, baseline: &MetricsReport) -> String {
    let mut rows = vec![format!(
        "{:<12} {:>16} {:>16} {:>8}",
        "Platform",
        format!("{} ±10%", baseline.predictor),
        format!("{} ±10%", platform_level.predictor),
        "delta"
    )];
    for m in &platform_level.per_platform {
        let base = baseline
            .platform(&m.platform_id)
            .map(|b| b.acc10_pct)
            .unwrap_or(0.0);
        rows.push(format!(
            "{:<12} {:>16.1} {:>16.1} {:>+8.1}",
            m.platform_id,
            base,
            m.acc10_pct,
            m.acc10_pct - base
        ));
    }
    rows.push(format!(
        "{:<12} {:>16.1} {:>16.1} {:>+8.1}",
        "all",
        baseline.overall.acc10_pct,
        platform_level.overall.acc10_pct,
        platform_level.overall.acc10_pct - baseline.overall.acc10_pct
    ));
    rows.join("\n") + "\n"
}
