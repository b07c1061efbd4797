//! Deterministic training: seeded split, Adam on f64 master weights with
//! f32-quantized evaluation, and a per-epoch loss log.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{featurize, fit_normalizer};
use super::network::{self, Sample};
use super::{PredictorError, TrainedPredictor};
use crate::platform::PlatformDescriptor;
use crate::rngutil::sub_rng;
use crate::simulator::traces::TraceRecord;
use crate::workload::ModelDescriptor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub lr: f64,
    /// Floor of the cosine step-size decay; equal to `lr` disables decay.
    pub lr_min: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Share of records held out for validation, in [0, 0.9].
    pub val_fraction: f64,
    /// Weight of the cross-entropy term next to the latency MSE.
    pub lambda_ce: f64,
    /// Milliseconds represented by a unit softplus output.
    pub out_scale_ms: f64,
    /// Minimum dataset size accepted for training.
    pub min_records: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            lr: 3e-3,
            lr_min: 1e-4,
            epochs: 60,
            batch_size: 256,
            val_fraction: 0.2,
            lambda_ce: 1.0,
            out_scale_ms: 100.0,
            min_records: 100,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub n_records: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub parameter_count: usize,
    pub serialized_bytes: usize,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
    pub epochs: Vec<EpochLog>,
}

pub(crate) fn build_samples(
    records: &[TraceRecord],
    models: &[ModelDescriptor],
    norm: &super::Normalizer,
) -> Result<Vec<Sample>, PredictorError> {
    records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            if !(r.measured_latency_ms > 0.0) {
                return Err(PredictorError::ZeroTarget { index });
            }
            let model = models
                .iter()
                .find(|m| m.id == r.model_id)
                .ok_or_else(|| PredictorError::UnknownModel {
                    model: r.model_id.clone(),
                })?;
            Ok(Sample {
                fv: featurize(model, &r.snapshots, r.batch, norm)?,
                executed: norm.platform_index(&r.platform_id)?,
                target_ms: r.measured_latency_ms,
                best: norm.platform_index(&r.best_platform_id)?,
            })
        })
        .collect()
}

/// Train the attention predictor on trace records. The split, the
/// initialization, and the minibatch order all derive from `cfg.seed`, so a
/// rerun reproduces the parameters bit for bit.
pub fn train(
    records: &[TraceRecord],
    models: &[ModelDescriptor],
    platforms: &[PlatformDescriptor],
    cfg: &TrainConfig,
) -> Result<(TrainedPredictor, TrainLog), PredictorError> {
    if records.is_empty() {
        return Err(PredictorError::EmptyDataset);
    }
    if records.len() < cfg.min_records {
        return Err(PredictorError::TooFewRecords {
            got: records.len(),
            need: cfg.min_records,
        });
    }
    let mut executed: Vec<&str> = records.iter().map(|r| r.platform_id.as_str()).collect();
    executed.sort_unstable();
    executed.dedup();
    if executed.len() < 2 {
        return Err(PredictorError::DegenerateLabels);
    }
    if !(0.0..=0.9).contains(&cfg.val_fraction) {
        return Err(PredictorError::Parse(format!(
            "val_fraction must lie in [0, 0.9], got {}",
            cfg.val_fraction
        )));
    }
    for (index, r) in records.iter().enumerate() {
        if !(r.measured_latency_ms > 0.0) {
            return Err(PredictorError::ZeroTarget { index });
        }
    }

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut sub_rng(cfg.seed, "train-split", &[]));
    let n_val = ((records.len() as f64) * cfg.val_fraction).round() as usize;
    let n_train = records.len() - n_val;
    let (train_idx, val_idx) = order.split_at(n_train);

    let train_records: Vec<TraceRecord> =
        train_idx.iter().map(|&i| records[i].clone()).collect();
    let norm = fit_normalizer(&train_records, models, platforms)?;
    let train_samples = build_samples(&train_records, models, &norm)?;
    let val_records: Vec<TraceRecord> = val_idx.iter().map(|&i| records[i].clone()).collect();
    let val_samples = build_samples(&val_records, models, &norm)?;

    // Latency-head bias starts at the mean target so early gradients are not
    // dominated by a global offset.
    let mean_target =
        train_samples.iter().map(|s| s.target_ms).sum::<f64>() / train_samples.len() as f64;
    let br_init = (mean_target / cfg.out_scale_ms).exp_m1().max(1e-9).ln();
    let mut params = network::init_params(
        cfg.hidden,
        norm.platform_ids().to_vec(),
        cfg.out_scale_ms,
        br_init,
        &mut sub_rng(cfg.seed, "train-init", &[]),
    )?;

    let probe = TrainedPredictor {
        norm: norm.clone(),
        params: params.clone(),
    };
    let bytes = network::encode_trained(&probe).len();
    if bytes > network::PARAM_BUDGET_BYTES {
        return Err(PredictorError::BudgetExceeded {
            bytes,
            budget: network::PARAM_BUDGET_BYTES,
        });
    }

    let all_train: Vec<usize> = (0..train_samples.len()).collect();
    let all_val: Vec<usize> = (0..val_samples.len()).collect();
    let initial_train_loss =
        network::loss_only(&params, &train_samples, &all_train, cfg.lambda_ce)?;

    // Adam on an f64 master copy; every evaluation sees f32-quantized weights,
    // identical to what serialization preserves.
    let mut master = params.theta().to_vec();
    let mut m = vec![0.0; master.len()];
    let mut v = vec![0.0; master.len()];
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut step = 0usize;
    let mut epochs_log = Vec::with_capacity(cfg.epochs);
    let mut batch_order = all_train.clone();
    let steps_per_epoch = train_samples.len().div_ceil(cfg.batch_size.max(1));
    let total_steps = (cfg.epochs * steps_per_epoch).max(1);
    let lr_floor = cfg.lr_min.min(cfg.lr);

    for epoch in 0..cfg.epochs {
        batch_order.shuffle(&mut sub_rng(cfg.seed, "train-epoch", &[epoch as u64]));
        let mut epoch_loss = 0.0;
        for chunk in batch_order.chunks(cfg.batch_size.max(1)) {
            let (loss, grad) = network::loss_and_grad(&params, &train_samples, chunk, cfg.lambda_ce)?;
            epoch_loss += loss * chunk.len() as f64;
            let frac = step as f64 / total_steps as f64;
            let lr = lr_floor
                + 0.5 * (cfg.lr - lr_floor) * (1.0 + (std::f64::consts::PI * frac).cos());
            step += 1;
            let bc1 = 1.0 - beta1.powi(step as i32);
            let bc2 = 1.0 - beta2.powi(step as i32);
            for i in 0..master.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                master[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            }
            params.set_theta(master.clone())?;
        }
        let train_loss = epoch_loss / train_samples.len() as f64;
        let val_loss = if val_samples.is_empty() {
            None
        } else {
            Some(network::loss_only(&params, &val_samples, &all_val, cfg.lambda_ce)?)
        };
        epochs_log.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });
    }

    let final_train_loss = network::loss_only(&params, &train_samples, &all_train, cfg.lambda_ce)?;
    let trained = TrainedPredictor { norm, params };
    let log = TrainLog {
        n_records: records.len(),
        n_train,
        n_val,
        parameter_count: trained.params.parameter_count(),
        serialized_bytes: trained.serialized_size(),
        initial_train_loss,
        final_train_loss,
        epochs: epochs_log,
    };
    Ok((trained, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::{PlatformKind, PlatformSnapshot};
    use crate::predictor::metrics::evaluate;

    fn tiny_platforms() -> Vec<PlatformDescriptor> {
        vec![
            PlatformDescriptor {
                id: "pa".into(),
                kind: PlatformKind::Gpu,
                fp32_tflops: 10.0,
                memory_mb: 4096.0,
                host: "h1".into(),
            },
            PlatformDescriptor {
                id: "pb".into(),
                kind: PlatformKind::Gpu,
                fp32_tflops: 5.0,
                memory_mb: 4096.0,
                host: "h2".into(),
            },
        ]
    }

    fn tiny_model() -> ModelDescriptor {
        ModelDescriptor {
            id: "m".into(),
            weight_file_mb: 10.0,
            trainable_params: 1_000_000,
            non_trainable_params: 0,
            conv_layers: 5,
            linear_layers: 2,
            conv_flops: 8.0e9,
            linear_flops: 2.0e9,
            total_flops: 10.0e9,
            batch_alpha: 0.1,
            tracking_style: false,
        }
    }

    fn snapshot(id: &str, cpu: f64) -> PlatformSnapshot {
        PlatformSnapshot {
            platform_id: id.into(),
            t_ms: 0.0,
            cpu_util: cpu,
            cpu_iowait: 0.05,
            context_switches_per_s: 500.0,
            gpu_util: cpu * 0.5,
            mem_used_mb: 100.0,
            queue_depth: 1,
        }
    }

    fn synthetic_records(
        n: usize,
        latency: impl Fn(usize, &str) -> f64,
    ) -> Vec<TraceRecord> {
        (0..n)
            .map(|i| {
                let executed = if i % 2 == 0 { "pa" } else { "pb" };
                let cpu = 0.1 + 0.8 * ((i % 10) as f64) / 10.0;
                TraceRecord {
                    t_ms: i as f64 * 100.0,
                    model_id: "m".into(),
                    batch: 1 + (i % 4) as u32,
                    snapshots: vec![snapshot("pa", cpu), snapshot("pb", cpu * 0.7)],
                    platform_id: executed.into(),
                    measured_latency_ms: latency(i, executed),
                    label_t_ms: i as f64 * 100.0 + 1000.0,
                    best_platform_id: if i % 3 == 0 { "pa" } else { "pb" }.into(),
                }
            })
            .collect()
    }

    fn quick_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            hidden: 8,
            epochs: 30,
            batch_size: 64,
            min_records: 10,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn constant_latency_dataset_fits_to_the_floor() {
        let records = synthetic_records(160, |_, executed| match executed {
            "pa" => 40.0,
            _ => 90.0,
        });
        let cfg = TrainConfig {
            epochs: 120,
            ..quick_cfg(1)
        };
        let (trained, log) = train(&records, &[tiny_model()], &tiny_platforms(), &cfg).unwrap();
        assert!(log.final_train_loss < log.initial_train_loss);
        let report = evaluate(&trained, &records, &[tiny_model()]).unwrap();
        for row in &report.per_platform {
            assert!(
                row.rmse_ms < 2.0,
                "platform {} rmse {}",
                row.platform_id,
                row.rmse_ms
            );
        }
    }

    #[test]
    fn final_loss_not_above_initial_across_seeds() {
        let records = synthetic_records(200, |i, executed| {
            let base = if executed == "pa" { 30.0 } else { 70.0 };
            base * (1.0 + 0.1 * ((i % 4) as f64))
        });
        for seed in 0..5 {
            let cfg = TrainConfig {
                epochs: 8,
                ..quick_cfg(seed)
            };
            let (_, log) = train(&records, &[tiny_model()], &tiny_platforms(), &cfg).unwrap();
            assert!(
                log.final_train_loss <= log.initial_train_loss,
                "seed {seed}: {} -> {}",
                log.initial_train_loss,
                log.final_train_loss
            );
        }
    }

    #[test]
    fn training_is_deterministic() {
        let records = synthetic_records(120, |i, _| 20.0 + (i % 7) as f64);
        let cfg = TrainConfig {
            epochs: 4,
            ..quick_cfg(9)
        };
        let (a, la) = train(&records, &[tiny_model()], &tiny_platforms(), &cfg).unwrap();
        let (b, lb) = train(&records, &[tiny_model()], &tiny_platforms(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn dataset_preconditions_are_enforced() {
        let cfg = quick_cfg(1);
        assert_eq!(
            train(&[], &[tiny_model()], &tiny_platforms(), &cfg).unwrap_err(),
            PredictorError::EmptyDataset
        );
        let few = synthetic_records(5, |_, _| 10.0);
        assert!(matches!(
            train(&few, &[tiny_model()], &tiny_platforms(), &cfg).unwrap_err(),
            PredictorError::TooFewRecords { got: 5, need: 10 }
        ));
        let mut single = synthetic_records(40, |_, _| 10.0);
        for r in &mut single {
            r.platform_id = "pa".into();
        }
        assert_eq!(
            train(&single, &[tiny_model()], &tiny_platforms(), &cfg).unwrap_err(),
            PredictorError::DegenerateLabels
        );
        let mut zero = synthetic_records(40, |_, _| 10.0);
        zero[7].measured_latency_ms = 0.0;
        assert!(matches!(
            train(&zero, &[tiny_model()], &tiny_platforms(), &cfg).unwrap_err(),
            PredictorError::ZeroTarget { .. }
        ));
    }
}
