//! Model descriptors, FLOPs accounting, and the synthetic latency oracle.
//!
//! The oracle generates ground-truth inference latency as
//! `base * batch_factor * (1 + cpu_beta * cpu_load) * (1 + eps)` with
//! `eps ~ N(0, noise_sigma_pct / 100)`. Models flagged `tracking_style` grow
//! quadratically in batch (`1 + alpha * (batch - 1)^2`), everything else
//! linearly (`1 + alpha * (batch - 1)`).

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("non-positive dimension {dim} = {value} in {layer}")]
    NonPositiveDimension {
        layer: String,
        dim: &'static str,
        value: i64,
    },
    #[error("no base latency for model {model:?} on platform {platform:?}")]
    UnknownPair { model: String, platform: String },
    #[error("invalid descriptor {id:?}: {reason}")]
    InvalidDescriptor { id: String, reason: String },
    #[error("catalog parse error: {0}")]
    Parse(String),
}

/// Static anatomy of one deployable model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescriptor {
    pub id: String,
    pub weight_file_mb: f64,
    pub trainable_params: u64,
    pub non_trainable_params: u64,
    pub conv_layers: u32,
    pub linear_layers: u32,
    pub conv_flops: f64,
    pub linear_flops: f64,
    pub total_flops: f64,
    /// Per-unit-batch latency growth factor, >= 0.
    pub batch_alpha: f64,
    /// Tracking-style models scale quadratically with batch.
    pub tracking_style: bool,
}

impl ModelDescriptor {
    pub fn total_params(&self) -> u64 {
        self.trainable_params + self.non_trainable_params
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        let err = |reason: String| WorkloadError::InvalidDescriptor {
            id: self.id.clone(),
            reason,
        };
        if self.batch_alpha < 0.0 {
            return Err(err(format!("batch_alpha must be >= 0, got {}", self.batch_alpha)));
        }
        for (name, v) in [
            ("weight_file_mb", self.weight_file_mb),
            ("conv_flops", self.conv_flops),
            ("linear_flops", self.linear_flops),
            ("total_flops", self.total_flops),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(err(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        // Aggregate FLOPs may exceed the conv+linear split (other layer kinds),
        // never undercut it. Small tolerance for split rounding.
        if self.conv_flops + self.linear_flops > self.total_flops * (1.0 + 1e-9) {
            return Err(err("conv_flops + linear_flops exceeds total_flops".into()));
        }
        Ok(())
    }
}

/// Layer shapes accepted by [`flops_breakdown`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        cin: u64,
        k: u64,
        cout: u64,
        hout: u64,
        wout: u64,
    },
    Linear {
        m: u64,
        n: u64,
    },
}

/// Sum multiply-accumulate FLOPs over layers: Conv2D counts
/// `2*Cin*K^2*Cout*Hout*Wout`, Linear counts `2*m*n`. Returns
/// `(conv, linear, total)`.
pub fn flops_breakdown(layers: &[LayerSpec]) -> Result<(f64, f64, f64), WorkloadError> {
    let mut conv = 0.0;
    let mut linear = 0.0;
    for spec in layers {
        match spec {
            LayerSpec::Conv2d {
                cin,
                k,
                cout,
                hout,
                wout,
            } => {
                for (dim, v) in [
                    ("cin", cin),
                    ("k", k),
                    ("cout", cout),
                    ("hout", hout),
                    ("wout", wout),
                ] {
                    if *v == 0 {
                        return Err(WorkloadError::NonPositiveDimension {
                            layer: "conv2d".into(),
                            dim,
                            value: 0,
                        });
                    }
                }
                conv += 2.0 * (*cin * *k * *k * *cout * *hout * *wout) as f64;
            }
            LayerSpec::Linear { m, n } => {
                for (dim, v) in [("m", m), ("n", n)] {
                    if *v == 0 {
                        return Err(WorkloadError::NonPositiveDimension {
                            layer: "linear".into(),
                            dim,
                            value: 0,
                        });
                    }
                }
                linear += 2.0 * (*m * *n) as f64;
            }
        }
    }
    Ok((conv, linear, conv + linear))
}

/// Parameters of the synthetic latency oracle. `seed` offsets the noise
/// stream; the run seed still governs, so the default of 0 keeps a single
/// seed in charge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyOracleParams {
    /// model id -> platform id -> unloaded batch-1 latency in ms.
    pub base_ms: BTreeMap<String, BTreeMap<String, f64>>,
    /// Sensitivity of latency to host CPU load.
    pub cpu_beta: f64,
    /// Relative noise sigma in percent.
    pub noise_sigma_pct: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Ground-truth latency draw. `cpu_load` is the executing platform's CPU
/// utilization in [0, 1]. Deterministic given the RNG state; the noise factor
/// is floored at 0.05 so latency stays positive.
pub fn latency_ground_truth(
    model: &ModelDescriptor,
    platform_id: &str,
    batch: u32,
    cpu_load: f64,
    params: &LatencyOracleParams,
    rng: &mut impl Rng,
) -> Result<f64, WorkloadError> {
    let base = params
        .base_ms
        .get(&model.id)
        .and_then(|m| m.get(platform_id))
        .copied()
        .ok_or_else(|| WorkloadError::UnknownPair {
            model: model.id.clone(),
            platform: platform_id.to_string(),
        })?;
    if batch == 0 {
        return Err(WorkloadError::NonPositiveDimension {
            layer: "batch".into(),
            dim: "batch",
            value: 0,
        });
    }
    let steps = f64::from(batch - 1);
    let batch_factor = if model.tracking_style {
        1.0 + model.batch_alpha * steps * steps
    } else {
        1.0 + model.batch_alpha * steps
    };
    let load_factor = 1.0 + params.cpu_beta * cpu_load.clamp(0.0, 1.0);
    let noise_factor = if params.noise_sigma_pct > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma_pct / 100.0).expect("valid sigma");
        (1.0 + normal.sample(rng)).max(0.05)
    } else {
        1.0
    };
    Ok(base * batch_factor * load_factor * noise_factor)
}

/// The four models of the default autonomous-driving workload. Published
/// anatomy covers layer counts, parameter counts, and aggregate FLOPs; the
/// conv/linear FLOPs split is synthetic, proportional to layer counts, and the
/// batch growth factors are synthetic calibrations.
pub fn builtin_catalog() -> Vec<ModelDescriptor> {
    fn split(total: f64, conv_layers: u32, linear_layers: u32) -> (f64, f64) {
        let layers = f64::from(conv_layers + linear_layers);
        if layers == 0.0 {
            return (0.0, 0.0);
        }
        let conv = total * f64::from(conv_layers) / layers;
        (conv, total - conv)
    }
    let specs = [
        ("det3d", 10.5, 4_860_000, 0, 19u32, 1u32, 250.4e9, 0.12, false),
        ("det2d", 75.6, 36_910_000, 0, 92, 0, 52.257e9, 0.10, false),
        ("trajpred", 323.3, 3_780_000, 24_450_000, 62, 28, 130.3e9, 0.08, true),
        ("travseg", 13.4, 1_080_000, 0, 87, 12, 18.67e9, 0.05, false),
    ];
    specs
        .iter()
        .map(
            |&(id, mb, tp, ntp, convs, lins, flops, alpha, tracking)| {
                let (conv_flops, linear_flops) = split(flops, convs, lins);
                ModelDescriptor {
                    id: id.into(),
                    weight_file_mb: mb,
                    trainable_params: tp,
                    non_trainable_params: ntp,
                    conv_layers: convs,
                    linear_layers: lins,
                    conv_flops,
                    linear_flops,
                    total_flops: flops,
                    batch_alpha: alpha,
                    tracking_style: tracking,
                }
            },
        )
        .collect()
}

/// Default oracle: the desktop GPU column matches the measured per-model
/// means; the SBC GPU and DLA columns are synthetic scalings, with the DLA
/// favoring conv-only models and penalizing the linear-heavy tracking model.
pub fn default_oracle(catalog: &[ModelDescriptor]) -> LatencyOracleParams {
    let table: &[(&str, [(&str, f64); 3])] = &[
        ("det3d", [("ipc_gpu", 50.4), ("sbc_gpu", 95.8), ("sbc_dla", 70.6)]),
        ("det2d", [("ipc_gpu", 11.1), ("sbc_gpu", 21.1), ("sbc_dla", 15.5)]),
        ("trajpred", [("ipc_gpu", 31.0), ("sbc_gpu", 58.9), ("sbc_dla", 155.0)]),
        ("travseg", [("ipc_gpu", 8.5), ("sbc_gpu", 16.2), ("sbc_dla", 7.2)]),
    ];
    let mut base_ms = BTreeMap::new();
    for (model, row) in table {
        if !catalog.iter().any(|m| m.id == *model) {
            continue;
        }
        base_ms.insert(
            model.to_string(),
            row.iter().map(|(p, v)| (p.to_string(), *v)).collect(),
        );
    }
    LatencyOracleParams {
        base_ms,
        cpu_beta: 0.8,
        noise_sigma_pct: 5.0,
        seed: 0,
    }
}

pub fn catalog_to_json(catalog: &[ModelDescriptor]) -> String {
    serde_json::to_string_pretty(catalog).expect("catalog serialization")
}

pub fn catalog_from_json(s: &str) -> Result<Vec<ModelDescriptor>, WorkloadError> {
    let catalog: Vec<ModelDescriptor> =
        serde_json::from_str(s).map_err(|e| WorkloadError::Parse(e.to_string()))?;
    for m in &catalog {
        m.validate()?;
    }
    Ok(catalog)
}
