//! Execution platforms, telemetry snapshots, and memory admission.
//!
//! Utilization follows a saturation law in the number of active tasks,
//! `u(n) = 1 - 2^(-n)`, plus scenario background load and optional seeded
//! jitter. Memory admission is strict: a task is admitted iff used + needed
//! stays within capacity, and rejection is a value, not an error.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlatformError {
    #[error("memory overcommit on {platform:?}: used {used_mb} MB of {capacity_mb} MB")]
    MemoryOvercommit {
        platform: String,
        used_mb: f64,
        capacity_mb: f64,
    },
    #[error("invalid platform {id:?}: {reason}")]
    InvalidDescriptor { id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlatformKind {
    #[serde(rename = "CPU")]
    Cpu,
    #[serde(rename = "GPU")]
    Gpu,
    #[serde(rename = "DLA")]
    Dla,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformDescriptor {
    pub id: String,
    pub kind: PlatformKind,
    pub fp32_tflops: f64,
    pub memory_mb: f64,
    pub host: String,
}

impl PlatformDescriptor {
    pub fn validate(&self) -> Result<(), PlatformError> {
        if !(self.fp32_tflops > 0.0) {
            return Err(PlatformError::InvalidDescriptor {
                id: self.id.clone(),
                reason: format!("fp32_tflops must be positive, got {}", self.fp32_tflops),
            });
        }
        if !(self.memory_mb > 0.0) {
            return Err(PlatformError::InvalidDescriptor {
                id: self.id.clone(),
                reason: format!("memory_mb must be positive, got {}", self.memory_mb),
            });
        }
        Ok(())
    }
}

/// Point-in-time telemetry for one platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSnapshot {
    pub platform_id: String,
    pub t_ms: f64,
    pub cpu_util: f64,
    pub cpu_iowait: f64,
    pub context_switches_per_s: f64,
    pub gpu_util: f64,
    pub mem_used_mb: f64,
    pub queue_depth: u32,
}

/// Admission verdict; rejection carries the shortfall for logging.
#[derive(Debug, Clone, PartialEq)]
pub enum Admission {
    Admitted,
    Rejected { needed_mb: f64, free_mb: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct ActiveTask {
    memory_mb: f64,
    is_dnn: bool,
}

/// A platform plus its currently resident tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformState {
    pub descriptor: PlatformDescriptor,
    active: BTreeMap<String, ActiveTask>,
}

impl PlatformState {
    pub fn new(descriptor: PlatformDescriptor) -> Self {
        Self {
            descriptor,
            active: BTreeMap::new(),
        }
    }

    pub fn mem_used_mb(&self) -> f64 {
        // fold from +0.0: the std Sum impl starts at -0.0, which would leak
        // a negative zero into serialized snapshots of idle platforms.
        self.active.values().fold(0.0, |acc, t| acc + t.memory_mb)
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn active_dnn_count(&self) -> usize {
        self.active.values().filter(|t| t.is_dnn).count()
    }

    /// Strict memory admission: admitted iff used + needed <= capacity.
    pub fn admit(&self, needed_mb: f64) -> Admission {
        let used = self.mem_used_mb();
        if used + needed_mb <= self.descriptor.memory_mb {
            Admission::Admitted
        } else {
            Admission::Rejected {
                needed_mb,
                free_mb: self.descriptor.memory_mb - used,
            }
        }
    }

    pub fn insert_task(&mut self, task_id: &str, memory_mb: f64, is_dnn: bool) {
        self.active
            .insert(task_id.to_string(), ActiveTask { memory_mb, is_dnn });
    }

    pub fn remove_task(&mut self, task_id: &str) {
        self.active.remove(task_id);
    }
}

/// Saturating utilization for `n` concurrent tasks.
pub fn util_law(n: usize) -> f64 {
    1.0 - 0.5f64.powi(n as i32)
}

/// Deterministic CPU load proxy used by the latency oracle: saturation law
/// over resident tasks plus background load, clamped to [0, 1] and free of
/// jitter.
pub fn effective_cpu_load(state: &PlatformState, background_cpu: f64) -> f64 {
    (util_law(state.active_count()) + background_cpu).clamp(0.0, 1.0)
}

/// Sample telemetry for one platform. `background_cpu` is the scenario's
/// ambient host load at `t_ms`; `jitter_sigma` adds seeded measurement noise
/// (0 disables all draws). Errors if resident memory exceeds capacity, which
/// signals a scheduler admission bug rather than a recoverable condition.
pub fn sample_telemetry(
    state: &PlatformState,
    t_ms: f64,
    background_cpu: f64,
    jitter_sigma: f64,
    rng: &mut impl Rng,
) -> Result<PlatformSnapshot, PlatformError> {
    let cap = state.descriptor.memory_mb;
    let mem_used = state.mem_used_mb();
    if mem_used > cap {
        return Err(PlatformError::MemoryOvercommit {
            platform: state.descriptor.id.clone(),
            used_mb: mem_used,
            capacity_mb: cap,
        });
    }
    // Fixed draw order keeps streams reproducible: cpu, gpu, iowait, ctx.
    let mut jitter = || -> f64 {
        if jitter_sigma > 0.0 {
            Normal::new(0.0, jitter_sigma).expect("valid sigma").sample(rng)
        } else {
            0.0
        }
    };
    let n = state.active_count();
    let n_dnn = state.active_dnn_count();
    let cpu_util = (util_law(n) + background_cpu + jitter()).clamp(0.0, 1.0);
    let gpu_util = match state.descriptor.kind {
        PlatformKind::Gpu | PlatformKind::Dla => (util_law(n_dnn) + jitter()).clamp(0.0, 1.0),
        PlatformKind::Cpu => 0.0,
    };
    let cpu_iowait = (0.04 * n as f64 + 0.08 * background_cpu + jitter()).clamp(0.0, 1.0);
    let context_switches_per_s =
        (800.0 * n as f64 + 1200.0 * background_cpu + 50.0 * jitter()).max(0.0);
    Ok(PlatformSnapshot {
        platform_id: state.descriptor.id.clone(),
        t_ms,
        cpu_util,
        cpu_iowait,
        context_switches_per_s,
        gpu_util,
        mem_used_mb: mem_used,
        queue_depth: n as u32,
    })
}

/// Default rig: one desktop-class GPU and one SBC exposing a GPU and a DLA.
pub fn default_platforms() -> Vec<PlatformDescriptor> {
    vec![
        PlatformDescriptor {
            id: "ipc_gpu".into(),
            kind: PlatformKind::Gpu,
            fp32_tflops: 10.07,
            memory_mb: 8192.0,
            host: "ipc".into(),
        },
        PlatformDescriptor {
            id: "sbc_gpu".into(),
            kind: PlatformKind::Gpu,
            fp32_tflops: 5.3,
            memory_mb: 6144.0,
            host: "sbc".into(),
        },
        PlatformDescriptor {
            id: "sbc_dla".into(),
            kind: PlatformKind::Dla,
            fp32_tflops: 2.65,
            memory_mb: 4096.0,
            host: "sbc".into(),
        },
    ]
}
