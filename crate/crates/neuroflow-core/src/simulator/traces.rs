//! Synthetic trace generation: timestamped model executions with full
//! telemetry context, lagged latency labels, and a manifest sidecar that makes
//! a trace file self-contained for training and evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::SimError;
use crate::platform::{sample_telemetry, Admission, PlatformDescriptor, PlatformSnapshot, PlatformState};
use crate::rngutil::sub_rng;
use crate::workload::{latency_ground_truth, ModelDescriptor};

/// One observed model execution. `snapshots` holds telemetry for every
/// platform (sorted by id) captured at `t_ms`; the latency label becomes
/// available at `label_t_ms = t_ms + lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub t_ms: f64,
    pub model_id: String,
    pub batch: u32,
    pub snapshots: Vec<PlatformSnapshot>,
    /// Platform the execution ran on.
    pub platform_id: String,
    pub measured_latency_ms: f64,
    pub label_t_ms: f64,
    /// Noise-free fastest feasible platform, the classification ground truth.
    pub best_platform_id: String,
}

/// Sidecar describing how a trace file was produced and everything needed to
/// consume it: platform set, model catalog, and per-model memory footprints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceManifest {
    pub schema_version: u32,
    pub scenario: String,
    pub records: usize,
    pub seed: u64,
    /// Model combinations cycled through, one per step.
    pub combinations: Vec<Vec<String>>,
    pub lag_ms: f64,
    pub interval_ms: f64,
    pub duration_ms: f64,
    pub platforms: Vec<PlatformDescriptor>,
    pub models: Vec<ModelDescriptor>,
    pub model_memory_mb: BTreeMap<String, f64>,
}

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// All non-empty subsets of the scenario's DNN models, in bitmask order.
fn model_combinations(model_ids: &[String]) -> Vec<Vec<String>> {
    let k = model_ids.len();
    let mut combos = Vec::with_capacity((1usize << k) - 1);
    for mask in 1u32..(1u32 << k) {
        let combo: Vec<String> = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| model_ids[i].clone())
            .collect();
        combos.push(combo);
    }
    combos
}

/// Generate the scenario's trace: each step places one model combination on
/// memory-feasible platforms, snapshots every platform, and records measured
/// latency plus the noise-free best platform. Fully determined by the
/// scenario seed.
pub fn generate_traces(scenario: &Scenario) -> Result<(Vec<TraceRecord>, TraceManifest), SimError> {
    scenario.validate()?;
    let model_ids = scenario.dnn_model_ids();
    if model_ids.is_empty() {
        return Err(SimError::Config(
            "trace generation needs at least one model-backed node".into(),
        ));
    }
    if model_ids.len() > 16 {
        return Err(SimError::Config(format!(
            "combination cycling supports at most 16 models, got {}",
            model_ids.len()
        )));
    }
    let combos = model_combinations(&model_ids);
    let platforms = scenario.sorted_platforms();
    let noiseless = {
        let mut p = scenario.oracle.clone();
        p.noise_sigma_pct = 0.0;
        p
    };
    let seed = scenario.seed;
    let mut records = Vec::new();
    let mut step: u64 = 0;
    loop {
        let t_ms = step as f64 * scenario.trace_interval_ms;
        if t_ms >= scenario.duration_ms {
            break;
        }
        let combo = &combos[(step as usize) % combos.len()];
        let mut states: BTreeMap<&str, PlatformState> = platforms
            .iter()
            .map(|p| (p.id.as_str(), PlatformState::new(p.clone())))
            .collect();

        // Place each model of the combination on a random feasible platform.
        let mut placements: Vec<(&str, u32, String)> = Vec::new();
        for (j, model_id) in combo.iter().enumerate() {
            let node = scenario
                .node_for_model(model_id)
                .expect("validated scenario maps models to nodes");
            let batch =
                scenario.sample_batch(&node.id, &mut sub_rng(seed, "trace-batch", &[step, j as u64]));
            let needed = scenario.memory_for(model_id);
            let feasible: Vec<&str> = platforms
                .iter()
                .filter(|p| matches!(states[p.id.as_str()].admit(needed), Admission::Admitted))
                .map(|p| p.id.as_str())
                .collect();
            if feasible.is_empty() {
                continue;
            }
            let mut rng = sub_rng(seed, "trace-place", &[step, j as u64]);
            let chosen = feasible[rng.random_range(0..feasible.len())].to_string();
            states
                .get_mut(chosen.as_str())
                .expect("chosen platform exists")
                .insert_task(model_id, needed, true);
            placements.push((model_id.as_str(), batch, chosen));
        }

        let background = scenario.background_load.at(t_ms);
        let mut snapshots = Vec::with_capacity(platforms.len());
        for (pi, p) in platforms.iter().enumerate() {
            let snap = sample_telemetry(
                &states[p.id.as_str()],
                t_ms,
                background,
                scenario.telemetry_jitter,
                &mut sub_rng(seed, "trace-telemetry", &[step, pi as u64]),
            )?;
            snapshots.push(snap);
        }
        let snap_for = |id: &str| -> &PlatformSnapshot {
            snapshots
                .iter()
                .find(|s| s.platform_id == id)
                .expect("snapshot per platform")
        };

        for (j, (model_id, batch, platform_id)) in placements.iter().enumerate() {
            let model = scenario.model(model_id).expect("validated catalog");
            let needed = scenario.memory_for(model_id);
            let measured = latency_ground_truth(
                model,
                platform_id,
                *batch,
                snap_for(platform_id).cpu_util,
                &scenario.oracle,
                &mut sub_rng(seed, "trace-noise", &[step, j as u64]),
            )?;

            // Best platform: noise-free latency over platforms that could
            // hold the model if it moved there, everything else unchanged.
            let mut best: Option<(&str, f64)> = None;
            for p in &platforms {
                let state = &states[p.id.as_str()];
                let mut used = state.mem_used_mb();
                if p.id == *platform_id {
                    used -= needed;
                }
                if used + needed > p.memory_mb {
                    continue;
                }
                let lat = latency_ground_truth(
                    model,
                    &p.id,
                    *batch,
                    snap_for(&p.id).cpu_util,
                    &noiseless,
                    &mut sub_rng(seed, "unused", &[]),
                )?;
                if best.map_or(true, |(_, b)| lat < b) {
                    best = Some((p.id.as_str(), lat));
                }
            }
            let (best_platform_id, _) = best.expect("executed platform is always feasible");

            records.push(TraceRecord {
                t_ms,
                model_id: model_id.to_string(),
                batch: *batch,
                snapshots: snapshots.clone(),
                platform_id: platform_id.clone(),
                measured_latency_ms: measured,
                label_t_ms: t_ms + scenario.lag_ms,
                best_platform_id: best_platform_id.to_string(),
            });
        }
        step += 1;
    }

    let manifest = TraceManifest {
        schema_version: TRACE_SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        records: records.len(),
        seed,
        combinations: combos,
        lag_ms: scenario.lag_ms,
        interval_ms: scenario.trace_interval_ms,
        duration_ms: scenario.duration_ms,
        platforms,
        models: scenario.catalog.clone(),
        model_memory_mb: scenario.model_memory_mb.clone(),
    };
    Ok((records, manifest))
}

/// Manifest sidecar path for a trace file: `traces.jsonl` maps to
/// `traces.manifest.json`.
pub fn manifest_path_for(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("manifest.json")
}

pub fn write_trace_bundle(
    trace_path: &Path,
    records: &[TraceRecord],
    manifest: &TraceManifest,
) -> Result<(), SimError> {
    if let Some(dir) = trace_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        }
    }
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace serialization"));
        out.push('\n');
    }
    std::fs::write(trace_path, out).map_err(|e| SimError::io(trace_path, e))?;
    let mpath = manifest_path_for(trace_path);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serialization");
    std::fs::write(&mpath, text).map_err(|e| SimError::io(&mpath, e))?;
    Ok(())
}

pub fn read_trace_jsonl(path: &Path) -> Result<Vec<TraceRecord>, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(line).map_err(|e| {
            SimError::Parse(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_manifest(path: &Path) -> Result<TraceManifest, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let manifest: TraceManifest = serde_json::from_str(&text)
        .map_err(|e| SimError::Parse(format!("{}: {e}", path.display())))?;
    if manifest.schema_version != TRACE_SCHEMA_VERSION {
        return Err(SimError::Parse(format!(
            "{}: unsupported trace schema version {}",
            path.display(),
            manifest.schema_version
        )));
    }
    Ok(manifest)
}
