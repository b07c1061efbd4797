//! Scenario files, built-in presets, and the default processing pipeline.
//!
//! A scenario bundles a program graph, a model catalog, a platform set, and
//! the knobs of one simulated run. On disk it references the graph and
//! catalog by path (resolved relative to the scenario file); presets build
//! the same structure in memory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::flowgraph::{build_graph, FlowGraph, NodeKind, ProgramNode};
use crate::platform::{default_platforms, PlatformDescriptor, PlatformKind};
use crate::workload::{builtin_catalog, default_oracle, LatencyOracleParams, ModelDescriptor};

pub const PRESET_NAMES: &[&str] = &[
    "urban",
    "highway",
    "intersection",
    "overload",
    "trace-standard",
];

/// Ambient host CPU load over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundLoad {
    Constant { load: f64 },
    /// Piecewise-constant steps of (start_ms, load), sorted by start.
    Steps { steps: Vec<(f64, f64)> },
    /// Alternates low for the first half of each period, high for the second.
    SquareWave { period_ms: f64, low: f64, high: f64 },
}

impl BackgroundLoad {
    pub fn at(&self, t_ms: f64) -> f64 {
        match self {
            BackgroundLoad::Constant { load } => *load,
            BackgroundLoad::Steps { steps } => steps
                .iter()
                .take_while(|(start, _)| *start <= t_ms)
                .last()
                .map(|(_, load)| *load)
                .unwrap_or(0.0),
            BackgroundLoad::SquareWave {
                period_ms,
                low,
                high,
            } => {
                let phase = t_ms.rem_euclid(*period_ms) / period_ms;
                if phase < 0.5 {
                    *low
                } else {
                    *high
                }
            }
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let check = |v: f64, what: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimError::Config(format!("{what} must lie in [0, 1], got {v}")))
            }
        };
        match self {
            BackgroundLoad::Constant { load } => check(*load, "background load"),
            BackgroundLoad::Steps { steps } => {
                if !steps.windows(2).all(|w| w[0].0 <= w[1].0) {
                    return Err(SimError::Config("background steps must be sorted by start".into()));
                }
                steps.iter().try_for_each(|(_, l)| check(*l, "background step load"))
            }
            BackgroundLoad::SquareWave {
                period_ms,
                low,
                high,
            } => {
                if !(*period_ms > 0.0) {
                    return Err(SimError::Config(format!(
                        "square wave period must be positive, got {period_ms}"
                    )));
                }
                check(*low, "square wave low")?;
                check(*high, "square wave high")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchChoice {
    pub batch: u32,
    pub p: f64,
}

fn default_lag_ms() -> f64 {
    1000.0
}
fn default_trace_interval_ms() -> f64 {
    5000.0
}
fn default_dnn_cpu_fraction() -> f64 {
    0.2
}
fn default_telemetry_jitter() -> f64 {
    0.01
}
fn default_staleness_ms() -> f64 {
    1000.0
}
fn default_nice_other() -> i32 {
    5
}

/// On-disk scenario schema. `graph` and `catalog` are paths relative to the
/// scenario file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub graph: String,
    pub catalog: String,
    pub platforms: Vec<PlatformDescriptor>,
    pub duration_ms: f64,
    /// DNN node id -> batch size distribution; nodes left out run batch 1.
    #[serde(default)]
    pub batch_distribution: BTreeMap<String, Vec<BatchChoice>>,
    pub background_load: BackgroundLoad,
    pub oracle: LatencyOracleParams,
    pub seed: u64,
    /// End node whose subgraph keeps nice 0; all other subgraphs get
    /// `nice_other`. Also the node whose completions define the control-path
    /// response metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_node: Option<String>,
    /// Resident memory per model when dispatched, in MB.
    pub model_memory_mb: BTreeMap<String, f64>,
    /// Delay between telemetry feature capture and the latency label.
    #[serde(default = "default_lag_ms")]
    pub lag_ms: f64,
    #[serde(default = "default_trace_interval_ms")]
    pub trace_interval_ms: f64,
    /// Platform used by the static fifo policy; defaults to the first GPU.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_platform: Option<String>,
    /// Fraction of DNN latency charged to the owning subgraph as host CPU
    /// pre/post-processing time.
    #[serde(default = "default_dnn_cpu_fraction")]
    pub dnn_cpu_fraction: f64,
    #[serde(default = "default_telemetry_jitter")]
    pub telemetry_jitter: f64,
    /// Snapshots older than this are refreshed before DNN dispatch.
    #[serde(default = "default_staleness_ms")]
    pub snapshot_staleness_ms: f64,
    #[serde(default = "default_nice_other")]
    pub nice_other: i32,
}

/// Fully resolved scenario: graph and catalog loaded, everything validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub graph: FlowGraph,
    pub catalog: Vec<ModelDescriptor>,
    pub platforms: Vec<PlatformDescriptor>,
    pub duration_ms: f64,
    pub batch_distribution: BTreeMap<String, Vec<BatchChoice>>,
    pub background_load: BackgroundLoad,
    pub oracle: LatencyOracleParams,
    pub seed: u64,
    pub control_node: Option<String>,
    pub model_memory_mb: BTreeMap<String, f64>,
    pub lag_ms: f64,
    pub trace_interval_ms: f64,
    pub default_platform: Option<String>,
    pub dnn_cpu_fraction: f64,
    pub telemetry_jitter: f64,
    pub snapshot_staleness_ms: f64,
    pub nice_other: i32,
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let file: ScenarioFile = serde_json::from_str(&text)
            .map_err(|e| SimError::Parse(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::resolve(file, dir)
    }

    pub fn resolve(file: ScenarioFile, base_dir: &Path) -> Result<Self, SimError> {
        let graph_path = base_dir.join(&file.graph);
        let graph_text =
            std::fs::read_to_string(&graph_path).map_err(|e| SimError::io(&graph_path, e))?;
        let graph = FlowGraph::from_json(&graph_text)?;
        let catalog_path = base_dir.join(&file.catalog);
        let catalog_text =
            std::fs::read_to_string(&catalog_path).map_err(|e| SimError::io(&catalog_path, e))?;
        let catalog = crate::workload::catalog_from_json(&catalog_text)?;
        let scenario = Scenario {
            name: file.name,
            graph,
            catalog,
            platforms: file.platforms,
            duration_ms: file.duration_ms,
            batch_distribution: file.batch_distribution,
            background_load: file.background_load,
            oracle: file.oracle,
            seed: file.seed,
            control_node: file.control_node,
            model_memory_mb: file.model_memory_mb,
            lag_ms: file.lag_ms,
            trace_interval_ms: file.trace_interval_ms,
            default_platform: file.default_platform,
            dnn_cpu_fraction: file.dnn_cpu_fraction,
            telemetry_jitter: file.telemetry_jitter,
            snapshot_staleness_ms: file.snapshot_staleness_ms,
            nice_other: file.nice_other,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.platforms.is_empty() {
            return Err(SimError::Config("scenario needs at least one platform".into()));
        }
        for p in &self.platforms {
            p.validate()?;
        }
        let mut ids: Vec<&str> = self.platforms.iter().map(|p| p.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::Config("duplicate platform ids".into()));
        }
        if !(self.duration_ms > 0.0) {
            return Err(SimError::Config(format!(
                "duration_ms must be positive, got {}",
                self.duration_ms
            )));
        }
        for (knob, v) in [
            ("lag_ms", self.lag_ms),
            ("trace_interval_ms", self.trace_interval_ms),
            ("snapshot_staleness_ms", self.snapshot_staleness_ms),
        ] {
            if !(v > 0.0) {
                return Err(SimError::Config(format!("{knob} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.dnn_cpu_fraction) {
            return Err(SimError::Config(format!(
                "dnn_cpu_fraction must lie in [0, 1], got {}",
                self.dnn_cpu_fraction
            )));
        }
        if self.telemetry_jitter < 0.0 {
            return Err(SimError::Config("telemetry_jitter must be >= 0".into()));
        }
        if self.oracle.noise_sigma_pct < 0.0 {
            return Err(SimError::Config("noise_sigma_pct must be >= 0".into()));
        }
        self.background_load.validate()?;
        for (node, dist) in &self.batch_distribution {
            let n = self.graph.node(node).ok_or_else(|| {
                SimError::Config(format!("batch_distribution references unknown node {node:?}"))
            })?;
            if n.kind != NodeKind::Dnn {
                return Err(SimError::Config(format!(
                    "batch_distribution set for non-DNN node {node:?}"
                )));
            }
            if dist.is_empty() {
                return Err(SimError::Config(format!("empty batch distribution for {node:?}")));
            }
            if dist.iter().any(|c| c.batch == 0 || c.p < 0.0) {
                return Err(SimError::Config(format!(
                    "batch distribution for {node:?} needs batch >= 1 and p >= 0"
                )));
            }
            let total: f64 = dist.iter().map(|c| c.p).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(SimError::Config(format!(
                    "batch distribution for {node:?} sums to {total}, expected 1"
                )));
            }
        }
        for node in self.graph.nodes() {
            if let Some(model_ref) = &node.model_ref {
                let model = self
                    .catalog
                    .iter()
                    .find(|m| &m.id == model_ref)
                    .ok_or_else(|| {
                        SimError::Config(format!(
                            "node {:?} references model {model_ref:?} missing from catalog",
                            node.id
                        ))
                    })?;
                if !self.model_memory_mb.contains_key(model_ref) {
                    return Err(SimError::Config(format!(
                        "model_memory_mb is missing an entry for {model_ref:?}"
                    )));
                }
                for p in &self.platforms {
                    if self
                        .oracle
                        .base_ms
                        .get(model_ref)
                        .map_or(true, |row| !row.contains_key(&p.id))
                    {
                        return Err(SimError::Config(format!(
                            "oracle base_ms is missing ({model_ref:?}, {:?})",
                            p.id
                        )));
                    }
                }
                let _ = model;
            }
        }
        if let Some(control) = &self.control_node {
            if self.graph.node(control).is_none() {
                return Err(SimError::Config(format!("control_node {control:?} not in graph")));
            }
            if self.graph.out_degree(control) != 0 {
                return Err(SimError::Config(format!(
                    "control_node {control:?} must be an end node"
                )));
            }
        }
        if let Some(dp) = &self.default_platform {
            if !self.platforms.iter().any(|p| &p.id == dp) {
                return Err(SimError::Config(format!(
                    "default_platform {dp:?} not in platform set"
                )));
            }
        }
        Ok(())
    }

    /// Platform descriptors sorted by id: the canonical order used everywhere.
    pub fn sorted_platforms(&self) -> Vec<PlatformDescriptor> {
        let mut v = self.platforms.clone();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    pub fn model(&self, id: &str) -> Option<&ModelDescriptor> {
        self.catalog.iter().find(|m| m.id == id)
    }

    pub fn memory_for(&self, model_id: &str) -> f64 {
        self.model_memory_mb.get(model_id).copied().unwrap_or(0.0)
    }

    /// Distinct DNN model ids referenced by the graph, sorted.
    pub fn dnn_model_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .graph
            .nodes()
            .filter_map(|n| n.model_ref.clone())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Lexicographically first DNN node referencing `model_id`.
    pub fn node_for_model(&self, model_id: &str) -> Option<&ProgramNode> {
        self.graph
            .nodes()
            .find(|n| n.model_ref.as_deref() == Some(model_id))
    }

    pub fn batch_dist_for_node(&self, node_id: &str) -> Vec<BatchChoice> {
        self.batch_distribution
            .get(node_id)
            .cloned()
            .unwrap_or_else(|| vec![BatchChoice { batch: 1, p: 1.0 }])
    }

    pub fn sample_batch(&self, node_id: &str, rng: &mut impl Rng) -> u32 {
        let dist = self.batch_dist_for_node(node_id);
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        for choice in &dist {
            acc += choice.p;
            if draw < acc {
                return choice.batch;
            }
        }
        dist.last().map(|c| c.batch).unwrap_or(1)
    }

    /// The fifo policy's static platform: configured, else first GPU by id,
    /// else first platform by id.
    pub fn resolved_default_platform(&self) -> String {
        if let Some(dp) = &self.default_platform {
            return dp.clone();
        }
        let sorted = self.sorted_platforms();
        sorted
            .iter()
            .find(|p| p.kind == PlatformKind::Gpu)
            .or_else(|| sorted.first())
            .map(|p| p.id.clone())
            .expect("validated scenario has platforms")
    }

    /// Write scenario, graph, and catalog as a three-file bundle and return
    /// the scenario path.
    pub fn save_bundle(&self, dir: &Path) -> Result<PathBuf, SimError> {
        std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        let graph_path = dir.join("graph.json");
        std::fs::write(&graph_path, self.graph.to_json()).map_err(|e| SimError::io(&graph_path, e))?;
        let catalog_path = dir.join("catalog.json");
        std::fs::write(&catalog_path, crate::workload::catalog_to_json(&self.catalog))
            .map_err(|e| SimError::io(&catalog_path, e))?;
        let file = ScenarioFile {
            name: self.name.clone(),
            graph: "graph.json".into(),
            catalog: "catalog.json".into(),
            platforms: self.platforms.clone(),
            duration_ms: self.duration_ms,
            batch_distribution: self.batch_distribution.clone(),
            background_load: self.background_load.clone(),
            oracle: self.oracle.clone(),
            seed: self.seed,
            control_node: self.control_node.clone(),
            model_memory_mb: self.model_memory_mb.clone(),
            lag_ms: self.lag_ms,
            trace_interval_ms: self.trace_interval_ms,
            default_platform: self.default_platform.clone(),
            dnn_cpu_fraction: self.dnn_cpu_fraction,
            telemetry_jitter: self.telemetry_jitter,
            snapshot_staleness_ms: self.snapshot_staleness_ms,
            nice_other: self.nice_other,
        };
        let scenario_path = dir.join("scenario.json");
        let text = serde_json::to_string_pretty(&file).expect("scenario serialization");
        std::fs::write(&scenario_path, text).map_err(|e| SimError::io(&scenario_path, e))?;
        Ok(scenario_path)
    }
}

/// Apply one `key=value` override to a resolved scenario. Unknown keys are
/// configuration errors; values are parsed per key. Callers re-validate after
/// applying a batch of overrides.
pub fn apply_override(scenario: &mut Scenario, key: &str, value: &str) -> Result<(), SimError> {
    fn num(key: &str, value: &str) -> Result<f64, SimError> {
        value
            .parse::<f64>()
            .map_err(|_| SimError::Config(format!("override {key}: expected a number, got {value:?}")))
    }
    match key {
        "name" => scenario.name = value.to_string(),
        "duration_ms" => scenario.duration_ms = num(key, value)?,
        "seed" => {
            scenario.seed = value
                .parse::<u64>()
                .map_err(|_| SimError::Config(format!("override seed: expected u64, got {value:?}")))?
        }
        "lag_ms" => scenario.lag_ms = num(key, value)?,
        "trace_interval_ms" => scenario.trace_interval_ms = num(key, value)?,
        "dnn_cpu_fraction" => scenario.dnn_cpu_fraction = num(key, value)?,
        "telemetry_jitter" => scenario.telemetry_jitter = num(key, value)?,
        "snapshot_staleness_ms" => scenario.snapshot_staleness_ms = num(key, value)?,
        "nice_other" => {
            scenario.nice_other = value.parse::<i32>().map_err(|_| {
                SimError::Config(format!("override nice_other: expected i32, got {value:?}"))
            })?
        }
        "control_node" => {
            scenario.control_node = if value.is_empty() {
                None
            } else {
                Some(value.to_string())
            }
        }
        "default_platform" => {
            scenario.default_platform = if value.is_empty() {
                None
            } else {
                Some(value.to_string())
            }
        }
        "oracle.cpu_beta" => scenario.oracle.cpu_beta = num(key, value)?,
        "oracle.noise_sigma_pct" => scenario.oracle.noise_sigma_pct = num(key, value)?,
        "oracle.seed" => {
            scenario.oracle.seed = value.parse::<u64>().map_err(|_| {
                SimError::Config(format!("override oracle.seed: expected u64, got {value:?}"))
            })?
        }
        "background_load" => {
            scenario.background_load = serde_json::from_str(value).map_err(|e| {
                SimError::Config(format!("override background_load: invalid JSON ({e})"))
            })?
        }
        _ => {
            if let Some(model) = key.strip_prefix("model_memory_mb.") {
                let v = num(key, value)?;
                scenario.model_memory_mb.insert(model.to_string(), v);
            } else if let Some(node) = key.strip_prefix("batch_distribution.") {
                let dist: Vec<BatchChoice> = serde_json::from_str(value).map_err(|e| {
                    SimError::Config(format!("override {key}: invalid JSON ({e})"))
                })?;
                scenario.batch_distribution.insert(node.to_string(), dist);
            } else {
                return Err(SimError::Config(format!("unknown override key {key:?}")));
            }
        }
    }
    Ok(())
}

/// The default perception-to-control pipeline: three periodic sources, four
/// DNN stages, and three end nodes (control, HMI view, health monitor).
pub fn default_pipeline_graph(source_period_ms: f64) -> FlowGraph {
    let non = |id: &str, cost: f64| ProgramNode {
        id: id.into(),
        kind: NodeKind::NonDnn,
        model_ref: None,
        period_ms: None,
        cost_hint_ms: Some(cost),
    };
    let source = |id: &str, cost: f64| ProgramNode {
        id: id.into(),
        kind: NodeKind::NonDnn,
        model_ref: None,
        period_ms: Some(source_period_ms),
        cost_hint_ms: Some(cost),
    };
    let dnn = |id: &str, model: &str| ProgramNode {
        id: id.into(),
        kind: NodeKind::Dnn,
        model_ref: Some(model.into()),
        period_ms: None,
        cost_hint_ms: None,
    };
    let nodes = vec![
        source("cam_front", 2.0),
        source("lidar_top", 3.0),
        source("gnss", 0.5),
        non("img_preproc", 3.0),
        non("cloud_preproc", 4.0),
        dnn("detect_2d", "det2d"),
        dnn("detect_3d", "det3d"),
        dnn("traversable", "travseg"),
        non("fusion", 4.0),
        non("localization", 3.0),
        dnn("trajectory", "trajpred"),
        non("planner", 6.0),
        non("control", 2.0),
        non("hmi_view", 2.0),
        non("health_monitor", 1.0),
    ];
    let edges = [
        ("cam_front", "img_preproc"),
        ("lidar_top", "cloud_preproc"),
        ("img_preproc", "detect_2d"),
        ("img_preproc", "traversable"),
        ("cloud_preproc", "detect_3d"),
        ("cloud_preproc", "localization"),
        ("gnss", "localization"),
        ("gnss", "health_monitor"),
        ("detect_2d", "fusion"),
        ("detect_3d", "fusion"),
        ("fusion", "trajectory"),
        ("fusion", "hmi_view"),
        ("trajectory", "planner"),
        ("traversable", "planner"),
        ("localization", "planner"),
        ("planner", "control"),
    ];
    build_graph(
        nodes,
        edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    )
    .expect("default pipeline is valid")
}

fn default_model_memory() -> BTreeMap<String, f64> {
    [
        ("det3d".to_string(), 2763.0),
        ("det2d".to_string(), 2311.0),
        ("trajpred".to_string(), 2791.0),
        ("travseg".to_string(), 1707.0),
    ]
    .into()
}

fn uniform_batches(max: u32) -> Vec<BatchChoice> {
    let p = 1.0 / f64::from(max);
    (1..=max).map(|batch| BatchChoice { batch, p }).collect()
}

fn base_scenario(name: &str, graph: FlowGraph, duration_ms: f64) -> Scenario {
    let catalog = builtin_catalog();
    let oracle = default_oracle(&catalog);
    Scenario {
        name: name.into(),
        graph,
        catalog,
        platforms: default_platforms(),
        duration_ms,
        batch_distribution: BTreeMap::new(),
        background_load: BackgroundLoad::Constant { load: 0.2 },
        oracle,
        seed: 42,
        control_node: Some("control".into()),
        model_memory_mb: default_model_memory(),
        lag_ms: default_lag_ms(),
        trace_interval_ms: default_trace_interval_ms(),
        default_platform: None,
        dnn_cpu_fraction: default_dnn_cpu_fraction(),
        telemetry_jitter: default_telemetry_jitter(),
        snapshot_staleness_ms: default_staleness_ms(),
        nice_other: default_nice_other(),
    }
}

/// Built-in scenarios by name; see [`PRESET_NAMES`].
pub fn preset(name: &str) -> Option<Scenario> {
    let dist = |pairs: &[(u32, f64)]| -> Vec<BatchChoice> {
        pairs.iter().map(|&(batch, p)| BatchChoice { batch, p }).collect()
    };
    let scenario = match name {
        "urban" => {
            let mut s = base_scenario("urban", default_pipeline_graph(100.0), 20_000.0);
            s.background_load = BackgroundLoad::SquareWave {
                period_ms: 20_000.0,
                low: 0.3,
                high: 0.6,
            };
            s.batch_distribution = [
                ("detect_2d".to_string(), dist(&[(2, 0.2), (3, 0.3), (4, 0.3), (5, 0.2)])),
                ("detect_3d".to_string(), dist(&[(2, 0.3), (3, 0.4), (4, 0.3)])),
                ("trajectory".to_string(), dist(&[(1, 0.2), (2, 0.4), (3, 0.4)])),
            ]
            .into();
            s
        }
        "highway" => {
            let mut s = base_scenario("highway", default_pipeline_graph(100.0), 20_000.0);
            s.background_load = BackgroundLoad::Constant { load: 0.15 };
            s.batch_distribution = [
                ("detect_2d".to_string(), dist(&[(1, 0.6), (2, 0.3), (3, 0.1)])),
                ("detect_3d".to_string(), dist(&[(1, 0.7), (2, 0.3)])),
                ("trajectory".to_string(), dist(&[(1, 0.8), (2, 0.2)])),
            ]
            .into();
            s
        }
        "intersection" => {
            let mut s = base_scenario("intersection", default_pipeline_graph(100.0), 20_000.0);
            s.background_load = BackgroundLoad::SquareWave {
                period_ms: 5_000.0,
                low: 0.1,
                high: 0.8,
            };
            s.batch_distribution = [
                ("detect_2d".to_string(), dist(&[(1, 0.35), (2, 0.2), (3, 0.1), (6, 0.15), (8, 0.2)])),
                ("detect_3d".to_string(), dist(&[(1, 0.4), (2, 0.2), (4, 0.2), (6, 0.2)])),
                ("trajectory".to_string(), dist(&[(1, 0.4), (2, 0.2), (4, 0.4)])),
            ]
            .into();
            s
        }
        "overload" => {
            let mut s = base_scenario("overload", default_pipeline_graph(50.0), 30_000.0);
            s.background_load = BackgroundLoad::SquareWave {
                period_ms: 10_000.0,
                low: 0.45,
                high: 0.85,
            };
            s.batch_distribution = [
                ("detect_2d".to_string(), dist(&[(3, 0.3), (4, 0.3), (6, 0.2), (8, 0.2)])),
                ("detect_3d".to_string(), dist(&[(2, 0.3), (4, 0.4), (6, 0.3)])),
                ("trajectory".to_string(), dist(&[(2, 0.4), (3, 0.4), (4, 0.2)])),
                ("traversable".to_string(), dist(&[(1, 0.5), (2, 0.5)])),
            ]
            .into();
            s
        }
        "trace-standard" => {
            let mut s = base_scenario(
                "trace-standard",
                default_pipeline_graph(100.0),
                24.0 * 3600.0 * 1000.0,
            );
            s.background_load = BackgroundLoad::SquareWave {
                period_ms: 60_000.0,
                low: 0.1,
                high: 0.5,
            };
            s.batch_distribution = [
                ("detect_2d".to_string(), uniform_batches(8)),
                ("detect_3d".to_string(), uniform_batches(8)),
                ("trajectory".to_string(), uniform_batches(8)),
                ("traversable".to_string(), uniform_batches(8)),
            ]
            .into();
            s
        }
        _ => return None,
    };
    scenario.validate().expect("presets are valid");
    Some(scenario)
}
