//! Shared fixtures for the benchmark targets. The crate ships no runtime
//! code; see `benches/hot_paths.rs`.

use neuroflow_core::flowgraph::{build_graph, FlowGraph, NodeKind, ProgramNode};
use neuroflow_core::predictor::{train, TrainConfig, TrainedPredictor};
use neuroflow_core::simulator::{generate_traces, preset, Scenario, TraceRecord};
use neuroflow_core::workload::ModelDescriptor;

/// Dense layered DAG: `layers` ranks of `width` nodes, every node feeding the
/// whole next rank, so the final rank is `width` independent end nodes.
pub fn layered_dag(layers: usize, width: usize) -> FlowGraph {
    let id = |l: usize, w: usize| format!("n{l}_{w}");
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for l in 0..layers {
        for w in 0..width {
            nodes.push(ProgramNode {
                id: id(l, w),
                kind: NodeKind::NonDnn,
                model_ref: None,
                period_ms: (l == 0).then_some(100.0),
                cost_hint_ms: Some(1.0),
            });
            if l > 0 {
                for prev in 0..width {
                    edges.push((id(l - 1, prev), id(l, w)));
                }
            }
        }
    }
    build_graph(nodes, edges).expect("layered DAG is valid")
}

/// Short urban scenario for engine benches.
pub fn short_urban() -> Scenario {
    let mut scenario = preset("urban").expect("built-in preset");
    scenario.duration_ms = 2000.0;
    scenario
}

/// Small predictor trained on five minutes of urban traces, plus the model
/// catalog and records to predict against.
pub fn trained_fixture() -> (TrainedPredictor, Vec<ModelDescriptor>, Vec<TraceRecord>) {
    let mut scenario = preset("urban").expect("built-in preset");
    scenario.duration_ms = 300_000.0;
    let (records, manifest) = generate_traces(&scenario).expect("trace generation");
    let cfg = TrainConfig {
        hidden: 8,
        epochs: 3,
        seed: 1,
        ..TrainConfig::default()
    };
    let (predictor, _) =
        train(&records, &manifest.models, &manifest.platforms, &cfg).expect("training");
    (predictor, manifest.models, records)
}
