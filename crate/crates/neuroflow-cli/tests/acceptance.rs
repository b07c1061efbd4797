//! Acceptance suite: ten executable criteria covering graph analysis, the
//! runtime estimator, the fair scheduler, and the CLI. Each test pins its
//! tolerance next to the assertion and prints one summary line with the
//! measured numbers (visible with `--nocapture` and on failure).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::LazyLock;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use neuroflow_core::flowgraph::{
    assign_priorities, build_graph, extract_subgraphs, topological_order, GraphError, NodeKind,
    ProgramNode,
};
use neuroflow_core::platform::default_platforms;
use neuroflow_core::predictor::{
    evaluate, fit_baseline, format_table, loss_and_grad, loss_only, train, FeatureVector,
    MetricsReport, PredictorParams, Sample, StaticTablePredictor, TrainConfig, TrainedPredictor,
    PARAM_BUDGET_BYTES, TOKEN_DIM,
};
use neuroflow_core::scheduler::Policy;
use neuroflow_core::simulator::{
    audit_event_log, compare_policies, generate_traces, preset, run, BackgroundLoad, Scenario,
    TraceManifest, TraceRecord,
};
use neuroflow_core::workload::{builtin_catalog, default_oracle, ModelDescriptor};
use neuroflow_core::RuntimePredictor;

// ---------------------------------------------------------------------------
// criterion 1: graph analysis against brute-force oracles

/// Reference implementations kept deliberately naive and separate from the
/// library: reverse reachability for membership, a permutation validity check
/// for topological orders, exhaustive path search for priorities, and
/// three-color DFS for cycles.
mod graph_oracle {
    use std::collections::BTreeSet;

    pub fn members(ids: &[String], edges: &[(String, String)], end: &str) -> BTreeSet<String> {
        let mut reach: BTreeSet<String> = [end.to_string()].into();
        loop {
            let before = reach.len();
            for (from, to) in edges {
                if reach.contains(to) && ids.contains(from) {
                    reach.insert(from.clone());
                }
            }
            if reach.len() == before {
                return reach;
            }
        }
    }

    pub fn is_valid_topo(
        topo: &[String],
        members: &BTreeSet<String>,
        edges: &[(String, String)],
    ) -> bool {
        if topo.len() != members.len() {
            return false;
        }
        let pos: std::collections::BTreeMap<&str, usize> = topo
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if pos.len() != members.len() || !members.iter().all(|m| pos.contains_key(m.as_str())) {
            return false;
        }
        edges
            .iter()
            .filter(|(f, t)| members.contains(f) && members.contains(t))
            .all(|(f, t)| pos[f.as_str()] < pos[t.as_str()])
    }

    /// Longest directed path from `node` to `end`, counted in edges, by
    /// exhaustive descent (graphs here have at most 8 nodes).
    pub fn longest_to_end(
        node: &str,
        end: &str,
        members: &BTreeSet<String>,
        edges: &[(String, String)],
    ) -> u32 {
        if node == end {
            return 0;
        }
        edges
            .iter()
            .filter(|(f, t)| f == node && members.contains(t))
            .map(|(_, t)| 1 + longest_to_end(t, end, members, edges))
            .max()
            .expect("every member reaches the end node")
    }

    pub fn has_cycle(ids: &[String], edges: &[(String, String)]) -> bool {
        fn visit(
            node: &str,
            edges: &[(String, String)],
            open: &mut BTreeSet<String>,
            done: &mut BTreeSet<String>,
        ) -> bool {
            if done.contains(node) {
                return false;
            }
            if !open.insert(node.to_string()) {
                return true;
            }
            for (f, t) in edges {
                if f == node && visit(t, edges, open, done) {
                    return true;
                }
            }
            open.remove(node);
            done.insert(node.to_string());
            false
        }
        let mut open = BTreeSet::new();
        let mut done = BTreeSet::new();
        ids.iter().any(|n| visit(n, edges, &mut open, &mut done))
    }
}

#[test]
fn criterion_01_graph_analysis_matches_brute_force_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let (mut dags, mut cyclic) = (0usize, 0usize);
    for case in 0..500 {
        let n = rng.random_range(1..=8usize);
        let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        // Every other case restricts edges to i < j so deep DAGs stay common.
        let dag_only = case % 2 == 0;
        let p = rng.random_range(0.08..0.45);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || (dag_only && i > j) {
                    continue;
                }
                if rng.random_bool(p) {
                    edges.push((ids[i].clone(), ids[j].clone()));
                }
            }
        }
        let nodes: Vec<ProgramNode> = ids
            .iter()
            .map(|id| ProgramNode {
                id: id.clone(),
                kind: NodeKind::NonDnn,
                model_ref: None,
                period_ms: None,
                cost_hint_ms: Some(1.0),
            })
            .collect();
        let graph = build_graph(nodes, edges.clone()).expect("generator avoids invalid graphs");

        if graph_oracle::has_cycle(&ids, &edges) {
            cyclic += 1;
            match extract_subgraphs(&graph) {
                Err(GraphError::CycleDetected(_)) => {}
                other => panic!("case {case}: cycle not detected: {other:?}"),
            }
            continue;
        }
        dags += 1;
        let subgraphs = extract_subgraphs(&graph).unwrap_or_else(|e| {
            panic!("case {case}: unexpected rejection of acyclic graph: {e}")
        });
        let ends: Vec<&String> = ids
            .iter()
            .filter(|id| !edges.iter().any(|(f, _)| &f == id))
            .collect();
        assert_eq!(subgraphs.len(), ends.len(), "case {case}: subgraph count");
        for (sg, end) in subgraphs.iter().zip(&ends) {
            assert_eq!(&&sg.end_node, end, "case {case}: end node order");
            let want = graph_oracle::members(&ids, &edges, end);
            assert_eq!(sg.members, want, "case {case}: members of {end}");
            assert!(
                graph_oracle::is_valid_topo(&sg.topo_order, &sg.members, &edges),
                "case {case}: invalid topo {:?}",
                sg.topo_order
            );
            for m in &sg.members {
                let want = graph_oracle::longest_to_end(m, end, &sg.members, &edges);
                assert_eq!(sg.priority[m], want, "case {case}: priority of {m}");
            }
            // The standalone entry points agree with the bundled extraction.
            let topo = topological_order(&graph, &sg.members).unwrap();
            assert_eq!(topo, sg.topo_order, "case {case}: topo determinism");
            let prio = assign_priorities(&graph, &sg.members, end, &topo);
            assert_eq!(prio, sg.priority, "case {case}: priority determinism");
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 10.0, "oracle sweep took {secs:.1}s, budget 10s");
    println!(
        "criterion 1 (graph oracle equivalence): PASS — 500 graphs ({dags} acyclic, {cyclic} cyclic) in {secs:.2}s"
    );
}

// ---------------------------------------------------------------------------
// criterion 2: metric formulas on the hand-derived case

#[test]
fn criterion_02_metric_formulas_reproduce_the_hand_case() {
    // Predictions [11, 9, 30] against measurements [10, 10, 20] on one
    // platform, driven through the public evaluation entry point.
    let model = |id: &str| ModelDescriptor {
        id: id.into(),
        weight_file_mb: 1.0,
        trainable_params: 1,
        non_trainable_params: 0,
        conv_layers: 1,
        linear_layers: 0,
        conv_flops: 1.0,
        linear_flops: 0.0,
        total_flops: 1.0,
        batch_alpha: 0.0,
        tracking_style: false,
    };
    let models = vec![model("m1"), model("m2"), model("m3")];
    let mut base: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (m, predicted) in [("m1", 11.0), ("m2", 9.0), ("m3", 30.0)] {
        base.insert(m.into(), [("p".to_string(), predicted)].into());
    }
    let predictor = StaticTablePredictor::new(base, vec!["p".into()]);
    let record = |model_id: &str, measured: f64| TraceRecord {
        t_ms: 0.0,
        model_id: model_id.into(),
        batch: 1,
        snapshots: Vec::new(),
        platform_id: "p".into(),
        measured_latency_ms: measured,
        label_t_ms: 1000.0,
        best_platform_id: "p".into(),
    };
    let records = vec![record("m1", 10.0), record("m2", 10.0), record("m3", 20.0)];
    let report = evaluate(&predictor, &records, &models).unwrap();
    let row = report.platform("p").unwrap();
    assert!((row.rmse_ms - 5.831).abs() <= 1e-3, "RMSE {}", row.rmse_ms);
    assert!((row.rmspe_pct - 30.0).abs() <= 1e-3, "RMSPE {}", row.rmspe_pct);
    assert!((row.acc10_pct - 66.7).abs() <= 0.1, "acc10 {}", row.acc10_pct);
    println!(
        "criterion 2 (metric formulas): PASS — RMSE {:.3} ms, RMSPE {:.1}%, acc10 {:.1}%",
        row.rmse_ms, row.rmspe_pct, row.acc10_pct
    );
}

// ---------------------------------------------------------------------------
// criteria 3 and 5 share one trained predictor on the standard dataset

struct StandardFixture {
    manifest: TraceManifest,
    eval_records: Vec<TraceRecord>,
    predictor: TrainedPredictor,
    report: MetricsReport,
    train_secs: f64,
}

/// 24 h of virtual traces (seed 42), an 80/20 shuffled split, and the
/// largest network that fits the parameter budget.
static STANDARD: LazyLock<StandardFixture> = LazyLock::new(|| {
    let scenario = preset("trace-standard").expect("built-in preset");
    let (records, manifest) = generate_traces(&scenario).expect("trace generation");
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(0xAC3));
    let n_eval = records.len() / 5;
    let (eval_idx, train_idx) = idx.split_at(n_eval);
    let train_records: Vec<TraceRecord> = train_idx.iter().map(|&i| records[i].clone()).collect();
    let eval_records: Vec<TraceRecord> = eval_idx.iter().map(|&i| records[i].clone()).collect();
    let cfg = TrainConfig {
        hidden: 23,
        epochs: 300,
        seed: 42,
        ..TrainConfig::default()
    };
    let started = Instant::now();
    let (predictor, _log) = train(&train_records, &manifest.models, &manifest.platforms, &cfg)
        .expect("training succeeds");
    let train_secs = started.elapsed().as_secs_f64();
    let report = evaluate(&predictor, &eval_records, &manifest.models).expect("evaluation");
    StandardFixture {
        manifest,
        eval_records,
        predictor,
        report,
        train_secs,
    }
});

#[test]
fn criterion_03_predictor_learns_the_standard_dataset() {
    let fx = &*STANDARD;
    assert!(
        fx.train_secs <= 300.0,
        "training took {:.0}s, budget 300s",
        fx.train_secs
    );
    let passing = fx
        .report
        .per_platform
        .iter()
        .filter(|m| m.acc10_pct >= 90.0 && m.rmspe_pct <= 10.0)
        .count();
    assert!(
        passing >= 2,
        "only {passing}/3 platforms reach acc10 >= 90 and RMSPE <= 10 on held-out data:\n{}",
        format_table(&fx.report)
    );
    println!(
        "criterion 3 (predictor learnability): PASS — {passing}/3 platforms pass on {} held-out records (overall acc10 {:.1}%, RMSPE {:.1}%), trained in {:.0}s",
        fx.report.n_records, fx.report.overall.acc10_pct, fx.report.overall.rmspe_pct, fx.train_secs
    );
}

// ---------------------------------------------------------------------------
// criterion 4: platform-level beats the model-only baseline

#[test]
fn criterion_04_platform_level_beats_model_only_baseline() {
    let mut deltas = Vec::new();
    for seed in 1u64..=5 {
        let mut scenario = preset("trace-standard").expect("built-in preset");
        scenario.seed = seed;
        scenario.duration_ms = 6.0 * 3600.0 * 1000.0;
        let (records, manifest) = generate_traces(&scenario).expect("trace generation");
        let mut idx: Vec<usize> = (0..records.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_eval = records.len() * 3 / 10;
        let (eval_idx, train_idx) = idx.split_at(n_eval);
        let train_records: Vec<TraceRecord> =
            train_idx.iter().map(|&i| records[i].clone()).collect();
        let eval_records: Vec<TraceRecord> =
            eval_idx.iter().map(|&i| records[i].clone()).collect();
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let (predictor, _log) = train(&train_records, &manifest.models, &manifest.platforms, &cfg)
            .expect("training succeeds");
        let baseline = fit_baseline(&train_records, &manifest.models, &manifest.platforms)
            .expect("baseline fit");
        let platform_level = evaluate(&predictor, &eval_records, &manifest.models).unwrap();
        let model_only = evaluate(&baseline, &eval_records, &manifest.models).unwrap();
        deltas.push(platform_level.overall.acc10_pct - model_only.overall.acc10_pct);
    }
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    assert!(
        mean >= 10.0,
        "mean acc10 advantage {mean:.1} points < 10, per seed {deltas:?}"
    );
    let shown: Vec<String> = deltas.iter().map(|d| format!("{d:+.1}")).collect();
    println!(
        "criterion 4 (platform-level vs model-only): PASS — mean acc10 advantage {mean:+.1} points over seeds 1..=5 ({})",
        shown.join(", ")
    );
}

// ---------------------------------------------------------------------------
// criterion 5: parameter budget and forward latency

#[test]
fn criterion_05_parameter_budget_and_forward_latency() {
    let fx = &*STANDARD;
    let bytes = fx.predictor.serialized_size();
    assert!(
        bytes <= PARAM_BUDGET_BYTES,
        "serialized parameters are {bytes} bytes, budget {PARAM_BUDGET_BYTES}"
    );
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-budget");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("params.bin");
    fx.predictor.save(&path).unwrap();
    let on_disk = std::fs::metadata(&path).unwrap().len() as usize;
    assert_eq!(on_disk, bytes);

    let record = &fx.eval_records[0];
    let model = fx
        .manifest
        .models
        .iter()
        .find(|m| m.id == record.model_id)
        .expect("record model in manifest");
    for _ in 0..10 {
        fx.predictor
            .predict(model, &record.snapshots, record.batch)
            .unwrap();
    }
    let reps = 2000u32;
    let started = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(
            fx.predictor
                .predict(model, &record.snapshots, record.batch)
                .unwrap(),
        );
    }
    let per_pass_ms = started.elapsed().as_secs_f64() * 1000.0 / f64::from(reps);
    assert!(
        per_pass_ms <= 5.0,
        "forward pass averages {per_pass_ms:.3} ms, budget 5 ms"
    );
    println!(
        "criterion 5 (parameter budget): PASS — {bytes} bytes on disk (<= {PARAM_BUDGET_BYTES}), forward pass {per_pass_ms:.4} ms"
    );
}

// ---------------------------------------------------------------------------
// criterion 6: analytic gradients against central finite differences

#[test]
fn criterion_06_analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut worst: f64 = 0.0;
    for instance in 0..20 {
        let hidden = rng.random_range(4..=10usize);
        let n_platforms = rng.random_range(2..=4usize);
        let ids: Vec<String> = (0..n_platforms).map(|i| format!("p{i}")).collect();
        // Parameter count for this architecture; probed exhaustively below.
        let len = 4 * hidden * hidden + hidden * (3 * TOKEN_DIM + 7) + n_platforms * TOKEN_DIM + 2;
        let theta: Vec<f64> = (0..len).map(|_| rng.random_range(-0.6..0.6)).collect();
        let params = PredictorParams::new(hidden, ids, 50.0, theta).unwrap();
        let samples: Vec<Sample> = (0..rng.random_range(3..=6usize))
            .map(|_| Sample {
                fv: FeatureVector {
                    model_token: std::array::from_fn(|_| rng.random_range(0.0..1.0)),
                    platform_tokens: (0..n_platforms)
                        .map(|_| std::array::from_fn(|_| rng.random_range(0.0..1.0)))
                        .collect(),
                },
                executed: rng.random_range(0..n_platforms),
                target_ms: rng.random_range(5.0..150.0),
                best: rng.random_range(0..n_platforms),
            })
            .collect();
        let all: Vec<usize> = (0..samples.len()).collect();
        let (_, grad) = loss_and_grad(&params, &samples, &all, 1.0).unwrap();
        let theta = params.theta().to_vec();

        let mut probes: Vec<usize> = (0..theta.len()).step_by(7).collect();
        probes.push(theta.len() - 1);
        for idx in probes {
            let step = 1e-5 * theta[idx].abs().max(1.0);
            let mut plus = params.clone();
            let mut t = theta.clone();
            t[idx] += step;
            plus.set_theta(t).unwrap();
            let mut minus = params.clone();
            let mut t = theta.clone();
            t[idx] -= step;
            minus.set_theta(t).unwrap();
            // Parameters quantize to f32 on assignment; dividing by the
            // realized step keeps the difference quotient exact.
            let realized = plus.theta()[idx] - minus.theta()[idx];
            let fd = (loss_only(&plus, &samples, &all, 1.0).unwrap()
                - loss_only(&minus, &samples, &all, 1.0).unwrap())
                / realized;
            let rel = (grad[idx] - fd).abs() / grad[idx].abs().max(fd.abs()).max(1e-6);
            assert!(
                rel <= 1e-4,
                "instance {instance}, parameter {idx}: analytic {} vs central difference {fd}, relative error {rel:.2e}",
                grad[idx]
            );
            worst = worst.max(rel);
        }
    }
    println!(
        "criterion 6 (gradient check): PASS — worst relative error {worst:.2e} over 20 instances"
    );
}

// ---------------------------------------------------------------------------
// criterion 7: CFS fairness over 10 simulated seconds

fn cpu_source(id: &str) -> ProgramNode {
    ProgramNode {
        id: id.into(),
        kind: NodeKind::NonDnn,
        model_ref: None,
        period_ms: Some(1.0),
        cost_hint_ms: Some(5.0),
    }
}

/// Two independent single-node subgraphs demanding five times the CPU.
fn saturated_scenario(control: Option<&str>) -> Scenario {
    let graph = build_graph(vec![cpu_source("a"), cpu_source("b")], vec![]).unwrap();
    let catalog = builtin_catalog();
    let oracle = default_oracle(&catalog);
    Scenario {
        name: "fairness".into(),
        graph,
        catalog,
        platforms: default_platforms(),
        duration_ms: 10_000.0,
        batch_distribution: BTreeMap::new(),
        background_load: BackgroundLoad::Constant { load: 0.2 },
        oracle,
        seed: 7,
        control_node: control.map(String::from),
        model_memory_mb: [
            ("det3d".to_string(), 2763.0),
            ("det2d".to_string(), 2311.0),
            ("trajpred".to_string(), 2791.0),
            ("travseg".to_string(), 1707.0),
        ]
        .into(),
        lag_ms: 1000.0,
        trace_interval_ms: 5000.0,
        default_platform: None,
        dnn_cpu_fraction: 0.2,
        telemetry_jitter: 0.01,
        snapshot_staleness_ms: 1000.0,
        nice_other: 5,
    }
}

#[test]
fn criterion_07_cfs_fairness_shares() {
    let out = run(&saturated_scenario(None), Policy::Neuroflow, None).unwrap();
    let (a, b) = (out.report.cpu_share["a"], out.report.cpu_share["b"]);
    let gap = (a - b).abs();
    assert!(gap <= 0.05, "equal-nice shares {a:.3} vs {b:.3}, gap {gap:.3} > 0.05");

    let out = run(&saturated_scenario(Some("a")), Policy::Neuroflow, None).unwrap();
    let ratio = out.report.cpu_share["a"] / out.report.cpu_share["b"];
    // weight(0) / weight(5) = 1024 / 336
    let expected = 1024.0 / 336.0;
    let err = (ratio - expected).abs() / expected;
    assert!(
        err <= 0.10,
        "nice-gap-5 share ratio {ratio:.3}, expected within 10% of {expected:.3}"
    );
    println!(
        "criterion 7 (CFS fairness): PASS — equal-nice gap {gap:.3} (<= 0.05), nice-gap-5 ratio {ratio:.2} vs {expected:.2} ({:.1}% off)",
        err * 100.0
    );
}

// ---------------------------------------------------------------------------
// criterion 8: priority ordering across a 1e5-event log

#[test]
fn criterion_08_priority_dispatch_has_zero_violations() {
    let mut scenario = preset("overload").expect("built-in preset");
    scenario.duration_ms = 75_000.0;
    let out = run(&scenario, Policy::Neuroflow, None).unwrap();
    assert!(
        out.events.len() >= 100_000,
        "log has only {} events",
        out.events.len()
    );
    let audit = audit_event_log(&out.events, &out.tasks);
    assert_eq!(
        audit.priority_violations, 0,
        "priority violations in {} events",
        out.events.len()
    );
    assert!(audit.conservation_ok, "task conservation broken");
    println!(
        "criterion 8 (priority ordering): PASS — {} events, 0 priority violations",
        out.events.len()
    );
}

// ---------------------------------------------------------------------------
// criterion 9: policy benefit on the overload preset

#[test]
fn criterion_09_neuroflow_beats_fifo_p99_on_overload() {
    let archive = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-policy-benefit");
    let mut wins = 0usize;
    let mut pairs = Vec::new();
    for seed in 42u64..=46 {
        let mut scenario = preset("overload").expect("built-in preset");
        scenario.seed = seed;
        let (comparison, outputs) =
            compare_policies(&scenario, &[Policy::Neuroflow, Policy::Fifo], None).unwrap();
        let dir = archive.join(format!("seed-{seed}"));
        std::fs::create_dir_all(&dir).unwrap();
        for output in &outputs {
            let mut events = String::new();
            for event in &output.events {
                events.push_str(&serde_json::to_string(event).unwrap());
                events.push('\n');
            }
            std::fs::write(dir.join(format!("events-{}.jsonl", output.report.policy)), events)
                .unwrap();
            std::fs::write(
                dir.join(format!("report-{}.json", output.report.policy)),
                serde_json::to_string_pretty(&output.report).unwrap(),
            )
            .unwrap();
        }
        std::fs::write(
            dir.join("comparison.json"),
            serde_json::to_string_pretty(&comparison).unwrap(),
        )
        .unwrap();
        let neuroflow_p99 = comparison.rows[0].control_p99_ms;
        let fifo_p99 = comparison.rows[1].control_p99_ms;
        if neuroflow_p99 <= fifo_p99 {
            wins += 1;
        }
        pairs.push(format!("seed {seed}: {neuroflow_p99:.0} vs {fifo_p99:.0} ms"));
    }
    assert!(wins >= 4, "neuroflow won {wins}/5 seeds ({})", pairs.join("; "));
    println!(
        "criterion 9 (policy benefit): PASS — neuroflow p99 <= fifo p99 in {wins}/5 seeds ({}); paired logs in {}",
        pairs.join("; "),
        archive.display()
    );
}

// ---------------------------------------------------------------------------
// criterion 10: CLI determinism

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neuroflow"))
        .args(args)
        .env_remove("NEUROFLOW_LOG")
        .output()
        .expect("binary runs")
}

fn snapshot(paths: &[PathBuf]) -> Vec<Vec<u8>> {
    paths
        .iter()
        .map(|p| std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display())))
        .collect()
}

#[test]
fn criterion_10_cli_subcommands_are_byte_identical_across_reruns() {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();
    let graph_path = root.join("chain.json");
    std::fs::write(
        &graph_path,
        r#"{"nodes": [
          {"id": "A", "kind": "NonDNN", "period_ms": 100.0, "cost_hint_ms": 1.0},
          {"id": "B", "kind": "NonDNN", "cost_hint_ms": 1.0}
        ], "edges": [["A", "B"]]}"#,
    )
    .unwrap();
    let path = |p: &Path| p.to_str().unwrap().to_string();
    let traces = root.join("t.jsonl");
    let train_dir = root.join("run");
    let metrics = root.join("metrics.json");
    let sim = root.join("sim");
    let commands: Vec<(Vec<String>, Vec<PathBuf>)> = vec![
        (
            vec!["graph".into(), "--graph".into(), path(&graph_path)],
            vec![],
        ),
        (
            vec![
                "traces".into(),
                "--scenario".into(),
                "urban".into(),
                "--out".into(),
                path(&traces),
                "--seed".into(),
                "5".into(),
                // Five virtual minutes clears the training set minimum.
                "--set".into(),
                "duration_ms=300000".into(),
            ],
            vec![traces.clone(), root.join("t.manifest.json")],
        ),
        (
            vec![
                "train".into(),
                "--traces".into(),
                path(&traces),
                "--out".into(),
                path(&train_dir),
                "--seed".into(),
                "9".into(),
                "--set".into(),
                "epochs=5".into(),
            ],
            vec![train_dir.join("params.bin"), train_dir.join("train_log.json")],
        ),
        (
            vec![
                "eval".into(),
                "--traces".into(),
                path(&traces),
                "--params".into(),
                path(&train_dir.join("params.bin")),
                "--out".into(),
                path(&metrics),
            ],
            vec![metrics.clone()],
        ),
        (
            vec![
                "simulate".into(),
                "--scenario".into(),
                "urban".into(),
                "--policy".into(),
                "neuroflow,fifo".into(),
                "--out".into(),
                path(&sim),
                "--seed".into(),
                "3".into(),
                "--set".into(),
                "duration_ms=2000".into(),
            ],
            vec![
                sim.join("events-neuroflow.jsonl"),
                sim.join("events-fifo.jsonl"),
                sim.join("report-neuroflow.json"),
                sim.join("report-fifo.json"),
                sim.join("comparison.json"),
            ],
        ),
    ];
    let mut files_checked = 0usize;
    for (args, outputs) in &commands {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = run_cli(&argv);
        assert_eq!(
            first.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&first.stderr)
        );
        let before = snapshot(outputs);
        let second = run_cli(&argv);
        assert_eq!(second.status.code(), Some(0));
        assert_eq!(
            first.stdout, second.stdout,
            "stdout differs across reruns of {args:?}"
        );
        let after = snapshot(outputs);
        for (path, (a, b)) in outputs.iter().zip(before.iter().zip(&after)) {
            assert_eq!(a, b, "{} differs across reruns", path.display());
            files_checked += 1;
        }
    }
    println!(
        "criterion 10 (CLI determinism): PASS — 5 subcommands, stdout plus {files_checked} output files byte-identical"
    );
}
