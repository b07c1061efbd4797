//! Command line front end wiring the library into reproducible experiments:
//! graph analysis, trace generation, estimator training and evaluation, and
//! scheduling policy simulation.
//!
//! Every subcommand is deterministic: the same inputs and seed produce
//! byte-identical outputs. Set `NEUROFLOW_LOG` (error, warn, info, debug,
//! trace) to control diagnostics on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use neuroflow_core::flowgraph::{extract_subgraphs, FlowGraph, GraphError};
use neuroflow_core::predictor::{
    evaluate, fit_baseline, format_acc10_comparison, format_table, train, TrainConfig,
    TrainedPredictor,
};
use neuroflow_core::scheduler::Policy;
use neuroflow_core::simulator::{
    apply_override, compare_policies, format_comparison, format_report, generate_traces,
    manifest_path_for, preset, read_manifest, read_trace_jsonl, run, write_trace_bundle, RunOutput,
    Scenario, ScenarioFile, SimError, TraceManifest, TraceRecord, PRESET_NAMES,
};
use neuroflow_core::RuntimePredictor;

#[derive(Parser)]
#[command(name = "neuroflow", version, about = "Hybrid DNN/dataflow scheduling testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a dataflow graph: subgraphs, topological orders, priorities.
    Graph {
        /// Graph JSON file.
        #[arg(long)]
        graph: PathBuf,
    },
    /// Generate a telemetry/latency trace dataset from a scenario.
    Traces {
        /// Scenario JSON file or built-in preset name.
        #[arg(long)]
        scenario: String,
        /// Output JSONL path; the manifest lands next to it.
        #[arg(long)]
        out: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Scenario override, key=value; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Train the runtime estimator on a trace dataset.
    Train {
        /// Trace JSONL path; its manifest must sit next to it.
        #[arg(long)]
        traces: PathBuf,
        /// Output directory for params.bin and train_log.json.
        #[arg(long)]
        out: PathBuf,
        /// Training seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Training override, key=value (epochs, lr, lr_min, hidden,
        /// batch_size, val_fraction, lambda_ce, out_scale_ms, min_records);
        /// repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Evaluate trained parameters on a trace dataset.
    Eval {
        /// Trace JSONL path; its manifest must sit next to it.
        #[arg(long)]
        traces: PathBuf,
        /// Trained parameter file from `neuroflow train`.
        #[arg(long)]
        params: PathBuf,
        /// Optional metrics JSON output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a scenario under one or more scheduling policies.
    Simulate {
        /// Scenario JSON file or built-in preset name.
        #[arg(long)]
        scenario: String,
        /// Scheduling policy; repeatable or comma separated. One policy runs
        /// plain; two or more run paired on the same arrivals and compare.
        #[arg(long = "policy", value_delimiter = ',', default_values = ["neuroflow"])]
        policy: Vec<String>,
        /// Output directory for event logs and reports.
        #[arg(long)]
        out: PathBuf,
        /// Trained parameter file; without it dispatch falls back to static
        /// base latencies.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Scenario override, key=value; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

/// Failures split by exit code: bad input or configuration (1) versus a
/// domain rejection such as a graph cycle or memory overcommit (2).
enum CliError {
    Input(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Domain(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Domain(m) => m,
        }
    }
}

fn graph_err(err: GraphError) -> CliError {
    match err {
        GraphError::CycleDetected(_) => CliError::Domain(err.to_string()),
        _ => CliError::Input(err.to_string()),
    }
}

fn sim_err(err: SimError) -> CliError {
    match &err {
        SimError::Graph(GraphError::CycleDetected(_))
        | SimError::Platform(_)
        | SimError::Sched(_) => CliError::Domain(err.to_string()),
        _ => CliError::Input(err.to_string()),
    }
}

fn input_err(err: impl std::fmt::Display) -> CliError {
    CliError::Input(err.to_string())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A scenario argument is a preset name or a path to a scenario JSON file
/// whose graph/catalog references resolve relative to the file.
fn load_scenario(arg: &str) -> Result<Scenario, CliError> {
    if let Some(scenario) = preset(arg) {
        return Ok(scenario);
    }
    if let Some(name) = arg.strip_prefix("preset:") {
        return preset(name).ok_or_else(|| {
            CliError::Input(format!(
                "unknown preset {name:?} (built in: {})",
                PRESET_NAMES.join(", ")
            ))
        });
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{arg:?} is neither a preset ({}) nor an existing scenario file",
            PRESET_NAMES.join(", ")
        )));
    }
    let text = read_file(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Scenario::resolve(file, base).map_err(sim_err)
}

fn split_kv(kv: &str) -> Result<(&str, &str), CliError> {
    kv.split_once('=')
        .ok_or_else(|| CliError::Input(format!("--set expects key=value, got {kv:?}")))
}

/// `--set` pairs first, then the dedicated seed flag so it always wins.
fn configure_scenario(
    scenario: &mut Scenario,
    set: &[String],
    seed: Option<u64>,
) -> Result<(), CliError> {
    for kv in set {
        let (key, value) = split_kv(kv)?;
        apply_override(scenario, key, value).map_err(sim_err)?;
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    scenario.validate().map_err(sim_err)
}

fn load_traces(path: &Path) -> Result<(Vec<TraceRecord>, TraceManifest), CliError> {
    let records = read_trace_jsonl(path).map_err(sim_err)?;
    let manifest = read_manifest(&manifest_path_for(path)).map_err(sim_err)?;
    Ok((records, manifest))
}

fn cmd_graph(path: &Path) -> Result<(), CliError> {
    let text = read_file(path)?;
    let graph = FlowGraph::from_json(&text).map_err(graph_err)?;
    if graph.is_empty() {
        return Err(CliError::Input(format!(
            "{}: graph has no nodes",
            path.display()
        )));
    }
    let subgraphs = extract_subgraphs(&graph).map_err(graph_err)?;
    println!(
        "{}: {} nodes, {} edges, {} subgraphs",
        path.display(),
        graph.len(),
        graph.edges().count(),
        subgraphs.len()
    );
    for sg in &subgraphs {
        println!();
        println!("subgraph {} ({} members)", sg.end_node, sg.members.len());
        println!("  topo order: {}", sg.topo_order.join(" "));
        println!("  priorities:");
        for node in &sg.topo_order {
            println!("    {:<24} {}", node, sg.priority[node]);
        }
    }
    Ok(())
}

fn cmd_traces(
    scenario_arg: &str,
    out: &Path,
    seed: Option<u64>,
    set: &[String],
) -> Result<(), CliError> {
    let mut scenario = load_scenario(scenario_arg)?;
    configure_scenario(&mut scenario, set, seed)?;
    let (records, manifest) = generate_traces(&scenario).map_err(sim_err)?;
    write_trace_bundle(out, &records, &manifest).map_err(sim_err)?;
    println!(
        "wrote {} records to {} (scenario {}, seed {})",
        records.len(),
        out.display(),
        manifest.scenario,
        manifest.seed
    );
    println!(
        "manifest: {} ({} model combinations)",
        manifest_path_for(out).display(),
        manifest.combinations.len()
    );
    Ok(())
}

fn train_override(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<(), CliError> {
    fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
        value
            .parse()
            .map_err(|_| CliError::Input(format!("override {key}: bad value {value:?}")))
    }
    match key {
        "hidden" => cfg.hidden = parse(key, value)?,
        "lr" => cfg.lr = parse(key, value)?,
        "lr_min" => cfg.lr_min = parse(key, value)?,
        "epochs" => cfg.epochs = parse(key, value)?,
        "batch_size" => cfg.batch_size = parse(key, value)?,
        "val_fraction" => cfg.val_fraction = parse(key, value)?,
        "lambda_ce" => cfg.lambda_ce = parse(key, value)?,
        "out_scale_ms" => cfg.out_scale_ms = parse(key, value)?,
        "min_records" => cfg.min_records = parse(key, value)?,
        "seed" => cfg.seed = parse(key, value)?,
        _ => {
            return Err(CliError::Input(format!(
                "unknown training override key {key:?}"
            )))
        }
    }
    Ok(())
}

fn cmd_train(
    traces: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    set: &[String],
) -> Result<(), CliError> {
    let (records, manifest) = load_traces(traces)?;
    let mut cfg = TrainConfig::default();
    for kv in set {
        let (key, value) = split_kv(kv)?;
        train_override(&mut cfg, key, value)?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let (predictor, log) =
        train(&records, &manifest.models, &manifest.platforms, &cfg).map_err(input_err)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;
    let params_path = out_dir.join("params.bin");
    predictor.save(&params_path).map_err(input_err)?;
    let log_path = out_dir.join("train_log.json");
    let log_json = serde_json::to_string_pretty(&log).map_err(input_err)?;
    write_file(&log_path, &format!("{log_json}\n"))?;
    println!(
        "trained on {} records ({} train / {} val), seed {}",
        log.n_records, log.n_train, log.n_val, cfg.seed
    );
    println!(
        "parameters: {} values, {} bytes -> {}",
        log.parameter_count,
        log.serialized_bytes,
        params_path.display()
    );
    println!(
        "train loss {:.6} -> {:.6} over {} epochs (log: {})",
        log.initial_train_loss,
        log.final_train_loss,
        log.epochs.len(),
        log_path.display()
    );
    Ok(())
}

fn cmd_eval(traces: &Path, params: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let (records, manifest) = load_traces(traces)?;
    let predictor = TrainedPredictor::load(params).map_err(input_err)?;
    let report = evaluate(&predictor, &records, &manifest.models).map_err(input_err)?;
    print!("{}", format_table(&report));
    let baseline =
        fit_baseline(&records, &manifest.models, &manifest.platforms).map_err(input_err)?;
    let baseline_report = evaluate(&baseline, &records, &manifest.models).map_err(input_err)?;
    println!();
    print!("{}", format_acc10_comparison(&report, &baseline_report));
    if let Some(out) = out {
        let metrics = serde_json::json!({
            "platform_level": report,
            "model_only": baseline_report,
        });
        let json = serde_json::to_string_pretty(&metrics).map_err(input_err)?;
        write_file(out, &format!("{json}\n"))?;
        println!();
        println!("metrics: {}", out.display());
    }
    Ok(())
}

fn write_run_files(dir: &Path, output: &RunOutput) -> Result<(), CliError> {
    let mut events = String::new();
    for event in &output.events {
        events.push_str(&serde_json::to_string(event).map_err(input_err)?);
        events.push('\n');
    }
    let events_path = dir.join(format!("events-{}.jsonl", output.report.policy));
    write_file(&events_path, &events)?;
    let report_json = serde_json::to_string_pretty(&output.report).map_err(input_err)?;
    let report_path = dir.join(format!("report-{}.json", output.report.policy));
    write_file(&report_path, &format!("{report_json}\n"))?;
    println!(
        "{}: {} events -> {}",
        output.report.policy,
        output.events.len(),
        events_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    scenario_arg: &str,
    policy_args: &[String],
    out_dir: &Path,
    params: Option<&Path>,
    seed: Option<u64>,
    set: &[String],
) -> Result<(), CliError> {
    let mut scenario = load_scenario(scenario_arg)?;
    configure_scenario(&mut scenario, set, seed)?;
    let policies = policy_args
        .iter()
        .map(|s| Policy::from_str(s).map_err(CliError::Input))
        .collect::<Result<Vec<_>, _>>()?;
    let trained;
    let predictor: Option<&dyn RuntimePredictor> = match params {
        Some(path) => {
            trained = TrainedPredictor::load(path).map_err(input_err)?;
            Some(&trained)
        }
        None => None,
    };
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;
    if let [policy] = policies[..] {
        let output = run(&scenario, policy, predictor).map_err(sim_err)?;
        write_run_files(out_dir, &output)?;
        println!();
        print!("{}", format_report(&output.report));
    } else {
        let (comparison, outputs) =
            compare_policies(&scenario, &policies, predictor).map_err(sim_err)?;
        for output in &outputs {
            write_run_files(out_dir, output)?;
        }
        let cmp_json = serde_json::to_string_pretty(&comparison).map_err(input_err)?;
        let cmp_path = out_dir.join("comparison.json");
        write_file(&cmp_path, &format!("{cmp_json}\n"))?;
        println!();
        print!("{}", format_comparison(&comparison));
    }
    Ok(())
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Graph { graph } => cmd_graph(graph),
        Command::Traces {
            scenario,
            out,
            seed,
            set,
        } => cmd_traces(scenario, out, *seed, set),
        Command::Train {
            traces,
            out,
            seed,
            set,
        } => cmd_train(traces, out, *seed, set),
        Command::Eval {
            traces,
            params,
            out,
        } => cmd_eval(traces, params, out.as_deref()),
        Command::Simulate {
            scenario,
            policy,
            out,
            params,
            seed,
            set,
        } => cmd_simulate(scenario, policy, out, params.as_deref(), *seed, set),
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes early, like other
    // line-oriented tools, instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    // Usage errors are input errors here (exit 1), not clap's default 2,
    // which this tool reserves for domain rejections.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NEUROFLOW_LOG", "warn"))
        .format_timestamp(None)
        .init();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
