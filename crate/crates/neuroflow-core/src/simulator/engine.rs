//! Discrete-event execution of one scenario under one scheduling policy.
//!
//! Sources release tasks at their periods; every other node fires when all
//! of its in-edges hold a fresh token, consuming them (newest token wins, so
//! a backlogged stage drops stale frames instead of queueing them). Non-DNN
//! tasks run one at a time on the host CPU under the scheduler's policy; DNN
//! tasks go to platforms chosen at dispatch, with actual latencies drawn
//! from the ground-truth oracle. Identical scenario, policy, and seed
//! reproduce the event log byte for byte.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap};

use crate::flowgraph::{extract_subgraphs, Subgraph};
use crate::platform::{effective_cpu_load, sample_telemetry, PlatformSnapshot, PlatformState};
use crate::predictor::{RuntimePredictor, StaticTablePredictor};
use crate::rngutil::{str_salt, sub_rng};
use crate::scheduler::{
    assign_owners, classify, DnnDecision, EventKind, Policy, SchedState, ScheduleEvent,
    TaskInstance, TaskKind,
};
use crate::workload::latency_ground_truth;

use super::report::{percentile_summary, SimReport};
use super::scenario::Scenario;
use super::SimError;

/// Full result of one simulation: the summary report, the event log in
/// emission order, and every task instance for audits.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: SimReport,
    pub events: Vec<ScheduleEvent>,
    pub tasks: BTreeMap<u64, TaskInstance>,
}

// Heap entries order by (time, kind, push sequence); completions drain
// before releases at the same instant so freed resources are visible.
const KIND_DNN_DONE: u8 = 0;
const KIND_CPU_DONE: u8 = 1;
const KIND_RELEASE: u8 = 2;

#[derive(Debug)]
enum Pending {
    SourceRelease { node_id: String },
    CpuComplete { task_id: u64 },
    DnnComplete { task_id: u64 },
}

struct InflightDnn {
    task: TaskInstance,
    platform_id: String,
    actual_ms: f64,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    predictor: &'a dyn RuntimePredictor,
    fallback: StaticTablePredictor,
    sched: SchedState,
    platforms: BTreeMap<String, PlatformState>,
    subgraphs: BTreeMap<String, Subgraph>,
    owners: BTreeMap<String, String>,
    heap: BinaryHeap<Reverse<(u64, u8, u64)>>,
    payloads: BTreeMap<u64, Pending>,
    seq: u64,
    next_task_id: u64,
    firings: BTreeMap<String, u64>,
    firing_of: BTreeMap<u64, u64>,
    tokens: BTreeMap<(String, String), (f64, u64)>,
    cpu_running: Option<TaskInstance>,
    inflight: BTreeMap<u64, InflightDnn>,
    snapshots: Vec<PlatformSnapshot>,
    snap_t: f64,
    refreshes: u64,
    dnn_retry: bool,
    events: Vec<ScheduleEvent>,
    tasks: BTreeMap<u64, TaskInstance>,
    responses: Vec<f64>,
    completions: BTreeMap<String, u64>,
    exec_ms: BTreeMap<String, f64>,
    released: u64,
    completed: u64,
    rejected_rounds: u64,
    deferred: std::collections::BTreeSet<u64>,
}

/// Simulate the scenario under the given policy. `predictor` drives DNN
/// placement for the neuroflow policy; when absent, placement degrades to
/// the static base-latency table (and the baseline policies never consult
/// it at all).
pub fn run(
    scenario: &Scenario,
    policy: Policy,
    predictor: Option<&dyn RuntimePredictor>,
) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    let subgraph_list = extract_subgraphs(&scenario.graph)?;
    let nice_of = |sg: &Subgraph| match &scenario.control_node {
        Some(control) if sg.end_node != *control => scenario.nice_other,
        _ => 0,
    };
    let owners = assign_owners(&subgraph_list, nice_of);
    let sched_subgraphs: Vec<(String, i32)> = subgraph_list
        .iter()
        .map(|sg| (sg.end_node.clone(), nice_of(sg)))
        .collect();
    let subgraphs: BTreeMap<String, Subgraph> = subgraph_list
        .into_iter()
        .map(|sg| (sg.end_node.clone(), sg))
        .collect();
    let sched = SchedState::new(policy, &sched_subgraphs, &scenario.resolved_default_platform())?;
    let platforms: BTreeMap<String, PlatformState> = scenario
        .sorted_platforms()
        .into_iter()
        .map(|d| (d.id.clone(), PlatformState::new(d)))
        .collect();
    let fallback = StaticTablePredictor::new(
        scenario.oracle.base_ms.clone(),
        platforms.keys().cloned().collect(),
    );

    let mut engine = Engine {
        scenario,
        predictor: predictor.unwrap_or(&fallback),
        fallback: fallback.clone(),
        sched,
        platforms,
        subgraphs,
        owners,
        heap: BinaryHeap::new(),
        payloads: BTreeMap::new(),
        seq: 0,
        next_task_id: 0,
        firings: BTreeMap::new(),
        firing_of: BTreeMap::new(),
        tokens: BTreeMap::new(),
        cpu_running: None,
        inflight: BTreeMap::new(),
        snapshots: Vec::new(),
        snap_t: f64::NEG_INFINITY,
        refreshes: 0,
        dnn_retry: false,
        events: Vec::new(),
        tasks: BTreeMap::new(),
        responses: Vec::new(),
        completions: BTreeMap::new(),
        exec_ms: BTreeMap::new(),
        released: 0,
        completed: 0,
        rejected_rounds: 0,
        deferred: Default::default(),
    };
    engine.seed_sources();
    engine.event_loop()?;
    Ok(engine.finish(policy))
}

impl<'a> Engine<'a> {
    fn push(&mut self, t_ms: f64, kind: u8, payload: Pending) {
        let seq = self.seq;
        self.seq += 1;
        self.payloads.insert(seq, payload);
        self.heap.push(Reverse((t_ms.to_bits(), kind, seq)));
    }

    fn seed_sources(&mut self) {
        let sources: Vec<String> = self
            .scenario
            .graph
            .nodes()
            .filter(|n| {
                n.period_ms.is_some()
                    && self.scenario.graph.predecessors(&n.id).next().is_none()
            })
            .map(|n| n.id.clone())
            .collect();
        for node_id in sources {
            self.push(0.0, KIND_RELEASE, Pending::SourceRelease { node_id });
        }
    }

    fn event_loop(&mut self) -> Result<(), SimError> {
        while let Some(Reverse((t_bits, _, seq))) = self.heap.pop() {
            let t = f64::from_bits(t_bits);
            if t > self.scenario.duration_ms {
                break;
            }
            self.sched.clock_ms = t;
            match self.payloads.remove(&seq).expect("payload for heap entry") {
                Pending::SourceRelease { node_id } => {
                    let period = self
                        .scenario
                        .graph
                        .node(&node_id)
                        .and_then(|n| n.period_ms)
                        .expect("source has a period");
                    if t + period < self.scenario.duration_ms {
                        self.push(
                            t + period,
                            KIND_RELEASE,
                            Pending::SourceRelease {
                                node_id: node_id.clone(),
                            },
                        );
                    }
                    self.fire_node(&node_id, t, t, Vec::new())?;
                }
                Pending::CpuComplete { task_id } => self.complete_cpu(task_id, t)?,
                Pending::DnnComplete { task_id } => self.complete_dnn(task_id, t)?,
            }
            self.progress(t)?;
        }
        Ok(())
    }

    fn fire_node(
        &mut self,
        node_id: &str,
        t: f64,
        frame_origin: f64,
        deps: Vec<u64>,
    ) -> Result<(), SimError> {
        let node = self
            .scenario
            .graph
            .node(node_id)
            .ok_or_else(|| SimError::Config(format!("unknown node {node_id}")))?
            .clone();
        let firing = *self.firings.entry(node_id.to_string()).or_insert(0);
        self.firings.insert(node_id.to_string(), firing + 1);

        let kind = classify(&node);
        let batch = match kind {
            TaskKind::Dnn => {
                let mut rng = sub_rng(
                    self.scenario.seed,
                    "batch",
                    &[str_salt(node_id), firing],
                );
                self.scenario.sample_batch(node_id, &mut rng)
            }
            TaskKind::NonDnn => 1,
        };
        let memory_mb = node
            .model_ref
            .as_deref()
            .map(|m| self.scenario.memory_for(m))
            .unwrap_or(0.0);
        let subgraph_id = self
            .owners
            .get(node_id)
            .cloned()
            .expect("every node belongs to a subgraph");
        let sg = &self.subgraphs[&subgraph_id];
        let priority = sg.priority.get(node_id).copied().unwrap_or(0);
        let nice = self.sched.nice(&subgraph_id).unwrap_or(0);

        let id = self.next_task_id;
        self.next_task_id += 1;
        let task = TaskInstance {
            id,
            node_id: node_id.to_string(),
            kind,
            batch,
            memory_mb,
            release_t_ms: t,
            deps,
            subgraph_id,
            nice,
            priority,
            cost_ms: node.cost_hint_ms.unwrap_or(1.0),
            model_id: node.model_ref.clone(),
            frame_origin_ms: frame_origin,
        };
        self.firing_of.insert(id, firing);
        self.tasks.insert(id, task.clone());
        self.released += 1;
        let event = self.sched.enqueue(task)?;
        self.events.push(event);
        if kind == TaskKind::Dnn {
            self.dnn_retry = true;
        }
        Ok(())
    }

    fn progress(&mut self, t: f64) -> Result<(), SimError> {
        if self.dnn_retry {
            self.dnn_retry = false;
            self.dispatch_dnn_round(t)?;
        }
        if self.cpu_running.is_none() {
            if let Some(task) = self.sched.next_non_dnn() {
                let mut dispatched =
                    ScheduleEvent {
                        task_id: task.id,
                        node_id: task.node_id.clone(),
                        event: EventKind::Dispatched,
                        t_ms: t,
                        platform_id: None,
                        predicted_latency_ms: None,
                        actual_latency_ms: None,
                    };
                self.events.push(dispatched.clone());
                dispatched.event = EventKind::Started;
                self.events.push(dispatched);
                self.push(
                    t + task.cost_ms,
                    KIND_CPU_DONE,
                    Pending::CpuComplete { task_id: task.id },
                );
                self.cpu_running = Some(task);
            }
        }
        Ok(())
    }

    fn refresh_snapshots(&mut self, t: f64) -> Result<(), SimError> {
        if t - self.snap_t < self.scenario.snapshot_staleness_ms && !self.snapshots.is_empty() {
            return Ok(());
        }
        let background = self.scenario.background_load.at(t);
        let mut fresh = Vec::with_capacity(self.platforms.len());
        for (idx, state) in self.platforms.values().enumerate() {
            let mut rng = sub_rng(
                self.scenario.seed,
                "telemetry",
                &[self.refreshes, idx as u64],
            );
            fresh.push(sample_telemetry(
                state,
                t,
                background,
                self.scenario.telemetry_jitter,
                &mut rng,
            )?);
        }
        self.snapshots = fresh;
        self.snap_t = t;
        self.refreshes += 1;
        Ok(())
    }

    fn dispatch_dnn_round(&mut self, t: f64) -> Result<(), SimError> {
        let pending = self.sched.pending_dnn();
        if pending.is_empty() {
            return Ok(());
        }
        self.refresh_snapshots(t)?;
        for task_id in pending {
            let model_id = self
                .sched
                .task(task_id)
                .and_then(|task| task.model_id.clone())
                .ok_or_else(|| SimError::Config(format!("task {task_id} has no model")))?;
            let model = self
                .scenario
                .model(&model_id)
                .ok_or_else(|| SimError::Config(format!("unknown model {model_id}")))?
                .clone();
            let (decision, event) = self.sched.dispatch_dnn(
                task_id,
                &model,
                self.predictor,
                &self.fallback,
                &self.snapshots,
                &self.platforms,
            )?;
            self.events.push(event);
            match decision {
                DnnDecision::Dispatched {
                    task, platform_id, ..
                } => {
                    let state = self
                        .platforms
                        .get_mut(&platform_id)
                        .expect("dispatch chose a known platform");
                    state.insert_task(&task.id.to_string(), task.memory_mb, true);
                    let load =
                        effective_cpu_load(state, self.scenario.background_load.at(t));
                    let mut rng = sub_rng(
                        self.scenario.seed,
                        "noise",
                        &[str_salt(&task.node_id), self.firing_of[&task.id]],
                    );
                    let actual_ms = latency_ground_truth(
                        &model,
                        &platform_id,
                        task.batch,
                        load,
                        &self.scenario.oracle,
                        &mut rng,
                    )?;
                    self.events.push(ScheduleEvent {
                        task_id: task.id,
                        node_id: task.node_id.clone(),
                        event: EventKind::Started,
                        t_ms: t,
                        platform_id: Some(platform_id.clone()),
                        predicted_latency_ms: None,
                        actual_latency_ms: None,
                    });
                    self.push(
                        t + actual_ms,
                        KIND_DNN_DONE,
                        Pending::DnnComplete { task_id: task.id },
                    );
                    self.inflight.insert(
                        task.id,
                        InflightDnn {
                            task,
                            platform_id,
                            actual_ms,
                        },
                    );
                }
                DnnDecision::Deferred => {
                    self.rejected_rounds += 1;
                    self.deferred.insert(task_id);
                }
            }
        }
        Ok(())
    }

    fn complete_cpu(&mut self, task_id: u64, t: f64) -> Result<(), SimError> {
        let task = self
            .cpu_running
            .take()
            .filter(|task| task.id == task_id)
            .expect("completion matches the running CPU task");
        self.events.push(ScheduleEvent {
            task_id,
            node_id: task.node_id.clone(),
            event: EventKind::Completed,
            t_ms: t,
            platform_id: None,
            predicted_latency_ms: None,
            actual_latency_ms: Some(task.cost_ms),
        });
        self.sched.account(&task.subgraph_id, task.cost_ms)?;
        *self.exec_ms.entry(task.subgraph_id.clone()).or_insert(0.0) += task.cost_ms;
        self.record_completion(&task, t);
        self.emit_tokens(&task, t)?;
        Ok(())
    }

    fn complete_dnn(&mut self, task_id: u64, t: f64) -> Result<(), SimError> {
        let InflightDnn {
            task,
            platform_id,
            actual_ms,
        } = self.inflight.remove(&task_id).expect("inflight DNN task");
        self.platforms
            .get_mut(&platform_id)
            .expect("platform exists")
            .remove_task(&task_id.to_string());
        self.events.push(ScheduleEvent {
            task_id,
            node_id: task.node_id.clone(),
            event: EventKind::Completed,
            t_ms: t,
            platform_id: Some(platform_id),
            predicted_latency_ms: None,
            actual_latency_ms: Some(actual_ms),
        });
        // Host-side pre/post-processing charge: fairness accounting only,
        // the CPU executor itself stays free.
        self.sched
            .account(&task.subgraph_id, self.scenario.dnn_cpu_fraction * actual_ms)?;
        self.record_completion(&task, t);
        self.dnn_retry = true;
        self.emit_tokens(&task, t)?;
        Ok(())
    }

    fn record_completion(&mut self, task: &TaskInstance, t: f64) {
        *self.completions.entry(task.node_id.clone()).or_insert(0) += 1;
        self.completed += 1;
        if self.scenario.control_node.as_deref() == Some(task.node_id.as_str()) {
            self.responses.push(t - task.frame_origin_ms);
        }
    }

    fn emit_tokens(&mut self, task: &TaskInstance, t: f64) -> Result<(), SimError> {
        let successors: Vec<String> = self
            .scenario
            .graph
            .successors(&task.node_id)
            .map(String::from)
            .collect();
        for succ in &successors {
            self.tokens.insert(
                (task.node_id.clone(), succ.clone()),
                (task.frame_origin_ms, task.id),
            );
        }
        for succ in successors {
            self.try_fire(&succ, t)?;
        }
        Ok(())
    }

    fn try_fire(&mut self, node_id: &str, t: f64) -> Result<(), SimError> {
        let preds: Vec<String> = self
            .scenario
            .graph
            .predecessors(node_id)
            .map(String::from)
            .collect();
        let mut origin = f64::INFINITY;
        let mut deps = Vec::with_capacity(preds.len());
        for pred in &preds {
            match self.tokens.get(&(pred.clone(), node_id.to_string())) {
                Some((frame, producer)) => {
                    origin = origin.min(*frame);
                    deps.push(*producer);
                }
                None => return Ok(()),
            }
        }
        for pred in &preds {
            self.tokens.remove(&(pred.clone(), node_id.to_string()));
        }
        self.fire_node(node_id, t, origin, deps)
    }

    fn finish(self, policy: Policy) -> RunOutput {
        let pending_at_end =
            (self.sched.pending_non_dnn() + self.sched.pending_dnn().len()) as u64;
        let inflight_at_end =
            self.inflight.len() as u64 + u64::from(self.cpu_running.is_some());
        let cpu_share: BTreeMap<String, f64> = self
            .exec_ms
            .iter()
            .map(|(sg, ms)| (sg.clone(), ms / self.scenario.duration_ms))
            .collect();
        let report = SimReport {
            scenario: self.scenario.name.clone(),
            policy: policy.name().to_string(),
            seed: self.scenario.seed,
            duration_ms: self.scenario.duration_ms,
            released_tasks: self.released,
            completed_tasks: self.completed,
            inflight_at_end,
            pending_at_end,
            completions_per_node: self.completions,
            control_response: percentile_summary(&self.responses),
            cpu_share,
            rejected_dispatches: self.rejected_rounds,
            deferred_tasks: self.deferred.len() as u64,
        };
        RunOutput {
            report,
            events: self.events,
            tasks: self.tasks,
        }
    }
}
