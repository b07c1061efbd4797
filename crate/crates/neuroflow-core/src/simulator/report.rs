//! Run summaries, policy comparison, and event-log audits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::predictor::RuntimePredictor;
use crate::scheduler::{EventKind, Policy, ScheduleEvent, TaskInstance, TaskKind};

use super::engine::{run, RunOutput};
use super::scenario::Scenario;
use super::SimError;

/// Nearest-rank percentiles over a latency sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileSummary {
    pub n: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub p99_ms: f64,
}

pub fn percentile_summary(samples: &[f64]) -> PercentileSummary {
    if samples.is_empty() {
        return PercentileSummary {
            n: 0,
            p50_ms: 0.0,
            p95_ms: 0.0,
            p99_ms: 0.0,
        };
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let rank = (q / 100.0 * sorted.len() as f64).ceil() as usize;
        sorted[rank.clamp(1, sorted.len()) - 1]
    };
    PercentileSummary {
        n: sorted.len(),
        p50_ms: at(50.0),
        p95_ms: at(95.0),
        p99_ms: at(99.0),
    }
}

/// Outcome summary of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: String,
    pub policy: String,
    pub seed: u64,
    pub duration_ms: f64,
    pub released_tasks: u64,
    pub completed_tasks: u64,
    pub inflight_at_end: u64,
    pub pending_at_end: u64,
    pub completions_per_node: BTreeMap<String, u64>,
    /// End-to-end response of the control end node, measured from the oldest
    /// source frame each completion descends from.
    pub control_response: PercentileSummary,
    /// Host CPU execution time per subgraph divided by the run duration.
    pub cpu_share: BTreeMap<String, f64>,
    pub rejected_dispatches: u64,
    pub deferred_tasks: u64,
}

pub fn format_report(report: &SimReport) -> String {
    let mut out = format!(
        "scenario {} policy {} seed {}\n\
         tasks: released {}, completed {}, in-flight {}, pending {}\n\
         dnn dispatch: {} rejected rounds, {} tasks ever deferred\n\
         control response (n={}): p50 {:.2} ms, p95 {:.2} ms, p99 {:.2} ms\n",
        report.scenario,
        report.policy,
        report.seed,
        report.released_tasks,
        report.completed_tasks,
        report.inflight_at_end,
        report.pending_at_end,
        report.rejected_dispatches,
        report.deferred_tasks,
        report.control_response.n,
        report.control_response.p50_ms,
        report.control_response.p95_ms,
        report.control_response.p99_ms,
    );
    out.push_str("cpu share by subgraph:\n");
    for (sg, share) in &report.cpu_share {
        out.push_str(&format!("  {sg:<16} {:.1}%\n", share * 100.0));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRow {
    pub policy: String,
    pub control_p50_ms: f64,
    pub control_p99_ms: f64,
    pub completed_tasks: u64,
    pub rejected_dispatches: u64,
    pub cpu_share: BTreeMap<String, f64>,
    /// Paired differences against the first listed policy.
    pub delta_p99_vs_first_ms: f64,
    pub delta_share_vs_first: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub seed: u64,
    pub rows: Vec<PolicyRow>,
}

/// Run every policy on the same scenario (identical seed and arrivals) and
/// report paired deltas against the first one. Returns the full run outputs
/// alongside so callers can archive the logs.
pub fn compare_policies(
    scenario: &Scenario,
    policies: &[Policy],
    predictor: Option<&dyn RuntimePredictor>,
) -> Result<(ComparisonReport, Vec<RunOutput>), SimError> {
    if policies.len() < 2 {
        return Err(SimError::Config(format!(
            "policy comparison needs at least 2 policies, got {}",
            policies.len()
        )));
    }
    let mut outputs = Vec::with_capacity(policies.len());
    for policy in policies {
        outputs.push(run(scenario, *policy, predictor)?);
    }
    let first = outputs[0].report.clone();
    let rows = outputs
        .iter()
        .map(|out| {
            let r = &out.report;
            PolicyRow {
                policy: r.policy.clone(),
                control_p50_ms: r.control_response.p50_ms,
                control_p99_ms: r.control_response.p99_ms,
                completed_tasks: r.completed_tasks,
                rejected_dispatches: r.rejected_dispatches,
                cpu_share: r.cpu_share.clone(),
                delta_p99_vs_first_ms: r.control_response.p99_ms
                    - first.control_response.p99_ms,
                delta_share_vs_first: r
                    .cpu_share
                    .iter()
                    .map(|(sg, share)| {
                        (
                            sg.clone(),
                            share - first.cpu_share.get(sg).copied().unwrap_or(0.0),
                        )
                    })
                    .collect(),
            }
        })
        .collect();
    Ok((
        ComparisonReport {
            scenario: scenario.name.clone(),
            seed: scenario.seed,
            rows,
        },
        outputs,
    ))
}

pub fn format_comparison(report: &ComparisonReport) -> String {
    let mut out = format!(
        "scenario {} seed {}\n{:<12} {:>10} {:>10} {:>10} {:>10} {:>9}\n",
        report.scenario, report.seed, "policy", "p50 (ms)", "p99 (ms)", "Δp99 (ms)", "completed", "rejected"
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{:<12} {:>10.2} {:>10.2} {:>+10.2} {:>10} {:>9}\n",
            row.policy,
            row.control_p50_ms,
            row.control_p99_ms,
            row.delta_p99_vs_first_ms,
            row.completed_tasks,
            row.rejected_dispatches,
        ));
    }
    out
}

/// Structural checks over a full event log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditStats {
    pub events: usize,
    pub tasks: usize,
    /// Lifecycle transitions out of order or timestamps moving backwards.
    pub order_violations: usize,
    /// A non-DNN dispatch while a strictly higher-priority task of the same
    /// subgraph sat ready.
    pub priority_violations: usize,
    /// A start before the task's release or before a dependency completed.
    pub causality_violations: usize,
    /// Duplicate lifecycle events for one task (a task can only ever occupy
    /// one queue).
    pub exclusivity_violations: usize,
    /// Every enqueued task is in exactly one terminal state at the end.
    pub conservation_ok: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Stage {
    Enqueued,
    Dispatched,
    Started,
    Completed,
}

pub fn audit_event_log(
    events: &[ScheduleEvent],
    tasks: &BTreeMap<u64, TaskInstance>,
) -> AuditStats {
    let mut stats = AuditStats {
        events: events.len(),
        conservation_ok: true,
        ..Default::default()
    };
    let mut stage: BTreeMap<u64, Stage> = BTreeMap::new();
    let mut last_t: BTreeMap<u64, f64> = BTreeMap::new();
    let mut completed_t: BTreeMap<u64, f64> = BTreeMap::new();
    // Ready non-DNN work per subgraph, as (priority, task id).
    let mut ready: BTreeMap<&str, BTreeMap<u64, u32>> = BTreeMap::new();

    for ev in events {
        let Some(task) = tasks.get(&ev.task_id) else {
            stats.order_violations += 1;
            continue;
        };
        if let Some(prev) = last_t.get(&ev.task_id) {
            if ev.t_ms < *prev {
                stats.order_violations += 1;
            }
        }
        last_t.insert(ev.task_id, ev.t_ms);
        let current = stage.get(&ev.task_id).copied();
        match ev.event {
            EventKind::Enqueued => {
                if current.is_some() {
                    stats.exclusivity_violations += 1;
                } else {
                    stage.insert(ev.task_id, Stage::Enqueued);
                    if task.kind == TaskKind::NonDnn {
                        ready
                            .entry(task.subgraph_id.as_str())
                            .or_default()
                            .insert(task.id, task.priority);
                    }
                }
            }
            EventKind::Rejected => {
                if current != Some(Stage::Enqueued) {
                    stats.order_violations += 1;
                }
            }
            EventKind::Dispatched => {
                if current != Some(Stage::Enqueued) {
                    stats.order_violations += 1;
                }
                stage.insert(ev.task_id, Stage::Dispatched);
                if task.kind == TaskKind::NonDnn {
                    if let Some(queue) = ready.get_mut(task.subgraph_id.as_str()) {
                        queue.remove(&task.id);
                        if queue.values().any(|p| *p > task.priority) {
                            stats.priority_violations += 1;
                        }
                    }
                }
            }
            EventKind::Started => {
                if current != Some(Stage::Dispatched) {
                    stats.order_violations += 1;
                }
                stage.insert(ev.task_id, Stage::Started);
                if ev.t_ms < task.release_t_ms - 1e-9 {
                    stats.causality_violations += 1;
                }
                for dep in &task.deps {
                    if completed_t.get(dep).is_none_or(|t| *t > ev.t_ms + 1e-9) {
                        stats.causality_violations += 1;
                    }
                }
            }
            EventKind::Completed => {
                if current != Some(Stage::Started) {
                    stats.order_violations += 1;
                }
                stage.insert(ev.task_id, Stage::Completed);
                completed_t.insert(ev.task_id, ev.t_ms);
            }
        }
    }

    stats.tasks = stage.len();
    let enqueued_total = stage.len();
    let by_stage = |s: Stage| stage.values().filter(|v| **v == s).count();
    stats.conservation_ok = enqueued_total
        == by_stage(Stage::Completed)
            + by_stage(Stage::Started)
            + by_stage(Stage::Dispatched)
            + by_stage(Stage::Enqueued);
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::build_graph;
    use crate::flowgraph::{NodeKind, ProgramNode};
    use crate::platform::default_platforms;
    use crate::simulator::scenario::BackgroundLoad;
    use crate::workload::{builtin_catalog, default_oracle};

    #[test]
    fn percentiles_use_nearest_rank() {
        let samples: Vec<f64> = (1..=100).map(f64::from).collect();
        let p = percentile_summary(&samples);
        assert_eq!(p.n, 100);
        assert_eq!(p.p50_ms, 50.0);
        assert_eq!(p.p95_ms, 95.0);
        assert_eq!(p.p99_ms, 99.0);
        let single = percentile_summary(&[7.5]);
        assert_eq!((single.p50_ms, single.p95_ms, single.p99_ms), (7.5, 7.5, 7.5));
        let empty = percentile_summary(&[]);
        assert_eq!(empty.n, 0);
        assert!(p.p50_ms <= p.p95_ms && p.p95_ms <= p.p99_ms);
    }

    fn meta(id: u64, subgraph: &str, priority: u32, kind: TaskKind) -> TaskInstance {
        TaskInstance {
            id,
            node_id: format!("n{id}"),
            kind,
            batch: 1,
            memory_mb: 0.0,
            release_t_ms: 0.0,
            deps: Vec::new(),
            subgraph_id: subgraph.into(),
            nice: 0,
            priority,
            cost_ms: 1.0,
            model_id: None,
            frame_origin_ms: 0.0,
        }
    }

    fn ev(task_id: u64, event: EventKind, t_ms: f64) -> ScheduleEvent {
        ScheduleEvent {
            task_id,
            node_id: format!("n{task_id}"),
            event,
            t_ms,
            platform_id: None,
            predicted_latency_ms: None,
            actual_latency_ms: None,
        }
    }

    #[test]
    fn audit_passes_a_clean_log_and_flags_a_priority_inversion() {
        let tasks: BTreeMap<u64, TaskInstance> = [
            (1, meta(1, "sg", 2, TaskKind::NonDnn)),
            (2, meta(2, "sg", 1, TaskKind::NonDnn)),
        ]
        .into();
        let clean = vec![
            ev(1, EventKind::Enqueued, 0.0),
            ev(2, EventKind::Enqueued, 0.0),
            ev(1, EventKind::Dispatched, 0.0),
            ev(1, EventKind::Started, 0.0),
            ev(1, EventKind::Completed, 1.0),
            ev(2, EventKind::Dispatched, 1.0),
            ev(2, EventKind::Started, 1.0),
            ev(2, EventKind::Completed, 2.0),
        ];
        let stats = audit_event_log(&clean, &tasks);
        assert_eq!(stats.priority_violations, 0);
        assert_eq!(stats.order_violations, 0);
        assert!(stats.conservation_ok);

        // Dispatching the priority-1 task while priority-2 sits ready.
        let inverted = vec![
            ev(1, EventKind::Enqueued, 0.0),
            ev(2, EventKind::Enqueued, 0.0),
            ev(2, EventKind::Dispatched, 0.0),
        ];
        let stats = audit_event_log(&inverted, &tasks);
        assert_eq!(stats.priority_violations, 1);
    }

    #[test]
    fn audit_flags_lifecycle_and_causality_breaks() {
        let mut dep_task = meta(2, "sg", 0, TaskKind::NonDnn);
        dep_task.deps = vec![1];
        let tasks: BTreeMap<u64, TaskInstance> =
            [(1, meta(1, "sg", 0, TaskKind::NonDnn)), (2, dep_task)].into();
        let log = vec![
            ev(1, EventKind::Enqueued, 0.0),
            ev(1, EventKind::Enqueued, 0.0),   // duplicate enqueue
            ev(1, EventKind::Started, 0.0),    // skipped dispatch
            ev(2, EventKind::Enqueued, 0.0),
            ev(2, EventKind::Dispatched, 0.0),
            ev(2, EventKind::Started, 0.0),    // dep 1 never completed
        ];
        let stats = audit_event_log(&log, &tasks);
        assert_eq!(stats.exclusivity_violations, 1);
        assert!(stats.order_violations >= 1);
        assert_eq!(stats.causality_violations, 1);
    }

    fn tiny_scenario() -> Scenario {
        let node = ProgramNode {
            id: "src".into(),
            kind: NodeKind::NonDnn,
            model_ref: None,
            period_ms: Some(100.0),
            cost_hint_ms: Some(1.0),
        };
        let catalog = builtin_catalog();
        let oracle = default_oracle(&catalog);
        Scenario {
            name: "tiny".into(),
            graph: build_graph(vec![node], vec![]).unwrap(),
            catalog,
            platforms: default_platforms(),
            duration_ms: 1_000.0,
            batch_distribution: BTreeMap::new(),
            background_load: BackgroundLoad::Constant { load: 0.1 },
            oracle,
            seed: 3,
            control_node: Some("src".into()),
            model_memory_mb: BTreeMap::new(),
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
    fn comparing_identical_policies_gives_zero_deltas() {
        let scenario = tiny_scenario();
        let (report, outputs) =
            compare_policies(&scenario, &[Policy::Neuroflow, Policy::Neuroflow], None).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(outputs.len(), 2);
        assert_eq!(report.rows[1].delta_p99_vs_first_ms, 0.0);
        assert!(report.rows[1].delta_share_vs_first.values().all(|d| *d == 0.0));
        let table = format_comparison(&report);
        assert_eq!(table.lines().count(), 2 + report.rows.len());
    }

    #[test]
    fn comparison_requires_two_policies() {
        let scenario = tiny_scenario();
        assert!(matches!(
            compare_policies(&scenario, &[Policy::Fifo], None),
            Err(SimError::Config(_))
        ));
    }
}
