//! Dual-queue hybrid scheduler.
//!
//! Tasks backed by a DNN model go to a dispatch queue and run on whichever
//! platform the runtime estimator predicts to be fastest among those that
//! pass memory admission. Everything else runs on the host CPU under a
//! completely fair scheduler across dataflow subgraphs, with node priorities
//! ordering work inside each subgraph. Two baseline policies (FIFO and
//! round-robin) share the same queue plumbing so event logs are comparable.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flowgraph::{ProgramNode, Subgraph};
use crate::platform::{Admission, PlatformSnapshot, PlatformState};
use crate::predictor::RuntimePredictor;
use crate::workload::ModelDescriptor;

#[derive(Debug, Error, PartialEq)]
pub enum SchedError {
    #[error("nice value {0} outside [-20, 19]")]
    NiceOutOfRange(i32),
    #[error("unknown subgraph {0}")]
    UnknownSubgraph(String),
    #[error("unknown task {0}")]
    UnknownTask(u64),
    #[error("task {0} is already queued")]
    DuplicateTask(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    Dnn,
    NonDnn,
}

/// DNN queue iff the node references a model.
pub fn classify(node: &ProgramNode) -> TaskKind {
    if node.model_ref.is_some() {
        TaskKind::Dnn
    } else {
        TaskKind::NonDnn
    }
}

/// Geometric CFS weight law: nice 0 maps to 1024 and each nice step scales
/// by ~1.25, so a gap of 5 yields a ~3.05x share ratio.
pub fn nice_to_weight(nice: i32) -> Result<u32, SchedError> {
    if !(-20..=19).contains(&nice) {
        return Err(SchedError::NiceOutOfRange(nice));
    }
    Ok((1024.0 * 1.25f64.powi(-nice)).round() as u32)
}

/// One firing of a program node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: u64,
    pub node_id: String,
    pub kind: TaskKind,
    /// Inference batch size; 1 for non-DNN tasks.
    pub batch: u32,
    pub memory_mb: f64,
    /// Time the task became ready: release period for sources, last
    /// dependency completion otherwise.
    pub release_t_ms: f64,
    /// Task ids whose outputs this firing consumed.
    pub deps: Vec<u64>,
    pub subgraph_id: String,
    pub nice: i32,
    pub priority: u32,
    /// CPU execution cost for non-DNN tasks.
    pub cost_ms: f64,
    pub model_id: Option<String>,
    /// Release time of the oldest source frame this task descends from.
    pub frame_origin_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Enqueued,
    Dispatched,
    Started,
    Completed,
    Rejected,
}

/// One line of the schedule audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEvent {
    pub task_id: u64,
    pub node_id: String,
    pub event: EventKind,
    pub t_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_latency_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual_latency_ms: Option<f64>,
}

impl ScheduleEvent {
    fn bare(task: &TaskInstance, event: EventKind, t_ms: f64) -> Self {
        Self {
            task_id: task.id,
            node_id: task.node_id.clone(),
            event,
            t_ms,
            platform_id: None,
            predicted_latency_ms: None,
            actual_latency_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Neuroflow,
    Fifo,
    RoundRobin,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Neuroflow, Policy::Fifo, Policy::RoundRobin];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Neuroflow => "neuroflow",
            Policy::Fifo => "fifo",
            Policy::RoundRobin => "roundrobin",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "neuroflow" => Ok(Policy::Neuroflow),
            "fifo" => Ok(Policy::Fifo),
            "roundrobin" => Ok(Policy::RoundRobin),
            other => Err(format!(
                "unknown policy {other:?} (expected neuroflow, fifo, or roundrobin)"
            )),
        }
    }
}

// Ready-queue order: higher node priority first, then earlier release, then
// lower id. Release times are non-negative, so the f64 bit pattern orders
// them correctly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct ReadyKey {
    neg_priority: i64,
    release_bits: u64,
    id: u64,
}

impl ReadyKey {
    fn of(task: &TaskInstance) -> Self {
        Self {
            neg_priority: -i64::from(task.priority),
            release_bits: task.release_t_ms.to_bits(),
            id: task.id,
        }
    }
}

#[derive(Debug, Clone)]
struct SubQueue {
    nice: i32,
    weight: u32,
    vruntime_ms: f64,
    ready: Vec<ReadyKey>,
}

/// What became of a DNN dispatch attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum DnnDecision {
    Dispatched {
        task: TaskInstance,
        platform_id: String,
        predicted_ms: Option<f64>,
    },
    /// No platform passed admission this round; the task stays queued.
    Deferred,
}

/// Scheduler state: the DNN dispatch queue, per-subgraph fair-scheduling
/// accounts, and every task currently waiting in either queue.
#[derive(Debug, Clone)]
pub struct SchedState {
    pub clock_ms: f64,
    policy: Policy,
    default_platform: String,
    rr_cursor: usize,
    dnn_queue: VecDeque<u64>,
    queues: BTreeMap<String, SubQueue>,
    tasks: BTreeMap<u64, TaskInstance>,
}

impl SchedState {
    pub fn new(
        policy: Policy,
        subgraphs: &[(String, i32)],
        default_platform: &str,
    ) -> Result<Self, SchedError> {
        let mut queues = BTreeMap::new();
        for (id, nice) in subgraphs {
            let weight = nice_to_weight(*nice)?;
            queues.insert(
                id.clone(),
                SubQueue {
                    nice: *nice,
                    weight,
                    vruntime_ms: 0.0,
                    ready: Vec::new(),
                },
            );
        }
        Ok(Self {
            clock_ms: 0.0,
            policy,
            default_platform: default_platform.to_string(),
            rr_cursor: 0,
            dnn_queue: VecDeque::new(),
            queues,
            tasks: BTreeMap::new(),
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn vruntime_ms(&self, subgraph_id: &str) -> Option<f64> {
        self.queues.get(subgraph_id).map(|q| q.vruntime_ms)
    }

    pub fn nice(&self, subgraph_id: &str) -> Option<i32> {
        self.queues.get(subgraph_id).map(|q| q.nice)
    }

    pub fn subgraph_ids(&self) -> Vec<String> {
        self.queues.keys().cloned().collect()
    }

    /// Pending DNN task ids in arrival order.
    pub fn pending_dnn(&self) -> Vec<u64> {
        self.dnn_queue.iter().copied().collect()
    }

    pub fn pending_non_dnn(&self) -> usize {
        self.queues.values().map(|q| q.ready.len()).sum()
    }

    pub fn task(&self, id: u64) -> Option<&TaskInstance> {
        self.tasks.get(&id)
    }

    /// Put a ready task into its queue and stamp the audit trail.
    pub fn enqueue(&mut self, task: TaskInstance) -> Result<ScheduleEvent, SchedError> {
        if self.tasks.contains_key(&task.id) {
            return Err(SchedError::DuplicateTask(task.id));
        }
        if !self.queues.contains_key(&task.subgraph_id) {
            return Err(SchedError::UnknownSubgraph(task.subgraph_id.clone()));
        }
        let event = ScheduleEvent::bare(&task, EventKind::Enqueued, self.clock_ms);
        match task.kind {
            TaskKind::Dnn => self.dnn_queue.push_back(task.id),
            TaskKind::NonDnn => {
                let queue = self.queues.get_mut(&task.subgraph_id).unwrap();
                let key = ReadyKey::of(&task);
                let at = queue.ready.partition_point(|k| *k < key);
                queue.ready.insert(at, key);
            }
        }
        self.tasks.insert(task.id, task);
        Ok(event)
    }

    /// Charge `exec_ms` of execution to a subgraph's virtual runtime.
    pub fn account(&mut self, subgraph_id: &str, exec_ms: f64) -> Result<(), SchedError> {
        let queue = self
            .queues
            .get_mut(subgraph_id)
            .ok_or_else(|| SchedError::UnknownSubgraph(subgraph_id.to_string()))?;
        queue.vruntime_ms += exec_ms * 1024.0 / f64::from(queue.weight);
        Ok(())
    }

    /// Pick and remove the next CPU task under the active policy, or return
    /// None when every ready queue is empty.
    pub fn next_non_dnn(&mut self) -> Option<TaskInstance> {
        let key = match self.policy {
            Policy::Neuroflow => {
                // Min-vruntime subgraph among those with ready work, tie on
                // lexicographic id; its queue is already priority-ordered.
                let (_, queue) = self
                    .queues
                    .iter_mut()
                    .filter(|(_, q)| !q.ready.is_empty())
                    .min_by(|(ida, qa), (idb, qb)| {
                        qa.vruntime_ms
                            .total_cmp(&qb.vruntime_ms)
                            .then_with(|| ida.cmp(idb))
                    })?;
                queue.ready.remove(0)
            }
            Policy::Fifo => {
                // Globally earliest release regardless of subgraph or
                // priority, tie on id.
                let (_, queue) = self
                    .queues
                    .iter_mut()
                    .filter(|(_, q)| !q.ready.is_empty())
                    .min_by_key(|(_, q)| {
                        q.ready
                            .iter()
                            .map(|k| (k.release_bits, k.id))
                            .min()
                            .unwrap()
                    })?;
                let at = (0..queue.ready.len())
                    .min_by_key(|i| (queue.ready[*i].release_bits, queue.ready[*i].id))
                    .unwrap();
                queue.ready.remove(at)
            }
            Policy::RoundRobin => {
                let ids: Vec<&String> = self
                    .queues
                    .iter()
                    .filter(|(_, q)| !q.ready.is_empty())
                    .map(|(id, _)| id)
                    .collect();
                if ids.is_empty() {
                    return None;
                }
                let chosen = ids[self.rr_cursor % ids.len()].clone();
                self.rr_cursor = self.rr_cursor.wrapping_add(1);
                self.queues.get_mut(&chosen).unwrap().ready.remove(0)
            }
        };
        self.tasks.remove(&key.id)
    }

    /// Attempt to place one queued DNN task. Dispatch removes the task from
    /// the queue and reports the chosen platform; a deferral leaves it queued
    /// and logs a rejected-this-round event. The estimator choice is
    /// policy-dependent; a failing estimator degrades to the static fallback.
    pub fn dispatch_dnn(
        &mut self,
        task_id: u64,
        model: &ModelDescriptor,
        predictor: &dyn RuntimePredictor,
        fallback: &dyn RuntimePredictor,
        snapshots: &[PlatformSnapshot],
        platforms: &BTreeMap<String, PlatformState>,
    ) -> Result<(DnnDecision, ScheduleEvent), SchedError> {
        let at = self
            .dnn_queue
            .iter()
            .position(|id| *id == task_id)
            .ok_or(SchedError::UnknownTask(task_id))?;
        let task = self.tasks.get(&task_id).expect("queued task has a record");

        let choice = match self.policy {
            Policy::Neuroflow => {
                let prediction = match predictor.predict(model, snapshots, task.batch) {
                    Ok(p) => p,
                    Err(err) => {
                        log::warn!(
                            "estimator {} unavailable for task {} ({err}); degrading to {}",
                            predictor.name(),
                            task_id,
                            fallback.name()
                        );
                        fallback
                            .predict(model, snapshots, task.batch)
                            .map_err(|e| {
                                log::error!("fallback estimator failed for task {task_id}: {e}");
                                e
                            })
                            .ok()
                            .unwrap_or_default()
                    }
                };
                choose_platform(&prediction.latency_ms, snapshots, platforms, task.memory_mb)
            }
            Policy::Fifo => match platforms.get(&self.default_platform) {
                Some(state) if state.admit(task.memory_mb) == Admission::Admitted => {
                    Some((self.default_platform.clone(), None))
                }
                _ => None,
            },
            Policy::RoundRobin => {
                let ids: Vec<&String> = platforms.keys().collect();
                let mut choice = None;
                for step in 0..ids.len() {
                    let id = ids[(self.rr_cursor + step) % ids.len()];
                    if platforms[id].admit(task.memory_mb) == Admission::Admitted {
                        self.rr_cursor = self.rr_cursor.wrapping_add(step + 1);
                        choice = Some((id.clone(), None));
                        break;
                    }
                }
                choice
            }
        };

        match choice {
            Some((platform_id, predicted_ms)) => {
                self.dnn_queue.remove(at);
                let task = self.tasks.remove(&task_id).unwrap();
                let mut event = ScheduleEvent::bare(&task, EventKind::Dispatched, self.clock_ms);
                event.platform_id = Some(platform_id.clone());
                event.predicted_latency_ms = predicted_ms;
                Ok((
                    DnnDecision::Dispatched {
                        task,
                        platform_id,
                        predicted_ms,
                    },
                    event,
                ))
            }
            None => {
                let event = ScheduleEvent::bare(task, EventKind::Rejected, self.clock_ms);
                Ok((DnnDecision::Deferred, event))
            }
        }
    }
}

// Under the neuroflow policy a dispatched event carries the prediction; the
// baselines have none by construction.
fn choose_platform(
    predicted_ms: &BTreeMap<String, f64>,
    snapshots: &[PlatformSnapshot],
    platforms: &BTreeMap<String, PlatformState>,
    needed_mb: f64,
) -> Option<(String, Option<f64>)> {
    let gpu_util = |id: &str| {
        snapshots
            .iter()
            .find(|s| s.platform_id == id)
            .map(|s| s.gpu_util)
            .unwrap_or(0.0)
    };
    platforms
        .iter()
        .filter(|(_, state)| state.admit(needed_mb) == Admission::Admitted)
        .filter_map(|(id, _)| predicted_ms.get(id).map(|ms| (id, *ms)))
        .min_by(|(ida, msa), (idb, msb)| {
            msa.total_cmp(msb)
                .then_with(|| gpu_util(ida).total_cmp(&gpu_util(idb)))
                .then_with(|| ida.cmp(idb))
        })
        .map(|(id, ms)| (id.clone(), Some(ms)))
}

/// Assign each node to a single subgraph for queueing and accounting: the
/// lowest-nice (most favored) subgraph containing it, ties to the
/// lexicographically smallest end node. Shared ancestry is charged to the
/// path that needs it most.
pub fn assign_owners(
    subgraphs: &[Subgraph],
    nice_of: impl Fn(&Subgraph) -> i32,
) -> BTreeMap<String, String> {
    let mut owners: BTreeMap<String, (i32, String)> = BTreeMap::new();
    for sg in subgraphs {
        let nice = nice_of(sg);
        for node in &sg.members {
            match owners.get(node) {
                Some((best, end)) if (*best, end.as_str()) <= (nice, sg.end_node.as_str()) => {}
                _ => {
                    owners.insert(node.clone(), (nice, sg.end_node.clone()));
                }
            }
        }
    }
    owners
        .into_iter()
        .map(|(node, (_, end))| (node, end))
        .collect()
}
