//! Dataflow graph analysis.
//!
//! A program is a directed acyclic graph of publisher/subscriber nodes. End
//! nodes (out-degree zero) anchor subgraphs: an end node plus every ancestor
//! that can reach it. Within a subgraph, node priority is the longest directed
//! path to the end node, so nodes farther from the output run first. All
//! orderings break ties lexicographically on node id, which makes the whole
//! analysis deterministic.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id {0:?}")]
    DuplicateNodeId(String),
    #[error("edge ({from:?} -> {to:?}) references unknown node {missing:?}")]
    UnknownEdgeEndpoint {
        from: String,
        to: String,
        missing: String,
    },
    #[error("self loop on node {0:?}")]
    SelfLoop(String),
    #[error("cycle detected through nodes {0:?}")]
    CycleDetected(Vec<String>),
    #[error("invalid node {id:?}: {reason}")]
    InvalidNode { id: String, reason: String },
    #[error("graph parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    #[serde(rename = "DNN")]
    Dnn,
    #[serde(rename = "NonDNN")]
    NonDnn,
}

/// One node of the program graph. `model_ref` is present exactly when the
/// node runs a DNN; `period_ms` marks a periodic source; `cost_hint_ms` is the
/// nominal CPU cost of a non-DNN node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_hint_ms: Option<f64>,
}

/// On-disk graph schema: `{"nodes": [...], "edges": [["pub", "sub"], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<ProgramNode>,
    pub edges: Vec<(String, String)>,
}

/// Validated program graph. Edges are deduplicated; node and edge iteration
/// order is sorted so downstream analysis is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    nodes: BTreeMap<String, ProgramNode>,
    edges: BTreeSet<(String, String)>,
}

impl FlowGraph {
    pub fn node(&self, id: &str) -> Option<&ProgramNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ProgramNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn successors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> {
        self.edges
            .range((id.to_string(), String::new())..)
            .take_while(move |(from, _)| from == id)
            .map(|(_, to)| to.as_str())
    }

    pub fn predecessors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |(_, to)| to == id)
            .map(|(from, _)| from.as_str())
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.successors(id).count()
    }

    /// End nodes are the nodes with out-degree zero, in id order.
    pub fn end_nodes(&self) -> Vec<String> {
        self.nodes
            .keys()
            .filter(|id| self.out_degree(id) == 0)
            .cloned()
            .collect()
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.iter().cloned().collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph serialization")
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        let file: GraphFile = serde_json::from_str(s).map_err(|e| GraphError::Parse(e.to_string()))?;
        build_graph(file.nodes, file.edges)
    }
}

/// One extracted subgraph: an end node, every node that can reach it, a
/// deterministic topological order, and longest-path priorities. `nice` is a
/// scheduling knob assigned by the scheduler configuration, not by extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub end_node: String,
    pub members: BTreeSet<String>,
    pub topo_order: Vec<String>,
    pub priority: BTreeMap<String, u32>,
    pub nice: i32,
}

/// Validate nodes and edges into a [`FlowGraph`]. Duplicate edges are
/// silently deduplicated; duplicate ids, dangling endpoints, and self loops
/// are errors, as is a DNN/model_ref mismatch or a non-positive period.
pub fn build_graph(
    nodes: Vec<ProgramNode>,
    edges: Vec<(String, String)>,
) -> Result<FlowGraph, GraphError> {
    let mut node_map = BTreeMap::new();
    for node in nodes {
        match (node.kind, node.model_ref.is_some()) {
            (NodeKind::Dnn, false) => {
                return Err(GraphError::InvalidNode {
                    id: node.id,
                    reason: "DNN node requires model_ref".into(),
                })
            }
            (NodeKind::NonDnn, true) => {
                return Err(GraphError::InvalidNode {
                    id: node.id,
                    reason: "non-DNN node must not set model_ref".into(),
                })
            }
            _ => {}
        }
        if let Some(p) = node.period_ms {
            if !(p > 0.0) {
                return Err(GraphError::InvalidNode {
                    id: node.id,
                    reason: format!("period_ms must be positive, got {p}"),
                });
            }
        }
        if let Some(c) = node.cost_hint_ms {
            if !(c >= 0.0) {
                return Err(GraphError::InvalidNode {
                    id: node.id,
                    reason: format!("cost_hint_ms must be non-negative, got {c}"),
                });
            }
        }
        let id = node.id.clone();
        if node_map.insert(id.clone(), node).is_some() {
            return Err(GraphError::DuplicateNodeId(id));
        }
    }
    let mut edge_set = BTreeSet::new();
    for (from, to) in edges {
        for end in [&from, &to] {
            if !node_map.contains_key(end) {
                return Err(GraphError::UnknownEdgeEndpoint {
                    from: from.clone(),
                    to: to.clone(),
                    missing: end.clone(),
                });
            }
        }
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        edge_set.insert((from, to));
    }
    Ok(FlowGraph {
        nodes: node_map,
        edges: edge_set,
    })
}

/// Find one concrete cycle if the graph has any, as an ordered node list.
fn find_cycle(graph: &FlowGraph) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color: BTreeMap<&str, Color> = graph.node_ids().map(|id| (id, Color::White)).collect();
    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();

    for start in graph.node_ids() {
        if color[start] != Color::White {
            continue;
        }
        // Iterative DFS keeping an explicit successor cursor per frame.
        let mut stack: Vec<(&str, Vec<&str>, usize)> = Vec::new();
        let succs: Vec<&str> = graph.successors(start).collect();
        color.insert(start, Color::Gray);
        stack.push((start, succs, 0));
        while let Some((node, succs, idx)) = stack.last_mut() {
            if *idx >= succs.len() {
                color.insert(node, Color::Black);
                stack.pop();
                continue;
            }
            let next = succs[*idx];
            *idx += 1;
            match color[next] {
                Color::White => {
                    parent.insert(next, node);
                    let nsuccs: Vec<&str> = graph.successors(next).collect();
                    color.insert(next, Color::Gray);
                    stack.push((next, nsuccs, 0));
                }
                Color::Gray => {
                    // Back edge: walk parents from `node` back to `next`.
                    let mut cycle = vec![next.to_string()];
                    let mut cur: &str = node;
                    while cur != next {
                        cycle.push(cur.to_string());
                        cur = parent[cur];
                    }
                    cycle.reverse();
                    return Some(cycle);
                }
                Color::Black => {}
            }
        }
    }
    None
}

/// Reverse reachability: the end node plus every node with a directed path to
/// it.
fn ancestors_of(graph: &FlowGraph, end: &str) -> BTreeSet<String> {
    let mut members = BTreeSet::new();
    let mut queue = VecDeque::new();
    members.insert(end.to_string());
    queue.push_back(end.to_string());
    while let Some(node) = queue.pop_front() {
        for pred in graph.predecessors(&node) {
            if members.insert(pred.to_string()) {
                queue.push_back(pred.to_string());
            }
        }
    }
    members
}

/// Kahn's algorithm over the subgraph induced by `members`, breaking ties by
/// ascending node id. A chain a->b->c yields [a, b, c]; a diamond yields
/// [a, b, c, d].
pub fn topological_order(
    graph: &FlowGraph,
    members: &BTreeSet<String>,
) -> Result<Vec<String>, GraphError> {
    let mut indegree: BTreeMap<&str, usize> = members.iter().map(|m| (m.as_str(), 0)).collect();
    for (from, to) in graph.edges() {
        if members.contains(from) && members.contains(to) {
            *indegree.get_mut(to).expect("member") += 1;
        }
    }
    // Min-heap on node id for the deterministic tie-break.
    let mut heap: BinaryHeap<std::cmp::Reverse<&str>> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| std::cmp::Reverse(*id))
        .collect();
    let mut order = Vec::with_capacity(members.len());
    while let Some(std::cmp::Reverse(node)) = heap.pop() {
        order.push(node.to_string());
        for succ in graph.successors(node) {
            if let Some(d) = indegree.get_mut(succ) {
                *d -= 1;
                if *d == 0 {
                    heap.push(std::cmp::Reverse(succ));
                }
            }
        }
    }
    if order.len() != members.len() {
        let leftovers: Vec<String> = members
            .iter()
            .filter(|m| !order.contains(m))
            .cloned()
            .collect();
        return Err(GraphError::CycleDetected(leftovers));
    }
    Ok(order)
}

/// Longest directed path from each member to the end node; the end node gets
/// 0. Relies on `topo` being a valid topological order of `members`.
pub fn assign_priorities(
    graph: &FlowGraph,
    members: &BTreeSet<String>,
    end_node: &str,
    topo: &[String],
) -> BTreeMap<String, u32> {
    let mut priority: BTreeMap<String, u32> = BTreeMap::new();
    priority.insert(end_node.to_string(), 0);
    for node in topo.iter().rev() {
        let best = graph
            .successors(node)
            .filter(|s| members.contains(*s))
            .filter_map(|s| priority.get(s))
            .max()
            .map(|p| p + 1);
        if let Some(p) = best {
            priority.insert(node.clone(), p);
        } else {
            priority.entry(node.clone()).or_insert(0);
        }
    }
    priority
}

/// Extract one subgraph per end node, with topological order and priorities.
/// Any cycle anywhere in the graph is a hard error: cyclic programs are
/// rejected rather than partially analyzed.
pub fn extract_subgraphs(graph: &FlowGraph) -> Result<Vec<Subgraph>, GraphError> {
    if let Some(cycle) = find_cycle(graph) {
        return Err(GraphError::CycleDetected(cycle));
    }
    let mut subgraphs = Vec::new();
    for end in graph.end_nodes() {
        let members = ancestors_of(graph, &end);
        let topo = topological_order(graph, &members)?;
        let priority = assign_priorities(graph, &members, &end, &topo);
        subgraphs.push(Subgraph {
            end_node: end,
            members,
            topo_order: topo,
            priority,
            nice: 0,
        });
    }
    Ok(subgraphs)
}

/// Nodes shared between subgraphs take their maximum priority.
pub fn merged_priorities(subgraphs: &[Subgraph]) -> BTreeMap<String, u32> {
    let mut merged: BTreeMap<String, u32> = BTreeMap::new();
    for sub in subgraphs {
        for (node, &p) in &sub.priority {
            let entry = merged.entry(node.clone()).or_insert(p);
            *entry = (*entry).max(p);
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(id: &str) -> ProgramNode {
        ProgramNode {
            id: id.into(),
            kind: NodeKind::NonDnn,
            model_ref: None,
            period_ms: None,
            cost_hint_ms: None,
        }
    }

    fn e(from: &str, to: &str) -> (String, String) {
        (from.into(), to.into())
    }

    fn graph(ids: &[&str], edges: &[(&str, &str)]) -> FlowGraph {
        build_graph(
            ids.iter().map(|i| n(i)).collect(),
            edges.iter().map(|(a, b)| e(a, b)).collect(),
        )
        .unwrap()
    }

    // Independent oracles, kept free of the production code paths.
    mod oracle {
        use std::collections::{BTreeMap, BTreeSet};

        /// Fixpoint reverse reachability.
        pub fn members(nodes: &[String], edges: &[(String, String)], end: &str) -> BTreeSet<String> {
            let mut set: BTreeSet<String> = [end.to_string()].into();
            loop {
                let mut grew = false;
                for (from, to) in edges {
                    if set.contains(to) && nodes.contains(from) && set.insert(from.clone()) {
                        grew = true;
                    }
                }
                if !grew {
                    return set;
                }
            }
        }

        /// A permutation is a valid topological order iff it covers the member
        /// set exactly once and respects every induced edge.
        pub fn topo_valid(
            order: &[String],
            members: &BTreeSet<String>,
            edges: &[(String, String)],
        ) -> bool {
            if order.len() != members.len() {
                return false;
            }
            let pos: BTreeMap<&str, usize> =
                order.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
            if members.iter().any(|m| !pos.contains_key(m.as_str())) {
                return false;
            }
            edges
                .iter()
                .filter(|(a, b)| members.contains(a) && members.contains(b))
                .all(|(a, b)| pos[a.as_str()] < pos[b.as_str()])
        }

        /// Memoized DFS longest path to `end` over the induced subgraph.
        pub fn longest_path(
            members: &BTreeSet<String>,
            edges: &[(String, String)],
            end: &str,
        ) -> BTreeMap<String, u32> {
            fn go(
                node: &str,
                end: &str,
                members: &BTreeSet<String>,
                edges: &[(String, String)],
                memo: &mut BTreeMap<String, u32>,
            ) -> u32 {
                if node == end {
                    return 0;
                }
                if let Some(&v) = memo.get(node) {
                    return v;
                }
                let best = edges
                    .iter()
                    .filter(|(a, b)| a == node && members.contains(b))
                    .map(|(_, b)| 1 + go(b, end, members, edges, memo))
                    .max()
                    .unwrap_or(0);
                memo.insert(node.to_string(), best);
                best
            }
            let mut memo = BTreeMap::new();
            members
                .iter()
                .map(|m| {
                    let v = go(m, end, members, edges, &mut memo);
                    (m.clone(), v)
                })
                .collect()
        }

        /// Cycle exists iff some node reaches itself through >= 1 edge.
        pub fn has_cycle(nodes: &[String], edges: &[(String, String)]) -> bool {
            for start in nodes {
                let mut reach: BTreeSet<&str> = BTreeSet::new();
                loop {
                    let mut grew = false;
                    for (from, to) in edges {
                        if (from == start || reach.contains(from.as_str()))
                            && reach.insert(to.as_str())
                        {
                            grew = true;
                        }
                    }
                    if !grew {
                        break;
                    }
                }
                if reach.contains(start.as_str()) {
                    return true;
                }
            }
            false
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = build_graph(vec![n("a"), n("a")], vec![]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateNodeId("a".into()));
    }

    #[test]
    fn rejects_unknown_endpoint_and_self_loop() {
        let err = build_graph(vec![n("a")], vec![e("a", "b")]).unwrap_err();
        assert!(matches!(err, GraphError::UnknownEdgeEndpoint { .. }));
        let err = build_graph(vec![n("a")], vec![e("a", "a")]).unwrap_err();
        assert_eq!(err, GraphError::SelfLoop("a".into()));
    }

    #[test]
    fn rejects_model_ref_mismatch() {
        let mut dnn = n("d");
        dnn.kind = NodeKind::Dnn;
        assert!(matches!(
            build_graph(vec![dnn], vec![]),
            Err(GraphError::InvalidNode { .. })
        ));
        let mut bad = n("x");
        bad.model_ref = Some("m".into());
        assert!(matches!(
            build_graph(vec![bad], vec![]),
            Err(GraphError::InvalidNode { .. })
        ));
    }

    #[test]
    fn deduplicates_edges_silently() {
        let g = build_graph(vec![n("a"), n("b")], vec![e("a", "b"), e("a", "b")]).unwrap();
        assert_eq!(g.edges().count(), 1);
    }

    #[test]
    fn chain_topo_and_priorities() {
        let g = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let subs = extract_subgraphs(&g).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].topo_order, vec!["a", "b", "c"]);
        let want: BTreeMap<String, u32> =
            [("a".into(), 2), ("b".into(), 1), ("c".into(), 0)].into();
        assert_eq!(subs[0].priority, want);
    }

    #[test]
    fn diamond_tie_breaks_lexicographically() {
        let g = graph(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        );
        let subs = extract_subgraphs(&g).unwrap();
        assert_eq!(subs[0].topo_order, vec!["a", "b", "c", "d"]);
        let want: BTreeMap<String, u32> = [
            ("a".into(), 2),
            ("b".into(), 1),
            ("c".into(), 1),
            ("d".into(), 0),
        ]
        .into();
        assert_eq!(subs[0].priority, want);
    }

    #[test]
    fn shared_ancestor_appears_in_both_subgraphs() {
        let g = graph(
            &["src", "l", "r"],
            &[("src", "l"), ("src", "r")],
        );
        let subs = extract_subgraphs(&g).unwrap();
        assert_eq!(subs.len(), 2);
        assert!(subs.iter().all(|s| s.members.contains("src")));
        let merged = merged_priorities(&subs);
        assert_eq!(merged["src"], 1);
    }

    #[test]
    fn cycle_is_rejected_even_when_detached_from_end_nodes() {
        let g = graph(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("c", "d"), ("d", "c")],
        );
        match extract_subgraphs(&g) {
            Err(GraphError::CycleDetected(nodes)) => {
                assert!(nodes.contains(&"c".to_string()) && nodes.contains(&"d".to_string()));
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let g = graph(
            &["a", "b", "c", "d", "e"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("c", "e")],
        );
        assert_eq!(extract_subgraphs(&g).unwrap(), extract_subgraphs(&g).unwrap());
    }

    #[test]
    fn graph_json_rejects_unknown_fields() {
        let s = r#"{"nodes":[{"id":"a","kind":"NonDNN","bogus":1}],"edges":[]}"#;
        assert!(matches!(FlowGraph::from_json(s), Err(GraphError::Parse(_))));
        let s = r#"{"nodes":[{"id":"a","kind":"NonDNN"}],"edges":[],"extra":{}}"#;
        assert!(matches!(FlowGraph::from_json(s), Err(GraphError::Parse(_))));
    }

    #[test]
    fn graph_json_round_trips() {
        let g = graph(&["a", "b"], &[("a", "b")]);
        let again = FlowGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, again);
    }

    /// Random digraph as (node count, edge list) from a proptest strategy.
    fn arb_digraph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..=8).prop_flat_map(|nodes| {
            let edges = proptest::collection::vec((0..nodes, 0..nodes), 0..=nodes * 2);
            (Just(nodes), edges)
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_oracles((nodes, raw_edges) in arb_digraph()) {
            let ids: Vec<String> = (0..nodes).map(|i| format!("n{i}")).collect();
            let edges: Vec<(String, String)> = raw_edges
                .iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (ids[*a].clone(), ids[*b].clone()))
                .collect();
            let g = build_graph(ids.iter().map(|i| n(i)).collect(), edges.clone()).unwrap();
            let deduped: Vec<(String, String)> =
                g.edges().map(|(a, b)| (a.to_string(), b.to_string())).collect();

            match extract_subgraphs(&g) {
                Err(GraphError::CycleDetected(_)) => {
                    prop_assert!(oracle::has_cycle(&ids, &deduped));
                }
                Ok(subs) => {
                    prop_assert!(!oracle::has_cycle(&ids, &deduped));
                    let ends = g.end_nodes();
                    prop_assert_eq!(subs.len(), ends.len());
                    for (sub, end) in subs.iter().zip(ends.iter()) {
                        prop_assert_eq!(&sub.end_node, end);
                        let want_members = oracle::members(&ids, &deduped, end);
                        prop_assert_eq!(&sub.members, &want_members);
                        prop_assert!(oracle::topo_valid(&sub.topo_order, &sub.members, &deduped));
                        let want_prio = oracle::longest_path(&sub.members, &deduped, end);
                        prop_assert_eq!(&sub.priority, &want_prio);
                    }
                }
                Err(other) => prop_assert!(false, "unexpected error {:?}", other),
            }
        }
    }
}
