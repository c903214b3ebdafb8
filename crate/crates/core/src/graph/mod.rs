//! Process-graph data model: flat labeled graphs, block trees, validation,
//! and structure detection by pattern reduction.

mod decompose;
pub(crate) mod flatten;
pub(crate) mod json;

pub use decompose::{decompose, Decomposition};
pub use flatten::flatten;
pub use json::{parse_graph, parse_tree, serialize_graph, serialize_tree};

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    /// Malformed JSON or fields that do not fit the schema.
    #[error("schema error: {0}")]
    Schema(String),
    /// Structurally invalid graph; the message names the offending node or edge.
    #[error("validation error: {0}")]
    Validation(String),
}

/// Short unique node identifier within one graph. Must match `[A-Za-z0-9_]+`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, GraphError> {
        let id = id.into();
        if id.is_empty() {
            return Err(GraphError::Validation("empty node id".into()));
        }
        if !id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            return Err(GraphError::Validation(format!(
                "node id {id:?} contains characters outside [A-Za-z0-9_]"
            )));
        }
        Ok(NodeId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GatewayKind {
    Xor,
    And,
    Or,
}

impl GatewayKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GatewayKind::Xor => "xor",
            GatewayKind::And => "and",
            GatewayKind::Or => "or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatewayRole {
    Split,
    Join,
}

/// Node payload: an activity carries a label, a gateway carries kind and role.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Activity { label: String },
    Gateway { kind: GatewayKind, role: GatewayRole },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
}

impl Node {
    pub fn activity(id: NodeId, label: impl Into<String>) -> Self {
        Node { id, kind: NodeKind::Activity { label: label.into() } }
    }

    pub fn gateway(id: NodeId, kind: GatewayKind, role: GatewayRole) -> Self {
        Node { id, kind: NodeKind::Gateway { kind, role } }
    }

    pub fn is_activity(&self) -> bool {
        matches!(self.kind, NodeKind::Activity { .. })
    }

    pub fn is_gateway(&self) -> bool {
        matches!(self.kind, NodeKind::Gateway { .. })
    }

    pub fn label(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Activity { label } => Some(label),
            NodeKind::Gateway { .. } => None,
        }
    }
}

/// A validated labeled process graph.
///
/// Construction goes through [`ProcessGraph::new`], which checks all
/// structural invariants: edges reference existing nodes, the entry has
/// in-degree 0, the exit has out-degree 0, and every node lies on some
/// entry-to-exit path.
#[derive(Debug, Clone)]
pub struct ProcessGraph {
    id: String,
    nodes: Vec<Node>,
    edges: Vec<(NodeId, NodeId)>,
    entry: NodeId,
    exit: NodeId,
    index: HashMap<NodeId, usize>,
}

impl ProcessGraph {
    pub fn new(
        id: impl Into<String>,
        nodes: Vec<Node>,
        edges: Vec<(NodeId, NodeId)>,
        entry: NodeId,
        exit: NodeId,
    ) -> Result<Self, GraphError> {
        let id = id.into();
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(GraphError::Validation(format!(
                "graph id {id:?} must be non-empty and contain no whitespace"
            )));
        }
        let mut index = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(GraphError::Validation(format!("duplicate node id {}", node.id)));
            }
            if let NodeKind::Activity { label } = &node.kind {
                if label.trim().is_empty() {
                    return Err(GraphError::Validation(format!(
                        "activity {} has an empty label",
                        node.id
                    )));
                }
            }
        }
        for (from, to) in &edges {
            for end in [from, to] {
                if !index.contains_key(end) {
                    return Err(GraphError::Validation(format!(
                        "edge ({from}, {to}) references unknown node {end}"
                    )));
                }
            }
        }
        for end in [&entry, &exit] {
            if !index.contains_key(end) {
                return Err(GraphError::Validation(format!("unknown entry/exit node {end}")));
            }
        }
        let graph = ProcessGraph { id, nodes, edges, entry, exit, index };
        if graph.in_degree(&graph.entry) != 0 {
            return Err(GraphError::Validation(format!(
                "entry node {} has incoming edges",
                graph.entry
            )));
        }
        if graph.out_degree(&graph.exit) != 0 {
            return Err(GraphError::Validation(format!(
                "exit node {} has outgoing edges",
                graph.exit
            )));
        }
        let forward = graph.reachable(&graph.entry, false);
        let backward = graph.reachable(&graph.exit, true);
        for node in &graph.nodes {
            if !forward.contains(&node.id) {
                return Err(GraphError::Validation(format!(
                    "node {} is unreachable from entry",
                    node.id
                )));
            }
            if !backward.contains(&node.id) {
                return Err(GraphError::Validation(format!(
                    "node {} cannot reach exit",
                    node.id
                )));
            }
        }
        Ok(graph)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn entry(&self) -> &NodeId {
        &self.entry
    }

    pub fn exit(&self) -> &NodeId {
        &self.exit
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn in_degree(&self, id: &NodeId) -> usize {
        self.edges.iter().filter(|(_, to)| to == id).count()
    }

    pub fn out_degree(&self, id: &NodeId) -> usize {
        self.edges.iter().filter(|(from, _)| from == id).count()
    }

    pub fn successors<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a NodeId> {
        self.edges.iter().filter(move |(from, _)| from == id).map(|(_, to)| to)
    }

    pub fn predecessors<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a NodeId> {
        self.edges.iter().filter(move |(_, to)| to == id).map(|(from, _)| from)
    }

    fn reachable(&self, start: &NodeId, reverse: bool) -> HashSet<NodeId> {
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start.clone());
        while let Some(cur) = queue.pop_front() {
            for (from, to) in &self.edges {
                let (src, dst) = if reverse { (to, from) } else { (from, to) };
                if src == &cur && seen.insert(dst.clone()) {
                    queue.push_back(dst.clone());
                }
            }
        }
        seen
    }

    /// Deterministic topological order; ties broken by node id. Cycles (loop
    /// back-edges) are broken by taking the smallest-id blocked node.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let mut in_deg: BTreeMap<NodeId, usize> =
            self.nodes.iter().map(|n| (n.id.clone(), 0)).collect();
        for (_, to) in &self.edges {
            *in_deg.get_mut(to).expect("validated edge") += 1;
        }
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut done: HashSet<NodeId> = HashSet::new();
        while order.len() < self.nodes.len() {
            let next = in_deg
                .iter()
                .filter(|(id, _)| !done.contains(*id))
                .find(|(_, &d)| d == 0)
                .map(|(id, _)| id.clone())
                .or_else(|| {
                    // cycle: release the smallest blocked node
                    in_deg.keys().find(|id| !done.contains(*id)).cloned()
                })
                .expect("some node remains");
            done.insert(next.clone());
            for (from, to) in &self.edges {
                if from == &next && !done.contains(to) {
                    let d = in_deg.get_mut(to).expect("validated edge");
                    *d = d.saturating_sub(1);
                }
            }
            order.push(next);
        }
        order
    }
}

/// A structured pattern tree over activities.
///
/// `Seq` needs at least two children, the branching patterns at least two
/// branches, and every activity `node_id` must be unique within the tree.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockTree {
    Act { label: String, node_id: NodeId },
    Seq(Vec<BlockTree>),
    Xor(Vec<BlockTree>),
    And(Vec<BlockTree>),
    Or(Vec<BlockTree>),
    Loop { body: Box<BlockTree>, max_unroll: u32 },
}

pub const DEFAULT_MAX_UNROLL: u32 = 2;

impl BlockTree {
    pub fn act(node_id: &str, label: &str) -> Self {
        BlockTree::Act { label: label.to_string(), node_id: NodeId::new(node_id).expect("valid id") }
    }

    /// Checks the structural invariants of the tree.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut seen = HashSet::new();
        self.validate_inner(&mut seen)
    }

    fn validate_inner<'a>(&'a self, seen: &mut HashSet<&'a NodeId>) -> Result<(), GraphError> {
        match self {
            BlockTree::Act { label, node_id } => {
                if label.trim().is_empty() {
                    return Err(GraphError::Validation(format!(
                        "activity {node_id} has an empty label"
                    )));
                }
                if !seen.insert(node_id) {
                    return Err(GraphError::Validation(format!(
                        "duplicate activity node id {node_id}"
                    )));
                }
                Ok(())
            }
            BlockTree::Seq(children) => {
                if children.len() < 2 {
                    return Err(GraphError::Validation("seq needs >= 2 children".into()));
                }
                children.iter().try_for_each(|c| c.validate_inner(seen))
            }
            BlockTree::Xor(branches) | BlockTree::And(branches) | BlockTree::Or(branches) => {
                if branches.len() < 2 {
                    return Err(GraphError::Validation("branching pattern needs >= 2 branches".into()));
                }
                branches.iter().try_for_each(|b| b.validate_inner(seen))
            }
            BlockTree::Loop { body, max_unroll } => {
                if *max_unroll == 0 {
                    return Err(GraphError::Validation("loop max_unroll must be positive".into()));
                }
                body.validate_inner(seen)
            }
        }
    }

    /// Activity (label, node_id) pairs in depth-first order.
    pub fn activities(&self) -> Vec<(&str, &NodeId)> {
        let mut out = Vec::new();
        self.collect_activities(&mut out);
        out
    }

    fn collect_activities<'a>(&'a self, out: &mut Vec<(&'a str, &'a NodeId)>) {
        match self {
            BlockTree::Act { label, node_id } => out.push((label, node_id)),
            BlockTree::Seq(children) => children.iter().for_each(|c| c.collect_activities(out)),
            BlockTree::Xor(b) | BlockTree::And(b) | BlockTree::Or(b) => {
                b.iter().for_each(|c| c.collect_activities(out))
            }
            BlockTree::Loop { body, .. } => body.collect_activities(out),
        }
    }

    /// Structure-preserving normal form: nested `Seq` children are spliced
    /// into their parent and the branches of `Xor`/`And`/`Or` are sorted by a
    /// stable key, so two trees that differ only in branch order (or in
    /// redundant `Seq` nesting) compare equal.
    pub fn canonical(&self) -> BlockTree {
        match self {
            BlockTree::Act { .. } => self.clone(),
            BlockTree::Seq(children) => {
                let mut flat = Vec::new();
                for child in children {
                    match child.canonical() {
                        BlockTree::Seq(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                if flat.len() == 1 {
                    flat.pop().expect("non-empty")
                } else {
                    BlockTree::Seq(flat)
                }
            }
            BlockTree::Xor(b) => BlockTree::Xor(Self::sorted_branches(b)),
            BlockTree::And(b) => BlockTree::And(Self::sorted_branches(b)),
            BlockTree::Or(b) => BlockTree::Or(Self::sorted_branches(b)),
            BlockTree::Loop { body, max_unroll } => BlockTree::Loop {
                body: Box::new(body.canonical()),
                max_unroll: *max_unroll,
            },
        }
    }

    fn sorted_branches(branches: &[BlockTree]) -> Vec<BlockTree> {
        let mut out: Vec<BlockTree> = branches.iter().map(|b| b.canonical()).collect();
        out.sort_by_key(|b| b.sort_key());
        out
    }

    fn sort_key(&self) -> String {
        match self {
            BlockTree::Act { node_id, .. } => format!("a:{node_id}"),
            BlockTree::Seq(c) => {
                format!("s:({})", c.iter().map(|x| x.sort_key()).collect::<Vec<_>>().join(","))
            }
            BlockTree::Xor(b) => {
                format!("x:({})", b.iter().map(|x| x.sort_key()).collect::<Vec<_>>().join(","))
            }
            BlockTree::And(b) => {
                format!("n:({})", b.iter().map(|x| x.sort_key()).collect::<Vec<_>>().join(","))
            }
            BlockTree::Or(b) => {
                format!("o:({})", b.iter().map(|x| x.sort_key()).collect::<Vec<_>>().join(","))
            }
            BlockTree::Loop { body, max_unroll } => format!("l{}:({})", max_unroll, body.sort_key()),
        }
    }
}

/// An ordered, non-empty list of sentences describing a process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessText {
    sentences: Vec<String>,
}

impl ProcessText {
    pub fn new(sentences: Vec<String>) -> Result<Self, GraphError> {
        if sentences.is_empty() {
            return Err(GraphError::Validation("process text needs >= 1 sentence".into()));
        }
        if let Some(i) = sentences.iter().position(|s| s.trim().is_empty()) {
            return Err(GraphError::Validation(format!("sentence {i} is empty")));
        }
        Ok(ProcessText { sentences })
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    /// All sentences joined by a single space.
    pub fn joined(&self) -> String {
        self.sentences.join(" ")
    }
}

/// A consistency value in `[0.0, 1.0]`; 1.0 means the graph and the text
/// describe an identical process.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ConsistencyScore(f64);

impl ConsistencyScore {
    pub fn new(value: f64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(GraphError::Validation(format!(
                "consistency score {value} outside [0.0, 1.0]"
            )));
        }
        Ok(ConsistencyScore(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(ids: &[&str]) -> ProcessGraph {
        let nodes = ids.iter().map(|id| Node::activity(NodeId::new(*id).unwrap(), *id)).collect();
        let edges = ids
            .windows(2)
            .map(|w| (NodeId::new(w[0]).unwrap(), NodeId::new(w[1]).unwrap()))
            .collect();
        ProcessGraph::new(
            "g",
            nodes,
            edges,
            NodeId::new(ids[0]).unwrap(),
            NodeId::new(*ids.last().unwrap()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn node_id_rejects_bad_tokens() {
        assert!(NodeId::new("ok_1").is_ok());
        assert!(NodeId::new("").is_err());
        assert!(NodeId::new("a b").is_err());
        assert!(NodeId::new("a.b").is_err());
    }

    #[test]
    fn minimal_chain_validates() {
        let g = chain(&["A", "B"]);
        assert_eq!(g.entry().as_str(), "A");
        assert_eq!(g.exit().as_str(), "B");
    }

    #[test]
    fn dangling_edge_names_offender() {
        let a = NodeId::new("A").unwrap();
        let err = ProcessGraph::new(
            "g",
            vec![Node::activity(a.clone(), "A")],
            vec![(a.clone(), NodeId::new("Z").unwrap())],
            a.clone(),
            a,
        )
        .unwrap_err();
        assert!(err.to_string().contains('Z'), "{err}");
    }

    #[test]
    fn unreachable_node_rejected() {
        let ids: Vec<NodeId> = ["A", "B", "C"].iter().map(|s| NodeId::new(*s).unwrap()).collect();
        let nodes = ids.iter().map(|id| Node::activity(id.clone(), id.as_str())).collect();
        let err = ProcessGraph::new(
            "g",
            nodes,
            vec![(ids[0].clone(), ids[1].clone())],
            ids[0].clone(),
            ids[1].clone(),
        )
        .unwrap_err();
        assert!(err.to_string().contains('C'), "{err}");
    }

    #[test]
    fn entry_with_incoming_edge_rejected() {
        let ids: Vec<NodeId> = ["A", "B"].iter().map(|s| NodeId::new(*s).unwrap()).collect();
        let nodes: Vec<Node> =
            ids.iter().map(|id| Node::activity(id.clone(), id.as_str())).collect();
        let err = ProcessGraph::new(
            "g",
            nodes,
            vec![(ids[0].clone(), ids[1].clone()), (ids[1].clone(), ids[0].clone())],
            ids[0].clone(),
            ids[1].clone(),
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::Validation(_)));
    }

    #[test]
    fn topological_order_is_deterministic() {
        let g = chain(&["A", "B", "C"]);
        assert_eq!(
            g.topological_order().iter().map(|n| n.as_str()).collect::<Vec<_>>(),
            vec!["A", "B", "C"]
        );
    }

    #[test]
    fn tree_invariants() {
        assert!(BlockTree::Seq(vec![BlockTree::act("a", "a")]).validate().is_err());
        assert!(BlockTree::Xor(vec![BlockTree::act("a", "a")]).validate().is_err());
        let dup = BlockTree::Seq(vec![BlockTree::act("a", "x"), BlockTree::act("a", "y")]);
        assert!(dup.validate().is_err());
        let ok = BlockTree::Seq(vec![BlockTree::act("a", "x"), BlockTree::act("b", "y")]);
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn canonical_ignores_branch_order_and_seq_nesting() {
        let t1 = BlockTree::Xor(vec![BlockTree::act("a", "a"), BlockTree::act("b", "b")]);
        let t2 = BlockTree::Xor(vec![BlockTree::act("b", "b"), BlockTree::act("a", "a")]);
        assert_eq!(t1.canonical(), t2.canonical());

        let nested = BlockTree::Seq(vec![
            BlockTree::act("a", "a"),
            BlockTree::Seq(vec![BlockTree::act("b", "b"), BlockTree::act("c", "c")]),
        ]);
        let flat = BlockTree::Seq(vec![
            BlockTree::act("a", "a"),
            BlockTree::act("b", "b"),
            BlockTree::act("c", "c"),
        ]);
        assert_eq!(nested.canonical(), flat.canonical());
    }

    #[test]
    fn score_bounds() {
        assert!(ConsistencyScore::new(0.0).is_ok());
        assert!(ConsistencyScore::new(1.0).is_ok());
        assert!(ConsistencyScore::new(1.0001).is_err());
        assert!(ConsistencyScore::new(-0.1).is_err());
    }
}
