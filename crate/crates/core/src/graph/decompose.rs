//! Structure detection by iterative pattern reduction.

use std::collections::BTreeSet;

use super::{
    BlockTree, GatewayKind, GatewayRole, NodeKind, ProcessGraph, DEFAULT_MAX_UNROLL,
};

/// Result of [`decompose`]: either the recovered pattern tree or the size of
/// the remnant the reduction got stuck on.
#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    Structured(BlockTree),
    Unstructured { remnant_nodes: usize },
}

#[derive(Debug, Clone)]
enum Vertex {
    Fragment(BlockTree),
    Gateway { kind: GatewayKind, role: GatewayRole },
}

/// Reduces the graph with three rules until a fixpoint:
///
/// (a) an edge between two fragments where the source has out-degree 1 and
///     the target in-degree 1 collapses into a `Seq`;
/// (b) a split whose branches are single fragments leading to a matching
///     join of the same kind collapses into `Xor`/`And`/`Or`;
/// (c) an XOR join followed by an XOR split with a single-fragment back path
///     collapses into `Loop`.
///
/// The graph is structured iff it reduces to one fragment.
pub fn decompose(graph: &ProcessGraph) -> Decomposition {
    let mut work = Work::new(graph);
    loop {
        if work.reduce_seq() || work.reduce_block() || work.reduce_loop() {
            continue;
        }
        break;
    }
    let live: Vec<usize> = work.live_vertices();
    if live.len() == 1 {
        if let Vertex::Fragment(tree) = &work.verts[live[0]].as_ref().expect("live") {
            return Decomposition::Structured(tree.clone());
        }
    }
    Decomposition::Unstructured { remnant_nodes: live.len() }
}

struct Work {
    verts: Vec<Option<Vertex>>,
    edges: BTreeSet<(usize, usize)>,
}

impl Work {
    fn new(graph: &ProcessGraph) -> Self {
        let verts: Vec<Option<Vertex>> = graph
            .nodes()
            .iter()
            .map(|n| {
                Some(match &n.kind {
                    NodeKind::Activity { label } => Vertex::Fragment(BlockTree::Act {
                        label: label.clone(),
                        node_id: n.id.clone(),
                    }),
                    NodeKind::Gateway { kind, role } => {
                        Vertex::Gateway { kind: *kind, role: *role }
                    }
                })
            })
            .collect();
        let pos = |id| graph.nodes().iter().position(|n| &n.id == id).expect("validated edge");
        let edges = graph.edges().iter().map(|(f, t)| (pos(f), pos(t))).collect();
        Work { verts, edges }
    }

    fn live_vertices(&self) -> Vec<usize> {
        (0..self.verts.len()).filter(|&i| self.verts[i].is_some()).collect()
    }

    fn ins(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|(_, t)| *t == v).map(|(f, _)| *f).collect()
    }

    fn outs(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|(f, _)| *f == v).map(|(_, t)| *t).collect()
    }

    fn is_fragment(&self, v: usize) -> bool {
        matches!(self.verts[v], Some(Vertex::Fragment(_)))
    }

    fn take_tree(&mut self, v: usize) -> BlockTree {
        match self.verts[v].take() {
            Some(Vertex::Fragment(t)) => t,
            other => panic!("expected fragment at {v}, got {other:?}"),
        }
    }

    fn seq_children(tree: BlockTree) -> Vec<BlockTree> {
        match tree {
            BlockTree::Seq(children) => children,
            other => vec![other],
        }
    }

    /// Rule (a): collapse `u -> v` between fragments into one `Seq` fragment.
    fn reduce_seq(&mut self) -> bool {
        let candidate = self.edges.iter().copied().find(|&(u, v)| {
            u != v
                && self.is_fragment(u)
                && self.is_fragment(v)
                && self.outs(u).len() == 1
                && self.ins(v).len() == 1
        });
        let Some((u, v)) = candidate else { return false };
        let mut children = Self::seq_children(self.take_tree(u));
        children.extend(Self::seq_children(self.take_tree(v)));
        self.verts[u] = Some(Vertex::Fragment(BlockTree::Seq(children)));
        self.edges.remove(&(u, v));
        for w in self.outs(v) {
            self.edges.remove(&(v, w));
            self.edges.insert((u, w));
        }
        true
    }

    /// Rule (b): collapse a split, >= 2 single-fragment branches, and the
    /// matching join of the same kind.
    fn reduce_block(&mut self) -> bool {
        for s in self.live_vertices() {
            let Some(Vertex::Gateway { kind, role: GatewayRole::Split }) = self.verts[s] else {
                continue;
            };
            let branches = self.outs(s);
            if branches.len() < 2 {
                continue;
            }
            if !branches
                .iter()
                .all(|&b| self.is_fragment(b) && self.ins(b).len() == 1 && self.outs(b).len() == 1)
            {
                continue;
            }
            let joins: BTreeSet<usize> =
                branches.iter().map(|&b| self.outs(b)[0]).collect();
            if joins.len() != 1 {
                continue;
            }
            let j = *joins.iter().next().expect("one join");
            let Some(Vertex::Gateway { kind: jk, role: GatewayRole::Join }) = self.verts[j] else {
                continue;
            };
            if jk != kind || self.ins(j).len() != branches.len() {
                continue;
            }
            let trees: Vec<BlockTree> = branches.iter().map(|&b| self.take_tree(b)).collect();
            let block = match kind {
                GatewayKind::Xor => BlockTree::Xor(trees),
                GatewayKind::And => BlockTree::And(trees),
                GatewayKind::Or => BlockTree::Or(trees),
            };
            for &b in &branches {
                self.edges.remove(&(s, b));
                self.edges.remove(&(b, j));
            }
            self.verts[s] = Some(Vertex::Fragment(block));
            for w in self.outs(j) {
                self.edges.remove(&(j, w));
                self.edges.insert((s, w));
            }
            self.verts[j] = None;
            return true;
        }
        false
    }

    /// Rule (c): collapse an XOR join `j`, its XOR split `s` (edge `j -> s`),
    /// and the single-fragment back path `s -> B -> j` into a `Loop`.
    fn reduce_loop(&mut self) -> bool {
        for j in self.live_vertices() {
            let Some(Vertex::Gateway { kind: GatewayKind::Xor, role: GatewayRole::Join }) =
                self.verts[j]
            else {
                continue;
            };
            let j_outs = self.outs(j);
            if j_outs.len() != 1 || self.ins(j).len() != 2 {
                continue;
            }
            let s = j_outs[0];
            let Some(Vertex::Gateway { kind: GatewayKind::Xor, role: GatewayRole::Split }) =
                self.verts[s]
            else {
                continue;
            };
            let s_outs = self.outs(s);
            if s_outs.len() != 2 {
                continue;
            }
            let body = s_outs.iter().copied().find(|&b| {
                b != j
                    && self.is_fragment(b)
                    && self.ins(b) == vec![s]
                    && self.outs(b) == vec![j]
            });
            let Some(b) = body else { continue };
            let tree = BlockTree::Loop {
                body: Box::new(self.take_tree(b)),
                max_unroll: DEFAULT_MAX_UNROLL,
            };
            self.edges.remove(&(j, s));
            self.edges.remove(&(s, b));
            self.edges.remove(&(b, j));
            self.verts[j] = Some(Vertex::Fragment(tree));
            for w in self.outs(s) {
                self.edges.remove(&(s, w));
                self.edges.insert((j, w));
            }
            self.verts[s] = None;
            return true;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::super::{flatten, parse_graph};
    use super::*;

    #[test]
    fn chain_decomposes_to_seq() {
        let doc = br#"{
            "id": "g", "entry": "a", "exit": "c",
            "nodes": [
                {"id": "a", "kind": "activity", "label": "a"},
                {"id": "b", "kind": "activity", "label": "b"},
                {"id": "c", "kind": "activity", "label": "c"}
            ],
            "edges": [["a","b"],["b","c"]]
        }"#;
        let g = parse_graph(doc).unwrap();
        match decompose(&g) {
            Decomposition::Structured(BlockTree::Seq(children)) => assert_eq!(children.len(), 3),
            other => panic!("expected Seq, got {other:?}"),
        }
    }

    #[test]
    fn or_pattern_decomposes() {
        let doc = br#"{
            "id": "fig3d", "entry": "s", "exit": "j",
            "nodes": [
                {"id": "s", "kind": "gateway", "gateway_kind": "or", "gateway_role": "split"},
                {"id": "J", "kind": "activity", "label": "j act"},
                {"id": "K", "kind": "activity", "label": "k act"},
                {"id": "j", "kind": "gateway", "gateway_kind": "or", "gateway_role": "join"}
            ],
            "edges": [["s","J"],["s","K"],["J","j"],["K","j"]]
        }"#;
        let g = parse_graph(doc).unwrap();
        match decompose(&g) {
            Decomposition::Structured(BlockTree::Or(branches)) => {
                assert_eq!(branches.len(), 2);
                assert!(branches.iter().all(|b| matches!(b, BlockTree::Act { .. })));
            }
            other => panic!("expected Or, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_split_join_is_unstructured() {
        let doc = br#"{
            "id": "bad", "entry": "s", "exit": "j",
            "nodes": [
                {"id": "s", "kind": "gateway", "gateway_kind": "xor", "gateway_role": "split"},
                {"id": "a", "kind": "activity", "label": "a"},
                {"id": "b", "kind": "activity", "label": "b"},
                {"id": "j", "kind": "gateway", "gateway_kind": "and", "gateway_role": "join"}
            ],
            "edges": [["s","a"],["s","b"],["a","j"],["b","j"]]
        }"#;
        let g = parse_graph(doc).unwrap();
        match decompose(&g) {
            Decomposition::Unstructured { remnant_nodes } => assert_eq!(remnant_nodes, 4),
            other => panic!("expected Unstructured, got {other:?}"),
        }
    }

    #[test]
    fn flatten_then_decompose_round_trips_nested_tree() {
        let tree = BlockTree::Seq(vec![
            BlockTree::act("a", "a"),
            BlockTree::Xor(vec![
                BlockTree::And(vec![BlockTree::act("b", "b"), BlockTree::act("c", "c")]),
                BlockTree::act("d", "d"),
            ]),
            BlockTree::Loop {
                body: Box::new(BlockTree::Seq(vec![
                    BlockTree::act("e", "e"),
                    BlockTree::act("f", "f"),
                ])),
                max_unroll: 2,
            },
            BlockTree::act("g", "g"),
        ]);
        let g = flatten(&tree, "g").unwrap();
        match decompose(&g) {
            Decomposition::Structured(out) => assert_eq!(out.canonical(), tree.canonical()),
            other => panic!("expected structured, got {other:?}"),
        }
    }
}
