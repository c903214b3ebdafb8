//! Lowering a block tree to a flat process graph.

use super::{BlockTree, GatewayKind, GatewayRole, GraphError, Node, NodeId, ProcessGraph};

/// Deterministic gateway-id allocator shared by [`flatten`] and the trace
/// enumerator: both walk the tree in the same pre-order, so the k-th
/// branching block always gets the pair (`g<k>s`, `g<k>j`).
#[derive(Default)]
pub(crate) struct BlockIds {
    next: usize,
}

impl BlockIds {
    pub(crate) fn fresh(&mut self) -> (NodeId, NodeId) {
        let k = self.next;
        self.next += 1;
        let split = NodeId::new(format!("g{k}s")).expect("generated id is valid");
        let join = NodeId::new(format!("g{k}j")).expect("generated id is valid");
        (split, join)
    }
}

/// Lowers a block tree into a flat graph.
///
/// `Seq` chains its children, `Xor`/`And`/`Or` emit a split gateway, one
/// subgraph per branch, and a matching join, and `Loop` emits an XOR join
/// (block entry), an XOR split (block exit), and a back path through the
/// body. A tree whose flat form violates graph invariants (e.g. a bare
/// `Loop` at the root, whose entry keeps an incoming back edge) is rejected.
pub fn flatten(tree: &BlockTree, graph_id: &str) -> Result<ProcessGraph, GraphError> {
    tree.validate()?;
    let mut builder = Builder::default();
    let (entry, exit) = builder.emit(tree);
    ProcessGraph::new(graph_id, builder.nodes, builder.edges, entry, exit)
}

#[derive(Default)]
struct Builder {
    ids: BlockIds,
    nodes: Vec<Node>,
    edges: Vec<(NodeId, NodeId)>,
}

impl Builder {
    fn emit(&mut self, tree: &BlockTree) -> (NodeId, NodeId) {
        match tree {
            BlockTree::Act { label, node_id } => {
                self.nodes.push(Node::activity(node_id.clone(), label.clone()));
                (node_id.clone(), node_id.clone())
            }
            BlockTree::Seq(children) => {
                let mut first = None;
                let mut prev: Option<NodeId> = None;
                for child in children {
                    let (entry, exit) = self.emit(child);
                    match prev.take() {
                        Some(p) => self.edges.push((p, entry)),
                        None => first = Some(entry),
                    }
                    prev = Some(exit);
                }
                (first.expect("seq has children"), prev.expect("seq has children"))
            }
            BlockTree::Xor(branches) => self.emit_block(GatewayKind::Xor, branches),
            BlockTree::And(branches) => self.emit_block(GatewayKind::And, branches),
            BlockTree::Or(branches) => self.emit_block(GatewayKind::Or, branches),
            BlockTree::Loop { body, .. } => {
                let (split, join) = self.ids.fresh();
                self.nodes.push(Node::gateway(join.clone(), GatewayKind::Xor, GatewayRole::Join));
                self.nodes.push(Node::gateway(split.clone(), GatewayKind::Xor, GatewayRole::Split));
                self.edges.push((join.clone(), split.clone()));
                let (body_entry, body_exit) = self.emit(body);
                self.edges.push((split.clone(), body_entry));
                self.edges.push((body_exit, join.clone()));
                (join, split)
            }
        }
    }

    fn emit_block(&mut self, kind: GatewayKind, branches: &[BlockTree]) -> (NodeId, NodeId) {
        let (split, join) = self.ids.fresh();
        self.nodes.push(Node::gateway(split.clone(), kind, GatewayRole::Split));
        self.nodes.push(Node::gateway(join.clone(), kind, GatewayRole::Join));
        for branch in branches {
            let (entry, exit) = self.emit(branch);
            self.edges.push((split.clone(), entry));
            self.edges.push((exit, join.clone()));
        }
        (split, join)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seq_of_two_activities() {
        let tree = BlockTree::Seq(vec![BlockTree::act("a", "a"), BlockTree::act("b", "b")]);
        let g = flatten(&tree, "g").unwrap();
        assert_eq!(g.nodes().len(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.entry().as_str(), "a");
        assert_eq!(g.exit().as_str(), "b");
    }

    #[test]
    fn and_of_three_has_five_nodes() {
        let tree = BlockTree::And(vec![
            BlockTree::act("g", "g"),
            BlockTree::act("h", "h"),
            BlockTree::act("i", "i"),
        ]);
        let g = flatten(&tree, "p").unwrap();
        assert_eq!(g.nodes().len(), 5);
        assert_eq!(g.edges().len(), 6);
        assert_eq!(g.entry().as_str(), "g0s");
        assert_eq!(g.exit().as_str(), "g0j");
    }

    #[test]
    fn loop_inside_seq_builds_back_edge() {
        let tree = BlockTree::Seq(vec![
            BlockTree::act("a", "a"),
            BlockTree::Loop { body: Box::new(BlockTree::act("b", "b")), max_unroll: 2 },
            BlockTree::act("c", "c"),
        ]);
        let g = flatten(&tree, "g").unwrap();
        // a, j, s, b, c
        assert_eq!(g.nodes().len(), 5);
        let j = NodeId::new("g0j").unwrap();
        let s = NodeId::new("g0s").unwrap();
        assert_eq!(g.in_degree(&j), 2);
        assert_eq!(g.out_degree(&s), 2);
    }

    #[test]
    fn bare_loop_at_root_is_rejected() {
        let tree = BlockTree::Loop { body: Box::new(BlockTree::act("a", "a")), max_unroll: 2 };
        assert!(flatten(&tree, "g").is_err());
    }

    #[test]
    fn gateway_ids_are_preorder() {
        let tree = BlockTree::Seq(vec![
            BlockTree::Xor(vec![BlockTree::act("a", "a"), BlockTree::act("b", "b")]),
            BlockTree::And(vec![BlockTree::act("c", "c"), BlockTree::act("d", "d")]),
        ]);
        let g = flatten(&tree, "g").unwrap();
        assert!(g.node(&NodeId::new("g0s").unwrap()).is_some());
        assert!(g.node(&NodeId::new("g1s").unwrap()).is_some());
        assert_eq!(g.entry().as_str(), "g0s");
        assert_eq!(g.exit().as_str(), "g1j");
    }
}
