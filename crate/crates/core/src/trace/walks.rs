//! Structure-only random walks (the DeepWalk-style ablation corpus).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{NodeId, ProcessGraph};

use super::{Trace, TraceSet};

/// Runs `n_walks` uniform random walks of `walk_len` nodes from every node
/// over the undirected adjacency, ignoring gateway semantics entirely.
pub fn structural_walks(
    graph: &ProcessGraph,
    n_walks: usize,
    walk_len: usize,
    seed: u64,
) -> TraceSet {
    let nodes: Vec<&NodeId> = graph.nodes().iter().map(|n| &n.id).collect();
    let pos = |id| nodes.iter().position(|x| *x == id).expect("validated");
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (from, to) in graph.edges() {
        let (f, t) = (pos(from), pos(to));
        if !neighbors[f].contains(&t) {
            neighbors[f].push(t);
        }
        if !neighbors[t].contains(&f) {
            neighbors[t].push(f);
        }
    }
    for adj in &mut neighbors {
        adj.sort_unstable();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(nodes.len() * n_walks);
    for start in 0..nodes.len() {
        for _ in 0..n_walks {
            let mut walk = Vec::with_capacity(walk_len);
            let mut cur = start;
            walk.push(nodes[cur].clone());
            while walk.len() < walk_len {
                if neighbors[cur].is_empty() {
                    break;
                }
                cur = neighbors[cur][rng.gen_range(0..neighbors[cur].len())];
                walk.push(nodes[cur].clone());
            }
            traces.push(Trace::new(walk));
        }
    }
    TraceSet { traces, truncated: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{flatten, BlockTree};

    #[test]
    fn two_node_chain_alternates() {
        let tree = BlockTree::Seq(vec![BlockTree::act("a", "a"), BlockTree::act("b", "b")]);
        let g = flatten(&tree, "g").unwrap();
        let set = structural_walks(&g, 4, 3, 1);
        assert_eq!(set.traces.len(), 8);
        for t in &set.traces {
            let toks: Vec<&str> = t.tokens().iter().map(|n| n.as_str()).collect();
            assert!(toks == ["a", "b", "a"] || toks == ["b", "a", "b"], "{toks:?}");
        }
    }

    #[test]
    fn walk_count_contract() {
        let tree = BlockTree::Seq(vec![
            BlockTree::act("a", "a"),
            BlockTree::Xor(vec![BlockTree::act("b", "b"), BlockTree::act("c", "c")]),
        ]);
        let g = flatten(&tree, "g").unwrap(); // 5 nodes
        let set = structural_walks(&g, 10, 4, 0);
        assert_eq!(set.traces.len(), 50);
    }

    #[test]
    fn star_walks_hit_a_hub_every_other_step() {
        // The closest valid star is an XOR fan: gateways g0s/g0j are the hubs,
        // leaves only touch hubs, so walks strictly alternate hub/leaf.
        let tree = BlockTree::Xor(vec![
            BlockTree::act("l1", "l1"),
            BlockTree::act("l2", "l2"),
            BlockTree::act("l3", "l3"),
            BlockTree::act("l4", "l4"),
        ]);
        let g = flatten(&tree, "star").unwrap();
        let set = structural_walks(&g, 200, 8, 7);
        let hub_hits: usize = set
            .traces
            .iter()
            .flat_map(|t| t.tokens())
            .filter(|n| n.as_str().starts_with('g'))
            .count();
        let total: usize = set.traces.iter().map(|t| t.len()).sum();
        let frac = hub_hits as f64 / total as f64;
        assert!((frac - 0.5).abs() <= 0.02, "hub fraction {frac}");
    }

    #[test]
    fn walks_are_reproducible() {
        let tree = BlockTree::Seq(vec![BlockTree::act("a", "a"), BlockTree::act("b", "b")]);
        let g = flatten(&tree, "g").unwrap();
        assert_eq!(structural_walks(&g, 5, 6, 9), structural_walks(&g, 5, 6, 9));
    }
}
