//! Exhaustive trace enumeration for block trees.

use std::collections::HashSet;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::BlockTree;

use super::space::TraceSpace;
use super::{Trace, TraceCaps, TraceError, TraceSet};

/// Enumerates the trace set of a block tree under the execution semantics:
/// `Seq` concatenates, `Xor` picks one branch, `And` interleaves all
/// branches, `Or` interleaves every non-empty branch subset, and `Loop`
/// repeats its body 0..=max_unroll times around the XOR skeleton. Gateway
/// tokens appear in the traces with the same ids `flatten` assigns.
///
/// If the space is larger than `caps.max_traces`, the result is a uniform
/// without-replacement sample of that size (in rank order) and `truncated`
/// is set.
pub fn enumerate_traces(tree: &BlockTree, caps: &TraceCaps) -> Result<TraceSet, TraceError> {
    if caps.max_traces < 1 {
        return Err(TraceError::CapTooSmall);
    }
    tree.validate()?;
    let space = TraceSpace::build(tree);
    let total = space.total();
    if total <= BigUint::from(caps.max_traces) {
        let mut seen = HashSet::new();
        let mut traces = Vec::new();
        for tokens in space.enumerate_all() {
            if seen.insert(tokens.clone()) {
                traces.push(Trace::new(tokens));
            }
        }
        Ok(TraceSet { traces, truncated: false })
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(caps.seed);
        let mut seen = HashSet::new();
        let mut traces = Vec::new();
        for tokens in space.sample_distinct(caps.max_traces, &mut rng) {
            if seen.insert(tokens.clone()) {
                traces.push(Trace::new(tokens));
            }
        }
        Ok(TraceSet { traces, truncated: true })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn acts(ids: &[&str]) -> Vec<BlockTree> {
        ids.iter().map(|i| BlockTree::act(i, i)).collect()
    }

    fn rendered(set: &TraceSet) -> BTreeSet<Vec<String>> {
        set.traces
            .iter()
            .map(|t| t.tokens().iter().map(|n| n.as_str().to_string()).collect())
            .collect()
    }

    #[test]
    fn seq_yields_single_trace() {
        let tree = BlockTree::Seq(acts(&["A", "B", "C"]));
        let set = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        assert_eq!(set.traces.len(), 1);
        assert!(!set.truncated);
        assert_eq!(
            set.traces[0].tokens().iter().map(|n| n.as_str()).collect::<Vec<_>>(),
            vec!["A", "B", "C"]
        );
    }

    #[test]
    fn and_of_three_yields_six_interleavings() {
        let tree = BlockTree::And(acts(&["G", "H", "I"]));
        let set = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        assert_eq!(set.traces.len(), 6);
        let all = rendered(&set);
        let want: Vec<String> =
            ["g0s", "G", "H", "I", "g0j"].iter().map(|s| s.to_string()).collect();
        assert!(all.contains(&want), "expected split,G,H,I,join among {all:?}");
    }

    #[test]
    fn or_of_two_yields_exactly_four() {
        let tree = BlockTree::Or(acts(&["J", "K"]));
        let set = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        let all = rendered(&set);
        let mk = |mid: &[&str]| -> Vec<String> {
            let mut v = vec!["g0s".to_string()];
            v.extend(mid.iter().map(|s| s.to_string()));
            v.push("g0j".to_string());
            v
        };
        let want: BTreeSet<Vec<String>> =
            [mk(&["J"]), mk(&["K"]), mk(&["J", "K"]), mk(&["K", "J"])].into_iter().collect();
        assert_eq!(all, want);
    }

    #[test]
    fn cartesian_product_of_xors() {
        let tree = BlockTree::Seq(vec![
            BlockTree::Xor(acts(&["a", "b"])),
            BlockTree::Xor(acts(&["c", "d"])),
        ]);
        let set = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        assert_eq!(set.traces.len(), 4);
    }

    #[test]
    fn loop_unrolls_zero_to_max() {
        let tree = BlockTree::Seq(vec![
            BlockTree::act("x", "x"),
            BlockTree::Loop { body: Box::new(BlockTree::act("a", "a")), max_unroll: 2 },
            BlockTree::act("y", "y"),
        ]);
        let set = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        let all = rendered(&set);
        let mk = |tokens: &[&str]| tokens.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let want: BTreeSet<Vec<String>> = [
            mk(&["x", "g0j", "g0s", "y"]),
            mk(&["x", "g0j", "g0s", "a", "g0j", "g0s", "y"]),
            mk(&["x", "g0j", "g0s", "a", "g0j", "g0s", "a", "g0j", "g0s", "y"]),
        ]
        .into_iter()
        .collect();
        assert_eq!(all, want);
    }

    #[test]
    fn xor_branch_exclusivity() {
        let tree = BlockTree::Xor(vec![
            BlockTree::Seq(acts(&["a1", "a2"])),
            BlockTree::Seq(acts(&["b1", "b2"])),
        ]);
        let set = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        for trace in &set.traces {
            let has_a = trace.tokens().iter().any(|t| t.as_str().starts_with('a'));
            let has_b = trace.tokens().iter().any(|t| t.as_str().starts_with('b'));
            assert!(has_a ^ has_b, "exactly one branch per trace: {trace:?}");
        }
    }

    #[test]
    fn and_preserves_branch_internal_order() {
        let tree = BlockTree::And(vec![
            BlockTree::Seq(acts(&["a1", "a2"])),
            BlockTree::Seq(acts(&["b1", "b2"])),
        ]);
        let set = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        assert_eq!(set.traces.len(), 6); // C(4,2) interleavings
        for trace in &set.traces {
            let pos = |tok: &str| {
                trace.tokens().iter().position(|t| t.as_str() == tok).unwrap()
            };
            assert!(pos("a1") < pos("a2"));
            assert!(pos("b1") < pos("b2"));
        }
    }

    #[test]
    fn over_cap_space_is_sampled_and_flagged() {
        let tree = BlockTree::And(acts(&["a", "b", "c", "d"])); // 24 traces
        let caps = TraceCaps { max_traces: 10, max_len: 200, seed: 3 };
        let set = enumerate_traces(&tree, &caps).unwrap();
        assert!(set.truncated);
        assert_eq!(set.traces.len(), 10);
        // sampled traces are a subset of the full space
        let full = enumerate_traces(&tree, &TraceCaps::default()).unwrap();
        let full_set = rendered(&full);
        for t in rendered(&set) {
            assert!(full_set.contains(&t));
        }
        // deterministic given the seed
        let again = enumerate_traces(&tree, &caps).unwrap();
        assert_eq!(set, again);
    }

    #[test]
    fn zero_cap_is_an_error() {
        let tree = BlockTree::Seq(acts(&["a", "b"]));
        let caps = TraceCaps { max_traces: 0, max_len: 200, seed: 0 };
        assert!(matches!(enumerate_traces(&tree, &caps), Err(TraceError::CapTooSmall)));
    }
}
