//! Exact trace-space arithmetic for block trees.
//!
//! Every tree node gets a length distribution (trace length -> exact count),
//! which makes three things cheap without materializing the space: the total
//! trace count, exhaustive enumeration when the space is small, and uniform
//! without-replacement sampling by unranking when it is not.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::graph::flatten::BlockIds;
use crate::graph::{BlockTree, NodeId};

/// Trace length -> number of traces of that length.
type Dist = BTreeMap<usize, BigUint>;

fn zero() -> BigUint {
    BigUint::from(0u32)
}

fn one() -> BigUint {
    BigUint::from(1u32)
}

/// Binomial coefficient, exact.
fn binom(n: usize, k: usize) -> BigUint {
    if k > n {
        return zero();
    }
    let k = k.min(n - k);
    let mut c = one();
    for i in 1..=k {
        c = c * BigUint::from(n - k + i) / BigUint::from(i);
    }
    c
}

/// Plain convolution: lengths add, counts multiply.
fn conv(a: &Dist, b: &Dist) -> Dist {
    let mut out = Dist::new();
    for (la, ca) in a {
        for (lb, cb) in b {
            *out.entry(la + lb).or_insert_with(zero) += ca * cb;
        }
    }
    out
}

/// Shuffle composition: like [`conv`] but each pair of lengths is weighted by
/// the number of order-preserving interleavings `C(la + lb, la)`.
fn shuffle_comp(a: &Dist, b: &Dist) -> Dist {
    let mut out = Dist::new();
    for (la, ca) in a {
        for (lb, cb) in b {
            *out.entry(la + lb).or_insert_with(zero) += ca * cb * binom(la + lb, *la);
        }
    }
    out
}

fn shifted(d: &Dist, by: usize) -> Dist {
    d.iter().map(|(l, c)| (l + by, c.clone())).collect()
}

fn add_into(acc: &mut Dist, d: &Dist) {
    for (l, c) in d {
        *acc.entry(*l).or_insert_with(zero) += c;
    }
}

fn dist_total(d: &Dist) -> BigUint {
    d.values().fold(zero(), |acc, c| acc + c)
}

fn unit_dist() -> Dist {
    let mut d = Dist::new();
    d.insert(0, one());
    d
}

pub(crate) struct TraceSpace {
    root: SpaceNode,
}

struct SpaceNode {
    dist: Dist,
    shape: Shape,
}

enum Shape {
    Act {
        id: NodeId,
    },
    Seq {
        children: Vec<SpaceNode>,
        /// `suffix[i]` = convolution of children `i..`; `suffix[len]` = unit.
        suffix: Vec<Dist>,
    },
    Xor {
        split: NodeId,
        join: NodeId,
        branches: Vec<SpaceNode>,
    },
    /// `And` (a single full subset) and `Or` (every non-empty subset).
    Shuffle {
        split: NodeId,
        join: NodeId,
        branches: Vec<SpaceNode>,
        subsets: Vec<SubsetSpace>,
    },
    Loop {
        join: NodeId,
        split: NodeId,
        body: Box<SpaceNode>,
        /// `powers[k]` = body distribution convolved `k` times.
        powers: Vec<Dist>,
    },
}

struct SubsetSpace {
    members: Vec<usize>,
    /// `suffix[i]` = shuffle composition of member dists `i..`.
    suffix: Vec<Dist>,
}

impl SubsetSpace {
    fn new(members: Vec<usize>, branches: &[SpaceNode]) -> Self {
        let mut suffix = vec![unit_dist()];
        for &m in members.iter().rev() {
            let next = shuffle_comp(&branches[m].dist, &suffix[0]);
            suffix.insert(0, next);
        }
        SubsetSpace { members, suffix }
    }

    fn dist(&self) -> &Dist {
        &self.suffix[0]
    }
}

impl TraceSpace {
    pub(crate) fn build(tree: &BlockTree) -> TraceSpace {
        let mut ids = BlockIds::default();
        TraceSpace { root: SpaceNode::build(tree, &mut ids) }
    }

    pub(crate) fn total(&self) -> BigUint {
        dist_total(&self.root.dist)
    }

    /// Materializes the whole space in a deterministic recursion order.
    pub(crate) fn enumerate_all(&self) -> Vec<Vec<NodeId>> {
        self.root.enumerate()
    }

    /// Draws `k` distinct traces uniformly from the space (without
    /// replacement), returned in global rank order.
    pub(crate) fn sample_distinct(&self, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<NodeId>> {
        let total = self.total();
        let mut picked: std::collections::BTreeSet<BigUint> = Default::default();
        while picked.len() < k {
            picked.insert(uniform_below(rng, &total));
        }
        picked.into_iter().map(|rank| self.unrank_global(rank)).collect()
    }

    fn unrank_global(&self, mut rank: BigUint) -> Vec<NodeId> {
        for (len, count) in &self.root.dist {
            if &rank < count {
                return self.root.unrank(*len, rank);
            }
            rank -= count;
        }
        unreachable!("rank beyond space total")
    }
}

/// Uniform draw in `[0, n)` by rejection on `n.bits()` random bits.
fn uniform_below(rng: &mut ChaCha8Rng, n: &BigUint) -> BigUint {
    let bits = n.bits();
    assert!(bits > 0, "empty trace space");
    let bytes = ((bits + 7) / 8) as usize;
    let spare = (bytes as u64 * 8 - bits) as u32;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        buf[bytes - 1] >>= spare;
        let v = BigUint::from_bytes_le(&buf);
        if &v < n {
            return v;
        }
    }
}

impl SpaceNode {
    fn build(tree: &BlockTree, ids: &mut BlockIds) -> SpaceNode {
        match tree {
            BlockTree::Act { node_id, .. } => {
                let mut dist = Dist::new();
                dist.insert(1, one());
                SpaceNode { dist, shape: Shape::Act { id: node_id.clone() } }
            }
            BlockTree::Seq(children) => {
                let children: Vec<SpaceNode> =
                    children.iter().map(|c| SpaceNode::build(c, ids)).collect();
                let mut suffix = vec![unit_dist()];
                for child in children.iter().rev() {
                    let next = conv(&child.dist, &suffix[0]);
                    suffix.insert(0, next);
                }
                let dist = suffix[0].clone();
                SpaceNode { dist, shape: Shape::Seq { children, suffix } }
            }
            BlockTree::Xor(branches) => {
                let (split, join) = ids.fresh();
                let branches: Vec<SpaceNode> =
                    branches.iter().map(|b| SpaceNode::build(b, ids)).collect();
                let mut dist = Dist::new();
                for b in &branches {
                    add_into(&mut dist, &shifted(&b.dist, 2));
                }
                SpaceNode { dist, shape: Shape::Xor { split, join, branches } }
            }
            BlockTree::And(branches) => {
                let (split, join) = ids.fresh();
                let branches: Vec<SpaceNode> =
                    branches.iter().map(|b| SpaceNode::build(b, ids)).collect();
                let subsets = vec![SubsetSpace::new((0..branches.len()).collect(), &branches)];
                let dist = shifted(subsets[0].dist(), 2);
                SpaceNode { dist, shape: Shape::Shuffle { split, join, branches, subsets } }
            }
            BlockTree::Or(branches) => {
                let (split, join) = ids.fresh();
                let branches: Vec<SpaceNode> =
                    branches.iter().map(|b| SpaceNode::build(b, ids)).collect();
                let m = branches.len();
                let mut subsets = Vec::with_capacity((1 << m) - 1);
                for mask in 1u32..(1 << m) {
                    let members: Vec<usize> =
                        (0..m).filter(|i| mask & (1 << i) != 0).collect();
                    subsets.push(SubsetSpace::new(members, &branches));
                }
                let mut dist = Dist::new();
                for s in &subsets {
                    add_into(&mut dist, &shifted(s.dist(), 2));
                }
                SpaceNode { dist, shape: Shape::Shuffle { split, join, branches, subsets } }
            }
            BlockTree::Loop { body, max_unroll } => {
                let (split, join) = ids.fresh();
                let body = Box::new(SpaceNode::build(body, ids));
                let mut powers = vec![unit_dist()];
                for k in 1..=(*max_unroll as usize) {
                    let next = conv(&powers[k - 1], &body.dist);
                    powers.push(next);
                }
                let mut dist = Dist::new();
                for (k, p) in powers.iter().enumerate() {
                    add_into(&mut dist, &shifted(p, 2 * (k + 1)));
                }
                SpaceNode { dist, shape: Shape::Loop { join, split, body, powers } }
            }
        }
    }

    fn enumerate(&self) -> Vec<Vec<NodeId>> {
        match &self.shape {
            Shape::Act { id } => vec![vec![id.clone()]],
            Shape::Seq { children, .. } => {
                let mut acc: Vec<Vec<NodeId>> = vec![Vec::new()];
                for child in children {
                    let child_traces = child.enumerate();
                    let mut next = Vec::with_capacity(acc.len() * child_traces.len());
                    for prefix in &acc {
                        for t in &child_traces {
                            let mut combined = prefix.clone();
                            combined.extend(t.iter().cloned());
                            next.push(combined);
                        }
                    }
                    acc = next;
                }
                acc
            }
            Shape::Xor { split, join, branches } => {
                let mut out = Vec::new();
                for b in branches {
                    for t in b.enumerate() {
                        out.push(wrap(split, t, join));
                    }
                }
                out
            }
            Shape::Shuffle { split, join, branches, subsets } => {
                let mut out = Vec::new();
                for subset in subsets {
                    let member_traces: Vec<Vec<Vec<NodeId>>> =
                        subset.members.iter().map(|&m| branches[m].enumerate()).collect();
                    let mut combo = vec![0usize; member_traces.len()];
                    loop {
                        let chosen: Vec<&Vec<NodeId>> =
                            combo.iter().enumerate().map(|(i, &c)| &member_traces[i][c]).collect();
                        for merged in interleave_all(&chosen) {
                            out.push(wrap(split, merged, join));
                        }
                        // advance the mixed-radix combination counter
                        let mut i = combo.len();
                        loop {
                            if i == 0 {
                                break;
                            }
                            i -= 1;
                            combo[i] += 1;
                            if combo[i] < member_traces[i].len() {
                                break;
                            }
                            combo[i] = 0;
                            if i == 0 {
                                i = usize::MAX;
                                break;
                            }
                        }
                        if i == usize::MAX {
                            break;
                        }
                    }
                }
                out
            }
            Shape::Loop { join, split, body, powers } => {
                let mut out = Vec::new();
                for k in 0..powers.len() {
                    let mut partials: Vec<Vec<NodeId>> =
                        vec![vec![join.clone(), split.clone()]];
                    for _ in 0..k {
                        let body_traces = body.enumerate();
                        let mut next = Vec::new();
                        for prefix in &partials {
                            for t in &body_traces {
                                let mut combined = prefix.clone();
                                combined.extend(t.iter().cloned());
                                combined.push(join.clone());
                                combined.push(split.clone());
                                next.push(combined);
                            }
                        }
                        partials = next;
                    }
                    out.extend(partials);
                }
                out
            }
        }
    }

    fn unrank(&self, len: usize, rank: BigUint) -> Vec<NodeId> {
        debug_assert!(self.dist.get(&len).map_or(false, |c| &rank < c));
        match &self.shape {
            Shape::Act { id } => vec![id.clone()],
            Shape::Seq { children, suffix } => seq_unrank(children, suffix, 0, len, rank),
            Shape::Xor { split, join, branches } => {
                let inner = len - 2;
                let mut rank = rank;
                for b in branches {
                    if let Some(c) = b.dist.get(&inner) {
                        if &rank < c {
                            return wrap(split, b.unrank(inner, rank), join);
                        }
                        rank -= c;
                    }
                }
                unreachable!("xor rank out of range")
            }
            Shape::Shuffle { split, join, branches, subsets } => {
                let inner = len - 2;
                let mut rank = rank;
                for subset in subsets {
                    if let Some(c) = subset.dist().get(&inner) {
                        if &rank < c {
                            let merged = shuffle_unrank(subset, branches, 0, inner, rank);
                            return wrap(split, merged, join);
                        }
                        rank -= c;
                    }
                }
                unreachable!("shuffle rank out of range")
            }
            Shape::Loop { join, split, body, powers } => {
                let mut rank = rank;
                for (k, p) in powers.iter().enumerate() {
                    let wrappers = 2 * (k + 1);
                    if len < wrappers {
                        continue;
                    }
                    if let Some(c) = p.get(&(len - wrappers)) {
                        if &rank < c {
                            return loop_unrank(join, split, body, powers, k, len - wrappers, rank);
                        }
                        rank -= c;
                    }
                }
                unreachable!("loop rank out of range")
            }
        }
    }
}

fn wrap(split: &NodeId, mut inner: Vec<NodeId>, join: &NodeId) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(inner.len() + 2);
    out.push(split.clone());
    out.append(&mut inner);
    out.push(join.clone());
    out
}

fn seq_unrank(
    children: &[SpaceNode],
    suffix: &[Dist],
    i: usize,
    len: usize,
    mut rank: BigUint,
) -> Vec<NodeId> {
    if i == children.len() {
        debug_assert_eq!(len, 0);
        return Vec::new();
    }
    for (l, cnt) in &children[i].dist {
        if *l > len {
            break;
        }
        let rest_total = match suffix[i + 1].get(&(len - l)) {
            Some(c) => c.clone(),
            None => continue,
        };
        let block = cnt * &rest_total;
        if rank < block {
            let t = &rank / &rest_total;
            let r_rest = rank % &rest_total;
            let mut out = children[i].unrank(*l, t);
            out.extend(seq_unrank(children, suffix, i + 1, len - l, r_rest));
            return out;
        }
        rank -= block;
    }
    unreachable!("seq rank out of range")
}

fn loop_unrank(
    join: &NodeId,
    split: &NodeId,
    body: &SpaceNode,
    powers: &[Dist],
    k: usize,
    len: usize,
    mut rank: BigUint,
) -> Vec<NodeId> {
    let mut out = vec![join.clone(), split.clone()];
    let mut remaining = len;
    for iter in 0..k {
        let rest_power = &powers[k - iter - 1];
        // pick this iteration's body length
        let mut chosen = None;
        for (l, cnt) in &body.dist {
            if *l > remaining {
                break;
            }
            let rest_total = match rest_power.get(&(remaining - l)) {
                Some(c) => c.clone(),
                None => continue,
            };
            let block = cnt * &rest_total;
            if rank < block {
                let t = &rank / &rest_total;
                rank = rank % &rest_total;
                chosen = Some((*l, t));
                break;
            }
            rank -= block;
        }
        let (l, t) = chosen.expect("loop iteration rank in range");
        out.extend(body.unrank(l, t));
        out.push(join.clone());
        out.push(split.clone());
        remaining -= l;
    }
    debug_assert_eq!(remaining, 0);
    out
}

fn shuffle_unrank(
    subset: &SubsetSpace,
    branches: &[SpaceNode],
    i: usize,
    len: usize,
    mut rank: BigUint,
) -> Vec<NodeId> {
    if i == subset.members.len() {
        debug_assert_eq!(len, 0);
        return Vec::new();
    }
    let branch = &branches[subset.members[i]];
    for (l, cnt) in &branch.dist {
        if *l > len {
            break;
        }
        let rest_total = match subset.suffix[i + 1].get(&(len - l)) {
            Some(c) => c.clone(),
            None => continue,
        };
        let pos_total = binom(len, *l);
        let block = cnt * &pos_total * &rest_total;
        if rank < block {
            let per_trace = &pos_total * &rest_total;
            let t = &rank / &per_trace;
            let rem = rank % &per_trace;
            let p = &rem / &rest_total;
            let r_rest = rem % &rest_total;
            let own = branch.unrank(*l, t);
            let positions = combination_unrank(len, *l, p);
            let rest = shuffle_unrank(subset, branches, i + 1, len - l, r_rest);
            // weave: `own` goes to `positions`, `rest` fills the remainder
            let mut out: Vec<Option<NodeId>> = vec![None; len];
            for (tok, &pos) in own.into_iter().zip(positions.iter()) {
                out[pos] = Some(tok);
            }
            let mut rest_iter = rest.into_iter();
            for slot in out.iter_mut() {
                if slot.is_none() {
                    *slot = Some(rest_iter.next().expect("rest fills remaining slots"));
                }
            }
            return out.into_iter().map(|t| t.expect("all slots filled")).collect();
        }
        rank -= block;
    }
    unreachable!("shuffle member rank out of range")
}

/// Lexicographically unranks a k-subset of positions `0..n`.
fn combination_unrank(n: usize, k: usize, mut rank: BigUint) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut remaining = k;
    let mut pos = 0;
    while remaining > 0 {
        let c = binom(n - pos - 1, remaining - 1);
        if rank < c {
            out.push(pos);
            remaining -= 1;
        } else {
            rank -= c;
        }
        pos += 1;
    }
    out
}

/// All order-preserving interleavings of the given sequences.
fn interleave_all(seqs: &[&Vec<NodeId>]) -> Vec<Vec<NodeId>> {
    let total: usize = seqs.iter().map(|s| s.len()).sum();
    let mut out = Vec::new();
    let mut idxs = vec![0usize; seqs.len()];
    let mut current: Vec<NodeId> = Vec::with_capacity(total);
    fn go(
        seqs: &[&Vec<NodeId>],
        idxs: &mut Vec<usize>,
        current: &mut Vec<NodeId>,
        total: usize,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        if current.len() == total {
            out.push(current.clone());
            return;
        }
        for s in 0..seqs.len() {
            if idxs[s] < seqs[s].len() {
                current.push(seqs[s][idxs[s]].clone());
                idxs[s] += 1;
                go(seqs, idxs, current, total, out);
                idxs[s] -= 1;
                current.pop();
            }
        }
    }
    go(seqs, &mut idxs, &mut current, total, &mut out);
    out
}
