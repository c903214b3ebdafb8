//! Seeded token-game simulation over flat graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GatewayKind, GatewayRole, NodeKind, ProcessGraph};

use super::{Trace, TraceCaps, TraceError, TraceSet};

/// Samples traces by playing the token game on a flat graph, structured or
/// not. Tokens live on edges. Activities and XOR joins fire on one token,
/// AND joins wait for all incoming tokens, OR joins fire on the tokens
/// present once nothing else can move; XOR/OR/AND splits emit on one / a
/// random non-empty subset / all outgoing edges.
///
/// Each run yields one trace. Runs longer than `caps.max_len` are discarded;
/// runs repeat until `caps.max_traces` traces are collected or ten times as
/// many attempts were made (`truncated` is set if the attempt budget ran out
/// first). Deterministic for a fixed `caps.seed`.
pub fn sample_traces(graph: &ProcessGraph, caps: &TraceCaps) -> Result<TraceSet, TraceError> {
    if caps.max_traces < 1 {
        return Err(TraceError::CapTooSmall);
    }
    let sim = Sim::new(graph);
    let mut rng = ChaCha8Rng::seed_from_u64(caps.seed);
    let mut traces = Vec::new();
    let mut attempts = 0usize;
    let max_attempts = caps.max_traces.saturating_mul(10);
    while traces.len() < caps.max_traces && attempts < max_attempts {
        attempts += 1;
        if let Some(trace) = sim.run(&mut rng, caps.max_len)? {
            traces.push(trace);
        }
    }
    let truncated = traces.len() < caps.max_traces;
    Ok(TraceSet { traces, truncated })
}

struct Sim<'a> {
    graph: &'a ProcessGraph,
    ins: Vec<Vec<usize>>,
    outs: Vec<Vec<usize>>,
    entry: usize,
    exit: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum FireKind {
    /// one token from one marked incoming edge
    Single,
    /// one token from every incoming edge
    AllIn,
    /// one token from every *marked* incoming edge, deferred until quiescence
    OrJoin,
}

impl<'a> Sim<'a> {
    fn new(graph: &'a ProcessGraph) -> Self {
        let n = graph.nodes().len();
        let mut ins = vec![Vec::new(); n];
        let mut outs = vec![Vec::new(); n];
        let pos = |id| graph.nodes().iter().position(|x| &x.id == id).expect("validated");
        for (e, (from, to)) in graph.edges().iter().enumerate() {
            outs[pos(from)].push(e);
            ins[pos(to)].push(e);
        }
        Sim {
            graph,
            ins,
            outs,
            entry: pos(graph.entry()),
            exit: pos(graph.exit()),
        }
    }

    fn fire_kind(&self, v: usize) -> FireKind {
        match &self.graph.nodes()[v].kind {
            NodeKind::Activity { .. } => FireKind::Single,
            NodeKind::Gateway { role: GatewayRole::Split, .. } => FireKind::Single,
            NodeKind::Gateway { kind, role: GatewayRole::Join } => match kind {
                GatewayKind::Xor => FireKind::Single,
                GatewayKind::And => FireKind::AllIn,
                GatewayKind::Or => FireKind::OrJoin,
            },
        }
    }

    fn enabled(&self, v: usize, marking: &[u32]) -> bool {
        match self.fire_kind(v) {
            FireKind::Single | FireKind::OrJoin => {
                self.ins[v].iter().any(|&e| marking[e] > 0)
            }
            FireKind::AllIn => {
                !self.ins[v].is_empty() && self.ins[v].iter().all(|&e| marking[e] > 0)
            }
        }
    }

    fn consume(&self, v: usize, marking: &mut [u32], rng: &mut ChaCha8Rng) {
        match self.fire_kind(v) {
            FireKind::Single => {
                let marked: Vec<usize> =
                    self.ins[v].iter().copied().filter(|&e| marking[e] > 0).collect();
                let pick = marked[rng.gen_range(0..marked.len())];
                marking[pick] -= 1;
            }
            FireKind::AllIn => {
                for &e in &self.ins[v] {
                    marking[e] -= 1;
                }
            }
            FireKind::OrJoin => {
                for &e in &self.ins[v] {
                    if marking[e] > 0 {
                        marking[e] -= 1;
                    }
                }
            }
        }
    }

    fn produce(&self, v: usize, marking: &mut [u32], rng: &mut ChaCha8Rng) {
        let outs = &self.outs[v];
        if outs.is_empty() {
            return;
        }
        match &self.graph.nodes()[v].kind {
            NodeKind::Gateway { kind: GatewayKind::Xor, role: GatewayRole::Split } => {
                marking[outs[rng.gen_range(0..outs.len())]] += 1;
            }
            NodeKind::Gateway { kind: GatewayKind::Or, role: GatewayRole::Split } => {
                loop {
                    let mut any = false;
                    for &e in outs {
                        if rng.gen_bool(0.5) {
                            marking[e] += 1;
                            any = true;
                        }
                    }
                    if any {
                        break;
                    }
                }
            }
            _ => {
                for &e in outs {
                    marking[e] += 1;
                }
            }
        }
    }

    /// Plays one run. `Ok(None)` means the run exceeded `max_len` and was
    /// discarded.
    fn run(&self, rng: &mut ChaCha8Rng, max_len: usize) -> Result<Option<Trace>, TraceError> {
        let mut marking = vec![0u32; self.graph.edges().len()];
        let mut tokens = vec![self.graph.nodes()[self.entry].id.clone()];
        let mut exit_fired = self.entry == self.exit;
        self.produce(self.entry, &mut marking, rng);
        loop {
            let live: Vec<usize> = (0..self.graph.nodes().len())
                .filter(|&v| {
                    v != self.entry
                        && self.fire_kind(v) != FireKind::OrJoin
                        && self.enabled(v, &marking)
                })
                .collect();
            let v = if !live.is_empty() {
                live[rng.gen_range(0..live.len())]
            } else {
                let or_joins: Vec<usize> = (0..self.graph.nodes().len())
                    .filter(|&v| {
                        self.fire_kind(v) == FireKind::OrJoin && self.enabled(v, &marking)
                    })
                    .collect();
                if or_joins.is_empty() {
                    break;
                }
                or_joins[rng.gen_range(0..or_joins.len())]
            };
            self.consume(v, &mut marking, rng);
            tokens.push(self.graph.nodes()[v].id.clone());
            if tokens.len() > max_len {
                return Ok(None);
            }
            if v == self.exit {
                if exit_fired {
                    return Err(TraceError::DoubleCompletion {
                        node: self.graph.nodes()[v].id.as_str().to_string(),
                    });
                }
                exit_fired = true;
            }
            self.produce(v, &mut marking, rng);
        }
        if exit_fired && marking.iter().all(|&t| t == 0) {
            Ok(Some(Trace::new(tokens)))
        } else {
            let marking_str = marking
                .iter()
                .enumerate()
                .filter(|(_, &t)| t > 0)
                .map(|(e, t)| {
                    let (from, to) = &self.graph.edges()[e];
                    format!("{from}->{to}: {t}")
                })
                .collect::<Vec<_>>()
                .join(", ");
            Err(TraceError::Deadlock { marking: marking_str })
        }
    }
}
