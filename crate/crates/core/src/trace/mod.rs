//! Process graph traces: enumeration, token-game sampling, structural walks,
//! projection, and the trace-corpus file format.

mod enumerate;
mod space;
mod token_game;
mod walks;

pub use enumerate::enumerate_traces;
pub use token_game::sample_traces;
pub use walks::structural_walks;

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::graph::{GraphError, NodeId, NodeKind, ProcessGraph};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("max_traces must be >= 1")]
    CapTooSmall,
    #[error("deadlock: no enabled node and no token at exit; marking {{{marking}}}")]
    Deadlock { marking: String },
    #[error("node {node} completed more than once in a single run")]
    DoubleCompletion { node: String },
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("corpus format error at line {line}: {msg}")]
    CorpusFormat { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A complete node path from entry to exit, gateways included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trace {
    tokens: Vec<NodeId>,
}

impl Trace {
    pub fn new(tokens: Vec<NodeId>) -> Self {
        Trace { tokens }
    }

    pub fn tokens(&self) -> &[NodeId] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A batch of traces; `truncated` is set when the generation cap was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub traces: Vec<Trace>,
    pub truncated: bool,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

/// Bounds for trace generation.
#[derive(Debug, Clone, Copy)]
pub struct TraceCaps {
    pub max_traces: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for TraceCaps {
    fn default() -> Self {
        TraceCaps { max_traces: 1000, max_len: 200, seed: 0 }
    }
}

impl TraceCaps {
    pub fn with_seed(seed: u64) -> Self {
        TraceCaps { seed, ..Default::default() }
    }
}

/// Node-kind filter used by the three evaluation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    ActivitiesOnly,
    GatewaysOnly,
    All,
}

/// Filters a trace's tokens by node kind. `All` is the identity.
pub fn project_trace(
    trace: &Trace,
    graph: &ProcessGraph,
    mode: ProjectionMode,
) -> Result<Trace, TraceError> {
    let mut tokens = Vec::with_capacity(trace.len());
    for token in trace.tokens() {
        let node = graph
            .node(token)
            .ok_or_else(|| TraceError::UnknownToken(token.as_str().to_string()))?;
        let keep = match mode {
            ProjectionMode::All => true,
            ProjectionMode::ActivitiesOnly => matches!(node.kind, NodeKind::Activity { .. }),
            ProjectionMode::GatewaysOnly => matches!(node.kind, NodeKind::Gateway { .. }),
        };
        if keep {
            tokens.push(token.clone());
        }
    }
    Ok(Trace::new(tokens))
}

pub const CORPUS_HEADER: &str = "#tracewalk-corpus v1";

/// Writes traces in the corpus format: a header line, then one trace per
/// line with space-separated `<graph_id>.<node_id>` tokens.
pub fn write_corpus<W: Write>(
    out: &mut W,
    batches: &[(&str, &TraceSet)],
) -> Result<(), TraceError> {
    writeln!(out, "{CORPUS_HEADER}")?;
    for (graph_id, set) in batches {
        for trace in &set.traces {
            let line: Vec<String> =
                trace.tokens().iter().map(|t| format!("{graph_id}.{t}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

/// Reads a corpus back as raw token sentences (tokens keep their
/// `<graph_id>.<node_id>` form).
pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<Vec<String>>, TraceError> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header == CORPUS_HEADER => {}
        Some((_, Ok(other))) => {
            return Err(TraceError::CorpusFormat {
                line: 1,
                msg: format!("bad header {other:?}"),
            })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(TraceError::CorpusFormat { line: 1, msg: "empty corpus".into() }),
    }
    let mut sentences = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        for token in &tokens {
            if !token.contains('.') {
                return Err(TraceError::CorpusFormat {
                    line: i + 1,
                    msg: format!("token {token:?} is not <graph_id>.<node_id>"),
                });
            }
        }
        sentences.push(tokens);
    }
    Ok(sentences)
}
