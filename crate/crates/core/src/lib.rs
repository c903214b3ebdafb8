//! Consistency checking between graphical and textual process descriptions.
//!
//! The toolkit is organized around a small pipeline:
//!
//! * [`graph`] — the process-graph data model (flat graphs and block trees),
//!   JSON schemas, validation, and structure detection by pattern reduction.
//! * [`trace`] — process graph traces: exhaustive enumeration under the
//!   execution semantics, seeded token-game sampling, and structure-only
//!   walks for the DeepWalk-style ablation.
//! * [`embed`] — skip-gram training with hierarchical softmax over a Huffman
//!   tree; used both for trace corpora (node vectors) and plain text (word
//!   vectors).
//! * [`tensor`] — a minimal dense numeric layer with hand-derived
//!   backpropagation: 1-D convolution, max-pooling, dense layers, quantile
//!   loss, Adam, and a finite-difference gradient checker.
//! * [`net`] — the TraceNet consistency model: siamese convolution with tied
//!   weights over the two textual channels, an independent semantic channel,
//!   fusion layers, and quantile-loss training.
//! * [`forge`] — synthetic benchmark construction: random block-structured
//!   graphs, graph mutation, template text rendering, behavior-profile gold
//!   labels, and dataset assembly.

pub mod embed;
pub mod forge;
pub mod graph;
pub mod net;
pub mod tensor;
pub mod trace;

pub use graph::{BlockTree, ConsistencyScore, Node, NodeId, ProcessGraph, ProcessText};
pub use trace::{Trace, TraceCaps, TraceSet};
