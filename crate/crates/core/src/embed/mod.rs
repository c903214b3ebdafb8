//! Skip-gram embeddings with hierarchical softmax over a Huffman tree.
//!
//! The same implementation serves two corpora: node traces (semantic node
//! vectors) and whitespace-tokenized text (word vectors). Tokens are opaque
//! strings throughout.

mod huffman;
mod train;
mod vectors;

pub use huffman::HuffmanTree;
pub use train::{average_corpus_loss, train_skipgram, train_skipgram_with_stats, update_model, TrainStats};
pub use vectors::{load_vectors, save_vectors, VectorTable};

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no token survives the min_count threshold")]
    EmptyVocab,
    #[error("unknown token {0}")]
    UnknownToken(String),
    #[error("vector file format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Token inventory ordered by descending frequency, ties broken
/// lexicographically.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build(corpus: &[Vec<String>], min_count: u64) -> Result<Self, EmbedError> {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for sentence in corpus {
            for token in sentence {
                *freq.entry(token).or_default() += 1;
            }
        }
        Self::from_counts(freq.into_iter().map(|(t, c)| (t.to_string(), c)), min_count)
    }

    pub(crate) fn from_counts(
        counts: impl IntoIterator<Item = (String, u64)>,
        min_count: u64,
    ) -> Result<Self, EmbedError> {
        let mut pairs: Vec<(String, u64)> =
            counts.into_iter().filter(|(_, c)| *c >= min_count).collect();
        if pairs.is_empty() {
            return Err(EmbedError::EmptyVocab);
        }
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let tokens: Vec<String> = pairs.iter().map(|(t, _)| t.clone()).collect();
        let counts: Vec<u64> = pairs.iter().map(|(_, c)| *c).collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary { tokens, counts, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }
}

/// All ordered (center, context) pairs with `|offset| <= c`, offset != 0,
/// clipped at the sequence boundaries.
pub fn context_pairs<T>(sequence: &[T], c: usize) -> Vec<(&T, &T)> {
    let mut pairs = Vec::new();
    for (t, center) in sequence.iter().enumerate() {
        let lo = t.saturating_sub(c);
        let hi = (t + c).min(sequence.len().saturating_sub(1));
        for j in lo..=hi {
            if j != t {
                pairs.push((center, &sequence[j]));
            }
        }
    }
    pairs
}

#[derive(Debug, Clone)]
pub struct SkipGramConfig {
    /// Context window size (offsets 1..=window on both sides).
    pub window: usize,
    pub dim: usize,
    pub epochs: usize,
    /// Starting learning rate; decays linearly to a tenth over training.
    pub initial_lr: f64,
    pub min_count: u64,
    pub seed: u64,
    /// Worker threads. Training is bit-deterministic only with one worker;
    /// more workers update rows lock-free and tolerate races.
    pub workers: usize,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            window: 5,
            dim: 100,
            epochs: 5,
            initial_lr: 0.025,
            min_count: 1,
            seed: 0,
            workers: 1,
        }
    }
}

/// A trained skip-gram model: per-token input vectors and per-inner-node
/// vectors of the Huffman tree.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    dim: usize,
    vocab: Vocabulary,
    huffman: HuffmanTree,
    /// |V| x dim, row-major.
    input: Vec<f64>,
    /// (|V|-1) x dim, row-major.
    inner: Vec<f64>,
    config: SkipGramConfig,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl EmbeddingModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn huffman(&self) -> &HuffmanTree {
        &self.huffman
    }

    pub fn config(&self) -> &SkipGramConfig {
        &self.config
    }

    pub fn input_vector(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(|i| &self.input[i * self.dim..(i + 1) * self.dim])
    }

    pub(crate) fn input_row(&self, idx: usize) -> &[f64] {
        &self.input[idx * self.dim..(idx + 1) * self.dim]
    }

    pub(crate) fn inner_row(&self, idx: usize) -> &[f64] {
        &self.inner[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Hierarchical-softmax probability of `target` given `center`: the
    /// product of sigmoid path terms along the Huffman path of `target`.
    pub fn p_target_given_center(&self, target: &str, center: &str) -> Result<f64, EmbedError> {
        let t = self
            .vocab
            .get(target)
            .ok_or_else(|| EmbedError::UnknownToken(target.to_string()))?;
        let c = self
            .vocab
            .get(center)
            .ok_or_else(|| EmbedError::UnknownToken(center.to_string()))?;
        let center_vec = self.input_row(c);
        let mut p = 1.0;
        for &(node, sign) in self.huffman.path(t) {
            let dot: f64 =
                self.inner_row(node).iter().zip(center_vec).map(|(a, b)| a * b).sum();
            p *= sigmoid(sign * dot);
        }
        Ok(p)
    }

    /// Loss `-log p(target | center)` and its gradients: one vector for the
    /// center's input row and one per inner node on the target's path.
    pub fn hs_loss_and_grad(
        &self,
        center: &str,
        target: &str,
    ) -> Result<(f64, HsGradients), EmbedError> {
        let t = self
            .vocab
            .get(target)
            .ok_or_else(|| EmbedError::UnknownToken(target.to_string()))?;
        let c = self
            .vocab
            .get(center)
            .ok_or_else(|| EmbedError::UnknownToken(center.to_string()))?;
        let center_vec = self.input_row(c);
        let mut loss = 0.0;
        let mut center_grad = vec![0.0; self.dim];
        let mut inner_grads = Vec::new();
        for &(node, sign) in self.huffman.path(t) {
            let inner_vec = self.inner_row(node);
            let dot: f64 = inner_vec.iter().zip(center_vec).map(|(a, b)| a * b).sum();
            let f = sigmoid(sign * dot);
            loss -= f.max(f64::MIN_POSITIVE).ln();
            let g = (f - 1.0) * sign;
            for k in 0..self.dim {
                center_grad[k] += g * inner_vec[k];
            }
            inner_grads.push((node, center_vec.iter().map(|v| g * v).collect()));
        }
        Ok((loss, HsGradients { center: center_grad, inner: inner_grads }))
    }
}

/// Sparse gradients of one hierarchical-softmax step.
pub struct HsGradients {
    /// Gradient with respect to the center token's input vector.
    pub center: Vec<f64>,
    /// Per path inner node: gradient with respect to its vector.
    pub inner: Vec<(usize, Vec<f64>)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(sentences: &[&[&str]]) -> Vec<Vec<String>> {
        sentences.iter().map(|s| s.iter().map(|t| t.to_string()).collect()).collect()
    }

    #[test]
    fn vocab_orders_by_frequency_then_lexicographic() {
        let c = corpus(&[&["a", "b"], &["a"]]);
        let v = Vocabulary::build(&c, 1).unwrap();
        assert_eq!(v.tokens(), &["a".to_string(), "b".to_string()]);
        assert_eq!(v.counts(), &[2, 1]);

        let v = Vocabulary::build(&c, 2).unwrap();
        assert_eq!(v.tokens(), &["a".to_string()]);

        let ties = corpus(&[&["c", "b"]]);
        let v = Vocabulary::build(&ties, 1).unwrap();
        assert_eq!(v.tokens(), &["b".to_string(), "c".to_string()]);
    }

    #[test]
    fn empty_vocab_is_an_error() {
        let c = corpus(&[&["a"]]);
        assert!(matches!(Vocabulary::build(&c, 5), Err(EmbedError::EmptyVocab)));
    }

    #[test]
    fn context_pairs_window_two() {
        let seq = ["A", "B", "C"];
        let pairs = context_pairs(&seq, 2);
        let rendered: Vec<(String, String)> =
            pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert_eq!(rendered.len(), 6);
        for want in
            [("A", "B"), ("A", "C"), ("B", "A"), ("B", "C"), ("C", "A"), ("C", "B")]
        {
            assert!(rendered.contains(&(want.0.to_string(), want.1.to_string())));
        }
    }

    #[test]
    fn context_pairs_edge_cases() {
        let single = ["A"];
        assert!(context_pairs(&single, 3).is_empty());
        let seq = ["A", "B", "C", "D"];
        assert_eq!(context_pairs(&seq, 1).len(), 6);
    }
}
