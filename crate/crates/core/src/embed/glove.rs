//! Co-occurrence counting and GloVe in the Poincaré ball.
//!
//! The objective is
//! `Σ_{X_ij > 0} f(X_ij) (-cosh²(d(θ_i, θ̃_j)) + b_i + b̃_j - log X_ij)²`
//! with `f(x) = min(1, (x/100)^{3/4})`.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{parse_pairs_with_count, EmbeddingRole, EmbeddingTable, Vocabulary};
use crate::ball::ops;
use crate::diff::{AdamConfig, Manifold, ParamTensor, Tape};
use crate::error::Result;
use crate::scalar::{sum, Scalar};

/// Sparse symmetric co-occurrence counts. Only positive entries are stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CooccurrenceTable {
    pub vocab_size: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl CooccurrenceTable {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, count: f64) {
        assert!(
            i < self.vocab_size && j < self.vocab_size,
            "co-occurrence id out of range"
        );
        assert!(count >= 0.0, "co-occurrence counts are nonnegative");
        if count > 0.0 {
            *self.entries.entry((i, j)).or_insert(0.0) += count;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &x)| (i, j, x))
    }

    /// Read `word_i<TAB>word_j<TAB>count` lines, growing `vocab` as needed.
    pub fn read(path: &Path, vocab: &mut Vocabulary) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let rows = parse_pairs_with_count(&text, path)?;
        let ids: Vec<(usize, usize, f64)> = rows
            .into_iter()
            .map(|(a, b, x)| (vocab.insert(a), vocab.insert(b), x))
            .collect();
        let mut table = Self::new(vocab.len());
        for (i, j, x) in ids {
            table.add(i, j, x);
        }
        Ok(table)
    }
}

/// Count pairs within `window` tokens of each other, weighting each by
/// `1/distance`. Pairs of distinct words are counted in both directions; a
/// word paired with itself is counted once.
pub fn count_cooccurrence(corpus: &[Vec<usize>], vocab_size: usize, window: usize) -> CooccurrenceTable {
    assert!(window >= 1, "window must be at least 1");
    let mut table = CooccurrenceTable::new(vocab_size);
    for doc in corpus {
        for (i, &a) in doc.iter().enumerate() {
            for (off, &b) in doc[i + 1..].iter().take(window).enumerate() {
                let w = 1.0 / (off + 1) as f64;
                table.add(a, b, w);
                if a != b {
                    table.add(b, a, w);
                }
            }
        }
    }
    table
}

/// `min(1, (x/100)^{3/4})`.
pub fn glove_weight(x: f64) -> f64 {
    (x / 100.0).powf(0.75).min(1.0)
}

/// GloVe loss over `entries`. Embedding slices are row-major `dim`-wide
/// product points with factor dimension `ball_dim`.
pub fn glove_loss<T: Scalar>(
    target: &[T],
    context: &[T],
    bias_target: &[T],
    bias_context: &[T],
    dim: usize,
    ball_dim: usize,
    entries: &[(usize, usize, f64)],
) -> T {
    sum(entries.iter().map(|&(i, j, x)| {
        let d = ops::product_distance(
            &target[i * dim..(i + 1) * dim],
            &context[j * dim..(j + 1) * dim],
            ball_dim,
        );
        let c = d.cosh();
        let r = -(c * c) + bias_target[i] + bias_context[j] - T::from_f64(x.ln());
        r * r * T::from_f64(glove_weight(x))
    }))
}

/// Trained target/context embeddings and their biases.
#[derive(Debug, Clone)]
pub struct GloveModel {
    pub target: EmbeddingTable,
    pub context: EmbeddingTable,
    pub bias_target: ParamTensor,
    pub bias_context: ParamTensor,
}

impl GloveModel {
    pub fn new(vocab: Vocabulary, num_factors: usize, ball_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = vocab.len();
        let target = EmbeddingTable::random(
            vocab.clone(),
            num_factors,
            ball_dim,
            EmbeddingRole::WordTarget,
            &mut rng,
        );
        let context = EmbeddingTable::random(vocab, num_factors, ball_dim, EmbeddingRole::WordContext, &mut rng);
        Self {
            target,
            context,
            bias_target: ParamTensor::new("bias_target", vec![n], vec![0.0; n], Manifold::Euclidean),
            bias_context: ParamTensor::new("bias_context", vec![n], vec![0.0; n], Manifold::Euclidean),
        }
    }

    pub fn loss(&self, table: &CooccurrenceTable) -> f64 {
        let entries: Vec<_> = table.entries().collect();
        glove_loss(
            &self.target.values.values,
            &self.context.values.values,
            &self.bias_target.values,
            &self.bias_context.values,
            self.target.dim(),
            self.target.ball_dim,
            &entries,
        )
    }

    /// Full-batch training: Riemannian Adam for the embeddings, Adam for the
    /// biases. Returns the loss before each epoch.
    pub fn train(
        &mut self,
        table: &CooccurrenceTable,
        epochs: usize,
        hyper: &AdamConfig,
        euclid: &AdamConfig,
    ) -> Vec<f64> {
        assert_eq!(
            table.vocab_size,
            self.target.len(),
            "co-occurrence table and vocabulary disagree"
        );
        let entries: Vec<_> = table.entries().collect();
        let mut losses = Vec::with_capacity(epochs);
        if entries.is_empty() {
            return losses;
        }
        let (dim, b) = (self.target.dim(), self.target.ball_dim);
        for _ in 0..epochs {
            let tape = Tape::new();
            let t = tape.vars(&self.target.values.values);
            let c = tape.vars(&self.context.values.values);
            let bt = tape.vars(&self.bias_target.values);
            let bc = tape.vars(&self.bias_context.values);
            let loss = glove_loss(&t, &c, &bt, &bc, dim, b, &entries);
            losses.push(loss.value());
            let g = loss.backward();
            self.target.values.step(&g.wrt_all(&t), hyper);
            self.context.values.step(&g.wrt_all(&c), hyper);
            self.bias_target.step(&g.wrt_all(&bt), euclid);
            self.bias_context.step(&g.wrt_all(&bc), euclid);
        }
        losses
    }

    /// One table per word: the factor-wise tangent mean
    /// `exp_0((log_0 θ + log_0 θ̃) / 2)` of target and context points.
    pub fn export(&self) -> EmbeddingTable {
        let b = self.target.ball_dim;
        let mut values = Vec::with_capacity(self.target.values.len());
        for i in 0..self.target.len() {
            let lt = ops::product_log0(self.target.row(i), b);
            let lc = ops::product_log0(self.context.row(i), b);
            let mean: Vec<f64> = lt.iter().zip(&lc).map(|(x, y)| 0.5 * (x + y)).collect();
            values.extend(ops::product_project(&ops::product_exp0(&mean, b), b));
        }
        EmbeddingTable::from_values(
            self.target.ids.clone(),
            self.target.num_factors,
            b,
            EmbeddingRole::Word,
            values,
        )
    }
}
