//! Softmax-over-negatives loss for embedding a partial order, and its
//! Riemannian Adam training loop.
//!
//! For every edge `(p, q)` the loss adds
//! `d(p, q) + log Σ_{q' ∈ N(p)} exp(-d(p, q'))` where `N(p)` holds every
//! node that is not a child of `p`, plus `p` itself. Because `p ∈ N(p)`
//! contributes `exp(0) = 1`, every term is nonnegative.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingRole, EmbeddingTable, LabelHierarchy};
use crate::ball::ops::product_distance;
use crate::diff::{AdamConfig, Tape};
use crate::scalar::{sum, Scalar};

/// Negative sets of this size or smaller are used whole.
pub const FULL_NEGATIVES_MAX: usize = 256;
/// Negatives drawn per positive when sampling.
pub const SAMPLED_NEGATIVES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeSampling {
    Full,
    /// Uniform draws (with replacement) from the non-children of `p`, plus `p`.
    Sampled(usize),
}

impl NegativeSampling {
    pub fn for_size(n: usize) -> Self {
        if n <= FULL_NEGATIVES_MAX {
            Self::Full
        } else {
            Self::Sampled(SAMPLED_NEGATIVES)
        }
    }
}

/// One positive pair and its negative set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossTerm {
    pub parent: usize,
    pub child: usize,
    pub negatives: Vec<usize>,
}

/// Build loss terms for `edges` over `n` nodes. `children[p]` lists the
/// positives of `p`, which are never drawn as negatives.
pub fn build_terms(
    n: usize,
    edges: &[(usize, usize)],
    children: impl Fn(usize) -> BTreeSet<usize>,
    sampling: NegativeSampling,
    rng: &mut impl Rng,
) -> Vec<LossTerm> {
    let mut cache: HashMap<usize, (BTreeSet<usize>, Vec<usize>)> = HashMap::new();
    edges
        .iter()
        .map(|&(p, q)| {
            let (kids, full) = cache.entry(p).or_insert_with(|| {
                let kids = children(p);
                let full: Vec<usize> = (0..n).filter(|x| !kids.contains(x)).collect();
                (kids, full)
            });
            let negatives = match sampling {
                NegativeSampling::Full => full.clone(),
                NegativeSampling::Sampled(m) => {
                    let pool = n - kids.len() - 1;
                    let mut neg = Vec::with_capacity(m + 1);
                    neg.push(p);
                    if pool > 0 {
                        while neg.len() < m + 1 {
                            let x = rng.gen_range(0..n);
                            if x != p && !kids.contains(&x) {
                                neg.push(x);
                            }
                        }
                    }
                    neg
                }
            };
            debug_assert!(!negatives.contains(&q));
            LossTerm {
                parent: p,
                child: q,
                negatives,
            }
        })
        .collect()
}

/// Total loss over `terms`. `points` holds `dim`-dimensional rows of product
/// points with factor dimension `ball_dim`.
pub fn hierarchy_loss<T: Scalar>(points: &[T], dim: usize, ball_dim: usize, terms: &[LossTerm]) -> T {
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut dist: HashMap<(usize, usize), T> = HashMap::new();
    let mut d = |a: usize, b: usize| -> T {
        if a == b {
            return T::zero();
        }
        *dist
            .entry((a.min(b), a.max(b)))
            .or_insert_with(|| product_distance(row(a), row(b), ball_dim))
    };
    let mut total = Vec::with_capacity(terms.len());
    for term in terms {
        let pos = d(term.parent, term.child);
        let denom = sum(term.negatives.iter().map(|&x| (-d(term.parent, x)).exp()));
        total.push(pos + denom.ln());
    }
    sum(total)
}

/// Evaluate [`hierarchy_loss`] for a table and hierarchy with full
/// negatives.
pub fn table_hierarchy_loss(table: &EmbeddingTable, hierarchy: &LabelHierarchy) -> f64 {
    let index = align(table, hierarchy);
    let inverse: HashMap<usize, usize> = index.iter().enumerate().map(|(h, &t)| (t, h)).collect();
    let edges: Vec<_> = hierarchy.edges().iter().map(|&(p, c)| (index[p], index[c])).collect();
    let terms = build_terms(
        table.len(),
        &edges,
        |p| hierarchy.children(inverse[&p]).iter().map(|&c| index[c]).collect(),
        NegativeSampling::Full,
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    hierarchy_loss(&table.values.values, table.dim(), table.ball_dim, &terms)
}

/// Hierarchy label index -> table row index.
fn align(table: &EmbeddingTable, hierarchy: &LabelHierarchy) -> Vec<usize> {
    hierarchy
        .labels()
        .words()
        .iter()
        .map(|id| {
            table
                .ids
                .get(id)
                .unwrap_or_else(|| panic!("label {id} has no embedding"))
        })
        .collect()
}

/// Run `epochs` full-batch Riemannian Adam steps on the table. Returns the
/// loss before each step.
pub fn train_partial_order(
    table: &mut EmbeddingTable,
    edges: &[(usize, usize)],
    children: impl Fn(usize) -> BTreeSet<usize>,
    sampling: NegativeSampling,
    epochs: usize,
    cfg: &AdamConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let n = table.len();
    let (dim, b) = (table.dim(), table.ball_dim);
    let mut losses = Vec::with_capacity(epochs);
    if edges.is_empty() {
        return losses;
    }
    let mut terms = build_terms(n, edges, &children, sampling, rng);
    for epoch in 0..epochs {
        if epoch > 0 && matches!(sampling, NegativeSampling::Sampled(_)) {
            terms = build_terms(n, edges, &children, sampling, rng);
        }
        let tape = Tape::with_capacity(terms.len() * 64);
        let xs = tape.vars(&table.values.values);
        let loss = hierarchy_loss(&xs, dim, b, &terms);
        losses.push(loss.value());
        let grad = loss.backward().wrt_all(&xs);
        table.values.step(&grad, cfg);
    }
    losses
}

/// Embed the labels of `hierarchy` in the product of `num_factors` balls of
/// dimension `ball_dim`.
pub fn embed_hierarchy(
    hierarchy: &LabelHierarchy,
    num_factors: usize,
    ball_dim: usize,
    epochs: usize,
    cfg: &AdamConfig,
    seed: u64,
) -> EmbeddingTable {
    embed_hierarchy_with_history(hierarchy, num_factors, ball_dim, epochs, cfg, seed).0
}

pub fn embed_hierarchy_with_history(
    hierarchy: &LabelHierarchy,
    num_factors: usize,
    ball_dim: usize,
    epochs: usize,
    cfg: &AdamConfig,
    seed: u64,
) -> (EmbeddingTable, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::random(
        hierarchy.labels().clone(),
        num_factors,
        ball_dim,
        EmbeddingRole::Label,
        &mut rng,
    );
    let losses = train_partial_order(
        &mut table,
        hierarchy.edges(),
        |p| hierarchy.children(p).clone(),
        NegativeSampling::for_size(hierarchy.len()),
        epochs,
        cfg,
        &mut rng,
    );
    log::debug!("hierarchy embedding: {} epochs, final loss {:?}", epochs, losses.last());
    (table, losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::ops;
    use crate::embed::Vocabulary;

    fn table(ids: &[&str], values: Vec<f64>) -> EmbeddingTable {
        EmbeddingTable::from_values(
            Vocabulary::from_words(ids.iter().copied()),
            1,
            2,
            EmbeddingRole::Label,
            values,
        )
    }

    #[test]
    fn one_edge_loss_is_the_distance() {
        let h = LabelHierarchy::from_edges([("p", "q")]).unwrap();
        let t = table(&["p", "q"], vec![0.3, 0.1, -0.2, 0.4]);
        let d = ops::distance(t.row(0), t.row(1));
        assert!((table_hierarchy_loss(&t, &h) - d).abs() < 1e-14);
    }

    #[test]
    fn equal_distances_give_log_of_negative_count() {
        // all points coincide: every distance is 0
        let h = LabelHierarchy::from_edges([("r", "a"), ("r", "b"), ("a", "c")]).unwrap();
        let t = table(&["r", "a", "b", "c"], vec![0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]);
        // N(r) = {r, c}, N(a) = {r, a, b}
        let want = 2.0 * 2f64.ln() + 3f64.ln();
        assert!((table_hierarchy_loss(&t, &h) - want).abs() < 1e-12);
    }

    #[test]
    fn empty_edge_set() {
        let mut h = LabelHierarchy::new();
        h.add_label("x");
        let t = table(&["x"], vec![0.2, 0.2]);
        assert_eq!(table_hierarchy_loss(&t, &h), 0.0);
        let e = embed_hierarchy(&h, 1, 2, 10, &AdamConfig::default(), 3);
        let init = EmbeddingTable::random(
            h.labels().clone(),
            1,
            2,
            EmbeddingRole::Label,
            &mut ChaCha8Rng::seed_from_u64(3),
        );
        assert_eq!(e.values.values, init.values.values);
    }

    #[test]
    fn sampled_negatives_exclude_children() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let edges = [(0, 1), (0, 2)];
        let terms = build_terms(
            20,
            &edges,
            |p| {
                if p == 0 {
                    [1, 2].into_iter().collect()
                } else {
                    BTreeSet::new()
                }
            },
            NegativeSampling::Sampled(10),
            &mut rng,
        );
        for t in &terms {
            assert_eq!(t.negatives.len(), 11);
            assert_eq!(t.negatives[0], 0);
            assert!(t.negatives[1..].iter().all(|&x| x != 0 && x != 1 && x != 2));
        }
    }

    #[test]
    fn one_edge_training_collapses_distance() {
        let h = LabelHierarchy::from_edges([("p", "q")]).unwrap();
        let t = embed_hierarchy(&h, 1, 2, 500, &AdamConfig::with_lr(0.01), 11);
        assert!(ops::distance(t.row(0), t.row(1)) < 0.05);
    }

    #[test]
    fn tree_edges_shorter_than_non_edges() {
        let h = LabelHierarchy::from_edges([
            ("r", "a"),
            ("r", "b"),
            ("a", "a1"),
            ("a", "a2"),
            ("b", "b1"),
            ("b", "b2"),
        ])
        .unwrap();
        let t = embed_hierarchy(&h, 1, 2, 500, &AdamConfig::with_lr(0.05), 5);
        let n = h.len();
        let (mut edge, mut other) = (Vec::new(), Vec::new());
        for i in 0..n {
            for j in (i + 1)..n {
                let d = ops::distance(t.row(i), t.row(j));
                if h.is_edge(i, j) || h.is_edge(j, i) {
                    edge.push(d);
                } else {
                    other.push(d);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&edge) < mean(&other), "{} vs {}", mean(&edge), mean(&other));
    }
}
