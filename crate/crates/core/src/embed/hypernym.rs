use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::label::{train_partial_order, NegativeSampling, SAMPLED_NEGATIVES};
use super::{parse_pairs, EmbeddingTable};
use crate::diff::AdamConfig;
use crate::error::Result;

/// Ordered `(hypernym, hyponym)` word pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HypernymSet {
    pub pairs: Vec<(String, String)>,
}

impl HypernymSet {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self {
            pairs: parse_pairs(&text, path)?.into_iter().map(|(_, a, b)| (a, b)).collect(),
        })
    }
}

/// Refine word embeddings so each hypernym sits close to its hyponyms, with
/// 10 random negatives per positive pair. Pairs naming unknown words are
/// skipped with a warning.
pub fn hypernym_postprocess(
    words: &EmbeddingTable,
    hypernyms: &HypernymSet,
    epochs: usize,
    cfg: &AdamConfig,
    seed: u64,
) -> EmbeddingTable {
    let mut out = words.clone();
    out.values.reset_state();
    let mut edges = Vec::new();
    let mut children: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut skipped = 0usize;
    for (p, q) in &hypernyms.pairs {
        match (words.ids.get(p), words.ids.get(q)) {
            (Some(pi), Some(qi)) if pi != qi => {
                if children.entry(pi).or_default().insert(qi) {
                    edges.push((pi, qi));
                }
            }
            _ => {
                skipped += 1;
                log::warn!("skipping hypernym pair ({p}, {q}): not in vocabulary");
            }
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} hypernym pairs");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let losses = train_partial_order(
        &mut out,
        &edges,
        |p| children.get(&p).cloned().unwrap_or_default(),
        NegativeSampling::Sampled(SAMPLED_NEGATIVES),
        epochs,
        cfg,
        &mut rng,
    );
    log::debug!("hypernym post-processing: final loss {:?}", losses.last());
    out
}
