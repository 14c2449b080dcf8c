//! Hierarchy and word embeddings in products of Poincaré balls.

mod glove;
mod hierarchy;
mod hypernym;
mod label;
mod table;
mod vocab;

use std::path::Path;

pub use glove::{count_cooccurrence, glove_loss, glove_weight, CooccurrenceTable, GloveModel};
pub use hierarchy::{parse_pairs, LabelHierarchy};
pub use hypernym::{hypernym_postprocess, HypernymSet};
pub use label::{
    build_terms, embed_hierarchy, embed_hierarchy_with_history, hierarchy_loss, table_hierarchy_loss,
    train_partial_order, LossTerm, NegativeSampling, FULL_NEGATIVES_MAX, SAMPLED_NEGATIVES,
};
pub use table::{uniform_in_ball, EmbeddingRole, EmbeddingTable, INIT_RADIUS};
pub use vocab::Vocabulary;

use crate::error::{Error, Result};

/// Parse `a<TAB>b<TAB>count` lines.
pub fn parse_pairs_with_count(text: &str, path: &Path) -> Result<Vec<(String, String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let parts: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        let [a, b, x] = parts.as_slice() else {
            return Err(bad("expected `word_i<TAB>word_j<TAB>count`".into()));
        };
        let x: f64 = x.trim().parse().map_err(|e| bad(format!("count: {e}")))?;
        if !x.is_finite() || x < 0.0 {
            return Err(bad(format!("count {x} must be finite and nonnegative")));
        }
        out.push((a.trim().to_string(), b.trim().to_string(), x));
    }
    Ok(out)
}
