//! File-level commands behind the `hyperim` binary.

pub mod config;
pub mod ingest;
pub mod svg;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::RunConfig;
pub use ingest::{ingest, Dataset, RawDocument, PAD, PAD_ID, UNK, UNK_ID};
pub use svg::render_svg;

use crate::embed::{
    count_cooccurrence, embed_hierarchy, hypernym_postprocess, EmbeddingRole, EmbeddingTable, GloveModel, HypernymSet,
    LabelHierarchy, Vocabulary,
};
use crate::encoder::Mode;
use crate::error::{Error, Result};
use crate::eval::{self, MetricTable};
use crate::model::{self, checkpoint, Example, HyperIMParams, TrainHistory};

/// Stream offset so the validation split and the training shuffle do not
/// share random draws.
const SPLIT_STREAM: u64 = 0x5eed;

/// Embed a label hierarchy and write the table.
pub fn embed_labels(hierarchy: &Path, out: &Path, cfg: &RunConfig) -> Result<EmbeddingTable> {
    let h = LabelHierarchy::read(hierarchy)?;
    let table = embed_hierarchy(
        &h,
        cfg.factors,
        cfg.ball_dim,
        cfg.label_epochs,
        &cfg.label_adam(),
        cfg.seed,
    );
    table.write(out)?;
    Ok(table)
}

/// Lowercased whitespace tokens of every nonblank line. Text before a tab,
/// if any, is treated as a label field and dropped.
pub fn read_plain_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.split_once('\t').map_or(l, |(_, body)| body))
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(str::to_lowercase).collect())
        .collect())
}

/// Train hyperbolic GloVe vectors on a corpus, optionally refine them with
/// hypernym pairs, and write the table.
pub fn train_words(corpus: &Path, hypernyms: Option<&Path>, out: &Path, cfg: &RunConfig) -> Result<EmbeddingTable> {
    let docs = read_plain_corpus(corpus)?;
    let mut vocab = Vocabulary::new();
    let ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().map(|w| vocab.insert(w.clone())).collect())
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let counts = count_cooccurrence(&ids, vocab.len(), cfg.window);
    let mut glove = GloveModel::new(vocab, cfg.factors, cfg.ball_dim, cfg.seed);
    let losses = glove.train(&counts, cfg.glove_epochs, &cfg.glove_adam(), &cfg.glove_adam());
    log::info!("glove: final loss {:?}", losses.last());
    let mut table = glove.export();
    if let Some(path) = hypernyms {
        let set = HypernymSet::read(path)?;
        table = hypernym_postprocess(&table, &set, cfg.hypernym_epochs, &cfg.label_adam(), cfg.seed);
    }
    table.write(out)?;
    Ok(table)
}

/// Split off a seeded validation subset.
pub fn split_validation(examples: &[Example], fraction: f64, seed: u64) -> (Vec<Example>, Vec<Example>) {
    let n = examples.len();
    let n_val = ((n as f64 * fraction).round() as usize).min(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(SPLIT_STREAM)));
    let (val, train) = order.split_at(n_val);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| examples[i].clone()).collect::<Vec<_>>()
    };
    (pick(train), pick(val))
}

/// Inputs of the `train` command besides the config.
#[derive(Debug, Clone, Copy)]
pub struct TrainPaths<'a> {
    pub dataset: &'a Path,
    pub hierarchy: &'a Path,
    pub out: &'a Path,
    /// Validation corpus; a split of `dataset` when absent.
    pub validation: Option<&'a Path>,
    /// Pre-trained label embeddings; trained from the hierarchy when absent.
    pub label_embeddings: Option<&'a Path>,
    pub word_embeddings: Option<&'a Path>,
}

/// Train a classifier and write its checkpoint.
pub fn train(paths: TrainPaths<'_>, cfg: &RunConfig) -> Result<(HyperIMParams, TrainHistory)> {
    cfg.validate()?;
    let h = LabelHierarchy::read(paths.hierarchy)?;
    let labels = h.labels().clone();
    if labels.is_empty() {
        return Err(Error::Hierarchy("no labels".into()));
    }
    let data = ingest(paths.dataset, &labels, None, cfg.seq_len)?;
    let (train_set, val_set) = match paths.validation {
        Some(v) => (
            data.examples.clone(),
            ingest(v, &labels, Some(&data.vocab), Some(data.seq_len))?.examples,
        ),
        None => split_validation(&data.examples, cfg.val_fraction, cfg.seed),
    };
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let read_table = |p: &Path, role| -> Result<EmbeddingTable> {
        let t = EmbeddingTable::read(p, role)?;
        if t.num_factors != cfg.factors || t.ball_dim != cfg.ball_dim {
            return Err(Error::Config(format!(
                "{}: table has {} x {} factors but the config asks for {} x {}",
                p.display(),
                t.num_factors,
                t.ball_dim,
                cfg.factors,
                cfg.ball_dim
            )));
        }
        Ok(t)
    };
    let (label_init, word_init) = match cfg.mode {
        Mode::Hyperbolic => {
            let l = match paths.label_embeddings {
                Some(p) => read_table(p, EmbeddingRole::Label)?,
                None => embed_hierarchy(
                    &h,
                    cfg.factors,
                    cfg.ball_dim,
                    cfg.label_epochs,
                    &cfg.label_adam(),
                    cfg.seed,
                ),
            };
            let w = paths
                .word_embeddings
                .map(|p| read_table(p, EmbeddingRole::Word))
                .transpose()?;
            (Some(l), w)
        }
        Mode::Euclidean => (None, None),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = HyperIMParams::new(
        cfg.model_config(data.seq_len),
        data.vocab,
        labels,
        h.edges().to_vec(),
        label_init.as_ref(),
        word_init.as_ref(),
        &mut rng,
    )?;
    let history = model::train(&mut params, &train_set, &val_set, &cfg.train_config())?;
    checkpoint::save(&params, paths.out)?;
    Ok((params, history))
}

/// Metrics of a checkpoint on a corpus. Words unseen in training map to the
/// unknown id; labels must be known to the checkpoint.
pub fn evaluate(checkpoint_path: &Path, dataset: &Path, ks: &[usize]) -> Result<MetricTable> {
    let params = checkpoint::load(checkpoint_path)?;
    let data = ingest(
        dataset,
        &params.labels,
        Some(&params.vocab),
        Some(params.config.seq_len),
    )?;
    if data.examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(eval::evaluate(&params, &data.examples, ks))
}

/// Top `k` labels for a raw document, highest probability first.
pub fn predict_text(params: &HyperIMParams, text: &str, k: usize) -> Vec<(String, f64)> {
    let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let ids = ingest::encode_tokens(&tokens, &params.vocab, params.config.seq_len);
    let p = model::forward(&ids, params);
    eval::rank_top_k(&p, k.min(p.len()))
        .into_iter()
        .map(|i| (params.labels.word(i).to_string(), p[i]))
        .collect()
}

pub fn predict(checkpoint_path: &Path, document: &Path, k: usize) -> Result<Vec<(String, f64)>> {
    let params = checkpoint::load(checkpoint_path)?;
    let text = std::fs::read_to_string(document)?;
    Ok(predict_text(&params, &text, k))
}

/// SVG of the first 2-D factor of an embedding file.
pub fn viz(embeddings: &Path, hierarchy: Option<&Path>, rows_are_labels: bool) -> Result<String> {
    let table = EmbeddingTable::read(embeddings, EmbeddingRole::Label)?;
    if table.ball_dim != 2 {
        return Err(Error::Config(format!(
            "can only draw 2-D balls, table has ball dimension {}",
            table.ball_dim
        )));
    }
    let h = hierarchy.map(LabelHierarchy::read).transpose()?;
    Ok(render_svg(&table, h.as_ref(), rows_are_labels))
}
