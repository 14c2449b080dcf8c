use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::forward::{bce_loss, forward, loss_and_grad, Grads};
use super::HyperIMParams;
use crate::diff::AdamConfig;
use crate::error::{Error, Result};
use crate::eval::precision_at_k;

/// One labelled, padded document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<usize>,
    /// Indices of the true labels.
    pub labels: Vec<usize>,
}

impl Example {
    pub fn targets(&self, num_labels: usize) -> Vec<bool> {
        let mut y = vec![false; num_labels];
        for &l in &self.labels {
            y[l] = true;
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub euclidean: AdamConfig,
    pub hyperbolic: AdamConfig,
    pub seed: u64,
    pub freeze_labels: bool,
    pub freeze_words: bool,
    /// Also record training-set P@1 after each epoch (one extra forward pass).
    pub track_train_metrics: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            patience: 10,
            euclidean: AdamConfig::default(),
            hyperbolic: AdamConfig::default(),
            seed: 0,
            freeze_labels: false,
            freeze_words: false,
            track_train_metrics: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-document loss over the epoch's mini-batches.
    pub train_loss: f64,
    pub train_p1: Option<f64>,
    pub val_loss: Option<f64>,
    pub val_p1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (best validation loss), if any.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Mean BCE loss and mean P@1 over `data`.
pub fn dataset_loss_and_p1(params: &HyperIMParams, data: &[Example]) -> (f64, f64) {
    let c = params.num_labels();
    let per: Vec<(f64, f64)> = data
        .par_iter()
        .map(|ex| {
            let y = ex.targets(c);
            let p = forward(&ex.tokens, params);
            (bce_loss(&p, &y), precision_at_k(&y, &p, 1))
        })
        .collect();
    let n = per.len().max(1) as f64;
    let (l, p1) = per.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    (l / n, p1 / n)
}

/// Mini-batch training with Adam on Euclidean tensors and Riemannian Adam on
/// hyperbolic ones. With a nonempty `val` set, the parameters with the best
/// validation loss are restored at the end.
pub fn train(
    params: &mut HyperIMParams,
    train: &[Example],
    val: &[Example],
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let c = params.num_labels();
    let (rows, k) = (params.vocab.len(), params.config.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, HyperIMParams)> = None;
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let parts: Vec<(f64, Grads)> = batch
                .par_iter()
                .map(|&i| loss_and_grad(&train[i].tokens, &train[i].targets(c), params))
                .collect();
            let mut grads = Grads::zeros(params);
            for (loss, g) in &parts {
                total += loss;
                grads.accumulate(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            apply(params, &grads, rows, k, cfg);
        }

        let mut rec = EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            train_p1: None,
            val_loss: None,
            val_p1: None,
        };
        if cfg.track_train_metrics {
            rec.train_p1 = Some(dataset_loss_and_p1(params, train).1);
        }
        let mut stop = false;
        if !val.is_empty() {
            let (vl, vp) = dataset_loss_and_p1(params, val);
            rec.val_loss = Some(vl);
            rec.val_p1 = Some(vp);
            if best.as_ref().is_none_or(|(b, _)| vl < *b) {
                best = Some((vl, params.clone()));
                history.best_epoch = Some(epoch);
                since_best = 0;
            } else {
                since_best += 1;
                stop = since_best >= cfg.patience;
            }
        }
        log::info!(
            "epoch {epoch}: train loss {:.6}{}",
            rec.train_loss,
            rec.val_loss.map(|v| format!(", val loss {v:.6}")).unwrap_or_default()
        );
        history.epochs.push(rec);
        if stop {
            history.stopped_early = true;
            break;
        }
    }
    if let Some((_, p)) = best {
        *params = p;
    }
    Ok(history)
}

fn apply(params: &mut HyperIMParams, grads: &Grads, rows: usize, k: usize, cfg: &TrainConfig) {
    let word_grad = grads.word_dense(rows, k);
    let (freeze_words, freeze_labels) = (cfg.freeze_words, cfg.freeze_labels);
    for (i, t) in params.tensors_mut().into_iter().enumerate() {
        let frozen = (i == 0 && freeze_words) || (i == 1 && freeze_labels);
        if frozen {
            continue;
        }
        let g = if i == 0 { &word_grad } else { &grads.dense[i - 1] };
        let opt = match t.manifold {
            crate::diff::Manifold::Euclidean => &cfg.euclidean,
            crate::diff::Manifold::Hyperbolic { .. } => &cfg.hyperbolic,
        };
        t.step(g, opt);
    }
}
