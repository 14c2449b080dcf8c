use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::ball::ops::ProductMatvec;
use crate::diff::AdamConfig;
use crate::encoder::{Mode, Nonlinearity};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TrainConfig};

/// Every knob a command can read. Loaded from a flat `key = value` file,
/// then overridden by flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub factors: usize,
    pub ball_dim: usize,
    /// `None` picks the length from the corpus.
    pub seq_len: Option<usize>,
    /// `None` uses identity in hyperbolic mode and tanh in Euclidean mode.
    pub gru_phi: Option<Nonlinearity>,
    pub pred_phi: Nonlinearity,
    pub matvec: ProductMatvec,
    pub epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub lr_euclidean: f64,
    pub lr_hyperbolic: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub clip: Option<f64>,
    pub seed: u64,
    pub freeze_labels: bool,
    pub freeze_words: bool,
    pub val_fraction: f64,
    pub label_epochs: usize,
    pub label_lr: f64,
    pub glove_epochs: usize,
    pub glove_lr: f64,
    pub window: usize,
    pub hypernym_epochs: usize,
    pub top_k: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hyperbolic,
            factors: 2,
            ball_dim: 2,
            seq_len: None,
            gru_phi: None,
            pred_phi: Nonlinearity::Relu,
            matvec: ProductMatvec::Full,
            epochs: 50,
            batch_size: 32,
            patience: 10,
            lr_euclidean: 1e-3,
            lr_hyperbolic: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            clip: Some(5.0),
            seed: 0,
            freeze_labels: false,
            freeze_words: false,
            val_fraction: 0.1,
            label_epochs: 1000,
            label_lr: 0.01,
            glove_epochs: 100,
            glove_lr: 0.01,
            window: 5,
            hypernym_epochs: 100,
            top_k: 5,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

impl RunConfig {
    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "mode" => self.mode = v.parse()?,
            "factors" => self.factors = parse(key, v)?,
            "ball_dim" => self.ball_dim = parse(key, v)?,
            "seq_len" => self.seq_len = if v == "auto" { None } else { Some(parse(key, v)?) },
            "gru_phi" => self.gru_phi = if v == "auto" { None } else { Some(v.parse()?) },
            "pred_phi" => self.pred_phi = v.parse()?,
            "matvec" => {
                self.matvec = match v {
                    "full" => ProductMatvec::Full,
                    "block" => ProductMatvec::BlockDiagonal,
                    _ => return Err(Error::Config(format!("matvec = {v:?}: expected full or block"))),
                }
            }
            "epochs" => self.epochs = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "patience" => self.patience = parse(key, v)?,
            "lr" => {
                self.lr_euclidean = parse(key, v)?;
                self.lr_hyperbolic = self.lr_euclidean;
            }
            "lr_euclidean" => self.lr_euclidean = parse(key, v)?,
            "lr_hyperbolic" => self.lr_hyperbolic = parse(key, v)?,
            "beta1" => self.beta1 = parse(key, v)?,
            "beta2" => self.beta2 = parse(key, v)?,
            "clip" => self.clip = if v == "none" { None } else { Some(parse(key, v)?) },
            "seed" => self.seed = parse(key, v)?,
            "freeze_labels" => self.freeze_labels = parse(key, v)?,
            "freeze_words" => self.freeze_words = parse(key, v)?,
            "val_fraction" => self.val_fraction = parse(key, v)?,
            "label_epochs" => self.label_epochs = parse(key, v)?,
            "label_lr" => self.label_lr = parse(key, v)?,
            "glove_epochs" => self.glove_epochs = parse(key, v)?,
            "glove_lr" => self.glove_lr = parse(key, v)?,
            "window" => self.window = parse(key, v)?,
            "hypernym_epochs" => self.hypernym_epochs = parse(key, v)?,
            "top_k" => self.top_k = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Apply `key=value` assignments in order.
    pub fn apply_overrides<'a>(&mut self, items: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            cfg.set(k, v).map_err(|e| err(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    /// Serialize in the file format; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("mode", self.mode.to_string());
        kv("factors", self.factors.to_string());
        kv("ball_dim", self.ball_dim.to_string());
        kv("seq_len", self.seq_len.map_or("auto".into(), |t| t.to_string()));
        kv("gru_phi", self.gru_phi.map_or("auto".into(), |p| p.to_string()));
        kv("pred_phi", self.pred_phi.to_string());
        kv(
            "matvec",
            match self.matvec {
                ProductMatvec::Full => "full".into(),
                ProductMatvec::BlockDiagonal => "block".into(),
            },
        );
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("patience", self.patience.to_string());
        kv("lr_euclidean", self.lr_euclidean.to_string());
        kv("lr_hyperbolic", self.lr_hyperbolic.to_string());
        kv("beta1", self.beta1.to_string());
        kv("beta2", self.beta2.to_string());
        kv("clip", self.clip.map_or("none".into(), |c| c.to_string()));
        kv("seed", self.seed.to_string());
        kv("freeze_labels", self.freeze_labels.to_string());
        kv("freeze_words", self.freeze_words.to_string());
        kv("val_fraction", self.val_fraction.to_string());
        kv("label_epochs", self.label_epochs.to_string());
        kv("label_lr", self.label_lr.to_string());
        kv("glove_epochs", self.glove_epochs.to_string());
        kv("glove_lr", self.glove_lr.to_string());
        kv("window", self.window.to_string());
        kv("hypernym_epochs", self.hypernym_epochs.to_string());
        kv("top_k", self.top_k.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 || self.ball_dim == 0 {
            return Err(Error::Config("factors and ball_dim must be positive".into()));
        }
        if let Some(t) = self.seq_len {
            if t == 0 || t % 2 != 0 {
                return Err(Error::Config(format!("seq_len {t} must be even and positive")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must lie in [0, 1)".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be positive".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, seq_len: usize) -> ModelConfig {
        ModelConfig {
            mode: self.mode,
            num_factors: self.factors,
            ball_dim: self.ball_dim,
            seq_len,
            gru_phi: self.gru_phi.unwrap_or(match self.mode {
                Mode::Hyperbolic => Nonlinearity::Identity,
                Mode::Euclidean => Nonlinearity::Tanh,
            }),
            pred_phi: self.pred_phi,
            matvec: self.matvec,
        }
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: AdamConfig::default().eps,
            clip_norm: self.clip,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            euclidean: self.adam(self.lr_euclidean),
            hyperbolic: self.adam(self.lr_hyperbolic),
            seed: self.seed,
            freeze_labels: self.freeze_labels,
            freeze_words: self.freeze_words,
            track_train_metrics: false,
        }
    }

    pub fn label_adam(&self) -> AdamConfig {
        self.adam(self.label_lr)
    }

    pub fn glove_adam(&self) -> AdamConfig {
        self.adam(self.glove_lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.apply_overrides(["mode=euclidean", "seq_len=12", "clip=none", "lr=0.02", "matvec=block"])
            .unwrap();
        let back = RunConfig::parse(&c.to_text(), Path::new("c.cfg")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.lr_hyperbolic, 0.02);
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::parse("# run\nepochs = 3 # short\n\nseed=9\n", Path::new("c.cfg")).unwrap();
        assert_eq!((c.epochs, c.seed), (3, 9));
        let e = RunConfig::parse("epochs = 3\nbogus = 1\n", Path::new("c.cfg")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(RunConfig::parse("seq_len = 7\n", Path::new("c.cfg")).is_err());
        assert!(RunConfig::default().apply_overrides(["epochs"]).is_err());
    }
}
