use rand::Rng;

use crate::ball::ops::ProductMatvec;
use crate::diff::{Manifold, ParamTensor};
use crate::embed::{uniform_in_ball, EmbeddingTable, Vocabulary, INIT_RADIUS};
use crate::encoder::{GruParams, Mode, Nonlinearity};
use crate::error::{Error, Result};

/// Half-width of the uniform init for Euclidean-mode embeddings.
pub const EUCLIDEAN_INIT: f64 = 0.1;

/// Shape and behavior knobs fixed at model creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub mode: Mode,
    /// Number of balls per embedding.
    pub num_factors: usize,
    /// Dimension of each ball.
    pub ball_dim: usize,
    /// Padded sequence length; must be even.
    pub seq_len: usize,
    pub gru_phi: Nonlinearity,
    pub pred_phi: Nonlinearity,
    pub matvec: ProductMatvec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hyperbolic,
            num_factors: 2,
            ball_dim: 2,
            seq_len: 10,
            gru_phi: Nonlinearity::Identity,
            pred_phi: Nonlinearity::Relu,
            matvec: ProductMatvec::Full,
        }
    }
}

impl ModelConfig {
    pub fn dim(&self) -> usize {
        self.num_factors * self.ball_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_factors == 0 || self.ball_dim == 0 {
            return Err(Error::Config("factors and ball dimension must be positive".into()));
        }
        if self.seq_len == 0 || !self.seq_len.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "sequence length {} must be even and positive",
                self.seq_len
            )));
        }
        Ok(())
    }
}

/// Every trainable tensor of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperIMParams {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub labels: Vocabulary,
    /// Parent-child edges between label indices.
    pub label_edges: Vec<(usize, usize)>,
    pub word_emb: ParamTensor,
    pub label_emb: ParamTensor,
    pub gru: GruParams,
    /// `(T/2) x T`.
    pub w_f: ParamTensor,
    /// `1 x (T/2)`.
    pub w_e: ParamTensor,
}

impl HyperIMParams {
    /// Fresh parameters. In hyperbolic mode, rows of `label_init` and
    /// `word_init` whose ids match are copied in; everything else starts
    /// near the origin. Euclidean mode ignores both tables.
    pub fn new(
        config: ModelConfig,
        vocab: Vocabulary,
        labels: Vocabulary,
        label_edges: Vec<(usize, usize)>,
        label_init: Option<&EmbeddingTable>,
        word_init: Option<&EmbeddingTable>,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        config.validate()?;
        let (k, b, t) = (config.dim(), config.ball_dim, config.seq_len);
        let word_emb = embedding_tensor("word_embeddings", &vocab, config, word_init, rng)?;
        let label_emb = embedding_tensor("label_embeddings", &labels, config, label_init, rng)?;
        let gru = {
            let mut g = GruParams::random(k, b, config.mode, config.gru_phi, rng);
            g.matvec = config.matvec;
            g
        };
        let glorot = |fan_in: usize, fan_out: usize, rng: &mut dyn rand::RngCore| -> Vec<f64> {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let w_f = ParamTensor::new("w_f", vec![t / 2, t], glorot(t, t / 2, rng), Manifold::Euclidean);
        let w_e = ParamTensor::new("w_e", vec![1, t / 2], glorot(t / 2, 1, rng), Manifold::Euclidean);
        Ok(Self {
            config,
            vocab,
            labels,
            label_edges,
            word_emb,
            label_emb,
            gru,
            w_f,
            w_e,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    /// All tensors in a fixed order: words, labels, the nine GRU tensors,
    /// `w_f`, `w_e`.
    pub fn tensors(&self) -> Vec<&ParamTensor> {
        let mut v = vec![&self.word_emb, &self.label_emb];
        v.extend(self.gru.tensors.iter());
        v.push(&self.w_f);
        v.push(&self.w_e);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut v = vec![&mut self.word_emb, &mut self.label_emb];
        v.extend(self.gru.tensors.iter_mut());
        v.push(&mut self.w_f);
        v.push(&mut self.w_e);
        v
    }

    /// Every hyperbolic tensor inside the ball and every value finite.
    pub fn is_valid(&self) -> bool {
        self.tensors().iter().all(|t| t.is_valid())
    }

    pub fn label_table(&self) -> EmbeddingTable {
        assert_eq!(
            self.config.mode,
            Mode::Hyperbolic,
            "label_table is only defined in hyperbolic mode"
        );
        EmbeddingTable::from_values(
            self.labels.clone(),
            self.config.num_factors,
            self.config.ball_dim,
            crate::embed::EmbeddingRole::Label,
            self.label_emb.values.clone(),
        )
    }

    pub fn word_table(&self) -> EmbeddingTable {
        assert_eq!(
            self.config.mode,
            Mode::Hyperbolic,
            "word_table is only defined in hyperbolic mode"
        );
        EmbeddingTable::from_values(
            self.vocab.clone(),
            self.config.num_factors,
            self.config.ball_dim,
            crate::embed::EmbeddingRole::Word,
            self.word_emb.values.clone(),
        )
    }
}

fn embedding_tensor(
    name: &str,
    ids: &Vocabulary,
    config: ModelConfig,
    init: Option<&EmbeddingTable>,
    rng: &mut impl Rng,
) -> Result<ParamTensor> {
    let (k, b) = (config.dim(), config.ball_dim);
    let n = ids.len();
    let mut values = Vec::with_capacity(n * k);
    match config.mode {
        Mode::Hyperbolic => {
            if let Some(t) = init {
                if t.dim() != k || t.ball_dim != b {
                    return Err(Error::Config(format!(
                        "{name}: pre-trained table has dim {} x ball {} but the model uses {k} x {b}",
                        t.dim(),
                        t.ball_dim
                    )));
                }
            }
            for id in ids.words() {
                match init.and_then(|t| t.ids.get(id).map(|i| t.row(i))) {
                    Some(row) => values.extend_from_slice(row),
                    None => {
                        for _ in 0..config.num_factors {
                            values.extend(uniform_in_ball(b, INIT_RADIUS, rng));
                        }
                    }
                }
            }
            Ok(ParamTensor::new(
                name,
                vec![n, k],
                values,
                Manifold::Hyperbolic { ball_dim: b },
            ))
        }
        Mode::Euclidean => {
            values.extend((0..n * k).map(|_| rng.gen_range(-EUCLIDEAN_INIT..EUCLIDEAN_INIT)));
            Ok(ParamTensor::new(name, vec![n, k], values, Manifold::Euclidean))
        }
    }
}
