//! Interaction pipeline: encode words, score every (word, label) pair by
//! negative distance, and map each label's score row to a probability with
//! prediction weights shared across labels.

use std::collections::BTreeMap;

use super::HyperIMParams;
use crate::ball::ops;
use crate::ball::ProductPoint;
use crate::diff::{Tape, Var};
use crate::encoder::{self, GruView, Mode, Nonlinearity};
use crate::scalar::{matvec, norm, sub, sum, Scalar};

/// Probabilities are clamped into `[BCE_CLAMP, 1 - BCE_CLAMP]` before logs.
pub const BCE_CLAMP: f64 = 1e-12;

/// Negative distance between a word state and a label embedding.
pub fn score<T: Scalar>(word_state: &[T], label: &[T], ball_dim: usize, mode: Mode) -> T {
    match mode {
        Mode::Hyperbolic => -ops::product_distance(word_state, label, ball_dim),
        Mode::Euclidean => -norm(&sub(word_state, label)),
    }
}

/// [`score`] on typed product points.
pub fn score_points(word_state: &ProductPoint, label: &ProductPoint) -> f64 {
    -crate::ball::product_distance(word_state, label)
}

/// `C x T` matrix of scores, row `i` belonging to label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelAwareRepr {
    pub num_labels: usize,
    pub seq_len: usize,
    pub scores: Vec<f64>,
}

impl LabelAwareRepr {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.seq_len..(i + 1) * self.seq_len]
    }
}

/// Score rows for `labels` (row-major, `dim` wide) against `states`.
pub fn label_aware_rows<T: Scalar>(
    states: &[Vec<T>],
    labels: &[T],
    dim: usize,
    ball_dim: usize,
    mode: Mode,
) -> Vec<Vec<T>> {
    assert!(!labels.is_empty(), "need at least one label");
    labels
        .chunks(dim)
        .map(|l| states.iter().map(|s| score(s, l, ball_dim, mode)).collect())
        .collect()
}

pub fn label_aware_repr(states: &[ProductPoint], labels: &[ProductPoint]) -> LabelAwareRepr {
    assert!(!labels.is_empty(), "need at least one label");
    let mut scores = Vec::with_capacity(labels.len() * states.len());
    for l in labels {
        for s in states {
            scores.push(score_points(s, l));
        }
    }
    LabelAwareRepr {
        num_labels: labels.len(),
        seq_len: states.len(),
        scores,
    }
}

/// `σ(W^e φ(W^f s))` for one score row.
pub fn predict_row<T: Scalar>(row: &[T], w_f: &[T], w_e: &[T], phi: Nonlinearity) -> T {
    let t = row.len();
    assert_eq!(w_f.len(), (t / 2) * t, "W^f must be (T/2) x T");
    assert_eq!(w_e.len(), t / 2, "W^e must be 1 x (T/2)");
    let hidden: Vec<T> = matvec(w_f, t / 2, t, row).into_iter().map(|h| phi.apply(h)).collect();
    sum(hidden.iter().zip(w_e).map(|(&h, &w)| h * w)).sigmoid()
}

pub fn predict(repr: &LabelAwareRepr, w_f: &[f64], w_e: &[f64], phi: Nonlinearity) -> Vec<f64> {
    (0..repr.num_labels)
        .map(|i| predict_row(repr.row(i), w_f, w_e, phi))
        .collect()
}

/// `-Σ_i (y_i log p_i + (1 - y_i) log(1 - p_i))` with clamped probabilities.
pub fn bce_loss<T: Scalar>(p: &[T], y: &[bool]) -> T {
    assert_eq!(p.len(), y.len(), "bce_loss: dimension mismatch");
    -sum(p.iter().zip(y).map(|(&pi, &yi)| {
        let pi = pi.clamp_value(BCE_CLAMP, 1.0 - BCE_CLAMP);
        if yi {
            pi.ln()
        } else {
            (T::one() - pi).ln()
        }
    }))
}

/// Borrowed parameter values in any scalar type, with word vectors already
/// looked up per position.
pub struct ForwardInputs<'a, T> {
    pub words: Vec<&'a [T]>,
    pub labels: &'a [T],
    pub gru: GruView<'a, T>,
    pub w_f: &'a [T],
    pub w_e: &'a [T],
}

pub fn forward_generic<T: Scalar>(inputs: &ForwardInputs<'_, T>, params: &HyperIMParams) -> Vec<T> {
    let cfg = &params.config;
    assert_eq!(inputs.words.len(), cfg.seq_len, "document must be padded to T");
    let states = encoder::encode(&inputs.words, &inputs.gru, cfg.mode);
    let rows = label_aware_rows(&states, inputs.labels, cfg.dim(), cfg.ball_dim, cfg.mode);
    rows.iter()
        .map(|r| predict_row(r, inputs.w_f, inputs.w_e, cfg.pred_phi))
        .collect()
}

/// Label probabilities for a padded token sequence.
pub fn forward(tokens: &[usize], params: &HyperIMParams) -> Vec<f64> {
    let k = params.config.dim();
    let words = tokens
        .iter()
        .map(|&t| {
            assert!(t < params.vocab.len(), "token id {t} out of vocabulary");
            &params.word_emb.values[t * k..(t + 1) * k]
        })
        .collect();
    let inputs = ForwardInputs {
        words,
        labels: &params.label_emb.values,
        gru: params.gru.view(),
        w_f: &params.w_f.values,
        w_e: &params.w_e.values,
    };
    forward_generic(&inputs, params)
}

/// Gradients for one or more documents. Word gradients are sparse by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub words: BTreeMap<usize, Vec<f64>>,
    /// Dense gradients for every tensor after the word table, in
    /// [`HyperIMParams::tensors`] order.
    pub dense: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros(params: &HyperIMParams) -> Self {
        Self {
            words: BTreeMap::new(),
            dense: params.tensors()[1..].iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Grads) {
        for (row, g) in &other.words {
            let acc = self.words.entry(*row).or_insert_with(|| vec![0.0; g.len()]);
            acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        for (acc, g) in self.dense.iter_mut().zip(&other.dense) {
            acc.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.words.values_mut().flatten().for_each(|x| *x *= c);
        self.dense.iter_mut().flatten().for_each(|x| *x *= c);
    }

    /// Dense gradient for the word table.
    pub fn word_dense(&self, rows: usize, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows * dim];
        for (r, g) in &self.words {
            out[r * dim..(r + 1) * dim].copy_from_slice(g);
        }
        out
    }
}

/// BCE loss of one document and its gradient with respect to every
/// parameter.
pub fn loss_and_grad(tokens: &[usize], targets: &[bool], params: &HyperIMParams) -> (f64, Grads) {
    let k = params.config.dim();
    let tape = Tape::new();

    let mut unique: BTreeMap<usize, Vec<Var<'_>>> = BTreeMap::new();
    for &t in tokens {
        assert!(t < params.vocab.len(), "token id {t} out of vocabulary");
        unique
            .entry(t)
            .or_insert_with(|| tape.vars(&params.word_emb.values[t * k..(t + 1) * k]));
    }
    let dense_vars: Vec<Vec<Var<'_>>> = params.tensors()[1..].iter().map(|t| tape.vars(&t.values)).collect();
    let gru_slices: Vec<&[Var<'_>]> = dense_vars[1..10].iter().map(|v| v.as_slice()).collect();
    let g = &params.gru;
    let inputs = ForwardInputs {
        words: tokens.iter().map(|t| unique[t].as_slice()).collect(),
        labels: &dense_vars[0],
        gru: GruView::new(&gru_slices, g.dim, g.ball_dim, g.phi, g.matvec),
        w_f: &dense_vars[10],
        w_e: &dense_vars[11],
    };
    let p = forward_generic(&inputs, params);
    let loss = bce_loss(&p, targets);
    let adj = tape.backward(loss);
    let grads = Grads {
        words: unique.iter().map(|(&t, vars)| (t, adj.wrt_all(vars))).collect(),
        dense: dense_vars.iter().map(|vs| adj.wrt_all(vs)).collect(),
    };
    (loss.value(), grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::BallPoint;
    use crate::diff::finite_diff_check;

    #[test]
    fn score_examples() {
        let l = ProductPoint::new(vec![BallPoint::project(&[0.2, -0.3]).unwrap()]);
        assert_eq!(score_points(&l, &l), 0.0);
        let o = ProductPoint::origin(1, 2);
        let half = ProductPoint::new(vec![BallPoint::project(&[0.5, 0.0]).unwrap()]);
        assert!((score_points(&o, &half) + 1.0986123).abs() < 1e-7);
        assert_eq!(score(&[1.0, 2.0], &[4.0, 6.0], 2, Mode::Euclidean), -5.0);
    }

    #[test]
    fn score_decreases_along_geodesic() {
        let label = [0.1, 0.2];
        let dir = [0.6, -0.3];
        let mut last = f64::INFINITY;
        for i in 0..20 {
            let t = 0.25 * i as f64;
            let w: Vec<f64> = dir.iter().map(|d| d * t).collect();
            let p = ops::exp_map(&label, &w);
            let s = score(&p, &label, 2, Mode::Hyperbolic);
            assert!(s < last || i == 0);
            last = s;
        }
    }

    #[test]
    fn repr_shapes_and_row_permutation() {
        let pts = |v: &[[f64; 2]]| {
            v.iter()
                .map(|c| ProductPoint::new(vec![BallPoint::project(c).unwrap()]))
                .collect::<Vec<_>>()
        };
        let states = pts(&[[0.1, 0.0]]);
        let labels = pts(&[[0.3, 0.3]]);
        let r = label_aware_repr(&states, &labels);
        assert_eq!((r.num_labels, r.seq_len), (1, 1));
        assert_eq!(r.scores[0], score_points(&states[0], &labels[0]));

        let states = pts(&[[0.1, 0.0], [-0.2, 0.4], [0.0, -0.5]]);
        let a = pts(&[[0.3, 0.3], [-0.1, 0.6], [0.3, 0.3]]);
        let b = pts(&[[-0.1, 0.6], [0.3, 0.3], [0.3, 0.3]]);
        let ra = label_aware_repr(&states, &a);
        let rb = label_aware_repr(&states, &b);
        assert_eq!(ra.row(0), rb.row(1));
        assert_eq!(ra.row(1), rb.row(0));
        assert_eq!(ra.row(0), ra.row(2));
    }

    #[test]
    fn predict_examples() {
        let repr = LabelAwareRepr {
            num_labels: 3,
            seq_len: 4,
            scores: vec![-0.5, -1.0, -0.25, -2.0, -0.1, -0.2, -0.3, -0.4, -0.5, -1.0, -0.25, -2.0],
        };
        let w_f: Vec<f64> = (0..8).map(|i| 0.3 * i as f64 - 1.0).collect();
        assert_eq!(predict(&repr, &w_f, &[0.0, 0.0], Nonlinearity::Relu), vec![0.5; 3]);

        let w_e = [0.7, -1.3];
        let p = predict(&repr, &w_f, &w_e, Nonlinearity::Relu);
        assert_eq!(p[0], p[2]);
        // hand evaluation of row 1
        let s = repr.row(1);
        let h0 = (w_f[0] * s[0] + w_f[1] * s[1] + w_f[2] * s[2] + w_f[3] * s[3]).max(0.0);
        let h1 = (w_f[4] * s[0] + w_f[5] * s[1] + w_f[6] * s[2] + w_f[7] * s[3]).max(0.0);
        let want = 1.0 / (1.0 + (-(w_e[0] * h0 + w_e[1] * h1)).exp());
        assert!((p[1] - want).abs() < 1e-15);
    }

    #[test]
    fn bce_examples() {
        let y = [true, false, true];
        let perfect = bce_loss(&[1.0, 0.0, 1.0], &y);
        assert!((0.0..=3.0 * 1.2e-11).contains(&perfect));
        let half = bce_loss(&[0.5, 0.5, 0.5], &y);
        assert!((half - 3.0 * 2f64.ln()).abs() < 1e-14);

        let p = [0.3, 0.8, 0.55];
        let tape = Tape::new();
        let ps = tape.vars(&p);
        let g = bce_loss(&ps, &y).backward().wrt_all(&ps);
        for i in 0..3 {
            let yi = if y[i] { 1.0 } else { 0.0 };
            let want = (p[i] - yi) / (p[i] * (1.0 - p[i]));
            assert!((g[i] - want).abs() < 1e-12);
        }
        let fd = finite_diff_check(|x| bce_loss(x, &y), &p);
        assert!(fd < 1e-6);
    }
}
