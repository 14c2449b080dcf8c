//! GRU word encoders: the hyperbolic cell built from Möbius operations, and a
//! plain Euclidean GRU for the baseline.
//!
//! Hyperbolic cell, with ⊕ / ⊗ taken factor-wise on product points:
//!
//! ```text
//! r = σ(log_0(W^r ⊗ h ⊕ U^r ⊗ x ⊕ b^r))
//! z = σ(log_0(W^z ⊗ h ⊕ U^z ⊗ x ⊕ b^z))
//! c = φ^⊗((W^g diag(r)) ⊗ h ⊕ U^g ⊗ x ⊕ b^g)
//! h' = h ⊕ diag(z) ⊗ (-h ⊕ c)
//! ```
//!
//! Möbius additions associate to the left.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::ball::ops::{self, ProductMatvec};
use crate::ball::ProductPoint;
use crate::diff::{Manifold, ParamTensor};
use crate::embed::{uniform_in_ball, EmbeddingTable, INIT_RADIUS};
use crate::error::Error;
use crate::scalar::{add, matvec, Scalar};

/// Pointwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    #[default]
    Identity,
    Tanh,
    Relu,
    Sigmoid,
}

impl Nonlinearity {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Identity => x,
            Self::Tanh => x.tanh(),
            Self::Relu => x.relu(),
            Self::Sigmoid => x.sigmoid(),
        }
    }

    /// `exp_0 ∘ φ ∘ log_0`, factor-wise. Identity stays exact.
    pub fn apply_mobius<T: Scalar>(self, p: &[T], ball_dim: usize) -> Vec<T> {
        match self {
            Self::Identity => p.to_vec(),
            _ => {
                let t: Vec<T> = ops::product_log0(p, ball_dim)
                    .into_iter()
                    .map(|x| self.apply(x))
                    .collect();
                ops::product_exp0(&t, ball_dim)
            }
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Self::Identity => 0,
            Self::Tanh => 1,
            Self::Relu => 2,
            Self::Sigmoid => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => Self::Identity,
            1 => Self::Tanh,
            2 => Self::Relu,
            3 => Self::Sigmoid,
            _ => return None,
        })
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::Tanh => "tanh",
            Self::Relu => "relu",
            Self::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "identity" => Ok(Self::Identity),
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            "sigmoid" => Ok(Self::Sigmoid),
            _ => Err(Error::Config(format!("unknown nonlinearity {s:?}"))),
        }
    }
}

/// Which geometry the model runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Hyperbolic,
    Euclidean,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hyperbolic => "hyperbolic",
            Self::Euclidean => "euclidean",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "hyperbolic" => Ok(Self::Hyperbolic),
            "euclidean" => Ok(Self::Euclidean),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

pub const GRU_TENSORS: [&str; 9] = [
    "gru.w_r", "gru.w_z", "gru.w_g", "gru.u_r", "gru.u_z", "gru.u_g", "gru.b_r", "gru.b_z", "gru.b_g",
];

/// Six k x k Euclidean weights and three biases (ball points in hyperbolic
/// mode, plain vectors in Euclidean mode).
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    /// `w_r, w_z, w_g, u_r, u_z, u_g, b_r, b_z, b_g`.
    pub tensors: Vec<ParamTensor>,
    pub dim: usize,
    pub ball_dim: usize,
    pub mode: Mode,
    pub phi: Nonlinearity,
    pub matvec: ProductMatvec,
}

impl GruParams {
    pub fn random(dim: usize, ball_dim: usize, mode: Mode, phi: Nonlinearity, rng: &mut impl Rng) -> Self {
        assert!(
            ball_dim > 0 && dim.is_multiple_of(ball_dim),
            "k must be a multiple of the ball dimension"
        );
        let bound = (6.0 / (2 * dim) as f64).sqrt();
        let mut tensors = Vec::with_capacity(9);
        for name in &GRU_TENSORS[..6] {
            let w = (0..dim * dim).map(|_| rng.gen_range(-bound..bound)).collect();
            tensors.push(ParamTensor::new(*name, vec![dim, dim], w, Manifold::Euclidean));
        }
        for name in &GRU_TENSORS[6..] {
            let t = match mode {
                Mode::Hyperbolic => {
                    let v = (0..dim / ball_dim)
                        .flat_map(|_| uniform_in_ball(ball_dim, INIT_RADIUS, rng))
                        .collect();
                    ParamTensor::new(*name, vec![dim], v, Manifold::Hyperbolic { ball_dim })
                }
                Mode::Euclidean => ParamTensor::new(*name, vec![dim], vec![0.0; dim], Manifold::Euclidean),
            };
            tensors.push(t);
        }
        Self {
            tensors,
            dim,
            ball_dim,
            mode,
            phi,
            matvec: ProductMatvec::default(),
        }
    }

    pub fn view(&self) -> GruView<'_, f64> {
        let slices: Vec<&[f64]> = self.tensors.iter().map(|t| t.values.as_slice()).collect();
        GruView::new(&slices, self.dim, self.ball_dim, self.phi, self.matvec)
    }
}

/// Borrowed GRU weights in any scalar type.
#[derive(Debug, Clone, Copy)]
pub struct GruView<'a, T> {
    pub w: [&'a [T]; 3],
    pub u: [&'a [T]; 3],
    pub b: [&'a [T]; 3],
    pub dim: usize,
    pub ball_dim: usize,
    pub phi: Nonlinearity,
    pub matvec: ProductMatvec,
}

impl<'a, T: Scalar> GruView<'a, T> {
    /// `slices` in [`GRU_TENSORS`] order.
    pub fn new(slices: &[&'a [T]], dim: usize, ball_dim: usize, phi: Nonlinearity, matvec: ProductMatvec) -> Self {
        assert_eq!(slices.len(), 9, "GRU view needs nine tensors");
        for s in &slices[..6] {
            assert_eq!(s.len(), dim * dim, "GRU weight must be k x k");
        }
        for s in &slices[6..] {
            assert_eq!(s.len(), dim, "GRU bias must have dimension k");
        }
        Self {
            w: [slices[0], slices[1], slices[2]],
            u: [slices[3], slices[4], slices[5]],
            b: [slices[6], slices[7], slices[8]],
            dim,
            ball_dim,
            phi,
            matvec,
        }
    }
}

const R: usize = 0;
const Z: usize = 1;
const G: usize = 2;

/// Override for the update gate, used to pin down the two limiting cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateGate {
    Computed,
    Forced(f64),
}

fn mobius_affine<T: Scalar>(w: &[T], h: &[T], u: &[T], x: &[T], bias: &[T], view: &GruView<'_, T>) -> Vec<T> {
    let b = view.ball_dim;
    let wh = ops::product_matvec(w, h, b, view.matvec);
    let ux = ops::product_matvec(u, x, b, view.matvec);
    ops::product_mobius_add(&ops::product_mobius_add(&wh, &ux, b), bias, b)
}

pub fn hyper_gru_cell<T: Scalar>(prev: &[T], input: &[T], view: &GruView<'_, T>) -> Vec<T> {
    hyper_gru_cell_with(prev, input, view, UpdateGate::Computed)
}

pub fn hyper_gru_cell_with<T: Scalar>(prev: &[T], input: &[T], view: &GruView<'_, T>, gate: UpdateGate) -> Vec<T> {
    let (k, b) = (view.dim, view.ball_dim);
    assert_eq!(prev.len(), k, "hyper_gru_cell: state dimension mismatch");
    assert_eq!(input.len(), k, "hyper_gru_cell: input dimension mismatch");

    let gate_of = |i: usize| -> Vec<T> {
        let a = mobius_affine(view.w[i], prev, view.u[i], input, view.b[i], view);
        ops::product_log0(&a, b).into_iter().map(|x| x.sigmoid()).collect()
    };
    let r = gate_of(R);
    let z = match gate {
        UpdateGate::Computed => gate_of(Z),
        UpdateGate::Forced(v) => vec![T::from_f64(v); k],
    };

    // W^g diag(r): scale column j by r_j
    let wg_r: Vec<T> = view.w[G].iter().enumerate().map(|(idx, &m)| m * r[idx % k]).collect();
    let cand = view
        .phi
        .apply_mobius(&mobius_affine(&wg_r, prev, view.u[G], input, view.b[G], view), b);

    let delta = ops::product_mobius_add(&ops::neg(prev), &cand, b);
    ops::product_mobius_add(prev, &ops::product_diag_matvec(&z, &delta, b), b)
}

/// Vanilla GRU: `h' = h + z ∘ (φ(W^g (r ∘ h) + U^g x + b^g) - h)`.
pub fn euclid_gru_cell<T: Scalar>(prev: &[T], input: &[T], view: &GruView<'_, T>) -> Vec<T> {
    euclid_gru_cell_with(prev, input, view, UpdateGate::Computed)
}

pub fn euclid_gru_cell_with<T: Scalar>(prev: &[T], input: &[T], view: &GruView<'_, T>, gate: UpdateGate) -> Vec<T> {
    let k = view.dim;
    assert_eq!(prev.len(), k, "euclid_gru_cell: state dimension mismatch");
    assert_eq!(input.len(), k, "euclid_gru_cell: input dimension mismatch");
    let pre = |i: usize, h: &[T]| -> Vec<T> {
        add(
            &add(&matvec(view.w[i], k, k, h), &matvec(view.u[i], k, k, input)),
            view.b[i],
        )
    };
    let r: Vec<T> = pre(R, prev).into_iter().map(|x| x.sigmoid()).collect();
    let z: Vec<T> = match gate {
        UpdateGate::Computed => pre(Z, prev).into_iter().map(|x| x.sigmoid()).collect(),
        UpdateGate::Forced(v) => vec![T::from_f64(v); k],
    };
    let rh: Vec<T> = r.iter().zip(prev).map(|(&a, &h)| a * h).collect();
    let cand: Vec<T> = pre(G, &rh).into_iter().map(|x| view.phi.apply(x)).collect();
    prev.iter()
        .zip(&cand)
        .zip(&z)
        .map(|((&h, &c), &zz)| h + zz * (c - h))
        .collect()
}

/// Fold the cell over `inputs` from the zero state, returning every state.
pub fn encode<T: Scalar>(inputs: &[&[T]], view: &GruView<'_, T>, mode: Mode) -> Vec<Vec<T>> {
    let mut state = vec![T::zero(); view.dim];
    let mut out = Vec::with_capacity(inputs.len());
    for x in inputs {
        state = match mode {
            Mode::Hyperbolic => hyper_gru_cell(&state, x, view),
            Mode::Euclidean => euclid_gru_cell(&state, x, view),
        };
        out.push(state.clone());
    }
    out
}

/// Encoded word states, one product point per position.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub states: Vec<ProductPoint>,
}

/// Encode a token sequence with hyperbolic word embeddings.
///
/// Panics when a token has no embedding row.
pub fn encode_sequence(tokens: &[usize], words: &EmbeddingTable, params: &GruParams) -> EncodedSequence {
    assert_eq!(
        params.mode,
        Mode::Hyperbolic,
        "encode_sequence expects hyperbolic parameters"
    );
    assert_eq!(words.dim(), params.dim, "embedding and GRU dimensions differ");
    let inputs: Vec<&[f64]> = tokens
        .iter()
        .map(|&t| {
            assert!(t < words.len(), "token id {t} has no embedding");
            words.row(t)
        })
        .collect();
    let states = encode(&inputs, &params.view(), Mode::Hyperbolic)
        .into_iter()
        .map(|s| ProductPoint::from_flat(&s, params.ball_dim).expect("GRU states are finite"))
        .collect();
    EncodedSequence { states }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::ops::{log0, mobius_add, mobius_matvec, neg};
    use crate::ball::MAX_NORM;
    use crate::embed::{EmbeddingRole, Vocabulary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k: usize, b: usize, mode: Mode, seed: u64) -> GruParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = GruParams::random(k, b, mode, Nonlinearity::Identity, &mut rng);
        if mode == Mode::Hyperbolic {
            // move biases off the origin so every term matters
            for t in &mut p.tensors[6..] {
                for (i, v) in t.values.iter_mut().enumerate() {
                    *v = 0.1 * ((i as f64) - 1.3).sin();
                }
            }
        }
        p
    }

    fn point(k: usize, seed: f64) -> Vec<f64> {
        (0..k).map(|i| 0.3 * ((i as f64) * 1.7 + seed).cos()).collect()
    }

    #[test]
    fn forced_update_gate_limits() {
        let p = params(2, 2, Mode::Hyperbolic, 1);
        let v = p.view();
        let h = point(2, 0.4);
        let x = point(2, 2.0);
        let full = hyper_gru_cell_with(&h, &x, &v, UpdateGate::Forced(1.0));
        let keep = hyper_gru_cell_with(&h, &x, &v, UpdateGate::Forced(0.0));
        for (a, b) in keep.iter().zip(&h) {
            assert!((a - b).abs() < 1e-15);
        }
        // z = 1 reduces to the candidate; recompute it independently
        let r: Vec<f64> = log0(&mobius_add(
            &mobius_add(&mobius_matvec(v.w[0], 2, 2, &h), &mobius_matvec(v.u[0], 2, 2, &x)),
            v.b[0],
        ))
        .iter()
        .map(|t| crate::scalar::sigmoid(*t))
        .collect();
        let wg: Vec<f64> = v.w[2].iter().enumerate().map(|(i, m)| m * r[i % 2]).collect();
        let cand = mobius_add(
            &mobius_add(&mobius_matvec(&wg, 2, 2, &h), &mobius_matvec(v.u[2], 2, 2, &x)),
            v.b[2],
        );
        for (a, b) in full.iter().zip(&cand) {
            assert!((a - b).abs() < 1e-12, "{full:?} vs {cand:?}");
        }
    }

    #[test]
    fn one_step_matches_primitive_chain() {
        let p = params(2, 2, Mode::Hyperbolic, 2);
        let v = p.view();
        let h = point(2, 1.1);
        let x = point(2, -0.3);
        let got = hyper_gru_cell(&h, &x, &v);

        let affine = |i: usize, w: &[f64]| {
            mobius_add(
                &mobius_add(&mobius_matvec(w, 2, 2, &h), &mobius_matvec(v.u[i], 2, 2, &x)),
                v.b[i],
            )
        };
        let sig = |p: Vec<f64>| -> Vec<f64> { log0(&p).iter().map(|t| crate::scalar::sigmoid(*t)).collect() };
        let r = sig(affine(0, v.w[0]));
        let z = sig(affine(1, v.w[1]));
        let wg: Vec<f64> = (0..4).map(|i| v.w[2][i] * r[i % 2]).collect();
        let cand = affine(2, &wg);
        let diag_z = [z[0], 0.0, 0.0, z[1]];
        let want = mobius_add(&h, &mobius_matvec(&diag_z, 2, 2, &mobius_add(&neg(&h), &cand)));
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn zero_weights_give_half_gates() {
        let mut p = params(4, 2, Mode::Hyperbolic, 3);
        for t in &mut p.tensors {
            t.values.iter_mut().for_each(|v| *v = 0.0);
        }
        let h = point(4, 0.2);
        let out = hyper_gru_cell(&h, &point(4, 0.9), &p.view());
        // candidate is 0, z = 1/2: h' = h ⊕ (½ ⊗ (-h))
        let half: Vec<f64> = crate::ball::ops::product_diag_matvec(&[0.5; 4], &neg(&h), 2);
        let want = crate::ball::ops::product_mobius_add(&h, &half, 2);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(out.chunks(2).all(|c| crate::scalar::norm(c) <= MAX_NORM + 1e-15));
    }

    #[test]
    fn euclid_gate_limits() {
        let p = params(3, 1, Mode::Euclidean, 4);
        let v = p.view();
        let h = vec![0.5, -1.0, 2.0];
        let x = vec![1.0, 0.0, -0.5];
        assert_eq!(euclid_gru_cell_with(&h, &x, &v, UpdateGate::Forced(0.0)), h);
        let full = euclid_gru_cell_with(&h, &x, &v, UpdateGate::Forced(1.0));
        let r: Vec<f64> = (0..3)
            .map(|i| {
                crate::scalar::sigmoid(
                    crate::scalar::dot(&v.w[0][i * 3..i * 3 + 3], &h)
                        + crate::scalar::dot(&v.u[0][i * 3..i * 3 + 3], &x),
                )
            })
            .collect();
        let rh: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
        for (i, fi) in full.iter().enumerate() {
            let c =
                crate::scalar::dot(&v.w[2][i * 3..i * 3 + 3], &rh) + crate::scalar::dot(&v.u[2][i * 3..i * 3 + 3], &x);
            assert!((fi - c).abs() < 1e-14);
        }
    }

    #[test]
    fn sequence_encoding() {
        let p = params(4, 2, Mode::Hyperbolic, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut words = EmbeddingTable::random(
            Vocabulary::from_words(["a", "b", "c"]),
            2,
            2,
            EmbeddingRole::Word,
            &mut rng,
        );
        words.values.values.iter_mut().for_each(|v| *v *= 200.0);

        assert!(encode_sequence(&[], &words, &p).states.is_empty());

        let one = encode_sequence(&[2], &words, &p);
        let direct = hyper_gru_cell(&[0.0; 4], words.row(2), &p.view());
        assert_eq!(one.states[0].flat(), direct);

        let a = encode_sequence(&[0, 1, 2, 1], &words, &p);
        let b = encode_sequence(&[0, 1, 2, 1], &words, &p);
        assert_eq!(a, b);
        assert_eq!(a.states.len(), 4);
    }

    #[test]
    #[should_panic(expected = "no embedding")]
    fn unknown_token_panics() {
        let p = params(2, 2, Mode::Hyperbolic, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let words = EmbeddingTable::random(Vocabulary::from_words(["a"]), 1, 2, EmbeddingRole::Word, &mut rng);
        encode_sequence(&[3], &words, &p);
    }
}
