//! Euclidean Adam and its Riemannian counterpart on products of Poincaré
//! balls.
//!
//! Riemannian Adam keeps the second moment per coordinate of the Riemannian
//! gradient, and carries the first moment along as tangent coordinates
//! without parallel transport (identity transport).

use crate::ball::{ops, BallPoint, TangentVector};

/// Which space a parameter tensor lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    Euclidean,
    /// Consecutive chunks of `ball_dim` values are Poincaré ball points.
    Hyperbolic {
        ball_dim: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Euclidean gradient norm cap applied per tensor before any rescaling.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(5.0),
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// A named, flat parameter tensor with its optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub manifold: Manifold,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>, manifold: Manifold) -> Self {
        let n: usize = shape.iter().product();
        assert_eq!(values.len(), n, "param tensor: values do not match shape");
        if let Manifold::Hyperbolic { ball_dim } = manifold {
            assert!(
                ball_dim > 0 && n.is_multiple_of(ball_dim),
                "hyperbolic tensor not divisible into balls"
            );
        }
        Self {
            name: name.into(),
            shape,
            m: vec![0.0; n],
            v: vec![0.0; n],
            values,
            manifold,
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn reset_state(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.step = 0;
    }

    /// Update with the optimizer matching the manifold tag.
    pub fn step(&mut self, grad: &[f64], cfg: &AdamConfig) {
        match self.manifold {
            Manifold::Euclidean => adam_step(self, grad, cfg),
            Manifold::Hyperbolic { .. } => radam_step(self, grad, cfg),
        }
    }

    /// True when every ball chunk of a hyperbolic tensor is inside the
    /// projection radius and all values are finite.
    pub fn is_valid(&self) -> bool {
        if self.values.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self.manifold {
            Manifold::Euclidean => true,
            Manifold::Hyperbolic { ball_dim } => self
                .values
                .chunks(ball_dim)
                .all(|c| crate::scalar::norm(c) <= crate::ball::MAX_NORM + 1e-15),
        }
    }
}

fn clipped(grad: &[f64], cfg: &AdamConfig) -> Vec<f64> {
    let mut g = grad.to_vec();
    if let Some(max) = cfg.clip_norm {
        let n = crate::scalar::norm(&g);
        if n > max {
            let s = max / n;
            g.iter_mut().for_each(|x| *x *= s);
        }
    }
    g
}

/// `(1/λ_θ²) ∇_E`.
pub fn riemannian_grad(theta: &BallPoint, g_euclidean: &[f64]) -> TangentVector {
    let s = riemannian_scale(theta.coords());
    TangentVector::new(theta.clone(), g_euclidean.iter().map(|g| g * s).collect())
}

fn riemannian_scale(theta: &[f64]) -> f64 {
    let one_minus = 1.0 - crate::scalar::norm_sq(theta);
    one_minus * one_minus / 4.0
}

/// `θ ← exp_θ(-η g_R)`.
pub fn rsgd_step(theta: &BallPoint, g_r: &TangentVector, eta: f64) -> BallPoint {
    assert_eq!(theta.coords(), g_r.base.coords(), "rsgd_step: gradient based elsewhere");
    let w: Vec<f64> = g_r.vec.iter().map(|g| -eta * g).collect();
    let next = ops::exp_map(theta.coords(), &w);
    BallPoint::project(&next).expect("exp_map of finite inputs is finite")
}

pub fn adam_step(param: &mut ParamTensor, grad: &[f64], cfg: &AdamConfig) {
    assert_eq!(param.values.len(), grad.len(), "adam_step: gradient has wrong length");
    let g = clipped(grad, cfg);
    param.step += 1;
    let t = param.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (i, &gi) in g.iter().enumerate() {
        param.m[i] = cfg.beta1 * param.m[i] + (1.0 - cfg.beta1) * gi;
        param.v[i] = cfg.beta2 * param.v[i] + (1.0 - cfg.beta2) * gi * gi;
        let m_hat = param.m[i] / bc1;
        let v_hat = param.v[i] / bc2;
        param.values[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// Riemannian Adam over every ball chunk of a hyperbolic tensor.
pub fn radam_step(param: &mut ParamTensor, grad: &[f64], cfg: &AdamConfig) {
    let Manifold::Hyperbolic { ball_dim } = param.manifold else {
        panic!("radam_step on Euclidean tensor {}", param.name);
    };
    assert_eq!(param.values.len(), grad.len(), "radam_step: gradient has wrong length");
    let g = clipped(grad, cfg);
    param.step += 1;
    let t = param.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let mut w = vec![0.0; ball_dim];
    for start in (0..g.len()).step_by(ball_dim) {
        let range = start..start + ball_dim;
        let scale = riemannian_scale(&param.values[range.clone()]);
        for (j, i) in range.clone().enumerate() {
            let gr = g[i] * scale;
            param.m[i] = cfg.beta1 * param.m[i] + (1.0 - cfg.beta1) * gr;
            param.v[i] = cfg.beta2 * param.v[i] + (1.0 - cfg.beta2) * gr * gr;
            let m_hat = param.m[i] / bc1;
            let v_hat = param.v[i] / bc2;
            w[j] = -cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        let moved = ops::project(&ops::exp_map(&param.values[range.clone()], &w));
        param.values[range].copy_from_slice(&moved);
    }
}
