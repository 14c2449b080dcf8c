//! Poincaré ball gyrovector algebra.
//!
//! The ball is the open unit ball `{x : |x| < 1}` with conformal factor
//! `λ_p = 2 / (1 - |p|²)`. All points handed out by this module satisfy
//! `|p| <= 1 - 1e-5`.
//!
//! The typed API ([`BallPoint`], [`TangentVector`], [`ProductPoint`]) works on
//! `f64`. The generic kernels in [`ops`] are what both this API and the
//! differentiable training code call into.

pub mod ops;

use crate::error::{Error, Result};

pub use ops::ProductMatvec;

/// Outer radius every point is projected back into.
pub const MAX_NORM: f64 = 1.0 - 1e-5;
/// Points closer than this to the origin get nudged along the first axis.
pub const MIN_NORM: f64 = 1e-15;
/// Upper clamp for `atanh` arguments.
pub const ATANH_MAX: f64 = 1.0 - 1e-10;
/// Factor dimension used when none is given.
pub const DEFAULT_BALL_DIM: usize = 2;

/// A dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul: dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                out.data[i * other.cols + j] = (0..self.cols)
                    .map(|t| self.data[i * self.cols + t] * other.data[t * other.cols + j])
                    .sum();
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        crate::scalar::matvec(&self.data, self.rows, self.cols, x)
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix::new(self.rows, self.cols, self.data.iter().map(|x| x * c).collect())
    }
}

/// A point of the open unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    /// Project arbitrary finite coordinates into the ball: rescale to radius
    /// `1 - 1e-5` when outside, nudge by `1e-15` when within `1e-15` of the
    /// origin, otherwise keep as is.
    pub fn project(x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidValue("ball point must have dimension >= 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite coordinates {x:?}")));
        }
        Ok(Self {
            coords: ops::project(x),
        })
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "ball dimension must be >= 1");
        Self { coords: vec![0.0; dim] }
    }

    /// Wrap coordinates produced by a kernel; only the radius clamp applies.
    pub(crate) fn from_kernel(coords: Vec<f64>) -> Self {
        Self {
            coords: ops::clamp_to_ball(coords),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        crate::scalar::norm(&self.coords)
    }

    pub fn conformal_factor(&self) -> f64 {
        ops::conformal_factor(&self.coords)
    }

    pub fn neg(&self) -> BallPoint {
        Self {
            coords: ops::neg(&self.coords),
        }
    }

    pub fn mobius_add(&self, other: &BallPoint) -> BallPoint {
        Self::from_kernel(ops::mobius_add(&self.coords, &other.coords))
    }

    pub fn distance(&self, other: &BallPoint) -> f64 {
        ops::distance(&self.coords, &other.coords)
    }

    pub fn scalar_mul(&self, k: f64) -> BallPoint {
        Self::from_kernel(ops::mobius_scalar_mul(k, &self.coords))
    }

    pub fn exp_map(&self, w: &[f64]) -> BallPoint {
        Self::from_kernel(ops::exp_map(&self.coords, w))
    }

    pub fn log_map(&self, u: &BallPoint) -> TangentVector {
        TangentVector {
            vec: ops::log_map(&self.coords, &u.coords),
            base: self.clone(),
        }
    }
}

/// Möbius addition `u ⊕ v`.
pub fn mobius_add(u: &BallPoint, v: &BallPoint) -> BallPoint {
    u.mobius_add(v)
}

pub fn distance(u: &BallPoint, v: &BallPoint) -> f64 {
    u.distance(v)
}

/// The `acosh(1 + ½ λ_u λ_v |u - v|²)` form of the distance. Kept as an
/// independent route to cross-check [`distance`].
pub fn distance_cosh_form(u: &BallPoint, v: &BallPoint) -> f64 {
    let uu = crate::scalar::norm_sq(u.coords());
    let vv = crate::scalar::norm_sq(v.coords());
    let diff = crate::scalar::sub(u.coords(), v.coords());
    let dd = crate::scalar::norm_sq(&diff);
    (1.0 + 2.0 * dd / ((1.0 - uu) * (1.0 - vv))).acosh()
}

pub fn conformal_factor(p: &BallPoint) -> f64 {
    p.conformal_factor()
}

pub fn mobius_scalar_mul(k: f64, p: &BallPoint) -> BallPoint {
    p.scalar_mul(k)
}

pub fn mobius_matvec(m: &Matrix, p: &BallPoint) -> BallPoint {
    BallPoint::from_kernel(ops::mobius_matvec(&m.data, m.rows, m.cols, p.coords()))
}

pub fn exp_map(p: &BallPoint, w: &TangentVector) -> BallPoint {
    assert_eq!(w.base.coords, p.coords, "exp_map: tangent vector based elsewhere");
    p.exp_map(&w.vec)
}

pub fn log_map(p: &BallPoint, u: &BallPoint) -> TangentVector {
    p.log_map(u)
}

/// `f^⊗(p) = exp_0(f(log_0(p)))`.
pub fn mobius_feed_forward(f: impl Fn(&[f64]) -> Vec<f64>, p: &BallPoint) -> BallPoint {
    BallPoint::from_kernel(ops::exp0(&f(&ops::log0(p.coords()))))
}

/// A vector in the tangent space at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: BallPoint,
    pub vec: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: BallPoint, vec: Vec<f64>) -> Self {
        assert_eq!(base.dim(), vec.len(), "tangent vector: dimension mismatch");
        Self { base, vec }
    }

    pub fn zero(base: BallPoint) -> Self {
        let vec = vec![0.0; base.dim()];
        Self { base, vec }
    }
}

/// A point of the product of F balls of dimension b each.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    factors: Vec<BallPoint>,
}

impl ProductPoint {
    pub fn new(factors: Vec<BallPoint>) -> Self {
        assert!(!factors.is_empty(), "product point needs at least one factor");
        let b = factors[0].dim();
        assert!(
            factors.iter().all(|f| f.dim() == b),
            "product point factors must share a dimension"
        );
        Self { factors }
    }

    /// Split concatenated coordinates into factors of dimension `b`,
    /// projecting each one.
    pub fn from_flat(x: &[f64], b: usize) -> Result<Self> {
        if b == 0 || x.is_empty() || !x.len().is_multiple_of(b) {
            return Err(Error::InvalidValue(format!(
                "length {} is not a positive multiple of factor dimension {b}",
                x.len()
            )));
        }
        let factors = x.chunks(b).map(BallPoint::project).collect::<Result<_>>()?;
        Ok(Self { factors })
    }

    pub fn origin(num_factors: usize, b: usize) -> Self {
        Self::new(vec![BallPoint::origin(b); num_factors])
    }

    pub fn factors(&self) -> &[BallPoint] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn ball_dim(&self) -> usize {
        self.factors[0].dim()
    }

    pub fn dim(&self) -> usize {
        self.num_factors() * self.ball_dim()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.factors.iter().flat_map(|f| f.coords().iter().copied()).collect()
    }
}

/// `sqrt(sum_f d(U_f, V_f)²)`.
pub fn product_distance(u: &ProductPoint, v: &ProductPoint) -> f64 {
    assert_eq!(
        u.num_factors(),
        v.num_factors(),
        "product_distance: factor count mismatch"
    );
    u.factors
        .iter()
        .zip(&v.factors)
        .map(|(a, b)| {
            let d = a.distance(b);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: &[f64]) -> BallPoint {
        BallPoint::project(x).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn project_examples() {
        assert_eq!(pt(&[0.3, 0.4]).coords(), &[0.3, 0.4]);
        let p = pt(&[3.0, 4.0]);
        assert!(close(p.coords(), &[0.6 * MAX_NORM, 0.8 * MAX_NORM], 1e-15));
        assert_eq!(pt(&[0.0, 0.0]).coords(), &[1e-15, 0.0]);
        assert!(BallPoint::project(&[f64::NAN, 0.0]).is_err());
        assert!(BallPoint::project(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn conformal_factor_examples() {
        assert_eq!(BallPoint::origin(2).conformal_factor(), 2.0);
        assert!((pt(&[0.5, 0.0]).conformal_factor() - 8.0 / 3.0).abs() < 1e-15);
        let edge = pt(&[0.6 * MAX_NORM, 0.8 * MAX_NORM]);
        let want = 2.0 / (1.0 - MAX_NORM * MAX_NORM);
        assert!((edge.conformal_factor() - want).abs() / want < 1e-9);
        assert!((edge.conformal_factor() - 1e5).abs() / 1e5 < 1e-4);
    }

    #[test]
    fn mobius_add_examples() {
        let v = pt(&[0.2, -0.7]);
        assert_eq!(BallPoint::origin(2).mobius_add(&v), v);
        let z = pt(&[0.5, 0.0]).mobius_add(&pt(&[-0.5, 0.0]));
        assert!(close(z.coords(), &[0.0, 0.0], 1e-16));
        let s = pt(&[0.3, 0.0]).mobius_add(&pt(&[0.4, 0.0]));
        assert!(close(s.coords(), &[0.625, 0.0], 1e-15));
    }

    #[test]
    fn distance_examples() {
        let p = pt(&[0.1, 0.4]);
        assert_eq!(p.distance(&p), 0.0);
        let d = BallPoint::origin(2).distance(&pt(&[0.5, 0.0]));
        assert!((d - 1.0986123).abs() < 1e-7);
        let a = pt(&[0.5, 0.0]);
        let b = pt(&[-0.5, 0.0]);
        assert!((a.distance(&b) - 2.1972246).abs() < 1e-7);
        assert!((distance_cosh_form(&a, &b) - 2.1972246).abs() < 1e-7);
    }

    #[test]
    fn product_distance_examples() {
        let u = ProductPoint::from_flat(&[0.1, 0.2, -0.3, 0.0], 2).unwrap();
        assert_eq!(product_distance(&u, &u), 0.0);
        let a = pt(&[0.2, 0.1]);
        let b = pt(&[-0.4, 0.3]);
        let single = product_distance(&ProductPoint::new(vec![a.clone()]), &ProductPoint::new(vec![b.clone()]));
        assert_eq!(single, a.distance(&b));
        // factors at distance 3 and 4: r = tanh(d/2) from the origin
        let r3 = (1.5f64).tanh();
        let r4 = (2.0f64).tanh();
        let u = ProductPoint::new(vec![BallPoint::origin(2), BallPoint::origin(2)]);
        let v = ProductPoint::new(vec![pt(&[r3, 0.0]), pt(&[0.0, r4])]);
        assert!((product_distance(&u, &v) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_mul_examples() {
        let p = pt(&[0.3, -0.2]);
        assert!(close(p.scalar_mul(1.0).coords(), p.coords(), 1e-15));
        assert_eq!(BallPoint::origin(2).scalar_mul(3.7).coords(), &[0.0, 0.0]);
        assert!(close(pt(&[0.5, 0.0]).scalar_mul(2.0).coords(), &[0.8, 0.0], 1e-15));
    }

    #[test]
    fn matvec_examples() {
        let p = pt(&[0.3, -0.5]);
        assert!(close(
            mobius_matvec(&Matrix::identity(2), &p).coords(),
            p.coords(),
            1e-15
        ));
        // p in the null space of M
        let m = Matrix::new(2, 2, vec![5.0, 3.0, 10.0, 6.0]);
        assert_eq!(mobius_matvec(&m, &p).coords(), &[0.0, 0.0]);
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let r = Matrix::new(2, 2, vec![c, -s, s, c]);
        assert!(close(mobius_matvec(&r, &p).coords(), &r.apply(p.coords()), 1e-15));
    }

    #[test]
    fn exp_log_examples() {
        let p = pt(&[0.2, 0.3]);
        assert_eq!(p.exp_map(&[0.0, 0.0]), p);
        let e = BallPoint::origin(2).exp_map(&[0.5, 0.0]);
        assert!(close(e.coords(), &[0.4621172, 0.0], 1e-7));
        let w = [0.5, -0.25];
        let back = BallPoint::origin(2).log_map(&BallPoint::origin(2).exp_map(&w));
        assert!(close(&back.vec, &w, 1e-15));
        // log_p(p) is the zero vector
        assert_eq!(p.log_map(&p).vec, vec![0.0, 0.0]);
    }

    #[test]
    fn feed_forward_examples() {
        let p = pt(&[0.4, -0.1]);
        let id = mobius_feed_forward(|x| x.to_vec(), &p);
        assert!(close(id.coords(), p.coords(), 1e-15));
        let k = 0.37;
        let ff = mobius_feed_forward(|x| x.iter().map(|v| k * v).collect(), &p);
        assert!(close(ff.coords(), p.scalar_mul(k).coords(), 1e-15));
    }

    fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        (prop::collection::vec(-1.0f64..1.0, dim), 0.0f64..0.9).prop_map(|(v, r)| {
            let n = crate::scalar::norm(&v).max(1e-12);
            v.iter().map(|x| x / n * r).collect()
        })
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..=10).prop_flat_map(|d| (point(d), point(d)))
    }

    fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..=10).prop_flat_map(|d| (point(d), point(d), point(d)))
    }

    proptest! {
        #[test]
        fn distance_forms_agree((u, v) in pair()) {
            let (u, v) = (pt(&u), pt(&v));
            let d3 = u.distance(&v);
            let d1 = distance_cosh_form(&u, &v);
            prop_assert!((d1 - d3).abs() <= 1e-8 * (1.0 + d3));
        }

        #[test]
        fn distance_is_a_metric((u, v, w) in triple()) {
            let (u, v, w) = (pt(&u), pt(&v), pt(&w));
            prop_assert!((u.distance(&v) - v.distance(&u)).abs() < 1e-12);
            prop_assert_eq!(u.distance(&u), 0.0);
            prop_assert!(u.distance(&v) + v.distance(&w) >= u.distance(&w) - 1e-9);
        }

        #[test]
        fn left_cancellation((u, v) in pair()) {
            let (u, v) = (pt(&u), pt(&v));
            let back = u.neg().mobius_add(&u.mobius_add(&v));
            prop_assert!(close(back.coords(), v.coords(), 1e-9));
            let zero = u.mobius_add(&u.neg());
            prop_assert!(close(zero.coords(), &vec![0.0; u.dim()], 1e-9));
        }

        #[test]
        fn lemma_scalar_mul_via_maps(p in (2usize..=10).prop_flat_map(point), k in -3.0f64..3.0) {
            let p = pt(&p);
            let direct = p.scalar_mul(k);
            let o = BallPoint::origin(p.dim());
            let t: Vec<f64> = o.log_map(&p).vec.iter().map(|x| x * k).collect();
            prop_assert!(close(direct.coords(), o.exp_map(&t).coords(), 1e-9));
        }

        #[test]
        fn scalar_mul_distributes_along_a_ray(p in (2usize..=10).prop_flat_map(point), r in -1.5f64..1.5, s in -1.5f64..1.5) {
            let p = pt(&p);
            let lhs = p.scalar_mul(r + s);
            let rhs = p.scalar_mul(r).mobius_add(&p.scalar_mul(s));
            prop_assert!(close(lhs.coords(), rhs.coords(), 1e-9));
        }

        #[test]
        fn outputs_stay_in_ball((u, v) in pair(), k in -50.0f64..50.0) {
            let (u, v) = (pt(&u), pt(&v));
            for q in [u.mobius_add(&v), u.scalar_mul(k), u.exp_map(&v.coords().iter().map(|x| x * k).collect::<Vec<_>>())] {
                prop_assert!(q.norm() <= MAX_NORM + 1e-15);
            }
        }
    }
}
