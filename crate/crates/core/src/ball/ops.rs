//! Gyrovector kernels written against [`Scalar`], shared by inference and the
//! differentiable training path. Inputs are coordinate slices; every point
//! returned has norm at most [`MAX_NORM`].

use crate::scalar::{dot, matvec, norm, norm_sq, scaled, Scalar};

use super::{ATANH_MAX, MAX_NORM, MIN_NORM};

/// Pull `x` back inside the closed ball of radius [`MAX_NORM`] and push it
/// off the origin by [`MIN_NORM`] along the first axis when it is closer
/// than that.
pub fn project<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = norm(x).value();
    if n > MAX_NORM {
        rescale_to_max(x)
    } else if n < MIN_NORM {
        let mut out = x.to_vec();
        if let Some(first) = out.first_mut() {
            *first = *first + T::from_f64(MIN_NORM);
        }
        out
    } else {
        x.to_vec()
    }
}

/// Radius-only projection applied to the output of every operation.
pub fn clamp_to_ball<T: Scalar>(x: Vec<T>) -> Vec<T> {
    if norm(&x).value() > MAX_NORM {
        rescale_to_max(&x)
    } else {
        x
    }
}

/// Scale `x` onto radius [`MAX_NORM`], shrinking by a few ulps if rounding
/// leaves the recomputed norm above it.
fn rescale_to_max<T: Scalar>(x: &[T]) -> Vec<T> {
    let s = T::from_f64(MAX_NORM) / norm(x);
    let mut out = scaled(x, s);
    let mut shrink = 1.0;
    while norm(&out).value() > MAX_NORM {
        shrink *= 1.0 - f64::EPSILON;
        out = scaled(x, s.scale(shrink));
    }
    out
}

#[inline]
fn safe_atanh<T: Scalar>(x: T) -> T {
    x.clamp_value(0.0, ATANH_MAX).atanh()
}

pub fn conformal_factor<T: Scalar>(p: &[T]) -> T {
    T::from_f64(2.0) / (T::one() - norm_sq(p))
}

/// Möbius addition without the final radius clamp.
pub fn mobius_add_raw<T: Scalar>(u: &[T], v: &[T]) -> Vec<T> {
    assert_eq!(u.len(), v.len(), "mobius_add: dimension mismatch");
    let uv = dot(u, v);
    let uu = norm_sq(u);
    let vv = norm_sq(v);
    let two_uv = T::from_f64(2.0) * uv;
    let cu = T::one() + two_uv + vv;
    let cv = T::one() - uu;
    let den = T::one() + two_uv + uu * vv;
    u.iter().zip(v).map(|(&a, &b)| (cu * a + cv * b) / den).collect()
}

pub fn mobius_add<T: Scalar>(u: &[T], v: &[T]) -> Vec<T> {
    clamp_to_ball(mobius_add_raw(u, v))
}

pub fn neg<T: Scalar>(u: &[T]) -> Vec<T> {
    u.iter().map(|&x| -x).collect()
}

/// Geodesic distance `2 atanh(|(-u) ⊕ v|)`.
pub fn distance<T: Scalar>(u: &[T], v: &[T]) -> T {
    assert_eq!(u.len(), v.len(), "distance: dimension mismatch");
    if u.iter().zip(v).all(|(a, b)| a.value() == b.value()) {
        return T::zero();
    }
    let diff = mobius_add_raw(&neg(u), v);
    T::from_f64(2.0) * safe_atanh(norm(&diff))
}

/// `tanh(k atanh|p|) p/|p|`, with `k ⊗ 0 = 0`.
pub fn mobius_scalar_mul<T: Scalar>(k: T, p: &[T]) -> Vec<T> {
    let n = norm(p);
    if n.value() == 0.0 {
        return vec![T::zero(); p.len()];
    }
    let s = (k * safe_atanh(n)).tanh() / n;
    clamp_to_ball(scaled(p, s))
}

/// Möbius matrix-vector product for a row-major `rows x cols` matrix.
pub fn mobius_matvec<T: Scalar>(m: &[T], rows: usize, cols: usize, p: &[T]) -> Vec<T> {
    let mp = matvec(m, rows, cols, p);
    let n_mp = norm(&mp);
    let n_p = norm(p);
    if n_mp.value() == 0.0 || n_p.value() == 0.0 {
        return vec![T::zero(); rows];
    }
    let s = ((n_mp / n_p) * safe_atanh(n_p)).tanh() / n_mp;
    clamp_to_ball(scaled(&mp, s))
}

pub fn exp_map<T: Scalar>(p: &[T], w: &[T]) -> Vec<T> {
    assert_eq!(p.len(), w.len(), "exp_map: dimension mismatch");
    let n_w = norm(w);
    if n_w.value() == 0.0 {
        return clamp_to_ball(p.to_vec());
    }
    let half_lambda = T::one() / (T::one() - norm_sq(p));
    let s = (half_lambda * n_w).tanh() / n_w;
    clamp_to_ball(mobius_add_raw(p, &scaled(w, s)))
}

/// Inverse of [`exp_map`]. `log_p(p)` is the zero vector.
pub fn log_map<T: Scalar>(p: &[T], u: &[T]) -> Vec<T> {
    assert_eq!(p.len(), u.len(), "log_map: dimension mismatch");
    let a = mobius_add_raw(&neg(p), u);
    let n = norm(&a);
    if n.value() == 0.0 {
        return vec![T::zero(); p.len()];
    }
    let two_over_lambda = T::one() - norm_sq(p);
    let s = two_over_lambda * safe_atanh(n) / n;
    scaled(&a, s)
}

/// `exp_0(w) = tanh(|w|) w/|w|`.
pub fn exp0<T: Scalar>(w: &[T]) -> Vec<T> {
    let n = norm(w);
    if n.value() == 0.0 {
        return vec![T::zero(); w.len()];
    }
    clamp_to_ball(scaled(w, n.tanh() / n))
}

/// `log_0(p) = atanh(|p|) p/|p|`.
pub fn log0<T: Scalar>(p: &[T]) -> Vec<T> {
    let n = norm(p);
    if n.value() == 0.0 {
        return vec![T::zero(); p.len()];
    }
    scaled(p, safe_atanh(n) / n)
}

// Product-of-balls helpers. A product point of dimension k = F*b is stored
// as its concatenated coordinates; `b` is the factor dimension.

fn factors<T>(x: &[T], b: usize) -> std::slice::Chunks<'_, T> {
    assert!(
        b > 0 && x.len().is_multiple_of(b),
        "product point: length {} not a multiple of {b}",
        x.len()
    );
    x.chunks(b)
}

fn per_factor<T: Scalar>(x: &[T], b: usize, f: impl Fn(&[T]) -> Vec<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    for chunk in factors(x, b) {
        out.extend(f(chunk));
    }
    out
}

fn per_factor2<T: Scalar>(x: &[T], y: &[T], b: usize, f: impl Fn(&[T], &[T]) -> Vec<T>) -> Vec<T> {
    assert_eq!(x.len(), y.len(), "product point: dimension mismatch");
    let mut out = Vec::with_capacity(x.len());
    for (cx, cy) in factors(x, b).zip(y.chunks(b)) {
        out.extend(f(cx, cy));
    }
    out
}

/// `sqrt(sum_f d(u_f, v_f)^2)`.
pub fn product_distance<T: Scalar>(u: &[T], v: &[T], b: usize) -> T {
    assert_eq!(u.len(), v.len(), "product_distance: dimension mismatch");
    let mut sq = T::zero();
    for (cu, cv) in factors(u, b).zip(v.chunks(b)) {
        let d = distance(cu, cv);
        sq = sq + d * d;
    }
    if sq.value() == 0.0 {
        T::zero()
    } else {
        sq.sqrt()
    }
}

pub fn product_project<T: Scalar>(x: &[T], b: usize) -> Vec<T> {
    per_factor(x, b, project)
}

pub fn product_clamp<T: Scalar>(x: &[T], b: usize) -> Vec<T> {
    per_factor(x, b, |c| clamp_to_ball(c.to_vec()))
}

pub fn product_mobius_add<T: Scalar>(u: &[T], v: &[T], b: usize) -> Vec<T> {
    per_factor2(u, v, b, mobius_add)
}

pub fn product_exp0<T: Scalar>(w: &[T], b: usize) -> Vec<T> {
    per_factor(w, b, exp0)
}

pub fn product_log0<T: Scalar>(p: &[T], b: usize) -> Vec<T> {
    per_factor(p, b, log0)
}

pub fn product_exp_map<T: Scalar>(p: &[T], w: &[T], b: usize) -> Vec<T> {
    per_factor2(p, w, b, exp_map)
}

pub fn product_log_map<T: Scalar>(p: &[T], u: &[T], b: usize) -> Vec<T> {
    per_factor2(p, u, b, log_map)
}

/// How a k x k matrix acts on a product point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductMatvec {
    /// `exp_0(M log_0(p))` with per-factor maps, so the full matrix mixes
    /// factors. Identical to the single-ball Möbius matvec when F = 1.
    #[default]
    Full,
    /// Only the b x b diagonal blocks of M are used, one Möbius matvec per
    /// factor.
    BlockDiagonal,
}

pub fn product_matvec<T: Scalar>(m: &[T], p: &[T], b: usize, mode: ProductMatvec) -> Vec<T> {
    let k = p.len();
    assert_eq!(m.len(), k * k, "product_matvec: matrix must be k x k");
    if k == b {
        return mobius_matvec(m, k, k, p);
    }
    match mode {
        ProductMatvec::Full => {
            let t = product_log0(p, b);
            product_exp0(&matvec(m, k, k, &t), b)
        }
        ProductMatvec::BlockDiagonal => {
            let mut out = Vec::with_capacity(k);
            for (f, chunk) in factors(p, b).enumerate() {
                let off = f * b;
                let block: Vec<T> = (0..b)
                    .flat_map(|r| m[(off + r) * k + off..(off + r) * k + off + b].iter().copied())
                    .collect();
                out.extend(mobius_matvec(&block, b, b, chunk));
            }
            out
        }
    }
}

/// `diag(d) ⊗ p` on a product point. A diagonal matrix is block diagonal, so
/// both product readings agree and this is computed factor-wise.
pub fn product_diag_matvec<T: Scalar>(d: &[T], p: &[T], b: usize) -> Vec<T> {
    per_factor2(d, p, b, |dc, pc| {
        let mp: Vec<T> = dc.iter().zip(pc).map(|(&x, &y)| x * y).collect();
        let n_mp = norm(&mp);
        let n_p = norm(pc);
        if n_mp.value() == 0.0 || n_p.value() == 0.0 {
            return vec![T::zero(); pc.len()];
        }
        let s = ((n_mp / n_p) * safe_atanh(n_p)).tanh() / n_mp;
        clamp_to_ball(scaled(&mp, s))
    })
}
