//! Numeric abstraction shared by plain `f64` evaluation and the recording
//! tape in [`crate::diff`]. Every kernel in the crate is written once against
//! [`Scalar`] so that gradients are taken through the exact same arithmetic
//! that inference uses.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    /// A constant that carries no gradient.
    fn from_f64(v: f64) -> Self;

    fn value(self) -> f64;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn atanh(self) -> Self;
    fn cosh(self) -> Self;
    fn sigmoid(self) -> Self;
    fn relu(self) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }

    /// Clamp into `[lo, hi]`. Outside the interval the result is a constant,
    /// so no gradient flows through a clamped value.
    #[inline]
    fn clamp_value(self, lo: f64, hi: f64) -> Self {
        let v = self.value();
        if v < lo {
            Self::from_f64(lo)
        } else if v > hi {
            Self::from_f64(hi)
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn atanh(self) -> Self {
        f64::atanh(self)
    }
    #[inline]
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    #[inline]
    fn sigmoid(self) -> Self {
        sigmoid(self)
    }
    #[inline]
    fn relu(self) -> Self {
        self.max(0.0)
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sum with a fixed left-to-right order.
pub fn sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let mut it = xs.into_iter();
    match it.next() {
        Some(first) => it.fold(first, |acc, x| acc + x),
        None => T::zero(),
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "dot: dimension mismatch");
    sum(a.iter().zip(b).map(|(&x, &y)| x * y))
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    sum(a.iter().map(|&x| x * x))
}

/// Euclidean norm. The exact zero vector returns a constant zero so that the
/// (undefined) derivative of `sqrt` at 0 never reaches the tape.
pub fn norm<T: Scalar>(a: &[T]) -> T {
    let s = norm_sq(a);
    if s.value() == 0.0 {
        T::zero()
    } else {
        s.sqrt()
    }
}

pub fn scaled<T: Scalar>(a: &[T], c: T) -> Vec<T> {
    a.iter().map(|&x| x * c).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    assert_eq!(a.len(), b.len(), "add: dimension mismatch");
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    assert_eq!(a.len(), b.len(), "sub: dimension mismatch");
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn negated<T: Scalar>(a: &[T]) -> Vec<T> {
    a.iter().map(|&x| -x).collect()
}

/// Row-major `rows x cols` matrix times vector.
pub fn matvec<T: Scalar>(m: &[T], rows: usize, cols: usize, x: &[T]) -> Vec<T> {
    assert_eq!(m.len(), rows * cols, "matvec: matrix has wrong size");
    assert_eq!(x.len(), cols, "matvec: dimension mismatch");
    (0..rows).map(|r| dot(&m[r * cols..(r + 1) * cols], x)).collect()
}

pub fn constants<T: Scalar>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::from_f64(x)).collect()
}

pub fn values<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|x| x.value()).collect()
}
