//! Scalar reverse-mode differentiation.
//!
//! A [`Tape`] records every arithmetic operation performed on [`Var`]s that
//! were created from it. Each record stores at most two predecessors and the
//! local partial derivative toward each. [`Tape::backward`] then sweeps the
//! record in reverse, accumulating adjoints.
//!
//! `Var`s created with [`Scalar::from_f64`] are constants: they are not on any
//! tape and operations between constants fold to plain `f64` arithmetic. This
//! is what lets the same generic kernel run both with and without recording.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{sigmoid, Scalar};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: RefCell::new(Vec::with_capacity(n)),
        }
    }

    /// A differentiable leaf.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.push(Node {
            parents: [NONE, NONE],
            partials: [0.0, 0.0],
        });
        Var {
            value,
            slot: Some((self, idx)),
        }
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drop all records. Outstanding `Var`s from this tape become invalid.
    pub fn reset(&mut self) {
        self.nodes.get_mut().clear();
    }

    fn push(&self, node: Node) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len();
        assert!(idx < NONE as usize, "tape overflow");
        nodes.push(node);
        idx as u32
    }

    /// Propagate adjoints from `loss` back to every recorded node.
    pub fn backward(&self, loss: Var<'_>) -> Gradients {
        let nodes = self.nodes.borrow();
        let mut adjoints = vec![0.0; nodes.len()];
        let Some((tape, root)) = loss.slot else {
            return Gradients { adjoints };
        };
        assert!(
            std::ptr::eq(tape, self),
            "backward: loss was recorded on a different tape"
        );
        adjoints[root as usize] = 1.0;
        for i in (0..=root as usize).rev() {
            let a = adjoints[i];
            if a == 0.0 {
                continue;
            }
            let node = nodes[i];
            for k in 0..2 {
                let p = node.parents[k];
                if p != NONE {
                    adjoints[p as usize] += node.partials[k] * a;
                }
            }
        }
        Gradients { adjoints }
    }
}

/// Adjoints produced by one backward sweep.
pub struct Gradients {
    adjoints: Vec<f64>,
}

impl Gradients {
    /// d(loss)/d(var). Constants report 0.
    pub fn wrt(&self, var: &Var<'_>) -> f64 {
        match var.slot {
            Some((_, idx)) => self.adjoints.get(idx as usize).copied().unwrap_or(0.0),
            None => 0.0,
        }
    }

    pub fn wrt_all(&self, vars: &[Var<'_>]) -> Vec<f64> {
        vars.iter().map(|v| self.wrt(v)).collect()
    }
}

/// A scalar value, optionally recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    value: f64,
    slot: Option<(&'t Tape, u32)>,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some((_, idx)) => write!(f, "Var({} @{})", self.value, idx),
            None => write!(f, "Const({})", self.value),
        }
    }
}

impl<'t> Var<'t> {
    pub fn constant(value: f64) -> Self {
        Var { value, slot: None }
    }

    pub fn is_constant(&self) -> bool {
        self.slot.is_none()
    }

    /// Convenience for `tape.backward(self)`. Constants yield empty gradients.
    pub fn backward(self) -> Gradients {
        match self.slot {
            Some((tape, _)) => tape.backward(self),
            None => Gradients { adjoints: Vec::new() },
        }
    }

    #[inline]
    fn unary(self, value: f64, partial: f64) -> Self {
        match self.slot {
            None => Var::constant(value),
            Some((tape, idx)) => {
                let id = tape.push(Node {
                    parents: [idx, NONE],
                    partials: [partial, 0.0],
                });
                Var {
                    value,
                    slot: Some((tape, id)),
                }
            }
        }
    }

    #[inline]
    fn binary(self, other: Self, value: f64, da: f64, db: f64) -> Self {
        let tape = match (self.slot, other.slot) {
            (None, None) => return Var::constant(value),
            (Some((t, _)), None) | (None, Some((t, _))) => t,
            (Some((t, _)), Some((u, _))) => {
                debug_assert!(std::ptr::eq(t, u), "operands recorded on different tapes");
                t
            }
        };
        let pa = self.slot.map_or(NONE, |(_, i)| i);
        let pb = other.slot.map_or(NONE, |(_, i)| i);
        let id = tape.push(Node {
            parents: [pa, pb],
            partials: [da, db],
        });
        Var {
            value,
            slot: Some((tape, id)),
        }
    }
}

impl Add for Var<'_> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl Sub for Var<'_> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl Mul for Var<'_> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl Div for Var<'_> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.binary(rhs, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl Neg for Var<'_> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

impl Scalar for Var<'_> {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Var::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.value
    }
    fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.unary(s, 0.5 / s)
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e)
    }
    fn ln(self) -> Self {
        self.unary(self.value.ln(), 1.0 / self.value)
    }
    fn tanh(self) -> Self {
        let t = self.value.tanh();
        self.unary(t, 1.0 - t * t)
    }
    fn atanh(self) -> Self {
        let x = self.value;
        self.unary(x.atanh(), 1.0 / (1.0 - x * x))
    }
    fn cosh(self) -> Self {
        self.unary(self.value.cosh(), self.value.sinh())
    }
    fn sigmoid(self) -> Self {
        let s = sigmoid(self.value);
        self.unary(s, s * (1.0 - s))
    }
    fn relu(self) -> Self {
        if self.value > 0.0 {
            self.unary(self.value, 1.0)
        } else {
            self.unary(0.0, 0.0)
        }
    }
}
