//! Second-order jets: value, gradient and Hessian propagated together.
//!
//! A `Jet2` carries the truncated Taylor expansion of a scalar function at a
//! point. Arithmetic on jets follows the usual product/quotient/chain rules,
//! so derivatives are exact up to round-off — there is no step size anywhere.
//! The value lane performs bit-for-bit the same operations as a plain `f64`
//! evaluation.

use crate::tensor::SymMat;

/// Value, gradient and Hessian of a scalar at a point in `n` variables.
///
/// The Hessian is stored packed (upper triangle), so it is symmetric by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: SymMat,
}

impl Jet2 {
    pub fn constant(c: f64, n: usize) -> Self {
        Jet2 {
            value: c,
            grad: vec![0.0; n],
            hess: SymMat::zeros(n),
        }
    }

    pub fn variable(x: f64, index: usize, n: usize) -> Self {
        let mut grad = vec![0.0; n];
        grad[index] = 1.0;
        Jet2 {
            value: x,
            grad,
            hess: SymMat::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self) -> &SymMat {
        &self.hess
    }

    /// Directional derivative of the gradient: `dir^T H dir`.
    pub fn second_along(&self, dir: &[f64]) -> f64 {
        self.hess.bilinear(dir, dir)
    }

    pub(crate) fn add(&self, o: &Jet2) -> Jet2 {
        let n = self.dim();
        let mut hess = SymMat::zeros(n);
        for (k, slot) in hess.packed_mut().iter_mut().enumerate() {
            *slot = self.hess.packed()[k] + o.hess.packed()[k];
        }
        Jet2 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess,
        }
    }

    pub(crate) fn sub(&self, o: &Jet2) -> Jet2 {
        let n = self.dim();
        let mut hess = SymMat::zeros(n);
        for (k, slot) in hess.packed_mut().iter_mut().enumerate() {
            *slot = self.hess.packed()[k] - o.hess.packed()[k];
        }
        Jet2 {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
            hess,
        }
    }

    pub(crate) fn mul(&self, o: &Jet2) -> Jet2 {
        let n = self.dim();
        let value = self.value * o.value;
        let grad = (0..n)
            .map(|i| self.value * o.grad[i] + o.value * self.grad[i])
            .collect();
        let hess = SymMat::from_upper_fn(n, |i, j| {
            self.value * o.hess.get(i, j)
                + o.value * self.hess.get(i, j)
                + self.grad[i] * o.grad[j]
                + self.grad[j] * o.grad[i]
        });
        Jet2 { value, grad, hess }
    }

    /// Quotient rule; the caller guarantees `o.value != 0`.
    pub(crate) fn div(&self, o: &Jet2) -> Jet2 {
        let n = self.dim();
        let value = self.value / o.value;
        let w = 1.0 / o.value;
        let grad: Vec<f64> = (0..n)
            .map(|i| (self.grad[i] - value * o.grad[i]) * w)
            .collect();
        let hess = SymMat::from_upper_fn(n, |i, j| {
            (self.hess.get(i, j)
                - value * o.hess.get(i, j)
                - grad[i] * o.grad[j]
                - grad[j] * o.grad[i])
                * w
        });
        Jet2 { value, grad, hess }
    }

    pub(crate) fn neg(&self) -> Jet2 {
        let n = self.dim();
        let mut hess = SymMat::zeros(n);
        for (k, slot) in hess.packed_mut().iter_mut().enumerate() {
            *slot = -self.hess.packed()[k];
        }
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|a| -a).collect(),
            hess,
        }
    }

    /// Chain rule for a scalar map applied to this jet.
    ///
    /// `value` is φ(u), `d1` is φ′(u), `d2` is φ″(u), each evaluated at
    /// `u = self.value` by the caller (which keeps the value lane identical
    /// to the plain-`f64` evaluation path).
    pub(crate) fn chain(&self, value: f64, d1: f64, d2: f64) -> Jet2 {
        let n = self.dim();
        let grad = self.grad.iter().map(|g| d1 * g).collect();
        let hess = SymMat::from_upper_fn(n, |i, j| {
            d1 * self.hess.get(i, j) + d2 * self.grad[i] * self.grad[j]
        });
        Jet2 {
            value,
            grad,
            hess,
        }
    }
}
