//! Relaxed Heaviside projection
//! `P(x) = (tanh(βη) + tanh(β(x-η))) / (tanh(βη) + tanh(β(1-η)))`
//! and its derivatives with respect to `x` and `η`.

use crate::math::{exp, expm1, tanh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionParams {
    pub eta: f64,
    pub beta: f64,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self { eta: 0.5, beta: 2.0 }
    }
}

/// `sech²(t)`, written so it stays positive far into the tails.
#[inline]
fn sech2(t: f64) -> f64 {
    let q = exp(-2.0 * t.abs());
    4.0 * q / ((1.0 + q) * (1.0 + q))
}

#[inline]
pub fn project(x: f64, p: &ProjectionParams) -> f64 {
    let (b, n) = (p.beta, p.eta);
    let t0 = tanh(b * n);
    (t0 + tanh(b * (x - n))) / (t0 + tanh(b * (1.0 - n)))
}

/// `∂P/∂x`.
#[inline]
pub fn project_derivative(x: f64, p: &ProjectionParams) -> f64 {
    let (b, n) = (p.beta, p.eta);
    b * sech2(b * (x - n)) / (tanh(b * n) + tanh(b * (1.0 - n)))
}

/// `∂P/∂η = -β sech²(β(x-η)) sinh(βx) sinh(β(1-x)) / sinh(β)`.
///
/// The quotient rule collapses to this form through the tanh addition
/// identities. The sinh ratio is evaluated with exponentials of negative
/// arguments only, so large `β` neither overflows nor cancels.
#[inline]
pub fn project_eta_derivative(x: f64, p: &ProjectionParams) -> f64 {
    let (b, n) = (p.beta, p.eta);
    let x = x.clamp(0.0, 1.0);
    let (a, c) = (b * x, b * (1.0 - x));
    let ratio = expm1(-2.0 * a) * expm1(-2.0 * c) / (-2.0 * expm1(-2.0 * (a + c)));
    -b * sech2(b * (x - n)) * ratio
}
