//! Periodic Anderson extrapolation of the redesign fixed-point iteration.
//!
//! Given the current point `x` and the candidate `U(x)` produced by the
//! optimality-criterion step, the residual is `r = U(x) - x`. Every `period`
//! iterations from `start` on, the step is the Anderson mixing
//! `x + ζ r - (X + ζ R) γ` with `γ = argmin ‖r - R γ‖`, where the columns of
//! `X` and `R` are the most recent differences of points and residuals.
//! Other iterations take the relaxed step `x + α r`. Before `start` the
//! candidate is returned untouched.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndersonParams {
    /// History depth `m_r`.
    pub depth: usize,
    /// Acceleration period `q`.
    pub period: usize,
    /// First iteration `q0` at which mixing is applied.
    pub start: usize,
    /// `ζ`, weight of the residual on accelerated steps.
    pub mix_accel: f64,
    /// `α`, relaxation on the remaining steps.
    pub mix_plain: f64,
}

impl Default for AndersonParams {
    fn default() -> Self {
        Self { depth: 4, period: 4, start: 20, mix_accel: 1.0, mix_plain: 0.9 }
    }
}

impl AndersonParams {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.period == 0 {
            return Err(Error::invalid("anderson", "history depth and period must be positive"));
        }
        if !(0.0..=1.0).contains(&self.mix_accel) || !(self.mix_plain > 0.0 && self.mix_plain <= 1.0) {
            return Err(Error::invalid("anderson", "mixing weights must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AndersonState {
    params: AndersonParams,
    dx: Vec<Vec<f64>>,
    dr: Vec<Vec<f64>>,
    /// Next column to overwrite once the window is full.
    slot: usize,
    prev: Option<(Vec<f64>, Vec<f64>)>,
}

impl AndersonState {
    pub fn new(params: AndersonParams) -> Self {
        Self { params, dx: Vec::new(), dr: Vec::new(), slot: 0, prev: None }
    }

    pub fn params(&self) -> &AndersonParams {
        &self.params
    }

    /// Stored difference columns.
    pub fn history_len(&self) -> usize {
        self.dx.len()
    }

    /// Whether `iteration` is an extrapolation step.
    pub fn is_accelerated(&self, iteration: usize) -> bool {
        iteration >= self.params.start && (iteration - self.params.start) % self.params.period == 0
    }

    fn push(&mut self, dx: Vec<f64>, dr: Vec<f64>) {
        if self.dx.len() < self.params.depth {
            self.dx.push(dx);
            self.dr.push(dr);
        } else {
            self.dx[self.slot] = dx;
            self.dr[self.slot] = dr;
        }
        self.slot = (self.slot + 1) % self.params.depth;
    }

    /// Next iterate for optimization loop `iteration` (called once per loop).
    /// The result is not clipped to `[0, 1]`.
    pub fn step(&mut self, iteration: usize, x: &[f64], candidate: &[f64]) -> Vec<f64> {
        if iteration < self.params.start {
            return candidate.to_vec();
        }
        let r: Vec<f64> = candidate.iter().zip(x).map(|(c, v)| c - v).collect();
        if let Some((px, pr)) = self.prev.take() {
            let dx = x.iter().zip(&px).map(|(a, b)| a - b).collect();
            let dr = r.iter().zip(&pr).map(|(a, b)| a - b).collect();
            self.push(dx, dr);
        }
        let accel = self.is_accelerated(iteration);
        let mix = if accel { self.params.mix_accel } else { self.params.mix_plain };
        let mut next: Vec<f64> = x.iter().zip(&r).map(|(v, ri)| v + mix * ri).collect();
        if accel && !self.dx.is_empty() {
            let gamma = least_squares(&self.dr, &r);
            for ((dx, dr), g) in self.dx.iter().zip(&self.dr).zip(&gamma) {
                for ((n, a), b) in next.iter_mut().zip(dx).zip(dr) {
                    *n -= g * (a + mix * b);
                }
            }
        }
        self.prev = Some((x.to_vec(), r));
        next
    }
}

/// Minimum-norm solution of `min ‖r - R γ‖` through the normal equations
/// `RᵀR γ = Rᵀ r`; eigen-directions with negligible curvature are dropped.
pub fn least_squares(cols: &[Vec<f64>], r: &[f64]) -> Vec<f64> {
    let k = cols.len();
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let v = dot(&cols[i], &cols[j]);
            a[i * k + j] = v;
            a[j * k + i] = v;
        }
    }
    let b: Vec<f64> = cols.iter().map(|c| dot(c, r)).collect();
    let (eig, vecs) = symmetric_eigen(a, k);
    let top = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut gamma = vec![0.0; k];
    for (p, &l) in eig.iter().enumerate() {
        if l <= 1e-12 * top || l <= 0.0 {
            continue;
        }
        let coef = (0..k).map(|i| vecs[i * k + p] * b[i]).sum::<f64>() / l;
        for i in 0..k {
            gamma[i] += coef * vecs[i * k + p];
        }
    }
    gamma
}

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix.
/// Returns eigenvalues and the row-major eigenvector matrix (columns).
fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| a[p * n + q] * a[p * n + q]).sum();
        let diag: f64 = (0..n).map(|p| a[p * n + p] * a[p * n + p]).sum();
        if off <= 1e-30 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 { 1.0 } else { -1.0 } / (theta.abs() + sqrt(theta * theta + 1.0));
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}
