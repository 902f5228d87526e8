//! Threshold `η*` for which projection leaves the active volume unchanged.
//!
//! `g(η) = Σ_{e∈A} (P(x̃_e; η) - x̃_e) / m` is strictly decreasing, with
//! `g(0) ≥ 0 ≥ g(1)`, so the root is unique. Newton steps are taken from the
//! warm start and replaced by bisection whenever they leave the current
//! bracket.

use crate::grid::DomainPartition;

use super::projection::{project, project_eta_derivative, ProjectionParams};

/// Stop when `|g| ≤ TOL` (a volume-fraction mismatch).
const TOL: f64 = 1e-6;
const MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSolution {
    pub eta: f64,
    /// Volume mismatch `g(η)` at the returned threshold.
    pub residual: f64,
    pub iterations: usize,
}

fn mismatch(xt: &[f64], part: &DomainPartition, p: &ProjectionParams) -> (f64, f64) {
    let (mut g, mut dg) = (0.0, 0.0);
    for &e in part.active() {
        g += project(xt[e], p) - xt[e];
        dg += project_eta_derivative(xt[e], p);
    }
    let m = xt.len() as f64;
    (g / m, dg / m)
}

pub fn solve_volume_preserving_eta(xtilde: &[f64], beta: f64, eta0: f64, part: &DomainPartition) -> EtaSolution {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut eta = eta0.clamp(0.0, 1.0);
    let mut best = EtaSolution { eta, residual: f64::INFINITY, iterations: 0 };
    for it in 0..=MAX_ITER {
        let (g, dg) = mismatch(xtilde, part, &ProjectionParams { eta, beta });
        if g.abs() < best.residual.abs() {
            best = EtaSolution { eta, residual: g, iterations: it };
        }
        if g.abs() <= TOL || it == MAX_ITER {
            break;
        }
        if g > 0.0 {
            lo = eta;
        } else {
            hi = eta;
        }
        let newton = eta - g / dg;
        eta = if dg < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        best.iterations = it + 1;
    }
    best
}
