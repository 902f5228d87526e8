//! Optimality-criterion redesign.
//!
//! For a multiplier `λ` each active element moves to
//! `F_e = x_e sqrt(-dc_e / (λ dV_e))`, clipped to the move-limit box. The
//! multiplier enforcing the volume constraint is found either by bisection
//! (any volume measure) or, for a volume that is linear in `x`, by an
//! explicit primal-dual fixed-point iteration.
//!
//! Internally every search runs on `s = sqrt(λ)`, which turns the update
//! into `F_e = ocp_e / s` with `ocp_e = x_e sqrt(-dc_e / dV_e)`.

use alloc::vec::Vec;

use crate::math::sqrt;
use crate::{Error, Result};

/// Initial bisection interval for `s = sqrt(λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bracket {
    /// `[0, sqrt(λ#)]` from [`lambda_upper_estimate`].
    Estimate,
    /// `[0, upper]` regardless of the sensitivities.
    Fixed(f64),
}

/// When to stop shrinking the bisection interval `[lo, hi]` on `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BisectionStop {
    /// `(hi - lo) / (hi + lo) <= tol`.
    Relative(f64),
    /// `hi - lo <= tol`.
    Absolute(f64),
}

impl BisectionStop {
    fn done(&self, lo: f64, hi: f64) -> bool {
        match *self {
            BisectionStop::Relative(tol) => hi - lo <= tol * (hi + lo),
            BisectionStop::Absolute(tol) => hi - lo <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcParams {
    pub move_limit: f64,
    pub volfrac: f64,
    pub bracket: Bracket,
    pub stop: BisectionStop,
    /// Convergence threshold on successive `sqrt(λ)` in the primal-dual map.
    pub pd_tol: f64,
}

impl Default for OcParams {
    fn default() -> Self {
        Self {
            move_limit: 0.2,
            volfrac: 0.5,
            bracket: Bracket::Estimate,
            stop: BisectionStop::Relative(1e-4),
            pd_tol: 1e-10,
        }
    }
}

impl OcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.move_limit > 0.0 && self.move_limit < 1.0) {
            return Err(Error::invalid("move", "move limit must lie in (0, 1)"));
        }
        if !(self.volfrac > 0.0 && self.volfrac < 1.0) {
            return Err(Error::invalid("volfrac", "volume fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateResult {
    pub x: Vec<f64>,
    pub lambda: f64,
    /// Bisection steps, or dual-map evaluations for the primal-dual path
    /// (plus any bisection steps of a fallback).
    pub iterations: usize,
}

/// `x_e sqrt(max(0, -dc_e / dV_e))`.
#[inline]
fn ocp(x: f64, dc: f64, dv: f64) -> f64 {
    x * sqrt((-dc / dv).max(0.0))
}

/// Upper estimate `λ# = [(1/(m f)) Σ_A x_e sqrt(-dc_e/dV_e)]²`, with `m`
/// the total element count.
pub fn lambda_upper_estimate(x: &[f64], dc: &[f64], dv: &[f64], active: &[usize], volfrac: f64) -> f64 {
    let s: f64 = active.iter().map(|&e| ocp(x[e], dc[e], dv[e])).sum();
    let s = s / (x.len() as f64 * volfrac);
    s * s
}

#[inline]
fn candidate(x: f64, ocp_e: f64, s: f64, move_limit: f64) -> f64 {
    let lo = (x - move_limit).max(0.0);
    let hi = (x + move_limit).min(1.0);
    if s > 0.0 {
        (ocp_e / s).max(lo).min(hi)
    } else {
        hi
    }
}

/// Move-limited OC candidate `clamp(x sqrt(-dc/(λ dV)), x - move, x + move)`
/// intersected with `[0, 1]`.
pub fn oc_candidate(x: f64, dc: f64, dv: f64, lambda: f64, move_limit: f64) -> f64 {
    candidate(x, ocp(x, dc, dv), sqrt(lambda.max(0.0)), move_limit)
}

fn fill(out: &mut [f64], x: &[f64], ocp_a: &[f64], active: &[usize], s: f64, move_limit: f64) {
    for (&e, &o) in active.iter().zip(ocp_a) {
        out[e] = candidate(x[e], o, s, move_limit);
    }
}

/// Bisection on the multiplier. `volume` maps a full-length candidate design
/// to the constrained volume fraction and must be non-increasing in `λ`.
pub fn bisect_update<V>(
    x: &[f64],
    dc: &[f64],
    dv: &[f64],
    active: &[usize],
    params: &OcParams,
    mut volume: V,
) -> Result<UpdateResult>
where
    V: FnMut(&[f64]) -> f64,
{
    let ocp_a: Vec<f64> = active.iter().map(|&e| ocp(x[e], dc[e], dv[e])).collect();
    let mut out = x.to_vec();
    let mut hi = match params.bracket {
        Bracket::Estimate => sqrt(lambda_upper_estimate(x, dc, dv, active, params.volfrac)),
        Bracket::Fixed(upper) => upper,
    };
    let mut lo = 0.0;
    let f = params.volfrac;
    let mut count = 0;

    // The estimate brackets the root for feasible x; widen if it does not.
    fill(&mut out, x, &ocp_a, active, hi, params.move_limit);
    let mut v_hi = volume(&out);
    let mut widen = 0;
    while v_hi > f && widen < 200 {
        lo = hi;
        hi = if hi > 0.0 { 2.0 * hi } else { f64::MIN_POSITIVE.max(1e-300) };
        fill(&mut out, x, &ocp_a, active, hi, params.move_limit);
        v_hi = volume(&out);
        widen += 1;
    }
    let mut v_lo = f64::INFINITY;

    let mut mid = hi;
    while !params.stop.done(lo, hi) {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        fill(&mut out, x, &ocp_a, active, mid, params.move_limit);
        let v = volume(&out);
        count += 1;
        let slack = 1e-9 * (1.0 + v.abs());
        if v > v_lo + slack || v < v_hi - slack {
            let (previous, current) = if v > v_lo { (v_lo, v) } else { (v_hi, v) };
            return Err(Error::NonMonotoneVolume { previous, current });
        }
        if v > f {
            lo = mid;
            v_lo = v;
        } else {
            hi = mid;
            v_hi = v;
        }
    }
    if count == 0 {
        fill(&mut out, x, &ocp_a, active, mid, params.move_limit);
    }
    Ok(UpdateResult { x: out, lambda: mid * mid, iterations: count })
}

/// Explicit primal-dual iteration for a volume that is linear in `x` with
/// gradient `dv`. `solid_volume` is the volume fraction held by passive
/// solid elements, so the active elements must supply `volfrac - solid_volume`.
///
/// Falls back to [`bisect_update`] on the linear volume when the dual map
/// becomes undefined (every element clipped) or fails to settle.
pub fn primal_dual_update(
    x: &[f64],
    dc: &[f64],
    dv: &[f64],
    active: &[usize],
    solid_volume: f64,
    params: &OcParams,
) -> Result<UpdateResult> {
    const MAX_ITER: usize = 500;
    let ocp_a: Vec<f64> = active.iter().map(|&e| ocp(x[e], dc[e], dv[e])).collect();
    let target = params.volfrac - solid_volume;
    let mv = params.move_limit;
    let mut s = sqrt(lambda_upper_estimate(x, dc, dv, active, params.volfrac));
    let mut s_old = 0.0;
    let mut iterations = 0;
    let mut ok = s > 0.0;
    while ok && (s - s_old).abs() > params.pd_tol {
        let (mut num, mut den) = (0.0, target);
        let mut interior = 0usize;
        for (&e, &o) in active.iter().zip(&ocp_a) {
            let (l, u) = ((x[e] - mv).max(0.0), (x[e] + mv).min(1.0));
            let t = o / s;
            if t > u {
                den -= dv[e] * u;
            } else if t < l {
                den -= dv[e] * l;
            } else {
                num += dv[e] * o;
                interior += 1;
            }
        }
        iterations += 1;
        if interior == 0 || !(den > 0.0) || iterations > MAX_ITER {
            ok = false;
            break;
        }
        s_old = s;
        s = num / den;
    }
    if !ok {
        let linear = |c: &[f64]| solid_volume + active.iter().map(|&e| dv[e] * c[e]).sum::<f64>();
        let mut r = bisect_update(x, dc, dv, active, params, linear)?;
        r.iterations += iterations;
        return Ok(r);
    }
    let mut out = x.to_vec();
    fill(&mut out, x, &ocp_a, active, s, mv);
    Ok(UpdateResult { x: out, lambda: s * s, iterations })
}
