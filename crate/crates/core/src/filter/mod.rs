//! Cone-kernel density filter on the element lattice.
//!
//! The kernel `h(t) = max(0, rmin - |t|)` is applied as a stencil
//! convolution. Two boundary treatments are offered:
//!
//! * [`BoundaryMode::Neumann`]: the field is mirrored about each domain face
//!   (half-sample symmetric extension). With this padding the operator maps
//!   constants to themselves, conserves the field sum and equals its own
//!   adjoint up to the `1/hs` scaling.
//! * [`BoundaryMode::Dirichlet`]: the field is extended by zeros and `hs` is
//!   built the same way, which amounts to truncating the neighbourhood at the
//!   boundary. Boundary elements then see fewer neighbours, which weakens
//!   the smoothing there.

mod projection;
mod threshold;

use alloc::vec;
use alloc::vec::Vec;

pub use projection::{project, project_derivative, project_eta_derivative, ProjectionParams};
pub use threshold::{solve_volume_preserving_eta, EtaSolution};

use crate::grid::StructuredGrid;
use crate::math::{ceil, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    #[default]
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tap {
    offset: [isize; 3],
    weight: f64,
    /// Linear index shift for lattice-interior elements.
    shift: isize,
}

#[derive(Debug, Clone)]
pub struct FilterOperator {
    shape: [usize; 3],
    rmin: f64,
    bc: BoundaryMode,
    reach: usize,
    three_d: bool,
    taps: Vec<Tap>,
    hs: Vec<f64>,
}

/// Mirror an out-of-range coordinate back into `0..n`.
fn reflect(mut i: isize, n: isize) -> usize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

impl FilterOperator {
    pub fn new(grid: &StructuredGrid, rmin: f64, bc: BoundaryMode) -> Result<Self> {
        if !(rmin >= 1.0) || !rmin.is_finite() {
            return Err(Error::FilterRadius(rmin));
        }
        let shape = grid.element_shape();
        let reach = ceil(rmin) as usize - 1;
        let r = reach as isize;
        let rz = if grid.is_3d() { r } else { 0 };
        let stride = [(shape[1] * shape[2]) as isize, 1, shape[1] as isize];
        let mut taps = Vec::new();
        for dx in -r..=r {
            for dz in -rz..=rz {
                for dy in -r..=r {
                    let dist = sqrt((dx * dx + dy * dy + dz * dz) as f64);
                    let weight = rmin - dist;
                    if weight > 0.0 {
                        let shift = dx * stride[0] + dy * stride[1] + dz * stride[2];
                        taps.push(Tap { offset: [dx, dy, dz], weight, shift });
                    }
                }
            }
        }
        let mut op = Self { shape, rmin, bc, reach, three_d: grid.is_3d(), taps, hs: Vec::new() };
        let ones = vec![1.0; grid.element_count()];
        let mut hs = vec![0.0; ones.len()];
        op.convolve(&ones, &mut hs);
        op.hs = hs;
        Ok(op)
    }

    pub fn rmin(&self) -> f64 {
        self.rmin
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.bc
    }

    pub fn element_count(&self) -> usize {
        self.hs.len()
    }

    /// Normalization field `hs = conv(1)`.
    pub fn hs(&self) -> &[f64] {
        &self.hs
    }

    /// `(offset, weight)` of every positive stencil weight.
    pub fn stencil(&self) -> impl Iterator<Item = ([isize; 3], f64)> + '_ {
        self.taps.iter().map(|t| (t.offset, t.weight))
    }

    fn interior(&self, ix: usize, iy: usize, iz: usize) -> bool {
        let r = self.reach;
        let [sx, sy, sz] = self.shape;
        let zr = if self.three_d { r } else { 0 };
        ix >= r && ix + r < sx && iy >= r && iy + r < sy && iz >= zr && iz + zr < sz
    }

    /// Raw stencil sum `Σ_t w_t x(e + t)` with boundary extension.
    fn convolve(&self, x: &[f64], out: &mut [f64]) {
        let [sx, sy, sz] = self.shape;
        let n = [sx as isize, sy as isize, sz as isize];
        for ix in 0..sx {
            for iz in 0..sz {
                for iy in 0..sy {
                    let e = (ix * sz + iz) * sy + iy;
                    let mut acc = 0.0;
                    if self.interior(ix, iy, iz) {
                        for t in &self.taps {
                            acc += t.weight * x[(e as isize + t.shift) as usize];
                        }
                    } else {
                        let p = [ix as isize, iy as isize, iz as isize];
                        for t in &self.taps {
                            let q = [p[0] + t.offset[0], p[1] + t.offset[1], p[2] + t.offset[2]];
                            let inside = (0..3).all(|a| q[a] >= 0 && q[a] < n[a]);
                            let j = if inside {
                                (q[0] as usize * sz + q[2] as usize) * sy + q[1] as usize
                            } else {
                                match self.bc {
                                    BoundaryMode::Dirichlet => continue,
                                    BoundaryMode::Neumann => {
                                        (reflect(q[0], n[0]) * sz + reflect(q[2], n[2])) * sy + reflect(q[1], n[1])
                                    }
                                }
                            };
                            acc += t.weight * x[j];
                        }
                    }
                    out[e] = acc;
                }
            }
        }
    }

    /// `x̃ = H x`, i.e. `conv(x) / hs`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.convolve(x, out);
        for (o, h) in out.iter_mut().zip(&self.hs) {
            *o /= h;
        }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply(x, &mut out);
        out
    }

    /// `Hᵀ g = conv(g / hs)`. The raw convolution is symmetric for both
    /// boundary modes, so the transpose only moves the normalization.
    pub fn apply_adjoint(&self, g: &[f64], out: &mut [f64]) {
        let scaled: Vec<f64> = g.iter().zip(&self.hs).map(|(v, h)| v / h).collect();
        self.convolve(&scaled, out);
    }

    pub fn apply_adjoint_vec(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        self.apply_adjoint(g, &mut out);
        out
    }
}

/// Gradient with respect to the design variables from the gradient with
/// respect to the physical field.
///
/// Without projection this is `Hᵀ g`. With projection `x̂ = P(H x)` the chain
/// rule gives `Hᵀ (P'(x̃) ⊙ g)`: the projection derivative acts on the
/// filtered field, before the transposed filter.
pub fn backfilter(grad_xhat: &[f64], xtilde: &[f64], op: &FilterOperator, projection: Option<&ProjectionParams>) -> Vec<f64> {
    match projection {
        None => op.apply_adjoint_vec(grad_xhat),
        Some(p) => {
            let scaled: Vec<f64> = grad_xhat.iter().zip(xtilde).map(|(g, &x)| g * project_derivative(x, p)).collect();
            op.apply_adjoint_vec(&scaled)
        }
    }
}
