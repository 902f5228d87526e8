//! Unit-modulus element matrices for unit square (Q4, plane stress) and unit
//! cube (H8) elements.
//!
//! Shape functions are tensor products of the 1D hat functions
//! `1 - t` and `t` on `[0, 1]`, so every entry of `∫ Bᵀ D B` factors into
//! products of three exact 1D integrals. No quadrature is involved.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{lower_triangle_pairs, packed_len, H8_NODES, Q4_NODES};
use crate::{Error, Result};

/// Element matrix in both packed-lower and full form.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementStiffness {
    d: usize,
    lower: Vec<f64>,
    full: Vec<f64>,
}

impl ElementStiffness {
    fn from_full(d: usize, full: Vec<f64>) -> Self {
        let lower = lower_triangle_pairs(d).map(|(i, j)| full[i * d + j]).collect();
        Self { d, lower, full }
    }

    pub fn dofs(&self) -> usize {
        self.d
    }

    /// `d(d+1)/2` lower-triangle coefficients, `j` outer and `i >= j` inner.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Row-major `d × d` matrix.
    pub fn full(&self) -> &[f64] {
        &self.full
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.full[i * self.d + j]
    }

    /// `uᵀ K u` for a local displacement vector of length `d`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for i in 0..d {
            let row = &self.full[i * d..(i + 1) * d];
            let mut s = 0.0;
            for j in 0..d {
                s += row[j] * u[j];
            }
            acc += u[i] * s;
        }
        acc
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > -1.0 && nu < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid("nu", "Poisson ratio must lie in (-1, 0.5)"))
    }
}

/// Plane-stress Q4 matrix for `E = 1`.
pub fn element_stiffness_q4(nu: f64) -> Result<ElementStiffness> {
    check_nu(nu)?;
    let lambda = nu / (1.0 - nu * nu);
    let mu = 0.5 / (1.0 + nu);
    Ok(isotropic(&Q4_NODES, 2, lambda, mu))
}

/// Isotropic H8 matrix for `E = 1`.
pub fn element_stiffness_h8(nu: f64) -> Result<ElementStiffness> {
    check_nu(nu)?;
    let lambda = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = 0.5 / (1.0 + nu);
    Ok(isotropic(&H8_NODES, 3, lambda, mu))
}

/// `∫ ∂_k N_a ∂_l N_b` over the unit element.
fn grad_product(a: &[usize; 3], b: &[usize; 3], k: usize, l: usize, dim: usize) -> f64 {
    let slope = |s: usize| if s == 1 { 1.0 } else { -1.0 };
    let mut v = 1.0;
    for axis in 0..dim {
        let (sa, sb) = (a[axis], b[axis]);
        v *= match (axis == k, axis == l) {
            (true, true) => slope(sa) * slope(sb),
            (true, false) => 0.5 * slope(sa),
            (false, true) => 0.5 * slope(sb),
            (false, false) => {
                if sa == sb {
                    1.0 / 3.0
                } else {
                    1.0 / 6.0
                }
            }
        };
    }
    v
}

fn isotropic(nodes: &[[usize; 3]], dim: usize, lambda: f64, mu: f64) -> ElementStiffness {
    let d = nodes.len() * dim;
    let mut full = vec![0.0; d * d];
    for (a, na) in nodes.iter().enumerate() {
        for (b, nb) in nodes.iter().enumerate() {
            for i in 0..dim {
                for j in 0..dim {
                    // C_ikjl = λ δ_ik δ_jl + μ (δ_ij δ_kl + δ_il δ_kj)
                    let mut v = lambda * grad_product(na, nb, i, j, dim) + mu * grad_product(na, nb, j, i, dim);
                    if i == j {
                        v += mu * (0..dim).map(|k| grad_product(na, nb, k, k, dim)).sum::<f64>();
                    }
                    full[(dim * a + i) * d + dim * b + j] = v;
                }
            }
        }
    }
    // Exact symmetry regardless of summation order.
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (full[i * d + j] + full[j * d + i]);
            full[i * d + j] = s;
            full[j * d + i] = s;
        }
    }
    debug_assert_eq!(lower_triangle_pairs(d).count(), packed_len(d));
    ElementStiffness::from_full(d, full)
}
