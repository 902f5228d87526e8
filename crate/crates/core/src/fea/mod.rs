//! Linear elasticity on the structured grid: SIMP interpolation, assembly of
//! the lower-triangular stiffness matrix, the equilibrium solve and the
//! compliance and volume sensitivities.

mod element;

use alloc::vec;
use alloc::vec::Vec;

pub use element::{element_stiffness_h8, element_stiffness_q4, ElementStiffness};

use crate::grid::{Connectivity, DomainPartition, IndexPairs};
use crate::math::{dot, norm2, powf};
use crate::solver::SpdSolver;
use crate::sparse::{AssemblyPlan, ReducedSystem, SymmetricSparseMatrix};
use crate::{Error, Result};

/// Modified SIMP law `E(x) = e_min + x^p (e0 - e_min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpParams {
    pub e0: f64,
    pub e_min: f64,
    pub penal: f64,
}

impl Default for SimpParams {
    fn default() -> Self {
        Self { e0: 1.0, e_min: 1e-9, penal: 3.0 }
    }
}

impl SimpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_min > 0.0 && self.e_min < self.e0) {
            return Err(Error::invalid("e_min", "need 0 < e_min < e0"));
        }
        if !(self.penal >= 1.0) {
            return Err(Error::invalid("penal", "penalization must be at least 1"));
        }
        Ok(())
    }
}

/// Per-element modulus `sK` and its derivative `dsK`.
pub fn simp_interpolate(xhat: &[f64], params: &SimpParams) -> (Vec<f64>, Vec<f64>) {
    let mut sk = vec![0.0; xhat.len()];
    let mut dsk = vec![0.0; xhat.len()];
    simp_interpolate_into(xhat, params, &mut sk, &mut dsk);
    (sk, dsk)
}

pub fn simp_interpolate_into(xhat: &[f64], params: &SimpParams, sk: &mut [f64], dsk: &mut [f64]) {
    let range = params.e0 - params.e_min;
    let p = params.penal;
    for ((x, s), ds) in xhat.iter().zip(sk.iter_mut()).zip(dsk.iter_mut()) {
        let xp1 = powf(*x, p - 1.0);
        *s = params.e_min + xp1 * x * range;
        *ds = p * xp1 * range;
    }
}

/// One-shot assembly. Builds the pattern each call; the optimizer keeps an
/// [`AssemblyPlan`] instead.
pub fn assemble_lower(pairs: &IndexPairs, n: usize, ke: &ElementStiffness, sk: &[f64]) -> SymmetricSparseMatrix {
    let plan = AssemblyPlan::new(pairs, n);
    let mut k = plan.empty_matrix();
    plan.assemble_into(ke.lower(), sk, &mut k);
    k
}

/// Load vector and Dirichlet (zero-displacement) DOFs.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadCase {
    f: Vec<f64>,
    fixed: Vec<usize>,
    free: Vec<usize>,
}

impl LoadCase {
    pub fn new(f: Vec<f64>, fixed: &[usize]) -> Result<Self> {
        let n = f.len();
        let mut is_fixed = vec![false; n];
        for &d in fixed {
            if d >= n {
                return Err(Error::invalid("fixed", "constrained DOF outside the mesh"));
            }
            is_fixed[d] = true;
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("f", "load vector must be finite"));
        }
        let fixed = (0..n).filter(|&d| is_fixed[d]).collect();
        let free = (0..n).filter(|&d| !is_fixed[d]).collect();
        Ok(Self { f, fixed, free })
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn fixed(&self) -> &[usize] {
        &self.fixed
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }
}

/// Cached reduced system and factorization backend for repeated solves with
/// a fixed pattern and support set.
pub struct StateSolver<S> {
    reduced: ReducedSystem,
    solver: S,
    rhs: Vec<f64>,
}

impl<S: SpdSolver> StateSolver<S> {
    /// `order` is an optional global DOF elimination order passed on to the
    /// backend after restriction to the free DOFs.
    pub fn new(pattern: &SymmetricSparseMatrix, load: &LoadCase, mut solver: S, order: Option<&[usize]>) -> Result<Self> {
        let reduced = ReducedSystem::new(pattern, load.free());
        let local = order.map(|o| reduced.restrict_order(o));
        solver.analyze(reduced.matrix(), local.as_deref())?;
        let rhs = vec![0.0; load.free().len()];
        Ok(Self { reduced, solver, rhs })
    }

    /// Solve `K u = f` on the free DOFs; `u` is zero on fixed DOFs.
    pub fn solve(&mut self, k: &SymmetricSparseMatrix, load: &LoadCase, u: &mut [f64]) -> Result<()> {
        self.reduced.refresh(k);
        self.solver.factorize(self.reduced.matrix())?;
        self.reduced.gather(load.f(), &mut self.rhs);
        self.solver.solve_in_place(&mut self.rhs)?;
        self.reduced.scatter(&self.rhs, u);
        Ok(())
    }

    pub fn backend(&self) -> &S {
        &self.solver
    }
}

pub fn solve_equilibrium<S: SpdSolver>(k: &SymmetricSparseMatrix, load: &LoadCase, solver: S) -> Result<Vec<f64>> {
    let mut state = StateSolver::new(k, load, solver, None)?;
    let mut u = vec![0.0; k.dim()];
    state.solve(k, load, &mut u)?;
    Ok(u)
}

/// `‖(K u - f)_free‖ / ‖f_free‖` using the full symmetric product.
pub fn relative_residual(k: &SymmetricSparseMatrix, load: &LoadCase, u: &[f64]) -> f64 {
    let mut ku = vec![0.0; k.dim()];
    k.mul_vec(u, &mut ku);
    let r: Vec<f64> = load.free().iter().map(|&d| ku[d] - load.f()[d]).collect();
    let f: Vec<f64> = load.free().iter().map(|&d| load.f()[d]).collect();
    let nf = norm2(&f);
    if nf == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nf
    }
}

/// Compliance `c = uᵀ f` and `dc/dx̂`, masked to the active elements.
pub fn compliance_and_sensitivity(
    u: &[f64],
    f: &[f64],
    dsk: &[f64],
    ke: &ElementStiffness,
    conn: &Connectivity,
    part: &DomainPartition,
) -> (f64, Vec<f64>) {
    let mut dc = vec![0.0; conn.element_count()];
    let c = compliance_and_sensitivity_into(u, f, dsk, ke, conn, part, &mut dc);
    (c, dc)
}

pub fn compliance_and_sensitivity_into(
    u: &[f64],
    f: &[f64],
    dsk: &[f64],
    ke: &ElementStiffness,
    conn: &Connectivity,
    part: &DomainPartition,
    dc: &mut [f64],
) -> f64 {
    let mut ue = vec![0.0; conn.dofs_per_element()];
    for (e, row) in conn.rows().enumerate() {
        if part.is_active(e) {
            for (v, &g) in ue.iter_mut().zip(row) {
                *v = u[g as usize];
            }
            dc[e] = -dsk[e] * ke.energy(&ue);
        } else {
            dc[e] = 0.0;
        }
    }
    dot(u, f)
}

/// Volume fraction `V = mean(x̂)` and `dV/dx̂ = χ_A / m`.
pub fn volume_and_sensitivity(xhat: &[f64], part: &DomainPartition) -> (f64, Vec<f64>) {
    let m = xhat.len() as f64;
    let v = xhat.iter().sum::<f64>() / m;
    let dv = (0..xhat.len()).map(|e| if part.is_active(e) { 1.0 / m } else { 0.0 }).collect();
    (v, dv)
}
