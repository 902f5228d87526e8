//! Symmetric positive-definite direct solvers.
//!
//! The optimizer only talks to [`SpdSolver`]. Two pure-Rust factorizations
//! live here: a dense Cholesky (reference for tiny systems and tests) and an
//! envelope (skyline) Cholesky that is adequate for banded 2D meshes. Faster
//! supernodal backends are supplied by host crates.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::sparse::SymmetricSparseMatrix;
use crate::{Error, Result};

/// Three-phase SPD solve: symbolic analysis (once per pattern), numeric
/// factorization (once per matrix) and any number of solves.
pub trait SpdSolver {
    /// Prepare for matrices with the pattern of `a`. `order` is an optional
    /// elimination order (a permutation of `0..n`) the backend may use.
    fn analyze(&mut self, a: &SymmetricSparseMatrix, order: Option<&[usize]>) -> Result<()>;

    /// Factor `a`, which must have the analyzed pattern.
    fn factorize(&mut self, a: &SymmetricSparseMatrix) -> Result<()>;

    /// Overwrite `rhs` with `A⁻¹ rhs`.
    fn solve_in_place(&mut self, rhs: &mut [f64]) -> Result<()>;
}

/// A pivot that lost all but this fraction of its diagonal entry is treated
/// as zero: the matrix is singular to working precision.
const PIVOT_FLOOR: f64 = 1e-13;

fn identity_or(order: Option<&[usize]>, n: usize) -> Result<Vec<usize>> {
    let perm = match order {
        Some(p) => p.to_vec(),
        None => (0..n).collect(),
    };
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&i| i >= n || core::mem::replace(&mut seen[i], true)) {
        return Err(Error::Solver("elimination order is not a permutation".into()));
    }
    Ok(perm)
}

/// Dense `L Lᵀ` factorization. Memory is `n²`; intended for small systems.
#[derive(Debug, Default, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SpdSolver for DenseCholesky {
    fn analyze(&mut self, a: &SymmetricSparseMatrix, _order: Option<&[usize]>) -> Result<()> {
        self.n = a.dim();
        self.l = vec![0.0; self.n * self.n];
        Ok(())
    }

    fn factorize(&mut self, a: &SymmetricSparseMatrix) -> Result<()> {
        let n = a.dim();
        if n != self.n {
            self.analyze(a, None)?;
        }
        let l = &mut self.l;
        l.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            for (i, v) in a.column(j) {
                l[i * n + j] = v;
            }
        }
        for j in 0..n {
            let mut d = l[j * n + j];
            let floor = PIVOT_FLOOR * d.abs();
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let d = sqrt(d);
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(())
    }

    fn solve_in_place(&mut self, b: &mut [f64]) -> Result<()> {
        let (n, l) = (self.n, &self.l);
        if b.len() != n {
            return Err(Error::Solver("right-hand side has the wrong length".into()));
        }
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l[k * n + i] * b[k];
            }
            b[i] = s / l[i * n + i];
        }
        Ok(())
    }
}

/// Envelope Cholesky: row `i` of `L` is stored from its first structural
/// nonzero up to the diagonal. Fill stays inside the envelope, so cost is
/// governed by the profile of the (optionally permuted) matrix.
#[derive(Debug, Default, Clone)]
pub struct SkylineCholesky {
    n: usize,
    /// `perm[k]` = original index eliminated at step `k`.
    perm: Vec<usize>,
    inv: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
    work: Vec<f64>,
}

impl SkylineCholesky {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stored coefficients (envelope size).
    pub fn envelope_len(&self) -> usize {
        self.l.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.l[self.start[i]..self.start[i + 1]]
    }
}

impl SpdSolver for SkylineCholesky {
    fn analyze(&mut self, a: &SymmetricSparseMatrix, order: Option<&[usize]>) -> Result<()> {
        let n = a.dim();
        let perm = identity_or(order, n)?;
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for j in 0..n {
            for (i, _) in a.column(j) {
                let (pi, pj) = (inv[i], inv[j]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                first[r] = first[r].min(c);
            }
        }
        let mut start = vec![0; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        self.n = n;
        self.l = vec![0.0; start[n]];
        self.perm = perm;
        self.inv = inv;
        self.first = first;
        self.start = start;
        self.work = vec![0.0; n];
        Ok(())
    }

    fn factorize(&mut self, a: &SymmetricSparseMatrix) -> Result<()> {
        if a.dim() != self.n {
            return Err(Error::Solver("matrix does not match the analyzed pattern".into()));
        }
        self.l.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            for (i, v) in a.column(j) {
                let (pi, pj) = (self.inv[i], self.inv[j]);
                let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                if c < self.first[r] {
                    return Err(Error::Solver("matrix does not match the analyzed pattern".into()));
                }
                self.l[self.start[r] + c - self.first[r]] = v;
            }
        }
        for i in 0..self.n {
            let fi = self.first[i];
            let si = self.start[i];
            for j in fi..i {
                let fj = self.first[j];
                let lo = fi.max(fj);
                let mut s = self.l[si + j - fi];
                let (ri, rj) = (si + lo - fi, self.start[j] + lo - fj);
                for k in 0..j - lo {
                    s -= self.l[ri + k] * self.l[rj + k];
                }
                s /= self.l[self.start[j + 1] - 1];
                self.l[si + j - fi] = s;
            }
            let row = &self.l[si..si + i - fi];
            let diag = self.l[si + i - fi];
            let d = diag - row.iter().map(|v| v * v).sum::<f64>();
            if !(d > PIVOT_FLOOR * diag.abs()) {
                return Err(Error::NotPositiveDefinite { pivot: self.perm[i] });
            }
            self.l[si + i - fi] = sqrt(d);
        }
        Ok(())
    }

    fn solve_in_place(&mut self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::Solver("right-hand side has the wrong length".into()));
        }
        let mut y = core::mem::take(&mut self.work);
        for k in 0..n {
            y[k] = b[self.perm[k]];
        }
        for i in 0..n {
            let row = self.row(i);
            let fi = self.first[i];
            let mut s = y[i];
            for (k, v) in row[..row.len() - 1].iter().enumerate() {
                s -= v * y[fi + k];
            }
            y[i] = s / row[row.len() - 1];
        }
        for i in (0..n).rev() {
            let row = self.row(i);
            let fi = self.first[i];
            let yi = y[i] / row[row.len() - 1];
            y[i] = yi;
            for (k, v) in row[..row.len() - 1].iter().enumerate() {
                y[fi + k] -= v * yi;
            }
        }
        for k in 0..n {
            b[self.perm[k]] = y[k];
        }
        self.work = y;
        Ok(())
    }
}
