//! Supernodal sparse Cholesky backend built on `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::linalg::solvers::LltError;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};
use topo_core::solver::SpdSolver;
use topo_core::sparse::SymmetricSparseMatrix;
use topo_core::{Error, Result};

/// Environment variable capping the factorization threads.
pub const THREADS_ENV: &str = "TOPOPT_THREADS";

/// Thread setting from [`THREADS_ENV`]; sequential when unset, invalid or 1.
pub fn parallelism_from_env() -> Par {
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 1 => Par::rayon(n),
        _ => Par::Seq,
    }
}

/// Sparse `L Lᵀ` with a fixed symbolic analysis reused across numeric
/// factorizations. An explicit elimination order passed to `analyze` is used
/// as is; otherwise approximate minimum degree is applied.
pub struct FaerCholesky {
    par: Par,
    symbolic: Option<SymbolicCholesky<usize>>,
    values: Vec<f64>,
    factored: bool,
    mem: MemBuffer,
    /// `order[k]` = original index eliminated at step `k`.
    order: Option<Vec<usize>>,
}

impl FaerCholesky {
    pub fn new(par: Par) -> Self {
        Self { par, symbolic: None, values: Vec::new(), factored: false, mem: MemBuffer::new(Default::default()), order: None }
    }

    /// Number of stored factor coefficients after analysis.
    pub fn factor_len(&self) -> usize {
        self.values.len()
    }
}

impl Default for FaerCholesky {
    fn default() -> Self {
        Self::new(parallelism_from_env())
    }
}

fn pattern(a: &SymmetricSparseMatrix) -> SymbolicSparseColMatRef<'_, usize> {
    SymbolicSparseColMatRef::new_checked(a.dim(), a.dim(), a.col_ptr(), None, a.row_idx())
}

impl SpdSolver for FaerCholesky {
    fn analyze(&mut self, a: &SymmetricSparseMatrix, order: Option<&[usize]>) -> Result<()> {
        let n = a.dim();
        let inverse = match order {
            Some(p) => {
                let mut inv = vec![usize::MAX; n];
                for (k, &i) in p.iter().enumerate() {
                    if i >= n || inv[i] != usize::MAX {
                        return Err(Error::Solver("elimination order is not a permutation".into()));
                    }
                    inv[i] = k;
                }
                if p.len() != n {
                    return Err(Error::Solver("elimination order is not a permutation".into()));
                }
                Some(inv)
            }
            None => None,
        };
        let ordering = match (order, &inverse) {
            (Some(p), Some(inv)) => SymmetricOrdering::Custom(PermRef::new_checked(p, inv, n)),
            _ => SymmetricOrdering::Amd,
        };
        let symbolic = factorize_symbolic_cholesky(pattern(a), Side::Lower, ordering, Default::default())
            .map_err(|e| Error::Solver(format!("symbolic analysis failed: {e:?}")))?;
        let req = symbolic
            .factorize_numeric_llt_scratch::<f64>(self.par, Default::default())
            .or(symbolic.solve_in_place_scratch::<f64>(1, self.par));
        self.mem = MemBuffer::new(req);
        self.values = vec![0.0; symbolic.len_val()];
        self.symbolic = Some(symbolic);
        self.factored = false;
        self.order = order.map(<[usize]>::to_vec);
        Ok(())
    }

    fn factorize(&mut self, a: &SymmetricSparseMatrix) -> Result<()> {
        let symbolic = self.symbolic.as_ref().ok_or_else(|| Error::Solver("factorize called before analyze".into()))?;
        if symbolic.nrows() != a.dim() {
            return Err(Error::Solver("matrix does not match the analyzed pattern".into()));
        }
        self.factored = false;
        let mat = SparseColMatRef::new(pattern(a), a.values());
        let result = symbolic.factorize_numeric_llt(
            &mut self.values,
            mat,
            Side::Lower,
            Default::default(),
            self.par,
            MemStack::new(&mut self.mem),
            Default::default(),
        );
        match result {
            Ok(_) => {
                self.factored = true;
                Ok(())
            }
            Err(LltError::NonPositivePivot { index }) => {
                let pivot = self.order.as_ref().map_or(index, |o| o.get(index).copied().unwrap_or(index));
                Err(Error::NotPositiveDefinite { pivot })
            }
        }
    }

    fn solve_in_place(&mut self, rhs: &mut [f64]) -> Result<()> {
        let symbolic = match (&self.symbolic, self.factored) {
            (Some(s), true) => s,
            _ => return Err(Error::Solver("solve called before a successful factorization".into())),
        };
        if rhs.len() != symbolic.nrows() {
            return Err(Error::Solver("right-hand side has the wrong length".into()));
        }
        let n = rhs.len();
        let llt = LltRef::new(symbolic, &self.values);
        let b = MatMut::from_column_major_slice_mut(rhs, n, 1);
        llt.solve_in_place_with_conj(Conj::No, b, self.par, MemStack::new(&mut self.mem));
        Ok(())
    }
}
