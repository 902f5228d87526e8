//! Lower-triangular compressed-column storage for symmetric matrices.
//!
//! The sparsity pattern of the global stiffness matrix depends on the mesh
//! only, so it is computed once ([`AssemblyPlan`]) together with a map from
//! every reduced index pair to its storage slot. Re-assembly for new moduli
//! is then a single pass of scaled scatter-adds in a fixed order.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::IndexPairs;

/// Symmetric matrix stored as its lower triangle in CSC form
/// (row indices sorted within each column, one entry per position).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricSparseMatrix {
    /// Build from raw CSC parts. Panics if the structure is not a valid
    /// sorted lower-triangular pattern.
    pub fn from_parts(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(col_ptr.len(), n + 1);
        assert_eq!(row_idx.len(), values.len());
        assert_eq!(col_ptr[n], row_idx.len());
        for j in 0..n {
            let col = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            assert!(col.windows(2).all(|w| w[0] < w[1]), "column {j} not strictly sorted");
            assert!(col.iter().all(|&i| i >= j && i < n), "column {j} leaves the lower triangle");
        }
        Self { n, col_ptr, row_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Stored entries of column `j` as `(row, value)`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Entry `(i, j)` of the full symmetric matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let col = &self.row_idx[self.col_ptr[c]..self.col_ptr[c + 1]];
        match col.binary_search(&r) {
            Ok(k) => self.values[self.col_ptr[c] + k],
            Err(_) => 0.0,
        }
    }

    /// `y = K x` with `K = L + Lᵀ - diag(L)`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n {
            let xj = x[j];
            let mut acc = 0.0;
            for (i, v) in self.column(j) {
                y[i] += v * xj;
                if i != j {
                    acc += v * x[i];
                }
            }
            y[j] += acc;
        }
    }

    /// Dense row-major copy of the full symmetric matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for j in 0..n {
            for (i, v) in self.column(j) {
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }
}

/// Precomputed lower-triangular pattern plus the slot of every index pair.
#[derive(Debug, Clone)]
pub struct AssemblyPlan {
    n: usize,
    packed: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    slots: Vec<u32>,
}

impl AssemblyPlan {
    pub fn new(pairs: &IndexPairs, n: usize) -> Self {
        let d = pairs.dofs_per_element();
        let packed = d * (d + 1) / 2;
        let (rows, cols) = (pairs.rows(), pairs.cols());

        // Bucket pair rows by column, then sort and deduplicate each bucket.
        let mut count = vec![0usize; n + 1];
        for &c in cols {
            count[c as usize + 1] += 1;
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let mut fill = count.clone();
        let mut bucket = vec![0u32; rows.len()];
        for (&r, &c) in rows.iter().zip(cols) {
            bucket[fill[c as usize]] = r;
            fill[c as usize] += 1;
        }
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        for j in 0..n {
            let b = &mut bucket[count[j]..count[j + 1]];
            b.sort_unstable();
            let start = row_idx.len();
            for &r in b.iter() {
                if row_idx.len() == start || *row_idx.last().unwrap() != r as usize {
                    row_idx.push(r as usize);
                }
            }
            col_ptr[j + 1] = row_idx.len();
        }

        let slots = rows
            .iter()
            .zip(cols)
            .map(|(&r, &c)| {
                let (lo, hi) = (col_ptr[c as usize], col_ptr[c as usize + 1]);
                let k = row_idx[lo..hi].binary_search(&(r as usize)).expect("pair present in pattern");
                (lo + k) as u32
            })
            .collect();
        Self { n, packed, col_ptr, row_idx, slots }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Zero-valued matrix with the plan's pattern.
    pub fn empty_matrix(&self) -> SymmetricSparseMatrix {
        SymmetricSparseMatrix {
            n: self.n,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            values: vec![0.0; self.row_idx.len()],
        }
    }

    /// Overwrite `k` with `Σ_e scale[e] · scatter(ke_lower)`. Summation order
    /// is fixed (element by element), so results are reproducible.
    pub fn assemble_into(&self, ke_lower: &[f64], scale: &[f64], k: &mut SymmetricSparseMatrix) {
        assert_eq!(ke_lower.len(), self.packed);
        assert_eq!(k.values.len(), self.row_idx.len());
        assert_eq!(scale.len() * self.packed, self.slots.len());
        k.values.iter_mut().for_each(|v| *v = 0.0);
        for (slots, &s) in self.slots.chunks_exact(self.packed).zip(scale) {
            for (&slot, &kv) in slots.iter().zip(ke_lower) {
                k.values[slot as usize] += s * kv;
            }
        }
    }
}

/// The principal submatrix of a [`SymmetricSparseMatrix`] on a subset of
/// DOFs, with a cached gather map so it can be refreshed after every
/// re-assembly without rebuilding its pattern.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    /// Global index of each reduced unknown (sorted ascending).
    keep: Vec<usize>,
    /// Reduced index of each global DOF, `usize::MAX` when eliminated.
    global_to_local: Vec<usize>,
    source: Vec<usize>,
    matrix: SymmetricSparseMatrix,
}

impl ReducedSystem {
    pub fn new(pattern: &SymmetricSparseMatrix, keep: &[usize]) -> Self {
        let n = pattern.dim();
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut global_to_local = vec![usize::MAX; n];
        for (l, &g) in keep.iter().enumerate() {
            global_to_local[g] = l;
        }
        let mut col_ptr = Vec::with_capacity(keep.len() + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        let mut source = Vec::new();
        for &g in &keep {
            for k in pattern.col_ptr[g]..pattern.col_ptr[g + 1] {
                let l = global_to_local[pattern.row_idx[k]];
                if l != usize::MAX {
                    row_idx.push(l);
                    source.push(k);
                }
            }
            col_ptr.push(row_idx.len());
        }
        let values = vec![0.0; row_idx.len()];
        let matrix = SymmetricSparseMatrix { n: keep.len(), col_ptr, row_idx, values };
        Self { keep, global_to_local, source, matrix }
    }

    pub fn keep(&self) -> &[usize] {
        &self.keep
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        let l = self.global_to_local[global];
        (l != usize::MAX).then_some(l)
    }

    /// Copy the retained entries of `full` (same pattern as at construction).
    pub fn refresh(&mut self, full: &SymmetricSparseMatrix) {
        for (dst, &src) in self.matrix.values.iter_mut().zip(&self.source) {
            *dst = full.values[src];
        }
    }

    pub fn matrix(&self) -> &SymmetricSparseMatrix {
        &self.matrix
    }

    pub fn gather(&self, full: &[f64], out: &mut [f64]) {
        for (o, &g) in out.iter_mut().zip(&self.keep) {
            *o = full[g];
        }
    }

    /// Write reduced values back to their global positions and zero the rest.
    pub fn scatter(&self, reduced: &[f64], full: &mut [f64]) {
        full.iter_mut().for_each(|v| *v = 0.0);
        for (&r, &g) in reduced.iter().zip(&self.keep) {
            full[g] = r;
        }
    }

    /// Restrict a global elimination order to the retained unknowns,
    /// expressed in reduced indices.
    pub fn restrict_order(&self, global_order: &[usize]) -> Vec<usize> {
        global_order.iter().filter_map(|&g| self.local_index(g)).collect()
    }
}
