//! Structured-mesh topology: node and DOF numbering, element connectivity,
//! the reduced (lower-triangle) assembly index set and the active/passive
//! element partition.
//!
//! Numbering is column-major with `y` running fastest. Row index `iy = 0` is
//! the top of the domain, so the physical `y` axis points towards decreasing
//! `iy`. In 3D the node order is `y`, then `z`, then `x`. Every node carries
//! `dim` consecutive DOFs (`u_x`, `u_y`[, `u_z`]).

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Regular grid of unit square (Q4) or unit cube (H8) elements.
///
/// `nelz == 0` selects a 2D mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuredGrid {
    nelx: usize,
    nely: usize,
    nelz: usize,
}

impl StructuredGrid {
    pub fn new(nelx: usize, nely: usize, nelz: usize) -> Result<Self> {
        if nelx == 0 || nely == 0 {
            return Err(Error::EmptyGrid { nelx, nely, nelz });
        }
        let grid = Self { nelx, nely, nelz };
        // Every stored index (DOFs, element ids) must fit in 32 bits.
        let dofs = grid.dim() as u64
            * (nelx as u64 + 1)
            * (nely as u64 + 1)
            * if nelz == 0 { 1 } else { nelz as u64 + 1 };
        if dofs > u32::MAX as u64 {
            return Err(Error::IndexOverflow { count: dofs });
        }
        Ok(grid)
    }

    pub fn new_2d(nelx: usize, nely: usize) -> Result<Self> {
        Self::new(nelx, nely, 0)
    }

    pub fn new_3d(nelx: usize, nely: usize, nelz: usize) -> Result<Self> {
        if nelz == 0 {
            return Err(Error::EmptyGrid { nelx, nely, nelz });
        }
        Self::new(nelx, nely, nelz)
    }

    pub fn nelx(&self) -> usize {
        self.nelx
    }

    pub fn nely(&self) -> usize {
        self.nely
    }

    pub fn nelz(&self) -> usize {
        self.nelz
    }

    pub fn is_3d(&self) -> bool {
        self.nelz > 0
    }

    pub fn dim(&self) -> usize {
        if self.is_3d() {
            3
        } else {
            2
        }
    }

    /// Element layers along `z` (1 for a 2D mesh).
    fn layers(&self) -> usize {
        self.nelz.max(1)
    }

    /// Node layers along `z` (1 for a 2D mesh).
    fn node_layers(&self) -> usize {
        if self.is_3d() {
            self.nelz + 1
        } else {
            1
        }
    }

    /// Total element count `m`.
    pub fn element_count(&self) -> usize {
        self.nelx * self.nely * self.layers()
    }

    pub fn node_count(&self) -> usize {
        (self.nelx + 1) * (self.nely + 1) * self.node_layers()
    }

    /// Total DOF count `n`.
    pub fn dof_count(&self) -> usize {
        self.dim() * self.node_count()
    }

    /// Local DOFs per element `d` (8 for Q4, 24 for H8).
    pub fn dofs_per_element(&self) -> usize {
        if self.is_3d() {
            24
        } else {
            8
        }
    }

    /// Element shape `[nelx, nely, nelz.max(1)]`.
    pub fn element_shape(&self) -> [usize; 3] {
        [self.nelx, self.nely, self.layers()]
    }

    pub fn node_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.node_layers() + iz) * (self.nely + 1) + iy
    }

    pub fn element_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.layers() + iz) * self.nely + iy
    }

    /// Inverse of [`element_index`](Self::element_index).
    pub fn element_coords(&self, e: usize) -> [usize; 3] {
        let iy = e % self.nely;
        let rest = e / self.nely;
        [rest / self.layers(), iy, rest % self.layers()]
    }

    pub fn node_dof(&self, node: usize, component: usize) -> usize {
        self.dim() * node + component
    }

    /// Element indices with `x0 <= ix < x1`, `y0 <= iy < y1` and
    /// `z0 <= iz < z1` (ranges are clipped to the grid).
    pub fn elements_in_box(&self, x: (usize, usize), y: (usize, usize), z: (usize, usize)) -> Vec<usize> {
        let [sx, sy, sz] = self.element_shape();
        let mut out = Vec::new();
        for ix in x.0..x.1.min(sx) {
            for iz in z.0..z.1.min(sz) {
                for iy in y.0..y.1.min(sy) {
                    out.push(self.element_index(ix, iy, iz));
                }
            }
        }
        out
    }

    /// Node elimination order from geometric nested dissection of the node
    /// lattice. Used as a fill-reducing ordering hint for sparse Cholesky.
    pub fn nested_dissection_nodes(&self) -> Vec<usize> {
        let hi = [self.nelx + 1, self.nely + 1, self.node_layers()];
        let mut order = Vec::with_capacity(self.node_count());
        self.dissect([0, 0, 0], hi, &mut order);
        order
    }

    fn dissect(&self, lo: [usize; 3], hi: [usize; 3], out: &mut Vec<usize>) {
        let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let count = ext[0] * ext[1] * ext[2];
        if count == 0 {
            return;
        }
        let axis = (0..3).fold(0, |best, a| if ext[a] > ext[best] { a } else { best });
        if count <= 64 || ext[axis] < 3 {
            self.push_box(lo, hi, out);
            return;
        }
        let mid = lo[axis] + ext[axis] / 2;
        let mut left_hi = hi;
        left_hi[axis] = mid;
        let mut right_lo = lo;
        right_lo[axis] = mid + 1;
        self.dissect(lo, left_hi, out);
        self.dissect(right_lo, hi, out);
        let mut sep_lo = lo;
        sep_lo[axis] = mid;
        let mut sep_hi = hi;
        sep_hi[axis] = mid + 1;
        self.push_box(sep_lo, sep_hi, out);
    }

    fn push_box(&self, lo: [usize; 3], hi: [usize; 3], out: &mut Vec<usize>) {
        for ix in lo[0]..hi[0] {
            for iz in lo[2]..hi[2] {
                for iy in lo[1]..hi[1] {
                    out.push(self.node_index(ix, iy, iz));
                }
            }
        }
    }

    /// DOF elimination order derived from [`nested_dissection_nodes`](Self::nested_dissection_nodes).
    pub fn nested_dissection_dofs(&self) -> Vec<usize> {
        let dim = self.dim();
        self.nested_dissection_nodes()
            .into_iter()
            .flat_map(|node| (0..dim).map(move |c| dim * node + c))
            .collect()
    }
}

/// Local node offsets `(ox, oy, oz)` in the element's reference frame
/// (`oy = 1` is the upper face). Counter-clockwise for Q4, standard
/// bottom-then-top ordering for H8.
pub const Q4_NODES: [[usize; 3]; 4] = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]];
pub const H8_NODES: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Element-to-DOF map: row `e` holds the `d` global DOFs of element `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    d: usize,
    dofs: Vec<u32>,
}

impl Connectivity {
    pub fn dofs_per_element(&self) -> usize {
        self.d
    }

    pub fn element_count(&self) -> usize {
        self.dofs.len() / self.d
    }

    pub fn row(&self, e: usize) -> &[u32] {
        &self.dofs[e * self.d..(e + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.dofs.chunks_exact(self.d)
    }
}

pub fn build_connectivity(grid: &StructuredGrid) -> Result<Connectivity> {
    let m = grid.element_count();
    let d = grid.dofs_per_element();
    let dim = grid.dim();
    let nodes: &[[usize; 3]] = if grid.is_3d() { &H8_NODES } else { &Q4_NODES };
    let [sx, sy, sz] = grid.element_shape();
    let mut dofs = vec![0u32; m * d];
    for ix in 0..sx {
        for iz in 0..sz {
            for iy in 0..sy {
                let e = grid.element_index(ix, iy, iz);
                let row = &mut dofs[e * d..(e + 1) * d];
                for (a, off) in nodes.iter().enumerate() {
                    // Reference `y` points up, i.e. towards smaller row index.
                    let node = grid.node_index(ix + off[0], iy + 1 - off[1], iz + off[2]);
                    for c in 0..dim {
                        row[dim * a + c] = (dim * node + c) as u32;
                    }
                }
            }
        }
    }
    Ok(Connectivity { d, dofs })
}

/// Local `(i, j)` pairs of the lower triangle, `j` outer and `i >= j` inner.
/// This is the coefficient order of every packed element matrix.
pub fn lower_triangle_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |j| (j..d).map(move |i| (i, j)))
}

/// Number of packed lower-triangle coefficients for `d` local DOFs.
pub const fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Global (row, column) pairs of the lower-triangular assembly, with
/// `rows[k] >= cols[k]`. Element `e` owns the block
/// `e * packed_len(d) .. (e + 1) * packed_len(d)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPairs {
    d: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
}

impl IndexPairs {
    pub fn dofs_per_element(&self) -> usize {
        self.d
    }

    /// Number of (row, column) pairs.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total stored integers (two per pair).
    pub fn entry_count(&self) -> usize {
        2 * self.len()
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }
}

pub fn build_symmetric_index_pairs(conn: &Connectivity) -> Result<IndexPairs> {
    let d = conn.dofs_per_element();
    let per_element = packed_len(d);
    let total = conn.element_count() as u64 * per_element as u64;
    if total > u32::MAX as u64 {
        return Err(Error::IndexOverflow { count: total });
    }
    let mut rows = Vec::with_capacity(total as usize);
    let mut cols = Vec::with_capacity(total as usize);
    for row in conn.rows() {
        for (i, j) in lower_triangle_pairs(d) {
            let (a, b) = (row[i], row[j]);
            rows.push(a.max(b));
            cols.push(a.min(b));
        }
    }
    Ok(IndexPairs { d, rows, cols })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Active,
    Solid,
    Void,
}

/// Split of the elements into active design elements and passive solid /
/// void elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainPartition {
    kinds: Vec<ElementKind>,
    active: Vec<usize>,
    solid: Vec<usize>,
    void: Vec<usize>,
}

impl DomainPartition {
    pub fn all_active(m: usize) -> Self {
        Self {
            kinds: vec![ElementKind::Active; m],
            active: (0..m).collect(),
            solid: Vec::new(),
            void: Vec::new(),
        }
    }

    pub fn element_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, e: usize) -> ElementKind {
        self.kinds[e]
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.kinds[e] == ElementKind::Active
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn passive_solid(&self) -> &[usize] {
        &self.solid
    }

    pub fn passive_void(&self) -> &[usize] {
        &self.void
    }

    /// Overwrite passive entries of `field` with 1 (solid) and 0 (void).
    pub fn pin(&self, field: &mut [f64]) {
        for &e in &self.solid {
            field[e] = 1.0;
        }
        for &e in &self.void {
            field[e] = 0.0;
        }
    }
}

pub fn partition_domain(grid: &StructuredGrid, solid: &[usize], void: &[usize]) -> Result<DomainPartition> {
    let m = grid.element_count();
    let mut kinds = vec![ElementKind::Active; m];
    for (set, kind) in [(solid, ElementKind::Solid), (void, ElementKind::Void)] {
        for &e in set {
            if e >= m {
                return Err(Error::ElementOutOfRange { element: e, count: m });
            }
            match kinds[e] {
                ElementKind::Active => kinds[e] = kind,
                k if k == kind => {}
                _ => return Err(Error::OverlappingPassive(e)),
            }
        }
    }
    let collect = |k: ElementKind| (0..m).filter(|&e| kinds[e] == k).collect::<Vec<_>>();
    Ok(DomainPartition {
        active: collect(ElementKind::Active),
        solid: collect(ElementKind::Solid),
        void: collect(ElementKind::Void),
        kinds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_2d_and_3d() {
        let g = StructuredGrid::new_2d(3, 2).unwrap();
        assert_eq!((g.element_count(), g.node_count(), g.dof_count(), g.dofs_per_element()), (6, 12, 24, 8));
        let g = StructuredGrid::new_3d(2, 3, 4).unwrap();
        assert_eq!(g.element_count(), 24);
        assert_eq!(g.dof_count(), 3 * 3 * 4 * 5);
        assert_eq!(g.dofs_per_element(), 24);
    }

    #[test]
    fn empty_axis_rejected() {
        assert!(matches!(StructuredGrid::new_2d(0, 3), Err(Error::EmptyGrid { .. })));
        assert!(matches!(StructuredGrid::new_3d(2, 2, 0), Err(Error::EmptyGrid { .. })));
    }

    #[test]
    fn index_overflow_rejected() {
        let err = StructuredGrid::new_3d(1200, 1200, 1200).unwrap_err();
        assert!(matches!(err, Error::IndexOverflow { .. }));
    }

    #[test]
    fn single_element_covers_all_nodes() {
        let g = StructuredGrid::new_2d(1, 1).unwrap();
        let c = build_connectivity(&g).unwrap();
        let mut row = c.row(0).to_vec();
        // BL, BR, TR, TL with top-left node 0.
        assert_eq!(row, [2, 3, 6, 7, 4, 5, 0, 1]);
        row.sort_unstable();
        assert_eq!(row, (0..8).collect::<Vec<u32>>());
    }

    #[test]
    fn neighbours_share_one_edge() {
        let g = StructuredGrid::new_2d(2, 1).unwrap();
        let c = build_connectivity(&g).unwrap();
        let shared = c.row(0).iter().filter(|d| c.row(1).contains(d)).count();
        assert_eq!(shared, 4);
    }

    #[test]
    fn connectivity_3x2_by_hand() {
        // Node grid (rows top to bottom, columns left to right):
        //  0  3  6  9
        //  1  4  7 10
        //  2  5  8 11
        let g = StructuredGrid::new_2d(3, 2).unwrap();
        let c = build_connectivity(&g).unwrap();
        let nodes = |e: usize| -> Vec<u32> { c.row(e).chunks(2).map(|p| p[0] / 2).collect() };
        // element (ix, iy) -> e = ix * 2 + iy ; nodes BL, BR, TR, TL
        assert_eq!(nodes(0), [1, 4, 3, 0]);
        assert_eq!(nodes(1), [2, 5, 4, 1]);
        assert_eq!(nodes(2), [4, 7, 6, 3]);
        assert_eq!(nodes(3), [5, 8, 7, 4]);
        assert_eq!(nodes(4), [7, 10, 9, 6]);
        assert_eq!(nodes(5), [8, 11, 10, 7]);
        for row in c.rows() {
            for p in row.chunks(2) {
                assert_eq!(p[1], p[0] + 1);
            }
        }
    }

    #[test]
    fn connectivity_3d_rows_are_distinct_and_in_range() {
        let g = StructuredGrid::new_3d(3, 2, 2).unwrap();
        let c = build_connectivity(&g).unwrap();
        for row in c.rows() {
            let mut r = row.to_vec();
            r.sort_unstable();
            r.dedup();
            assert_eq!(r.len(), 24);
            assert!(r.iter().all(|&d| (d as usize) < g.dof_count()));
        }
    }

    #[test]
    fn pair_counts() {
        let g = StructuredGrid::new_2d(1, 1).unwrap();
        let p = build_symmetric_index_pairs(&build_connectivity(&g).unwrap()).unwrap();
        assert_eq!(p.len(), 36);
        assert!(p.rows().iter().zip(p.cols()).all(|(r, c)| r >= c));
        let g = StructuredGrid::new_3d(2, 1, 1).unwrap();
        let p = build_symmetric_index_pairs(&build_connectivity(&g).unwrap()).unwrap();
        assert_eq!(p.len(), 2 * 300);
    }

    #[test]
    fn element_coords_roundtrip() {
        let g = StructuredGrid::new_3d(3, 4, 2).unwrap();
        for e in 0..g.element_count() {
            let [x, y, z] = g.element_coords(e);
            assert_eq!(g.element_index(x, y, z), e);
        }
    }

    #[test]
    fn partition_rules() {
        let g = StructuredGrid::new_2d(4, 3).unwrap();
        let p = partition_domain(&g, &[], &[]).unwrap();
        assert_eq!(p.active().len(), 12);
        let p = partition_domain(&g, &[0, 1, 1], &[5]).unwrap();
        assert_eq!(p.passive_solid(), &[0, 1]);
        assert_eq!(p.passive_void(), &[5]);
        assert_eq!(p.active().len() + 3, 12);
        assert_eq!(partition_domain(&g, &[0], &[0]), Err(Error::OverlappingPassive(0)));
        assert!(matches!(partition_domain(&g, &[12], &[]), Err(Error::ElementOutOfRange { .. })));
    }

    #[test]
    fn nested_dissection_is_a_permutation() {
        for g in [StructuredGrid::new_2d(30, 10).unwrap(), StructuredGrid::new_3d(6, 5, 4).unwrap()] {
            let mut order = g.nested_dissection_dofs();
            order.sort_unstable();
            assert_eq!(order, (0..g.dof_count()).collect::<Vec<_>>());
        }
    }
}
