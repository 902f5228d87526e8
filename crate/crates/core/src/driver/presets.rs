//! Ready-made load cases.

use alloc::vec;
use alloc::vec::Vec;

use crate::fea::LoadCase;
use crate::grid::{partition_domain, DomainPartition, StructuredGrid};
use crate::{Error, Result};

use super::Problem;

/// Orientation of the triangular side load of [`frame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideLoad {
    /// Pointing towards `-x`.
    Left,
    /// Pointing towards `+x`.
    Right,
}

/// Half MBB beam: unit downward point load at the top-left node, horizontal
/// symmetry supports along the left edge and a vertical roller at the
/// bottom-right node.
pub fn mbb(nelx: usize, nely: usize) -> Result<Problem> {
    let grid = StructuredGrid::new_2d(nelx, nely)?;
    let mut f = vec![0.0; grid.dof_count()];
    f[grid.node_dof(grid.node_index(0, 0, 0), 1)] = -1.0;
    let mut fixed: Vec<usize> = (0..=nely).map(|iy| grid.node_dof(grid.node_index(0, iy, 0), 0)).collect();
    fixed.push(grid.node_dof(grid.node_index(nelx, nely, 0), 1));
    let load = LoadCase::new(f, &fixed)?;
    let partition = DomainPartition::all_active(grid.element_count());
    Problem::new(grid, load, partition)
}

/// Square frame reinforcement. A solid frame of thickness `n/50` runs along
/// the top and both sides, a void opening occupies the lower middle, a load
/// of total magnitude 2 is spread over the top nodes and a side load grows
/// linearly from zero at the top to `1/n` at the bottom of the right edge.
/// Supports: both DOFs of the top-left node and the last DOF of the mesh.
pub fn frame(n: usize, side: SideLoad) -> Result<Problem> {
    if n == 0 || n % 50 != 0 {
        return Err(Error::invalid("nelx", "frame size must be a positive multiple of 50"));
    }
    let grid = StructuredGrid::new_2d(n, n)?;
    let t = n / 50;
    let mut f = vec![0.0; grid.dof_count()];
    let top = -2.0 / (n + 1) as f64;
    for ix in 0..=n {
        f[grid.node_dof(grid.node_index(ix, 0, 0), 1)] = top;
    }
    let sign = match side {
        SideLoad::Left => -1.0,
        SideLoad::Right => 1.0,
    };
    let step = 1.0 / (n * n) as f64;
    for iy in 0..=n {
        f[grid.node_dof(grid.node_index(n, iy, 0), 0)] = sign * iy as f64 * step;
    }
    let fixed = [0, 1, grid.dof_count() - 1];
    let load = LoadCase::new(f, &fixed)?;

    let all = (0, usize::MAX);
    let flat = (0, 1);
    let mut solid = grid.elements_in_box(all, (0, t), flat);
    solid.extend(grid.elements_in_box((0, t), all, flat));
    solid.extend(grid.elements_in_box((n - t, n), all, flat));
    solid.sort_unstable();
    solid.dedup();
    let void = grid.elements_in_box((2 * n / 5 - 1, n - n / 5), (2 * n / 5 - 1, n), flat);
    let partition = partition_domain(&grid, &solid, &void)?;
    Problem::new(grid, load, partition)
}

/// 3D cantilever clamped on the face `ix = 0`. The opposite face carries a
/// line load in `-z` along its `iz = 0` edge, with sine-shaped nodal weights
/// `sin(π iy / nely)` over the nodes of that edge.
pub fn cantilever(nelx: usize, nely: usize, nelz: usize) -> Result<Problem> {
    let grid = StructuredGrid::new_3d(nelx, nely, nelz)?;
    let mut f = vec![0.0; grid.dof_count()];
    for iy in 0..=nely {
        let w = crate::math::sin(core::f64::consts::PI * iy as f64 / nely as f64);
        f[grid.node_dof(grid.node_index(nelx, iy, 0), 2)] = -w;
    }
    let mut fixed = Vec::with_capacity(3 * (nely + 1) * (nelz + 1));
    for iz in 0..=nelz {
        for iy in 0..=nely {
            let node = grid.node_index(0, iy, iz);
            fixed.extend((0..3).map(|c| grid.node_dof(node, c)));
        }
    }
    let load = LoadCase::new(f, &fixed)?;
    let partition = DomainPartition::all_active(grid.element_count());
    Problem::new(grid, load, partition)
}
