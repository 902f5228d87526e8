//! Result files: a graymap for 2D designs, a legacy VTK voxel file for 3D
//! designs, the iteration log and a short summary.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use topo_core::driver::{IterationRecord, RunResult};
use topo_core::grid::StructuredGrid;

use crate::CliError;

/// Paths of the files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputBundle {
    pub density_image: Option<PathBuf>,
    pub voxel_field: Option<PathBuf>,
    pub log: PathBuf,
    pub summary: PathBuf,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))
}

/// Binary PGM (P5), one pixel per element, top row first. Solid is black.
pub fn pgm_bytes(grid: &StructuredGrid, xhat: &[f64]) -> Vec<u8> {
    let (w, h) = (grid.nelx(), grid.nely());
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h);
    for iy in 0..h {
        for ix in 0..w {
            let v = xhat[grid.element_index(ix, iy, 0)].clamp(0.0, 1.0);
            out.push((255.0 * (1.0 - v)).round() as u8);
        }
    }
    out
}

/// Legacy ASCII VTK structured points with one point per element.
///
/// VTK orders points with `x` fastest, then `y`, then `z`, and its `y` axis
/// points up, so element rows are written bottom row first.
pub fn vtk_text(grid: &StructuredGrid, xhat: &[f64]) -> String {
    let [nx, ny, nz] = grid.element_shape();
    let mut s = String::with_capacity(16 * xhat.len() + 256);
    s.push_str("# vtk DataFile Version 3.0\nphysical density\nASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
    s.push_str("ORIGIN 0.5 0.5 0.5\nSPACING 1 1 1\n");
    let _ = writeln!(s, "POINT_DATA {}", nx * ny * nz);
    s.push_str("SCALARS density double 1\nLOOKUP_TABLE default\n");
    for iz in 0..nz {
        for j in 0..ny {
            for ix in 0..nx {
                let _ = writeln!(s, "{}", xhat[grid.element_index(ix, ny - 1 - j, iz)]);
            }
        }
    }
    s
}

/// Parse a file produced by [`vtk_text`] back into element order.
pub fn read_vtk(text: &str, grid: &StructuredGrid) -> Option<Vec<f64>> {
    let [nx, ny, nz] = grid.element_shape();
    let mut lines = text.lines();
    let dims = lines.by_ref().find(|l| l.starts_with("DIMENSIONS"))?;
    let d: Vec<usize> = dims.split_whitespace().skip(1).filter_map(|t| t.parse().ok()).collect();
    if d != [nx, ny, nz] {
        return None;
    }
    lines.by_ref().find(|l| l.starts_with("LOOKUP_TABLE"))?;
    let values: Vec<f64> = lines.flat_map(str::split_whitespace).map(str::parse).collect::<Result<_, _>>().ok()?;
    if values.len() != nx * ny * nz {
        return None;
    }
    let mut out = vec![0.0; values.len()];
    let mut k = 0;
    for iz in 0..nz {
        for j in 0..ny {
            for ix in 0..nx {
                out[grid.element_index(ix, ny - 1 - j, iz)] = values[k];
                k += 1;
            }
        }
    }
    Some(out)
}

pub const CSV_HEADER: &str = "loop,c,V,resnorm,mND,p,beta,eta,nbisect";

pub fn csv_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.iteration, r.compliance, r.volume, r.residual, r.nondiscreteness, r.penal, r.beta, r.eta, r.bisections
    )
}

pub fn csv_text(history: &[IterationRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in history {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s
}

pub fn summary_text(result: &RunResult) -> String {
    let last = result.history.last();
    let m = result.design.xhat.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(s, "iterations = {}", result.history.len());
    let _ = writeln!(s, "converged = {}", result.converged);
    let _ = writeln!(s, "compliance = {}", last.map_or(f64::NAN, |r| r.compliance));
    let _ = writeln!(s, "volume = {}", result.design.xhat.iter().sum::<f64>() / m);
    let _ = writeln!(s, "mnd = {}", topo_core::driver::nondiscreteness(&result.design.x));
    let _ = writeln!(s, "residual = {}", last.map_or(f64::NAN, |r| r.residual));
    let _ = writeln!(s, "wall_time = {}", last.map_or(0.0, |r| r.wall_time));
    s
}

/// Write every artifact into `dir`, creating it if needed.
pub fn write_outputs(result: &RunResult, grid: &StructuredGrid, dir: &Path) -> Result<OutputBundle, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (mut density_image, mut voxel_field) = (None, None);
    if grid.is_3d() {
        let p = dir.join("density.vtk");
        write_file(&p, vtk_text(grid, &result.design.xhat).as_bytes())?;
        voxel_field = Some(p);
    } else {
        let p = dir.join("density.pgm");
        write_file(&p, &pgm_bytes(grid, &result.design.xhat))?;
        density_image = Some(p);
    }
    let log = dir.join("history.csv");
    write_file(&log, csv_text(&result.history).as_bytes())?;
    let summary = dir.join("summary.txt");
    write_file(&summary, summary_text(result).as_bytes())?;
    Ok(OutputBundle { density_image, voxel_field, log, summary })
}
