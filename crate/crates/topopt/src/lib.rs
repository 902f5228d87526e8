//! Host-side companion of `topo-core`: a sparse Cholesky backend, the
//! command-line configuration and the result writers.

pub mod config;
pub mod output;
pub mod solver;

use std::path::PathBuf;
use std::time::Instant;

use faer::Par;
use topo_core::driver::{run_optimization, IterationRecord, Problem, RunConfig, RunResult};

pub use config::{parse_args, Settings};
pub use output::{write_outputs, OutputBundle};
pub use solver::FaerCholesky;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Usage { field: &'static str, reason: String },

    #[error("{}:{line}: {reason}", path.display())]
    Config { path: PathBuf, line: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Args(#[from] clap::Error),

    #[error(transparent)]
    Core(#[from] topo_core::Error),
}

/// Run `config` on `problem` with the faer backend and a nested-dissection
/// elimination order. `par` controls factorization threads.
pub fn optimize<F>(config: &RunConfig, problem: &Problem, par: Par, sink: F) -> Result<RunResult, topo_core::Error>
where
    F: FnMut(&IterationRecord),
{
    let order = problem.grid.nested_dissection_dofs();
    let start = Instant::now();
    run_optimization(config, problem, FaerCholesky::new(par), Some(&order), sink, || start.elapsed().as_secs_f64())
}

/// Execute a parsed command line: optimize, print progress, write files.
pub fn execute(settings: &Settings) -> Result<(RunResult, OutputBundle), CliError> {
    let par = if settings.deterministic { Par::Seq } else { solver::parallelism_from_env() };
    let quiet = settings.quiet;
    let result = optimize(&settings.run, &settings.problem, par, |r| {
        if !quiet {
            println!(
                "It.:{:5} C:{:12.4} V:{:7.4} ch.:{:9.2e} mND:{:7.3} p:{:4.1} beta:{:5.1} eta:{:6.4} nbs:{:3} t:{:8.2}s",
                r.iteration,
                r.compliance,
                r.volume,
                r.residual,
                r.nondiscreteness,
                r.penal,
                r.beta,
                r.eta,
                r.bisections,
                r.wall_time
            );
        }
    })?;
    let bundle = write_outputs(&result, &settings.problem.grid, &settings.out)?;
    Ok((result, bundle))
}
