//! Command-line flags and `key = value` configuration files.
//!
//! A file named by `--config` supplies defaults using the long flag names as
//! keys. Flags given on the command line override file entries; `passive`
//! boxes from both sources accumulate.

use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, ValueEnum};
use topo_core::accel::AndersonParams;
use topo_core::driver::{presets, ContinuationSchedule, FilterType, Problem, RunConfig, SideLoad, UpdateStrategy};
use topo_core::fea::SimpParams;
use topo_core::filter::BoundaryMode;
use topo_core::grid::partition_domain;
use topo_core::oc::{BisectionStop, Bracket};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Mbb,
    Frame,
    Cantilever,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterBc {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Update {
    Bisection,
    PrimalDual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopRule {
    Relative,
    Absolute,
}

/// Minimum-compliance topology optimization on structured grids.
#[derive(Debug, Clone, Parser)]
#[command(name = "topopt", version, args_override_self = true)]
pub struct Cli {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub nelx: Option<usize>,
    #[arg(long)]
    pub nely: Option<usize>,
    #[arg(long)]
    pub nelz: Option<usize>,
    #[arg(long)]
    pub volfrac: Option<f64>,
    #[arg(long)]
    pub penal: Option<f64>,
    #[arg(long)]
    pub rmin: Option<f64>,
    /// 1: density filter, 2: projection, 3: volume-preserving projection.
    #[arg(long)]
    pub ft: Option<u8>,
    #[arg(long, value_enum)]
    pub ftbc: Option<FilterBc>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "move")]
    pub move_limit: Option<f64>,
    #[arg(long)]
    pub maxit: Option<usize>,
    /// Convergence threshold on the RMS change of the physical field.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub e0: Option<f64>,
    #[arg(long)]
    pub emin: Option<f64>,
    /// Penalty continuation `start,max,period,delta`.
    #[arg(long)]
    pub penal_cont: Option<String>,
    /// Sharpness continuation `start,max,period,delta`.
    #[arg(long)]
    pub beta_cont: Option<String>,
    /// Enable periodic Anderson extrapolation.
    #[arg(long)]
    pub accel: bool,
    #[arg(long)]
    pub accel_q: Option<usize>,
    #[arg(long)]
    pub accel_mr: Option<usize>,
    #[arg(long)]
    pub accel_alpha: Option<f64>,
    #[arg(long)]
    pub accel_zeta: Option<f64>,
    #[arg(long)]
    pub accel_q0: Option<usize>,
    #[arg(long, value_enum)]
    pub update: Option<Update>,
    /// `estimate` or an explicit upper bound on `sqrt(λ)`.
    #[arg(long)]
    pub bracket: Option<String>,
    #[arg(long, value_enum)]
    pub bisect_stop: Option<StopRule>,
    #[arg(long)]
    pub bisect_tol: Option<f64>,
    /// Direction of the frame side load.
    #[arg(long, value_enum)]
    pub side: Option<Side>,
    /// Extra passive box `solid|void:x0,x1,y0,y1[,z0,z1]` (half-open, in elements).
    #[arg(long)]
    pub passive: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use a single solver thread so repeated runs are bit-identical.
    #[arg(long)]
    pub deterministic: bool,
    /// Suppress the per-iteration console line.
    #[arg(long)]
    pub quiet: bool,
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct Settings {
    pub preset: Preset,
    pub problem: Problem,
    pub run: RunConfig,
    pub out: PathBuf,
    pub deterministic: bool,
    pub quiet: bool,
}

const BOOL_KEYS: [&str; 3] = ["accel", "deterministic", "quiet"];

/// Turn a configuration file into equivalent command-line arguments.
pub fn file_args(text: &str, path: &Path) -> Result<Vec<String>, CliError> {
    let known: Vec<String> = Cli::command().get_arguments().filter_map(|a| a.get_long().map(str::to_owned)).collect();
    let mut args = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| CliError::Config { path: path.to_owned(), line: n + 1, reason: reason.to_owned() };
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" || !known.iter().any(|k| *k == key) {
            return Err(bad(&format!("unknown key `{key}`")));
        }
        if BOOL_KEYS.contains(&key.as_str()) {
            match value {
                "true" | "1" | "yes" => args.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => return Err(bad(&format!("`{key}` expects true or false"))),
            }
        } else {
            args.push(format!("--{key}"));
            args.push(value.to_owned());
        }
    }
    Ok(args)
}

/// Parse `argv` (without the program name), merging a configuration file
/// when one is named.
pub fn parse_args<I, S>(argv: I) -> Result<Settings, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let first = Cli::try_parse_from(std::iter::once("topopt".to_owned()).chain(argv.iter().cloned()))?;
    let cli = match &first.config {
        None => first,
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let mut merged = vec!["topopt".to_owned()];
            merged.extend(file_args(&text, path)?);
            merged.extend(argv);
            Cli::try_parse_from(merged)?
        }
    };
    settings(&cli)
}

fn usage(field: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Usage { field, reason: reason.into() }
}

fn schedule(field: &'static str, text: &Option<String>) -> Result<ContinuationSchedule, CliError> {
    let Some(text) = text else { return Ok(ContinuationSchedule::DISABLED) };
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let err = || usage(field, "expected `start,max,period,delta`");
    if parts.len() != 4 {
        return Err(err());
    }
    let start = parts[0].parse().map_err(|_| err())?;
    let max = parts[1].parse().map_err(|_| err())?;
    let period = parts[2].parse().map_err(|_| err())?;
    let delta = parts[3].parse().map_err(|_| err())?;
    ContinuationSchedule::new(start, max, period, delta).map_err(|_| usage(field, "period must be at least 1"))
}

struct PassiveBox {
    solid: bool,
    x: (usize, usize),
    y: (usize, usize),
    z: (usize, usize),
}

fn passive_box(text: &str) -> Result<PassiveBox, CliError> {
    let err = || usage("passive", format!("cannot parse `{text}`; expected solid|void:x0,x1,y0,y1[,z0,z1]"));
    let (kind, coords) = text.split_once(':').ok_or_else(err)?;
    let solid = match kind.trim() {
        "solid" => true,
        "void" => false,
        _ => return Err(err()),
    };
    let v: Vec<usize> = coords.split(',').map(|c| c.trim().parse()).collect::<Result<_, _>>().map_err(|_| err())?;
    let z = match v.len() {
        4 => (0, 1),
        6 => (v[4], v[5]),
        _ => return Err(err()),
    };
    Ok(PassiveBox { solid, x: (v[0], v[1]), y: (v[2], v[3]), z })
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let preset = cli.preset.ok_or_else(|| usage("preset", "missing; choose mbb, frame or cantilever"))?;
    let nelx = cli.nelx.ok_or_else(|| usage("nelx", "missing"))?;
    let nely = cli.nely.ok_or_else(|| usage("nely", "missing"))?;
    if nelx == 0 || nely == 0 {
        return Err(usage("nelx", "element counts must be positive"));
    }

    let mut run = RunConfig::default();
    if let Some(v) = cli.volfrac {
        if !(v > 0.0 && v < 1.0) {
            return Err(usage("volfrac", "must lie in (0, 1)"));
        }
        run.volfrac = v;
    }
    if let Some(ft) = cli.ft {
        run.ft = FilterType::from_code(ft).map_err(|_| usage("ft", "must be 1, 2 or 3"))?;
    }
    if let Some(r) = cli.rmin {
        if !(r >= 1.0) {
            return Err(usage("rmin", "must be at least 1"));
        }
        run.rmin = r;
    }
    let simp = SimpParams {
        e0: cli.e0.unwrap_or(run.simp.e0),
        e_min: cli.emin.unwrap_or(run.simp.e_min),
        penal: cli.penal.unwrap_or(run.simp.penal),
    };
    run.simp = simp;
    run.nu = cli.nu.unwrap_or(run.nu);
    run.filter_bc = match cli.ftbc {
        Some(FilterBc::Dirichlet) => BoundaryMode::Dirichlet,
        _ => BoundaryMode::Neumann,
    };
    run.eta = cli.eta.unwrap_or(run.eta);
    run.beta = cli.beta.unwrap_or(run.beta);
    run.move_limit = cli.move_limit.unwrap_or(run.move_limit);
    run.maxit = cli.maxit.unwrap_or(run.maxit);
    run.tol = cli.tol.unwrap_or(run.tol);
    run.penal_continuation = schedule("penal-cont", &cli.penal_cont)?;
    run.beta_continuation = schedule("beta-cont", &cli.beta_cont)?;
    if cli.accel {
        let d = AndersonParams::default();
        run.acceleration = Some(AndersonParams {
            depth: cli.accel_mr.unwrap_or(d.depth),
            period: cli.accel_q.unwrap_or(d.period),
            start: cli.accel_q0.unwrap_or(d.start),
            mix_accel: cli.accel_zeta.unwrap_or(d.mix_accel),
            mix_plain: cli.accel_alpha.unwrap_or(d.mix_plain),
        });
    }
    run.update = match cli.update {
        Some(Update::PrimalDual) => UpdateStrategy::PrimalDual,
        _ => UpdateStrategy::Bisection,
    };
    if let Some(b) = &cli.bracket {
        run.bracket = if b.trim() == "estimate" {
            Bracket::Estimate
        } else {
            match b.trim().parse::<f64>() {
                Ok(u) if u > 0.0 => Bracket::Fixed(u),
                _ => return Err(usage("bracket", "expected `estimate` or a positive number")),
            }
        };
    }
    let tol = cli.bisect_tol.unwrap_or(1e-4);
    if !(tol > 0.0) {
        return Err(usage("bisect-tol", "must be positive"));
    }
    run.bisection_stop = match cli.bisect_stop {
        Some(StopRule::Absolute) => BisectionStop::Absolute(tol),
        _ => BisectionStop::Relative(tol),
    };
    run.validate().map_err(|e| match e {
        topo_core::Error::InvalidParameter { name, reason } => usage(name, reason),
        other => CliError::Core(other),
    })?;

    let mut problem = match preset {
        Preset::Mbb => presets::mbb(nelx, nely)?,
        Preset::Frame => {
            if nelx != nely {
                return Err(usage("nely", "the frame preset needs nelx = nely"));
            }
            let side = match cli.side {
                Some(Side::Right) => SideLoad::Right,
                _ => SideLoad::Left,
            };
            presets::frame(nelx, side).map_err(|_| usage("nelx", "the frame preset needs a multiple of 50"))?
        }
        Preset::Cantilever => {
            let nelz = cli.nelz.ok_or_else(|| usage("nelz", "missing; the cantilever preset is 3D"))?;
            if nelz == 0 {
                return Err(usage("nelz", "must be positive"));
            }
            presets::cantilever(nelx, nely, nelz)?
        }
    };
    if !cli.passive.is_empty() {
        let grid = problem.grid;
        let mut solid = problem.partition.passive_solid().to_vec();
        let mut void = problem.partition.passive_void().to_vec();
        for text in &cli.passive {
            let b = passive_box(text)?;
            let elems = grid.elements_in_box(b.x, b.y, b.z);
            if b.solid { solid.extend(elems) } else { void.extend(elems) }
        }
        let partition = partition_domain(&grid, &solid, &void)?;
        problem = Problem::new(grid, problem.load, partition)?;
    }
    Ok(Settings {
        preset,
        problem,
        run,
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        deterministic: cli.deterministic,
        quiet: cli.quiet,
    })
}
