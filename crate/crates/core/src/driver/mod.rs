//! The redesign loop and its configuration.
//!
//! Each loop computes the physical field, solves for the displacements,
//! back-propagates the sensitivities, performs the OC update (optionally
//! followed by an Anderson step), advances the continuation schedules and
//! emits an [`IterationRecord`].

pub mod presets;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::accel::{AndersonParams, AndersonState};
use crate::fea::{
    compliance_and_sensitivity_into, element_stiffness_h8, element_stiffness_q4, simp_interpolate_into, ElementStiffness,
    LoadCase, SimpParams, StateSolver,
};
use crate::filter::{backfilter, project, solve_volume_preserving_eta, BoundaryMode, FilterOperator, ProjectionParams};
use crate::grid::{build_connectivity, build_symmetric_index_pairs, Connectivity, DomainPartition, StructuredGrid};
use crate::math::sqrt;
use crate::oc::{bisect_update, primal_dual_update, BisectionStop, Bracket, OcParams};
use crate::solver::SpdSolver;
use crate::sparse::AssemblyPlan;
use crate::{Error, Result};

pub use presets::SideLoad;

/// Stepwise ramp of a scalar parameter: from loop `start` on, every
/// `period`-th loop adds `delta` until `max` is reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSchedule {
    pub start: usize,
    pub max: f64,
    pub period: usize,
    pub delta: f64,
}

impl ContinuationSchedule {
    /// A schedule whose gate never opens.
    pub const DISABLED: Self = Self { start: usize::MAX, max: 0.0, period: 1, delta: 0.0 };

    pub fn new(start: usize, max: f64, period: usize, delta: f64) -> Result<Self> {
        if period == 0 {
            return Err(Error::invalid("continuation", "period must be at least 1"));
        }
        Ok(Self { start, max, period, delta })
    }

    pub fn is_enabled(&self) -> bool {
        self.start != usize::MAX
    }

    /// Value of `par` after loop `lp`. The result never exceeds `max`.
    pub fn apply(&self, par: f64, lp: usize) -> f64 {
        if lp >= self.start && par < self.max && lp % self.period == 0 {
            (par + self.delta).min(self.max)
        } else {
            par
        }
    }
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self::DISABLED
    }
}

/// Percentage measure of gray elements, `400 xᵀ(1 - x) / m`.
pub fn nondiscreteness(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    400.0 * x.iter().map(|v| v * (1.0 - v)).sum::<f64>() / x.len() as f64
}

/// How the physical field is derived from the design variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterType {
    /// `x̂ = H x`.
    #[default]
    Density,
    /// `x̂ = P(H x)` with the threshold held fixed.
    Projection,
    /// `x̂ = P(H x)` with the threshold re-solved so projection keeps the
    /// filtered volume.
    VolumePreserving,
}

impl FilterType {
    /// Numeric code 1, 2 or 3.
    pub fn from_code(ft: u8) -> Result<Self> {
        match ft {
            1 => Ok(Self::Density),
            2 => Ok(Self::Projection),
            3 => Ok(Self::VolumePreserving),
            _ => Err(Error::invalid("ft", "filter type must be 1, 2 or 3")),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Self::Density => 1,
            Self::Projection => 2,
            Self::VolumePreserving => 3,
        }
    }

    fn projects(self) -> bool {
        self != Self::Density
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateStrategy {
    /// Bisection on the multiplier against the constrained volume.
    #[default]
    Bisection,
    /// Explicit primal-dual map. Needs a volume linear in `x`, so only the
    /// density filter qualifies.
    PrimalDual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub volfrac: f64,
    pub simp: SimpParams,
    pub nu: f64,
    pub rmin: f64,
    pub ft: FilterType,
    pub filter_bc: BoundaryMode,
    pub eta: f64,
    pub beta: f64,
    pub move_limit: f64,
    pub maxit: usize,
    /// Stop once `‖x̂_k - x̂_{k-1}‖ / sqrt(m)` falls below this.
    pub tol: f64,
    pub penal_continuation: ContinuationSchedule,
    pub beta_continuation: ContinuationSchedule,
    pub acceleration: Option<AndersonParams>,
    pub update: UpdateStrategy,
    pub bracket: Bracket,
    pub bisection_stop: BisectionStop,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            volfrac: 0.5,
            simp: SimpParams::default(),
            nu: 0.3,
            rmin: 1.5,
            ft: FilterType::Density,
            filter_bc: BoundaryMode::Neumann,
            eta: 0.5,
            beta: 2.0,
            move_limit: 0.2,
            maxit: 100,
            tol: 1e-6,
            penal_continuation: ContinuationSchedule::DISABLED,
            beta_continuation: ContinuationSchedule::DISABLED,
            acceleration: None,
            update: UpdateStrategy::Bisection,
            bracket: Bracket::Estimate,
            bisection_stop: BisectionStop::Relative(1e-4),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.simp.validate()?;
        self.oc_params().validate()?;
        if !(self.rmin >= 1.0) {
            return Err(Error::invalid("rmin", "filter radius must be at least 1"));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(Error::invalid("nu", "Poisson ratio must lie in (-1, 0.5)"));
        }
        if !(self.eta >= 0.0 && self.eta <= 1.0) {
            return Err(Error::invalid("eta", "threshold must lie in [0, 1]"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid("beta", "projection sharpness must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol", "tolerance must be non-negative"));
        }
        if let Some(a) = &self.acceleration {
            a.validate()?;
        }
        if self.update == UpdateStrategy::PrimalDual && self.ft != FilterType::Density {
            return Err(Error::invalid("update", "the primal-dual update requires ft = 1"));
        }
        Ok(())
    }

    fn oc_params(&self) -> OcParams {
        OcParams {
            move_limit: self.move_limit,
            volfrac: self.volfrac,
            bracket: self.bracket,
            stop: self.bisection_stop,
            ..OcParams::default()
        }
    }
}

/// Mesh, loads, supports and passive elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: StructuredGrid,
    pub load: LoadCase,
    pub partition: DomainPartition,
}

impl Problem {
    pub fn new(grid: StructuredGrid, load: LoadCase, partition: DomainPartition) -> Result<Self> {
        if load.f().len() != grid.dof_count() {
            return Err(Error::invalid("load", "load vector length differs from the DOF count"));
        }
        if partition.element_count() != grid.element_count() {
            return Err(Error::invalid("passive", "partition size differs from the element count"));
        }
        if partition.active().is_empty() {
            return Err(Error::invalid("passive", "no active elements remain"));
        }
        Ok(Self { grid, load, partition })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub compliance: f64,
    /// Volume fraction of the physical field.
    pub volume: f64,
    /// `‖r_k‖₂ / sqrt(m)`; infinite on the first loop.
    pub residual: f64,
    /// [`nondiscreteness`] of the design variables.
    pub nondiscreteness: f64,
    pub penal: f64,
    pub beta: f64,
    pub eta: f64,
    pub bisections: usize,
    /// Clock reading at the end of the loop, relative to the start of the run.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignField {
    pub x: Vec<f64>,
    pub xtilde: Vec<f64>,
    pub xhat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub design: DesignField,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

/// Filtering, pinning and projection from design to physical variables.
struct FieldMap<'a> {
    filter: FilterOperator,
    part: &'a DomainPartition,
    ft: FilterType,
    /// `mean(pin(H x)) == mean(x)` holds exactly.
    preserves_volume: bool,
}

impl FieldMap<'_> {
    fn filtered(&self, x: &[f64], out: &mut [f64]) {
        self.filter.apply(x, out);
        self.part.pin(out);
    }

    fn projected(&self, xtilde: &[f64], p: &ProjectionParams, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(xtilde) {
            *o = project(v, p);
        }
        self.part.pin(out);
    }

    /// Volume fraction used by the bisection for a candidate design.
    fn constrained_volume(&self, x: &[f64], p: &ProjectionParams, scratch: &mut [f64], scratch2: &mut [f64]) -> f64 {
        let m = x.len() as f64;
        if self.ft != FilterType::Projection && self.preserves_volume {
            return x.iter().sum::<f64>() / m;
        }
        self.filtered(x, scratch);
        if self.ft == FilterType::Projection {
            self.projected(scratch, p, scratch2);
            scratch2.iter().sum::<f64>() / m
        } else {
            scratch.iter().sum::<f64>() / m
        }
    }
}

struct Mechanics<S> {
    ke: ElementStiffness,
    conn: Connectivity,
    plan: AssemblyPlan,
    state: StateSolver<S>,
}

/// Run the optimization.
///
/// `order` is an optional global DOF elimination order handed to the
/// solver. `sink` sees every record as soon as it is produced and `clock`
/// returns seconds on any fixed origin.
pub fn run_optimization<S, F, C>(
    config: &RunConfig,
    problem: &Problem,
    solver: S,
    order: Option<&[usize]>,
    mut sink: F,
    mut clock: C,
) -> Result<RunResult>
where
    S: SpdSolver,
    F: FnMut(&IterationRecord),
    C: FnMut() -> f64,
{
    config.validate()?;
    let t0 = clock();
    let grid = &problem.grid;
    let part = &problem.partition;
    let load = &problem.load;
    let m = grid.element_count();
    let mf = m as f64;

    let filter = FilterOperator::new(grid, config.rmin, config.filter_bc)?;
    let map = FieldMap {
        preserves_volume: config.filter_bc == BoundaryMode::Neumann
            && part.passive_solid().is_empty()
            && part.passive_void().is_empty(),
        filter,
        part,
        ft: config.ft,
    };

    let solid = part.passive_solid().len() as f64;
    let start = (config.volfrac * mf - solid) / part.active().len() as f64;
    if !(0.0..=1.0).contains(&start) {
        return Err(Error::invalid("volfrac", "volume fraction is unreachable with the given passive elements"));
    }
    let mut x = vec![0.0; m];
    for &e in part.active() {
        x[e] = start;
    }
    part.pin(&mut x);

    let mut penal = config.simp.penal;
    let mut beta = config.beta;
    let mut eta = config.eta;
    let mut xtilde = vec![0.0; m];
    let mut xhat = vec![0.0; m];
    let mut history = Vec::new();
    let mut converged = false;

    if config.maxit > 0 {
        let ke = if grid.is_3d() { element_stiffness_h8(config.nu)? } else { element_stiffness_q4(config.nu)? };
        let conn = build_connectivity(grid)?;
        let pairs = build_symmetric_index_pairs(&conn)?;
        let plan = AssemblyPlan::new(&pairs, grid.dof_count());
        let state = StateSolver::new(&plan.empty_matrix(), load, solver, order)?;
        let mut mech = Mechanics { ke, conn, plan, state };
        let mut k = mech.plan.empty_matrix();
        let mut u = vec![0.0; grid.dof_count()];
        let (mut sk, mut dsk, mut dc) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let mut dv0 = vec![0.0; m];
        for &e in part.active() {
            dv0[e] = 1.0 / mf;
        }
        let (mut s1, mut s2) = (vec![0.0; m], vec![0.0; m]);
        let mut previous: Option<Vec<f64>> = None;
        let mut accel = config.acceleration.map(AndersonState::new);
        let oc = config.oc_params();

        for lp in 1..=config.maxit {
            let wrap = |e: Error| Error::Iteration { iteration: lp, source: Box::new(e) };

            // Physical field.
            map.filtered(&x, &mut xtilde);
            if config.ft == FilterType::VolumePreserving {
                eta = solve_volume_preserving_eta(&xtilde, beta, eta, part).eta;
            }
            let proj = ProjectionParams { eta, beta };
            if config.ft.projects() {
                map.projected(&xtilde, &proj, &mut xhat);
            } else {
                xhat.copy_from_slice(&xtilde);
            }
            let phys = if config.ft.projects() { &xhat } else { &xtilde };
            let residual = match &previous {
                None => f64::INFINITY,
                Some(p) => sqrt(phys.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()) / sqrt(mf),
            };
            previous = Some(phys.clone());

            // Equilibrium.
            let simp = SimpParams { penal, ..config.simp };
            simp_interpolate_into(&xhat, &simp, &mut sk, &mut dsk);
            mech.plan.assemble_into(mech.ke.lower(), &sk, &mut k);
            mech.state.solve(&k, load, &mut u).map_err(wrap)?;

            // Sensitivities.
            let compliance = compliance_and_sensitivity_into(&u, load.f(), &dsk, &mech.ke, &mech.conn, part, &mut dc);
            let p = if config.ft.projects() { Some(&proj) } else { None };
            let dcx = backfilter(&dc, &xtilde, &map.filter, p);
            let dvx = backfilter(&dv0, &xtilde, &map.filter, p);
            let volume = xhat.iter().sum::<f64>() / mf;
            let mnd = nondiscreteness(&x);

            // Redesign.
            let update = match config.update {
                UpdateStrategy::Bisection => bisect_update(&x, &dcx, &dvx, part.active(), &oc, |c| {
                    map.constrained_volume(c, &proj, &mut s1, &mut s2)
                }),
                UpdateStrategy::PrimalDual => {
                    // The filtered volume is affine in the active variables.
                    let v = map.constrained_volume(&x, &proj, &mut s1, &mut s2);
                    let lin: f64 = part.active().iter().map(|&e| dvx[e] * x[e]).sum();
                    primal_dual_update(&x, &dcx, &dvx, part.active(), v - lin, &oc)
                }
            }
            .map_err(wrap)?;
            let bisections = update.iterations;
            match accel.as_mut() {
                Some(state) => {
                    let before: Vec<f64> = part.active().iter().map(|&e| x[e]).collect();
                    let after: Vec<f64> = part.active().iter().map(|&e| update.x[e]).collect();
                    let next = state.step(lp, &before, &after);
                    for (&e, v) in part.active().iter().zip(next) {
                        x[e] = v.clamp(0.0, 1.0);
                    }
                }
                None => x = update.x,
            }

            let record = IterationRecord {
                iteration: lp,
                compliance,
                volume,
                residual,
                nondiscreteness: mnd,
                penal,
                beta,
                eta,
                bisections,
                wall_time: clock() - t0,
            };
            penal = config.penal_continuation.apply(penal, lp);
            beta = config.beta_continuation.apply(beta, lp);
            sink(&record);
            history.push(record);
            if residual < config.tol {
                converged = true;
                break;
            }
        }
    }

    map.filtered(&x, &mut xtilde);
    if config.ft == FilterType::VolumePreserving {
        eta = solve_volume_preserving_eta(&xtilde, beta, eta, part).eta;
    }
    if config.ft.projects() {
        map.projected(&xtilde, &ProjectionParams { eta, beta }, &mut xhat);
    } else {
        xhat.copy_from_slice(&xtilde);
    }
    Ok(RunResult { design: DesignField { x, xtilde, xhat }, history, converged })
}
