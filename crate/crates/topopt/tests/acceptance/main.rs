//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The reference-scale runs take several minutes each on one core. Set
//! `TOPOPT_ACCEPTANCE=quick` to run only the criteria that need no
//! reference-scale optimization. The process exits successfully even when
//! a criterion fails, so the report is always printed in full.

mod properties;

use std::time::Instant;

use topo_core::accel::AndersonParams;
use topo_core::driver::presets::{cantilever, mbb};
use topo_core::driver::{FilterType, Problem, RunConfig, RunResult};
use topo_core::filter::BoundaryMode;
use topo_core::grid::{build_connectivity, build_symmetric_index_pairs, StructuredGrid};
use topo_core::oc::{BisectionStop, Bracket};
use topopt::solver::parallelism_from_env;

struct Report {
    passed: usize,
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, title: &str, ok: bool, detail: &str) {
        let tag = if ok { "PASS" } else { "FAIL" };
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("{tag} {id} {title}: {detail}");
    }
}

fn run(config: &RunConfig, problem: &Problem) -> Result<(RunResult, f64), String> {
    let t = Instant::now();
    let r = topopt::optimize(config, problem, parallelism_from_env(), |_| {}).map_err(|e| e.to_string())?;
    Ok((r, t.elapsed().as_secs_f64()))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b) / b
}

fn mbb_t1() -> RunConfig {
    RunConfig { volfrac: 0.5, rmin: 8.75, ft: FilterType::Density, move_limit: 0.2, ..RunConfig::default() }
}

fn t1(report: &mut Report) {
    let cfg = RunConfig { maxit: 2500, ..mbb_t1() };
    let (r, secs) = match run(&cfg, &mbb(300, 100).unwrap()) {
        Ok(v) => v,
        Err(e) => return report.line("1", "MBB T1", false, &e),
    };
    let last = r.history.last().unwrap();
    let (c, mnd, v) = (last.compliance, last.nondiscreteness, last.volume);
    let primary = rel(c, 252.7).abs() <= 0.02 && (mnd - 0.025).abs() <= 0.01;
    let tail = &r.history[r.history.len().saturating_sub(200)..];
    let monotone = tail.windows(2).all(|w| w[1].residual <= w[0].residual);
    let fallback = (v - 0.5).abs() <= 1e-3 && rel(c, 252.7).abs() <= 0.05 && monotone;
    let detail = format!(
        "c = {c:.2} ({:+.2}% vs 252.7), mND = {mnd:.3} (want 0.025 ± 0.01), V = {v:.5}, residual monotone over last 200: {monotone}, {} loops in {secs:.0} s",
        100.0 * rel(c, 252.7),
        r.history.len()
    );
    report.line("1", "MBB T1", primary || fallback, &detail);
}

fn t1_pae(report: &mut Report) {
    let accel = AndersonParams { depth: 4, period: 4, start: 20, mix_accel: 1.0, mix_plain: 0.9 };
    let cfg = RunConfig { maxit: 1200, tol: 1e-6, acceleration: Some(accel), ..mbb_t1() };
    let (r, secs) = match run(&cfg, &mbb(300, 100).unwrap()) {
        Ok(v) => v,
        Err(e) => return report.line("2", "MBB T1 with Anderson", false, &e),
    };
    let last = r.history.last().unwrap();
    let c = last.compliance;
    let ok = r.converged && r.history.len() <= 1200 && rel(c, 258.9).abs() <= 0.03;
    let detail = format!(
        "converged = {} after {} loops (limit 1200), final residual {:.2e}, c = {c:.2} ({:+.2}% vs 258.9), {secs:.0} s",
        r.converged,
        r.history.len(),
        last.residual,
        100.0 * rel(c, 258.9)
    );
    report.line("2", "MBB T1 with Anderson", ok, &detail);
}

fn cantilever_3d(report: &mut Report) {
    let problem = cantilever(48, 24, 24).unwrap();
    let mut c = [0.0; 2];
    let mut secs = 0.0;
    for (slot, bc) in [BoundaryMode::Neumann, BoundaryMode::Dirichlet].into_iter().enumerate() {
        let cfg = RunConfig {
            volfrac: 0.12,
            rmin: 3f64.sqrt(),
            ft: FilterType::VolumePreserving,
            filter_bc: bc,
            maxit: 100,
            ..RunConfig::default()
        };
        match run(&cfg, &problem) {
            Ok((r, t)) => {
                c[slot] = r.history.last().unwrap().compliance;
                secs += t;
            }
            Err(e) => return report.line("3", "3D cantilever", false, &e),
        }
    }
    let ok = rel(c[0], 3993.7).abs() <= 0.02 && c[1] > c[0];
    let detail = format!(
        "Neumann c = {:.1} ({:+.2}% vs 3993.7), Dirichlet c = {:.1}, {secs:.0} s",
        c[0],
        100.0 * rel(c[0], 3993.7),
        c[1]
    );
    report.line("3", "3D cantilever", ok, &detail);
}

fn bracket_speedup(report: &mut Report) {
    let problem = mbb(300, 100).unwrap();
    let mut counts = [0usize; 2];
    for (slot, bracket) in [Bracket::Estimate, Bracket::Fixed(1e9)].into_iter().enumerate() {
        let cfg = RunConfig { maxit: 100, tol: 0.0, bracket, bisection_stop: BisectionStop::Relative(1e-8), ..mbb_t1() };
        match run(&cfg, &problem) {
            Ok((r, _)) => counts[slot] = r.history.iter().map(|h| h.bisections).sum(),
            Err(e) => return report.line("4", "multiplier bracket", false, &e),
        }
    }
    let ratio = counts[0] as f64 / counts[1] as f64;
    let detail = format!("{} bisections with the estimate, {} with 1e9, ratio {ratio:.3} (limit 0.6)", counts[0], counts[1]);
    report.line("4", "multiplier bracket", ratio <= 0.6, &detail);
}

fn index_counts(report: &mut Report) {
    let count = |g: StructuredGrid| build_symmetric_index_pairs(&build_connectivity(&g).unwrap()).unwrap().entry_count();
    let (a, b) = (count(StructuredGrid::new_2d(120, 120).unwrap()), count(StructuredGrid::new_3d(8, 8, 8).unwrap()));
    let ok = a == 1_036_800 && b == 307_200;
    report.line("5", "index pair counts", ok, &format!("120x120: {a} (want 1036800), 8x8x8: {b} (want 307200)"));
}

fn property_suite(report: &mut Report) {
    let checks: [(&str, fn() -> properties::Check); 10] = [
        ("element rigid-body null spaces", properties::rigid_null_spaces),
        ("assembly mirror vs dense scatter", properties::assembly_mirror),
        ("filter adjoint and Neumann mean", properties::filter_adjoint_and_mean),
        ("projection identities", properties::projection_identities),
        ("threshold volume and bisection oracle", properties::threshold_volume_and_oracle),
        ("end-to-end sensitivity vs central differences", properties::end_to_end_sensitivity),
        ("primal-dual vs bisection", properties::primal_dual_vs_bisection),
        ("Anderson on a linear contraction", properties::anderson_linear),
        ("continuation truth table", properties::continuation_table),
        ("nondiscreteness closed forms", properties::nondiscreteness_values),
    ];
    let mut all = true;
    for (k, (name, check)) in checks.iter().enumerate() {
        let (ok, msg) = match check() {
            Ok(m) => (true, m),
            Err(m) => (false, m),
        };
        all &= ok;
        println!("  {} 6.{} {name}: {msg}", if ok { "ok  " } else { "FAIL" }, k + 1);
    }
    report.line("6", "property suite", all, &format!("{} sub-checks", checks.len()));
}

fn main() {
    let quick = std::env::var("TOPOPT_ACCEPTANCE").is_ok_and(|v| v == "quick");
    let mut report = Report { passed: 0, failed: 0 };
    if quick {
        println!("SKIP 1-4 reference-scale runs (TOPOPT_ACCEPTANCE=quick)");
    } else {
        t1(&mut report);
        t1_pae(&mut report);
        cantilever_3d(&mut report);
        bracket_speedup(&mut report);
    }
    index_counts(&mut report);
    property_suite(&mut report);
    println!("acceptance: {} passed, {} failed", report.passed, report.failed);
}
