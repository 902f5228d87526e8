//! Small-instance checks against independent oracles. Each returns a short
//! description of the measured quantity or of the first violation.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use topo_core::accel::{AndersonParams, AndersonState};
use topo_core::driver::presets::mbb;
use topo_core::driver::{nondiscreteness, ContinuationSchedule, Problem};
use topo_core::fea::{
    assemble_lower, compliance_and_sensitivity, element_stiffness_h8, element_stiffness_q4, simp_interpolate,
    solve_equilibrium, ElementStiffness, SimpParams,
};
use topo_core::filter::{
    backfilter, project, solve_volume_preserving_eta, BoundaryMode, FilterOperator, ProjectionParams,
};
use topo_core::grid::{build_connectivity, build_symmetric_index_pairs, partition_domain, DomainPartition, StructuredGrid};
use topo_core::oc::{bisect_update, primal_dual_update, BisectionStop, Bracket, OcParams};
use topo_core::solver::DenseCholesky;

pub type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn random_field(rng: &mut StdRng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(lo..hi)).collect()
}

/// Cyclic Jacobi eigenvalues of a dense symmetric matrix.
fn eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _ in 0..200 {
        let off: f64 = (0..n).flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q))).map(|(p, q)| a[p * n + q].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Null space of dimension 3 (2D) or 6 (3D), containing the translations.
pub fn rigid_null_spaces() -> Check {
    let mut notes = Vec::new();
    for (ke, dim, rigid) in [(element_stiffness_q4(0.3).unwrap(), 2, 3), (element_stiffness_h8(0.3).unwrap(), 3, 6)] {
        let d = ke.dofs();
        let scale = (0..d).map(|i| ke.get(i, i)).fold(0.0, f64::max);
        for c in 0..dim {
            for i in 0..d {
                let r: f64 = (0..d).filter(|j| j % dim == c).map(|j| ke.get(i, j)).sum();
                if r.abs() > 1e-13 * scale {
                    return Err(format!("{d}-dof element: translation {c} leaves force {r:e} at dof {i}"));
                }
            }
        }
        let ev = eigenvalues(ke.full().to_vec(), d);
        let top = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let zeros = ev.iter().filter(|v| v.abs() < 1e-10 * top).count();
        let negative = ev.iter().any(|&v| v < -1e-10 * top);
        if zeros != rigid || negative {
            return Err(format!("{d}-dof element: {zeros} zero eigenvalues, expected {rigid}"));
        }
        notes.push(format!("{d}-dof null space {zeros}"));
    }
    Ok(notes.join(", "))
}

/// Lower-triangle assembly read back through the mirror equals a dense
/// element-by-element scatter.
pub fn assembly_mirror() -> Check {
    let mut rng = StdRng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for (grid, ke) in [
        (StructuredGrid::new_2d(3, 3).unwrap(), element_stiffness_q4(0.3).unwrap()),
        (StructuredGrid::new_3d(2, 2, 2).unwrap(), element_stiffness_h8(0.3).unwrap()),
    ] {
        let conn = build_connectivity(&grid).unwrap();
        let pairs = build_symmetric_index_pairs(&conn).unwrap();
        let n = grid.dof_count();
        let sk = random_field(&mut rng, grid.element_count(), 0.1, 1.0);
        let k = assemble_lower(&pairs, n, &ke, &sk);
        let dense = dense_scatter(&ke, &conn, &sk, n);
        let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((k.get(i, j) - dense[i * n + j]).abs() / scale);
            }
        }
    }
    ensure(worst <= 1e-14, format!("max relative entry difference {worst:e}"))
}

fn dense_scatter(ke: &ElementStiffness, conn: &topo_core::grid::Connectivity, sk: &[f64], n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for (e, row) in conn.rows().enumerate() {
        for (i, &gi) in row.iter().enumerate() {
            for (j, &gj) in row.iter().enumerate() {
                a[gi as usize * n + gj as usize] += sk[e] * ke.get(i, j);
            }
        }
    }
    a
}

/// `<Hx, y> = <x, Hᵀy>` for both boundary modes, and `mean(Hx) = mean(x)`
/// under Neumann padding.
pub fn filter_adjoint_and_mean() -> Check {
    let mut rng = StdRng::seed_from_u64(5);
    let (mut adj, mut mean) = (0.0f64, 0.0f64);
    for grid in [StructuredGrid::new_2d(9, 6).unwrap(), StructuredGrid::new_3d(5, 4, 3).unwrap()] {
        let m = grid.element_count();
        for bc in [BoundaryMode::Neumann, BoundaryMode::Dirichlet] {
            for rmin in [1.0, 1.7, 2.6] {
                let op = FilterOperator::new(&grid, rmin, bc).unwrap();
                let x = random_field(&mut rng, m, -1.0, 1.0);
                let y = random_field(&mut rng, m, -1.0, 1.0);
                let hx = op.apply_vec(&x);
                let hty = op.apply_adjoint_vec(&y);
                let l: f64 = hx.iter().zip(&y).map(|(a, b)| a * b).sum();
                let r: f64 = x.iter().zip(&hty).map(|(a, b)| a * b).sum();
                adj = adj.max((l - r).abs() / l.abs().max(r.abs()).max(1.0));
                if bc == BoundaryMode::Neumann {
                    let d = (hx.iter().sum::<f64>() - x.iter().sum::<f64>()) / m as f64;
                    mean = mean.max(d.abs());
                }
            }
        }
    }
    ensure(adj <= 1e-12 && mean <= 1e-12, format!("adjoint gap {adj:e}, Neumann mean drift {mean:e}"))
}

/// `P(0) = 0`, `P(1) = 1`, and `P(x) + P(1 - x) = 1` at `η = 1/2`.
pub fn projection_identities() -> Check {
    let mut worst = 0.0f64;
    for beta in [1e-3, 0.5, 2.0, 8.0, 64.0, 512.0] {
        for eta in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let p = ProjectionParams { eta, beta };
            worst = worst.max(project(0.0, &p).abs()).max((project(1.0, &p) - 1.0).abs());
        }
        let half = ProjectionParams { eta: 0.5, beta };
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            worst = worst.max((project(x, &half) + project(1.0 - x, &half) - 1.0).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max identity defect {worst:e}"))
}

/// The threshold solve preserves volume and agrees with plain bisection on
/// the volume mismatch.
pub fn threshold_volume_and_oracle() -> Check {
    let mut rng = StdRng::seed_from_u64(21);
    let (mut vol, mut gap) = (0.0f64, 0.0f64);
    for beta in [1.0, 2.0, 8.0] {
        let xt = random_field(&mut rng, 100, 0.0, 1.0);
        let part = DomainPartition::all_active(100);
        let s = solve_volume_preserving_eta(&xt, beta, 0.5, &part);
        let g = |eta: f64| {
            let p = ProjectionParams { eta, beta };
            xt.iter().map(|&x| project(x, &p) - x).sum::<f64>() / 100.0
        };
        vol = vol.max(g(s.eta).abs());
        let (mut a, mut b) = (0.0, 1.0);
        while b - a > 1e-8 {
            let c = 0.5 * (a + b);
            if g(c) > 0.0 {
                a = c;
            } else {
                b = c;
            }
        }
        gap = gap.max((s.eta - 0.5 * (a + b)).abs());
    }
    ensure(vol <= 1e-6 && gap <= 1e-6, format!("volume mismatch {vol:e}, threshold gap {gap:e}"))
}

fn compliance(x: &[f64], p: &Problem, op: &FilterOperator, proj: Option<&ProjectionParams>) -> (f64, Vec<f64>) {
    let mut xt = op.apply_vec(x);
    p.partition.pin(&mut xt);
    let mut xh = xt.clone();
    if let Some(pp) = proj {
        xh.iter_mut().for_each(|v| *v = project(*v, pp));
        p.partition.pin(&mut xh);
    }
    let ke = element_stiffness_q4(0.3).unwrap();
    let conn = build_connectivity(&p.grid).unwrap();
    let pairs = build_symmetric_index_pairs(&conn).unwrap();
    let (sk, dsk) = simp_interpolate(&xh, &SimpParams::default());
    let k = assemble_lower(&pairs, p.grid.dof_count(), &ke, &sk);
    let u = solve_equilibrium(&k, &p.load, DenseCholesky::new()).unwrap();
    let (c, dc) = compliance_and_sensitivity(&u, p.load.f(), &dsk, &ke, &conn, &p.partition);
    (c, backfilter(&dc, &xt, op, proj))
}

/// Design gradient through filter, projection, SIMP and the state solve
/// against central differences with step 1e-6.
pub fn end_to_end_sensitivity() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let base = mbb(3, 3).unwrap();
    let part = partition_domain(&base.grid, &[8], &[]).unwrap();
    let problem = Problem::new(base.grid, base.load.clone(), part).unwrap();
    let mut x = random_field(&mut rng, 9, 0.2, 0.8);
    x[8] = 1.0;
    let proj = ProjectionParams { eta: 0.4, beta: 4.0 };
    let mut worst = 0.0f64;
    for bc in [BoundaryMode::Neumann, BoundaryMode::Dirichlet] {
        let op = FilterOperator::new(&problem.grid, 1.5, bc).unwrap();
        for pp in [None, Some(&proj)] {
            let (_, g) = compliance(&x, &problem, &op, pp);
            for &e in problem.partition.active() {
                let h = 1e-6;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[e] += h;
                xm[e] -= h;
                let fd = (compliance(&xp, &problem, &op, pp).0 - compliance(&xm, &problem, &op, pp).0) / (2.0 * h);
                worst = worst.max((fd - g[e]).abs() / fd.abs());
            }
        }
    }
    ensure(worst <= 1e-4, format!("max relative error {worst:e}"))
}

/// The explicit dual iteration and a tight bisection pick the same design.
pub fn primal_dual_vs_bisection() -> Check {
    let mut rng = StdRng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = 10;
        let x = random_field(&mut rng, m, 0.05, 0.95);
        let dc: Vec<f64> = (0..m).map(|_| -rng.random_range(0.01..5.0)).collect();
        let dv = vec![1.0 / m as f64; m];
        let active: Vec<usize> = (0..m).collect();
        let volfrac = x.iter().sum::<f64>() / m as f64;
        let params = OcParams { volfrac, move_limit: 0.2, bracket: Bracket::Estimate, stop: BisectionStop::Relative(1e-13), pd_tol: 1e-12 };
        let linear = |c: &[f64]| c.iter().sum::<f64>() / m as f64;
        let b = bisect_update(&x, &dc, &dv, &active, &params, linear).map_err(|e| e.to_string())?;
        let p = primal_dual_update(&x, &dc, &dv, &active, 0.0, &params).map_err(|e| e.to_string())?;
        for (u, v) in b.x.iter().zip(&p.x) {
            worst = worst.max((u - v).abs());
        }
    }
    ensure(worst <= 1e-6, format!("max |Δx| {worst:e} over 20 instances"))
}

/// Affine contraction on five unknowns: the extrapolated iteration reaches
/// the fixed point in at most seven steps.
pub fn anderson_linear() -> Check {
    let mut rng = StdRng::seed_from_u64(29);
    let a: Vec<f64> = (0..25).map(|k| if k % 6 == 0 { 0.6 } else { 0.0 } + rng.random_range(-0.08..0.08)).collect();
    let b = random_field(&mut rng, 5, -1.0, 1.0);
    let map = |x: &[f64]| -> Vec<f64> { (0..5).map(|i| b[i] + (0..5).map(|j| a[i * 5 + j] * x[j]).sum::<f64>()).collect() };
    let residual = |x: &[f64]| map(x).iter().zip(x).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let params = AndersonParams { depth: 5, period: 1, start: 0, mix_accel: 1.0, mix_plain: 1.0 };
    let mut state = AndersonState::new(params);
    let mut x = vec![0.0; 5];
    let mut steps = 0;
    while residual(&x) > 1e-10 && steps < 50 {
        let c = map(&x);
        x = state.step(steps, &x, &c);
        steps += 1;
    }
    let mut y = vec![0.0; 5];
    let mut plain = 0;
    while residual(&y) > 1e-10 && plain < 1000 {
        y = map(&y);
        plain += 1;
    }
    ensure(steps <= 7, format!("{steps} accelerated steps, {plain} plain fixed-point steps"))
}

/// Continuation fires on loops `>= start` that are multiples of the period,
/// and never beyond the cap.
pub fn continuation_table() -> Check {
    let s = ContinuationSchedule::new(40, 8.0, 10, 1.5).unwrap();
    for lp in 0..200 {
        for par in [1.0, 7.0, 8.0] {
            let fire = lp >= 40 && lp % 10 == 0 && par < 8.0;
            let want = if fire { (par + 1.5f64).min(8.0) } else { par };
            let got = s.apply(par, lp);
            if got != want {
                return Err(format!("loop {lp}, par {par}: got {got}, want {want}"));
            }
        }
    }
    ensure(ContinuationSchedule::DISABLED.apply(3.0, 500) == 3.0, "600 gate evaluations agree".into())
}

/// `m_ND = 100 · 4 Σ x(1-x) / m` on hand-computed fields.
pub fn nondiscreteness_values() -> Check {
    let cases: [(&[f64], f64); 4] =
        [(&[0.0, 1.0, 0.0, 1.0], 0.0), (&[0.5, 0.5], 100.0), (&[0.5, 0.0, 1.0, 0.5], 50.0), (&[0.1, 0.9], 36.0)];
    for (x, want) in cases {
        let got = nondiscreteness(x);
        if (got - want).abs() > 1e-12 {
            return Err(format!("{x:?}: got {got}, want {want}"));
        }
    }
    Ok("4 closed-form cases".into())
}
