//! The acceptance checks. Each returns an [`Outcome`] carrying the measured
//! numbers next to the threshold they were compared with.
//!
//! Runtime budgets are checked; timings are not serialized.

use std::time::{Duration, Instant};

use anyhow::{anyhow, Result};
use layerkit_core::blasius::{solve_blasius, verify_blasius_signs, LeadingFlow};
use layerkit_core::euler::{euler_residual, make_shear, solve_v1e, Decay, EulerBoundary, ShearFamily};
use layerkit_core::expansion::{build_first_order, fit_sweep, inflow_profile, FirstOrderSetup};
use layerkit_core::fit::{halving_orders, linear_slope};
use layerkit_core::grid::{Grid1D, Grid2D};
use layerkit_core::kernel::{
    apply_l_par, build_kernel_basis, calibrate_amplitude, coercivity_probe, compute_k, compute_n_frak, degree,
    interior_residual_norm, omega, upsilon_norm, verify_cg_identity, LayerTrace, ParallelProfiles,
};
use layerkit_core::prandtl::{compute_f1, station, WallPoint};
use layerkit_core::stencil::DiffOp;
use layerkit_core::u0::{compact_bump, decompose, delta_ladder, outer_trace_on, solve_theta, LdeltaOperator, SplitTraces};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{scaled_nodes, ResidualSweepParams};
use crate::oracle::blasius_wall_curvature;
use crate::stages::residual_reports;

pub mod tol {
    //! Thresholds of the acceptance checks.

    pub const BLASIUS_EDGE_SLOPE: f64 = 1e-8;
    pub const BLASIUS_F1_OVERSHOOT: f64 = 1e-8;
    pub const BLASIUS_SIGN_SLACK: f64 = 1e-10;
    pub const BLASIUS_ORACLE: f64 = 1e-6;
    pub const BLASIUS_F_OVER_ETA: (f64, f64) = (0.98, 1.02);
    pub const BLASIUS_RUNTIME_S: f64 = 1.0;
    pub const CORNER_FACTOR: f64 = 3.0;
    pub const KERNEL_ORDER: f64 = 1.8;
    pub const KERNEL_LIMIT_REL: f64 = 0.05;
    pub const DEGREE_RATIO: f64 = 1e-4;
    pub const COERCIVITY_CHANGE: f64 = 0.25;
    pub const COERCIVITY_RUNTIME_S: f64 = 60.0;
    pub const THETA_ORDER: f64 = 1.8;
    pub const THETA_FLAT: f64 = 1e-8;
    pub const CROSS_VALIDATION: f64 = 1e-8;
    pub const PROJECTION: f64 = 1e-10;
    pub const LAPLACE_RATE: (f64, f64) = (2.0, 0.2);
    pub const DIVERGENCE: f64 = 1e-8;
    pub const IDENTITY_ORDER: f64 = 1.8;
    pub const IDENTITY_QUADRATURE_FACTOR: f64 = 5.0;
    pub const NONDEGENERACY: f64 = 1.0;
    /// Largest admissible `|intercept| / (slope · min δ_s)` of the linear fit
    /// of `𝔫 − ∫K g` against `δ_s`.
    pub const NFRAK_INTERCEPT: f64 = 0.1;
    pub const RESIDUAL_SLOPE: f64 = 0.3;
    pub const RESIDUAL_RUNTIME_S: f64 = 300.0;
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub measured: Value,
    pub note: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!("{} criterion {:>2} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, self.note)
    }
}

fn outcome(id: u32, name: &'static str, pass: bool, measured: Value, note: String) -> Outcome {
    Outcome { id, name, pass, measured, note }
}

fn err(e: layerkit_core::Error) -> anyhow::Error {
    anyhow!(e)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn within_budget(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn blasius_flow(x0: f64) -> Result<LeadingFlow> {
    LeadingFlow::new(solve_blasius(1e-10, 12.0).map_err(err)?, x0, 1.0).map_err(err)
}

fn profiles(n: usize, y_max: f64) -> Result<ParallelProfiles> {
    let flow = blasius_flow(1.0)?;
    ParallelProfiles::from_flow(&flow, &Grid1D::uniform(y_max, n).map_err(err)?).map_err(err)
}

pub fn blasius_integrity() -> Result<Outcome> {
    let t = Instant::now();
    let sol = solve_blasius(1e-10, 12.0).map_err(err)?;
    let elapsed = t.elapsed();
    let signs = verify_blasius_signs(&sol);
    let n = sol.f.len() - 1;
    let edge = (sol.f1[n] - 1.0).abs();
    let (oracle, _) = blasius_wall_curvature(12.0);
    let oracle_gap = (sol.shoot_value - oracle).abs();
    let f_over_eta = sol.f[n] / sol.eta_max;
    let checks = [
        ("edge_slope", edge <= tol::BLASIUS_EDGE_SLOPE),
        ("f1_range", signs.f1_min >= 0.0 && signs.f1_max <= 1.0 + tol::BLASIUS_F1_OVERSHOOT),
        ("f2_nonneg", signs.f2_min >= -tol::BLASIUS_SIGN_SLACK),
        ("f3_nonpos", signs.f3_max <= tol::BLASIUS_SIGN_SLACK),
        ("oracle", oracle_gap <= tol::BLASIUS_ORACLE),
        ("f_over_eta", (tol::BLASIUS_F_OVER_ETA.0..=tol::BLASIUS_F_OVER_ETA.1).contains(&f_over_eta)),
        ("runtime", within_budget(elapsed, tol::BLASIUS_RUNTIME_S)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Ok(outcome(
        1,
        "Blasius integrity",
        failed.is_empty(),
        json!({
            "edge_slope_error": edge,
            "f1_min": signs.f1_min,
            "f1_max": signs.f1_max,
            "f2_min": signs.f2_min,
            "f3_max": signs.f3_max,
            "shoot_value": sol.shoot_value,
            "oracle": oracle,
            "f_over_eta_at_12": f_over_eta,
        }),
        format!(
            "f''(0)={:.10} oracle gap {:.2e}, |f'(12)-1|={:.1e}, f(12)/12={:.4}; failed checks: {:?}",
            sol.shoot_value, oracle_gap, edge, f_over_eta, failed
        ),
    ))
}

pub fn positive_entrainment() -> Result<Outcome> {
    let mut limits = Vec::new();
    for x0 in [0.5, 1.0, 2.0] {
        let flow = blasius_flow(x0)?;
        let c = flow.scale(0.0);
        let y_far = flow.sol.eta_max / c;
        let v = flow.at(0.0, y_far).v;
        limits.push((x0, v / c / x0.sqrt()));
    }
    let pass = limits.iter().all(|(_, l)| *l > 0.0);
    Ok(outcome(
        2,
        "positive entrainment",
        pass,
        json!(limits.iter().map(|(x0, l)| json!({"x0": x0, "limit": l})).collect::<Vec<_>>()),
        format!("limits {:?}", limits.iter().map(|p| p.1).collect::<Vec<_>>()),
    ))
}

pub fn corner_flatness(scale: f64) -> Result<Outcome> {
    let flow = blasius_flow(1.0)?;
    let mut curv = Vec::new();
    let mut third = Vec::new();
    let base = 0.2 / scale;
    for k in 0..4 {
        let h = base / f64::from(1u32 << k);
        let nodes: Vec<f64> = (0..8).map(|j| j as f64 * h).collect();
        let u: Vec<f64> = nodes.iter().map(|&y| flow.at(0.0, y).u).collect();
        curv.push(DiffOp::new(&nodes, 2, 2).map_err(err)?.apply_at(&u, 0).abs());
        third.push(DiffOp::new(&nodes, 3, 2).map_err(err)?.apply_at(&u, 0).abs());
    }
    let ratios = |v: &[f64]| v.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>();
    let (rc, rt) = (ratios(&curv), ratios(&third));
    let pass = rc.iter().chain(&rt).all(|r| *r >= tol::CORNER_FACTOR);
    Ok(outcome(
        3,
        "corner flatness",
        pass,
        json!({"u_yy_wall": curv, "u_yyy_wall": third, "u_yy_ratios": rc, "u_yyy_ratios": rt}),
        format!("halving ratios u_yy {rc:.2?}, u_yyy {rt:.2?}"),
    ))
}

pub fn kernel_membership(scale: f64) -> Result<Outcome> {
    let mut e_par = Vec::new();
    let mut e_s = Vec::new();
    for k in 0..4 {
        let n = (scaled_nodes(201, scale, 101) - 1) * (1 << k) + 1;
        let pp = profiles(n, 20.0)?;
        let b = build_kernel_basis(&pp).map_err(err)?;
        let r1 = apply_l_par(&b.u_par, &pp, 2).map_err(err)?;
        let r2 = apply_l_par(&b.u_tilde_s, &pp, 2).map_err(err)?;
        e_par.push(interior_residual_norm(&r1, &pp.grid, 10.0));
        e_s.push(interior_residual_norm(&r2, &pp.grid, 10.0));
    }
    let (o1, o2) = (halving_orders(&e_par), halving_orders(&e_s));
    let pass = o1.iter().chain(&o2).all(|o| *o >= tol::KERNEL_ORDER);
    Ok(outcome(
        4,
        "kernel membership",
        pass,
        json!({"residual_u_par": e_par, "residual_u_tilde_s": e_s, "orders_u_par": o1, "orders_u_tilde_s": o2}),
        format!("orders u_par {o1:.2?}, u~_s {o2:.2?}"),
    ))
}

pub fn kernel_asymptotics(scale: f64) -> Result<Outcome> {
    let pp = profiles(scaled_nodes(1601, scale, 201), 20.0)?;
    let b = build_kernel_basis(&pp).map_err(err)?;
    let wall_gap = (b.first_node_value + 1.0).abs();
    let slope_gap = (b.tail_log_slope - pp.v_par_inf).abs() / pp.v_par_inf;
    let pass_wall = wall_gap <= tol::KERNEL_LIMIT_REL;
    let pass_slope = slope_gap <= tol::KERNEL_LIMIT_REL;
    Ok(outcome(
        5,
        "kernel asymptotics",
        pass_wall && pass_slope,
        json!({
            "first_node_value": b.first_node_value,
            "exact_wall_limit": b.limit_at_zero,
            "tail_log_slope": b.tail_log_slope,
            "v_par_inf": pp.v_par_inf,
        }),
        format!(
            "u~_s(first node)={:.4} (target -1, exact limit {:.4}); tail slope {:.4} vs v_par(inf) {:.4} ({:.2}%)",
            b.first_node_value,
            b.limit_at_zero,
            b.tail_log_slope,
            pp.v_par_inf,
            100.0 * slope_gap
        ),
    ))
}

/// Twenty compactly supported bumps with deterministic placement.
fn bump_suite() -> Vec<(f64, f64)> {
    let phi = 0.618_033_988_749_895_f64;
    (0..20)
        .map(|i| {
            let t = (f64::from(i) * phi).fract();
            let s = (f64::from(i) * phi * phi).fract();
            let lo = 0.5 + 5.0 * t;
            (lo, lo + 1.0 + 3.0 * s)
        })
        .collect()
}

pub fn degree_annihilates_range(scale: f64) -> Result<Outcome> {
    let suite = bump_suite();
    let mut worst = Vec::new();
    for k in 0..3 {
        let n = (scaled_nodes(401, scale, 201) - 1) * (1 << k) + 1;
        let pp = profiles(n, 20.0)?;
        let kv = compute_k(&pp).map_err(err)?.values;
        let mut m = 0.0f64;
        for &(lo, hi) in &suite {
            let u = pp.grid.sample(|y| compact_bump(y, lo, hi));
            let lu = apply_l_par(&u, &pp, 4).map_err(err)?;
            let d = degree(&lu, &kv, &pp.grid).map_err(err)?;
            m = m.max(d.abs() / upsilon_norm(&u, &pp.grid).map_err(err)?);
        }
        worst.push(m);
    }
    let finest = worst[worst.len() - 1];
    let decreasing = worst.windows(2).all(|w| w[1] < w[0]);
    Ok(outcome(
        6,
        "degree annihilates range",
        finest <= tol::DEGREE_RATIO && decreasing,
        json!({"max_ratio_per_grid": worst}),
        format!("max |d(L u)|/|u| per grid {}", sci(&worst)),
    ))
}

pub fn coercivity(scale: f64) -> Result<Outcome> {
    let t = Instant::now();
    let n = scaled_nodes(401, scale, 201);
    let coarse = coercivity_probe(&profiles(n, 20.0)?, 200, 42).map_err(err)?;
    let fine = coercivity_probe(&profiles(2 * n - 1, 20.0)?, 200, 42).map_err(err)?;
    let elapsed = t.elapsed();
    let change = (fine.min_ratio - coarse.min_ratio).abs() / coarse.min_ratio;
    let pass = coarse.min_ratio > 0.0
        && fine.min_ratio > 0.0
        && change < tol::COERCIVITY_CHANGE
        && within_budget(elapsed, tol::COERCIVITY_RUNTIME_S);
    Ok(outcome(
        7,
        "coercivity probe",
        pass,
        json!({"min_ratio_coarse": coarse.min_ratio, "min_ratio_fine": fine.min_ratio, "relative_change": change, "seed": 42, "trials": 200}),
        format!("min ratio {:.4e} -> {:.4e} ({:.1}% change)", coarse.min_ratio, fine.min_ratio, 100.0 * change),
    ))
}

pub fn wronskian_solver(scale: f64) -> Result<Outcome> {
    let delta = 0.7;
    let mut residuals = Vec::new();
    let mut flat = 0.0f64;
    for k in 0..3 {
        let n = (scaled_nodes(401, scale, 201) - 1) * (1 << k) + 1;
        let g = Grid1D::uniform(10.0, n).map_err(err)?;
        let f = g.sample(|y| compact_bump(y, 1.0, 3.0));
        let s = solve_theta(&f, delta, &g).map_err(err)?;
        let nodes = g.nodes();
        let d2 = DiffOp::new(nodes, 2, 2).map_err(err)?.apply(&s.u);
        let d3 = DiffOp::new(nodes, 3, 2).map_err(err)?.apply(&s.u);
        let r: Vec<f64> = (0..n).map(|j| -d3[j] + delta * d2[j] - f[j]).collect();
        residuals.push(interior_residual_norm(&r, &g, 8.0));
        for (j, &y) in nodes.iter().enumerate() {
            if y >= 4.0 {
                flat = flat.max(s.u_y[j].abs());
            }
        }
    }
    let orders = halving_orders(&residuals);
    let g = Grid1D::uniform(10.0, scaled_nodes(1001, scale, 401)).map_err(err)?;
    let f = g.sample(|y| compact_bump(y, 1.0, 3.0));
    let theta = solve_theta(&f, delta, &g).map_err(err)?;
    let op = LdeltaOperator::new(&g, vec![0.0; g.len()], vec![0.0; g.len()], delta, 1e-4, 6).map_err(err)?;
    let u = op.solve(&f).map_err(err)?;
    let gap = u.iter().zip(&theta.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let pass = orders.iter().all(|o| *o >= tol::THETA_ORDER) && flat <= tol::THETA_FLAT && gap <= tol::CROSS_VALIDATION;
    Ok(outcome(
        8,
        "Wronskian solver",
        pass,
        json!({"theta_residuals": residuals, "orders": orders, "max_u_y_beyond_4": flat, "cross_validation_gap": gap}),
        format!("residual orders {orders:.2?}, max|u'| on [4,10] {flat:.1e}, matrix gap {gap:.1e}"),
    ))
}

/// Leading traces with the outer trace at `x = 0`, the setup used by the
/// boundary-trace checks.
fn u0_setup(scale: f64, eps: f64) -> Result<(ParallelProfiles, SplitTraces)> {
    let layers = build_first_order(&FirstOrderSetup::default().scaled(scale.min(1.0))).map_err(err)?;
    let grid = Grid1D::uniform(20.0, scaled_nodes(401, scale, 201)).map_err(err)?;
    let pp = ParallelProfiles::from_flow(&layers.flow, &grid).map_err(err)?;
    let (v_e, lap) = outer_trace_on(&layers.euler, &layers.shear, eps, &grid).map_err(err)?;
    let tr = SplitTraces::leading(&pp, v_e, lap).map_err(err)?;
    Ok((pp, tr))
}

pub fn delta_limit(scale: f64) -> Result<Outcome> {
    let (pp, tr) = u0_setup(scale, 1e-4)?;
    let f = pp.grid.sample(|y| compact_bump(y, 1.0, 3.0));
    let ladder = delta_ladder(&tr, &pp, &f, &[1e-2, 1e-3, 1e-4, 0.0], 1e-4, 6).map_err(err)?;
    Ok(outcome(
        9,
        "delta-limit stability",
        ladder.gaps_decrease(),
        json!({"deltas": ladder.deltas, "gaps": ladder.gaps}),
        format!("weighted gaps {}", sci(&ladder.gaps)),
    ))
}

pub fn decomposition_exactness(scale: f64) -> Result<Outcome> {
    let (pp, tr) = u0_setup(scale, 1e-4)?;
    let f = pp.grid.sample(|y| compact_bump(y, 1.0, 3.0));
    let ladder = delta_ladder(&tr, &pp, &f, &[0.0], 1e-4, 6).map_err(err)?;
    let sol = ladder.last();
    let scale_u0 = sol.u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let w_perp = omega(&sol.u_perp, &pp).map_err(err)?.abs();
    let (_, k_self) = decompose(&pp.u_par, &pp).map_err(err)?;
    let pass = w_perp <= tol::PROJECTION * scale_u0 && (k_self - 1.0).abs() <= tol::PROJECTION;
    Ok(outcome(
        10,
        "decomposition exactness",
        pass,
        json!({"omega_u_perp": w_perp, "u0_sup": scale_u0, "kappa_of_u_par": k_self, "kappa": sol.kappa}),
        format!("|omega[u_perp]| {:.1e} (scale {:.2e}), kappa(u_par)-1 {:.1e}", w_perp, scale_u0, k_self - 1.0),
    ))
}

pub fn euler_elliptic(scale: f64) -> Result<Outcome> {
    let length = 1.0;
    let y_max = 20.0;
    let exact = |x: f64, y: f64| (-y).exp() * (x.sin() + x.cos());
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    let mut divergence = 0.0f64;
    for k in 0..4 {
        let nx = (scaled_nodes(17, scale, 9) - 1) * (1 << k) + 1;
        let ny = (scaled_nodes(81, scale, 41) - 1) * (1 << k) + 1;
        let yg = Grid1D::uniform(y_max, ny).map_err(err)?;
        let shear = make_shear(ShearFamily::TanhPlateau, 0.0, 2.0, &yg).map_err(err)?;
        let grid = Grid2D::new(length, nx, yg).map_err(err)?;
        let ys = grid.y_grid.nodes().to_vec();
        let bc = EulerBoundary {
            bottom: grid.x_nodes.iter().map(|&x| exact(x, 0.0)).collect(),
            left: ys.iter().map(|&y| exact(0.0, y)).collect(),
            right: ys.iter().map(|&y| exact(length, y)).collect(),
            inflow_u: vec![0.0; ny],
        };
        let ec = solve_v1e(&shear, &bc, &grid).map_err(err)?;
        let mut e = 0.0f64;
        for (i, &x) in grid.x_nodes.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                e = e.max((ec.v1e[i * ny + j] - exact(x, y)).abs());
            }
        }
        errors.push(e);
        hs.push(grid.dx());
        divergence = divergence.max(euler_residual(&ec, &shear).map_err(err)?.divergence);
    }
    let lh: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let le: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let rate = linear_slope(&lh, &le);
    let pass = (rate - tol::LAPLACE_RATE.0).abs() <= tol::LAPLACE_RATE.1 && divergence <= tol::DIVERGENCE;
    Ok(outcome(
        11,
        "Euler elliptic solver",
        pass,
        json!({"errors": errors, "rate": rate, "divergence": divergence}),
        format!("harmonic-test rate {rate:.3}, errors {}, divergence residual {divergence:.1e}", sci(&errors)),
    ))
}

pub fn cg_identity(scale: f64) -> Result<Outcome> {
    let setup = FirstOrderSetup::default().scaled(scale.min(1.0));
    let layers = build_first_order(&setup).map_err(err)?;
    let mut scalar = Vec::new();
    let mut last = None;
    for k in 0..4 {
        let n = (scaled_nodes(401, scale, 201) - 1) * (1 << k) + 1;
        let grid = Grid1D::uniform(30.0, n).map_err(err)?;
        let pp = ParallelProfiles::from_flow(&layers.flow, &grid).map_err(err)?;
        let y = grid.nodes();
        let st = station(&layers.flow, 0.0, y);
        let wall = WallPoint::from_traces(&layers.traces, 0);
        let g = setup.forcing.first_order(y);
        let f1 = compute_f1(&st, wall, &g, layers.shear.u0e_y[0], y).map_err(err)?;
        let init = inflow_profile(&layers.flow, &f1.values, -layers.traces.u[0], y).map_err(err)?;
        let id = verify_cg_identity(&pp, &st, &f1, wall, layers.shear.u0e_y[0], LayerTrace::FromInflow(&init))
            .map_err(err)?;
        scalar.push(id.scalar_gap.abs());
        last = Some(id);
    }
    let id = last.expect("four grids");
    let orders = halving_orders(&scalar);
    let pass = orders.iter().all(|o| *o >= tol::IDENTITY_ORDER) && id.gap <= tol::IDENTITY_QUADRATURE_FACTOR * id.quadrature_error;
    Ok(outcome(
        12,
        "integration-by-parts identity",
        pass,
        json!({"scalar_gaps": scalar, "scalar_orders": orders, "lhs": id.lhs, "rhs": id.rhs, "gap": id.gap, "quadrature_error": id.quadrature_error}),
        format!(
            "scalar gap orders {orders:.2?}; full gap {:.2e} vs 5 x quadrature error {:.2e}",
            id.gap,
            tol::IDENTITY_QUADRATURE_FACTOR * id.quadrature_error
        ),
    ))
}

/// `𝔫` and `∫K g` for a tanh shear of strength `delta_s`.
fn n_frak_at(delta_s: f64, scale: f64, target: f64) -> Result<(f64, f64, f64)> {
    let base = FirstOrderSetup::default().scaled(scale.min(1.0));
    let outer = Grid1D::uniform(base.outer_y_max, base.outer_ny).map_err(err)?;
    let probe = make_shear(base.shear_family, 0.1, base.shear_scale, &outer).map_err(err)?;
    let amplitude = 0.1 * delta_s / probe.delta_s;
    let shear = make_shear(base.shear_family, amplitude, base.shear_scale, &outer).map_err(err)?;
    let flow = LeadingFlow::new(solve_blasius(base.blasius_tol, base.blasius_eta_max).map_err(err)?, base.x0, shear.u0e[0])
        .map_err(err)?;
    let egrid = Grid2D::new(base.length, base.nx, outer).map_err(err)?;
    let bottom: Vec<f64> = egrid.x_nodes.iter().map(|&x| flow.v_inf(x)).collect();
    let decay = Decay::Exponential { m1: 1.0 };
    let mut ec = solve_v1e(&shear, &EulerBoundary::separable(bottom, decay, &egrid), &egrid).map_err(err)?;
    ec.decay = Some(decay);
    let traces = ec.wall_traces().map_err(err)?;
    let grid = Grid1D::uniform(30.0, scaled_nodes(1201, scale, 301)).map_err(err)?;
    let pp = ParallelProfiles::from_flow(&flow, &grid).map_err(err)?;
    let k = compute_k(&pp).map_err(err)?.values;
    let c = calibrate_amplitude(&k, &grid, target).map_err(err)?;
    let y = grid.nodes();
    let g: Vec<f64> = y.iter().map(|t| c * (-t).exp()).collect();
    let st = station(&flow, 0.0, y);
    let f1 = compute_f1(&st, WallPoint::from_traces(&traces, 0), &g, shear.u0e_y[0], y).map_err(err)?;
    let nf = compute_n_frak(&k, &grid, &f1, &st, &shear, Some(&ec)).map_err(err)?;
    Ok((shear.delta_s, nf.k_g, nf.n_frak))
}

pub fn nondegeneracy(scale: f64) -> Result<Outcome> {
    let target = 1.2;
    let mut rows = Vec::new();
    for ds in [0.02, 0.05, 0.1] {
        rows.push(n_frak_at(ds, scale, target)?);
    }
    let ds: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let diff: Vec<f64> = rows.iter().map(|r| r.2 - r.1).collect();
    let slope = linear_slope(&ds, &diff);
    let mean_d = ds.iter().sum::<f64>() / 3.0;
    let mean_f = diff.iter().sum::<f64>() / 3.0;
    let intercept = mean_f - slope * mean_d;
    let intercept_ratio = intercept.abs() / (slope.abs() * ds[0]).max(1e-300);
    let k_g_min = rows.iter().map(|r| r.1.abs()).fold(f64::INFINITY, f64::min);
    let pass = k_g_min >= tol::NONDEGENERACY && intercept_ratio <= tol::NFRAK_INTERCEPT;
    Ok(outcome(
        13,
        "non-degeneracy calibration",
        pass,
        json!({
            "delta_s": ds,
            "k_g": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            "n_frak": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
            "fit_slope": slope,
            "fit_intercept": intercept,
        }),
        format!(
            "min |int K g| {k_g_min:.3}; n - int K g = {slope:.4} delta_s + {intercept:.2e} (intercept/(slope*0.02) = {intercept_ratio:.3})"
        ),
    ))
}

pub fn residual_rates(scale: f64) -> Result<Outcome> {
    let t = Instant::now();
    let p = ResidualSweepParams::defaults(scale);
    let mut setup = p.layers.clone();
    setup.forcing = p.g_ext;
    let layers = build_first_order(&setup).map_err(err)?;
    let reports = residual_reports(&layers, &p)?;
    let fit = fit_sweep(&reports).map_err(err)?;
    let elapsed = t.elapsed();
    let slope_ok = (fit.slope_r_u - fit.theoretical_exponent).abs() <= tol::RESIDUAL_SLOPE;
    let div_ok = fit.max_divergence <= tol::DIVERGENCE;
    Ok(outcome(
        14,
        "residual rates",
        slope_ok && div_ok && within_budget(elapsed, tol::RESIDUAL_RUNTIME_S),
        json!({
            "eps": reports.iter().map(|r| r.eps).collect::<Vec<_>>(),
            "r_u_l2": reports.iter().map(|r| r.r_u_l2).collect::<Vec<_>>(),
            "slope_r_u": fit.slope_r_u,
            "slope_forcing_measure": fit.slope_forcing,
            "theoretical_exponent": fit.theoretical_exponent,
            "max_divergence": fit.max_divergence,
        }),
        format!(
            "slope of r_u {:.3} vs exponent {:.3} (|diff| {:.3}); slope of eps^-N0 r_u {:.3}; max divergence {:.1e}",
            fit.slope_r_u,
            fit.theoretical_exponent,
            (fit.slope_r_u - fit.theoretical_exponent).abs(),
            fit.slope_forcing,
            fit.max_divergence
        ),
    ))
}

/// Criterion 15 given two independently produced byte streams.
pub fn determinism(first: &[(String, Vec<u8>)], second: &[(String, Vec<u8>)]) -> Outcome {
    let same = first == second;
    let differing: Vec<&str> = first
        .iter()
        .zip(second)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    outcome(
        15,
        "determinism",
        same && !first.is_empty(),
        json!({"files": first.len(), "differing": differing}),
        format!("{} files compared, {} differ", first.len(), differing.len()),
    )
}

pub type Check = fn(f64) -> Result<Outcome>;

/// Criteria 1 through 14 in dependency order.
pub fn numeric_checks() -> Vec<(u32, Check)> {
    vec![
        (1, |_| blasius_integrity()),
        (2, |_| positive_entrainment()),
        (3, corner_flatness),
        (4, kernel_membership),
        (5, kernel_asymptotics),
        (6, degree_annihilates_range),
        (7, coercivity),
        (8, wronskian_solver),
        (9, delta_limit),
        (10, decomposition_exactness),
        (11, euler_elliptic),
        (12, cg_identity),
        (13, nondegeneracy),
        (14, residual_rates),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_suite_is_compact_and_inside_domain() {
        for (lo, hi) in bump_suite() {
            assert!(lo >= 0.5 && hi <= 9.5 && hi > lo);
        }
    }
}
