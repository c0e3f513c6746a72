//! One pipeline per subcommand. Each returns the files it produced; nothing
//! touches the filesystem until the caller writes the bundle.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use layerkit_core::blasius::{blasius_profiles, solve_blasius, verify_blasius_signs, LeadingFlow, SelfSimilarParams};
use layerkit_core::euler::{euler_residual, make_shear, solve_v1e, EulerBoundary};
use layerkit_core::expansion::{
    assemble, build_first_order, fit_sweep, inviscid_limit_table, ns_residual, FirstOrderLayers, FirstOrderSetup, ResidualReport,
};
use layerkit_core::grid::{Grid1D, Grid2D};
use layerkit_core::interp::Resampler;
use layerkit_core::kernel::{calibrate_amplitude, coercivity_probe, compute_k, compute_n_frak, degree, ParallelProfiles};
use layerkit_core::prandtl::{compute_f1, station, WallPoint};
use layerkit_core::u0::{b_norm, delta_ladder, linf_embedding_check, outer_trace_on, SplitTraces};
use rayon::prelude::*;
use serde_json::json;

use crate::bundle::{Bundle, PlotData, Table};
use crate::config::{BlasiusParams, DegreeParams, EulerParams, PrandtlParams, ResidualSweepParams, SolveU0Params, U0Forcing};

/// A failure inside the numerics; maps to exit code 3.
#[derive(Debug)]
pub struct NumericalFailure {
    pub stage: &'static str,
    pub message: String,
}

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numerical failure in {}: {}", self.stage, self.message)
    }
}

impl std::error::Error for NumericalFailure {}

fn numeric<T>(stage: &'static str, r: layerkit_core::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!(NumericalFailure { stage, message: e.to_string() }))
}

pub fn run_blasius(p: &BlasiusParams) -> Result<Bundle> {
    let sol = numeric("blasius", solve_blasius(p.tol, p.eta_max))?;
    let signs = verify_blasius_signs(&sol);
    let last = sol.f.len() - 1;
    let entrainment: Vec<_> = p
        .x0_list
        .iter()
        .map(|&x0| json!({"x0": x0, "limit": sol.displacement() / x0.sqrt()}))
        .collect();

    let mut bundle = Bundle::default();
    let mut table = Table::new(&["eta", "f", "f1", "f2", "f3"])?;
    let f3 = sol.f3();
    for (j, &eta) in sol.eta_grid.nodes().iter().enumerate() {
        table.row(&[eta, sol.f[j], sol.f1[j], sol.f2[j], f3[j]])?;
    }
    bundle.insert("blasius.csv", table.finish()?);

    let y_grid = numeric("blasius", Grid1D::uniform(p.y_max, p.ny))?;
    let mut profiles = Table::new(&["x", "y", "u", "v"])?;
    let mut plot = PlotData::default();
    for &x in &p.stations {
        let pair = numeric("blasius", blasius_profiles(&sol, SelfSimilarParams { x0: 1.0, x }, &y_grid))?;
        for (j, &y) in y_grid.nodes().iter().enumerate() {
            profiles.row(&[x, y, pair.u[j], pair.v[j]])?;
        }
        plot.push_series(&format!("u(x={x})"), y_grid.nodes(), &pair.u);
    }
    bundle.insert("profiles.csv", profiles.finish()?);
    plot.push_series("f1", sol.eta_grid.nodes(), &sol.f1);
    bundle.insert("plot.csv", plot.to_csv()?);
    bundle.insert_json(
        "summary.json",
        &json!({
            "shoot_value": sol.shoot_value,
            "displacement": sol.displacement(),
            "iterations": sol.iterations,
            "eta_max": sol.eta_max,
            "f1_at_eta_max": sol.f1[last],
            "f_over_eta_at_eta_max": sol.f[last] / sol.eta_max,
            "signs": signs,
            "entrainment": entrainment,
        }),
    )?;
    Ok(bundle)
}

pub fn run_euler(p: &EulerParams) -> Result<Bundle> {
    let stage = "euler";
    let y_grid = numeric(stage, Grid1D::uniform(p.y_max, p.ny))?;
    let shear = numeric(stage, make_shear(p.shear_family, p.amplitude, p.scale, &y_grid))?;
    let flow = numeric(stage, LeadingFlow::new(numeric(stage, solve_blasius(1e-10, 12.0))?, p.x0, shear.u0e[0]))?;
    let grid = numeric(stage, Grid2D::new(p.length, p.nx, y_grid))?;
    let bottom: Vec<f64> = grid.x_nodes.iter().map(|&x| flow.v_inf(x)).collect();
    let bc = EulerBoundary::separable(bottom, p.decay, &grid);
    let mut ec = numeric(stage, solve_v1e(&shear, &bc, &grid))?;
    ec.decay = Some(p.decay);
    let res = numeric(stage, euler_residual(&ec, &shear))?;
    let traces = numeric(stage, ec.wall_traces())?;

    let mut bundle = Bundle::default();
    let ny = grid.ny();
    let mut fields = Table::new(&["x", "Y", "v1e", "u1e", "p1e"])?;
    for (i, &x) in grid.x_nodes.iter().enumerate() {
        for (j, &y) in grid.y_grid.nodes().iter().enumerate() {
            let k = i * ny + j;
            fields.row(&[x, y, ec.v1e[k], ec.u1e[k], ec.p1e[k]])?;
        }
    }
    bundle.insert("euler_fields.csv", fields.finish()?);
    let mut wall = Table::new(&["x", "u1e", "u1e_x", "v1e", "v1e_Y"])?;
    for (i, &x) in grid.x_nodes.iter().enumerate() {
        wall.row(&[x, traces.u[i], traces.u_x[i], traces.v[i], traces.v_y[i]])?;
    }
    bundle.insert("wall_traces.csv", wall.finish()?);
    let mut plot = PlotData::default();
    plot.push_series("v1e(x=0)", grid.y_grid.nodes(), &ec.v1e_x0);
    plot.push_series("v1e(Y=0)", &grid.x_nodes, &traces.v);
    plot.push_series("u1e(Y=0)", &grid.x_nodes, &traces.u);
    bundle.insert("plot.csv", plot.to_csv()?);
    bundle.insert_json(
        "summary.json",
        &json!({
            "delta_s": shear.delta_s,
            "residual": res,
            "bottom_min": traces.v.iter().cloned().fold(f64::INFINITY, f64::min),
            "u1e_wall_max": traces.u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        }),
    )?;
    Ok(bundle)
}

fn layers(stage: &'static str, setup: &FirstOrderSetup) -> Result<FirstOrderLayers> {
    numeric(stage, build_first_order(setup))
}

pub fn run_prandtl(p: &PrandtlParams) -> Result<Bundle> {
    let l = layers("prandtl", &p.layers)?;
    let grid = l.layer_grid();
    let ny = grid.ny();
    let y = grid.y_grid.nodes();
    let mut bundle = Bundle::default();
    let mut table = Table::new(&["x", "y", "u1p", "v1p"])?;
    let mut plot = PlotData::default();
    for &xs in &p.stations {
        let i = ((xs / grid.dx()).round() as usize).min(grid.nx() - 1);
        let x = grid.x_nodes[i];
        let u = &l.layer1.up[i * ny..(i + 1) * ny];
        let v = &l.layer1.vp[i * ny..(i + 1) * ny];
        for j in 0..ny {
            table.row(&[x, y[j], u[j], v[j]])?;
        }
        plot.push_series(&format!("u1p(x={x})"), y, u);
    }
    bundle.insert("layer1.csv", table.finish()?);
    bundle.insert("plot.csv", plot.to_csv()?);
    bundle.insert_json(
        "summary.json",
        &json!({
            "nx": grid.nx(),
            "ny": ny,
            "decay_rate": l.layer1.decay_rate,
            "tail_max": l.layer1.tail_max,
            "divergence_residual": l.layer1.divergence_residual,
            "subdivided_steps": l.layer1.subdivided_steps,
            "u1e_wall_at_inflow": l.traces.u[0],
            "v1e_wall_at_inflow": l.traces.v[0],
        }),
    )?;
    Ok(bundle)
}

pub fn run_degree(p: &DegreeParams, seed: u64) -> Result<Bundle> {
    let stage = "degree";
    let l = layers(stage, &p.layers)?;
    let grid = numeric(stage, Grid1D::uniform(p.y_max, p.ny))?;
    let pp = numeric(stage, ParallelProfiles::from_flow(&l.flow, &grid))?;
    let k = numeric(stage, compute_k(&pp))?;
    let nodes = grid.nodes();
    let k_norm_l1 = layerkit_core::quad::trapz(&k.values.iter().map(|v| v.abs()).collect::<Vec<_>>(), nodes);
    let degree_values = p
        .test_functions
        .iter()
        .map(|tf| numeric(stage, degree(&grid.sample(|y| tf.eval(y)), &k.values, &grid)))
        .collect::<Result<Vec<_>>>()?;
    let c = numeric(stage, calibrate_amplitude(&k.values, &grid, p.nondegeneracy_target))?;
    let g: Vec<f64> = nodes.iter().map(|y| c * (-y).exp()).collect();
    let st = station(&l.flow, 0.0, nodes);
    let wall = WallPoint::from_traces(&l.traces, 0);
    let f1 = numeric(stage, compute_f1(&st, wall, &g, l.shear.u0e_y[0], nodes))?;
    let nf = numeric(stage, compute_n_frak(&k.values, &grid, &f1, &st, &l.shear, Some(&l.euler)))?;
    let coercivity = numeric(stage, coercivity_probe(&pp, p.trials, seed))?;

    let mut bundle = Bundle::default();
    let mut table = Table::new(&["y", "K", "u_par", "v_par"])?;
    for j in 0..grid.len() {
        table.row(&[nodes[j], k.values[j], pp.u_par[j], pp.v_par[j]])?;
    }
    bundle.insert("kernel.csv", table.finish()?);
    let mut plot = PlotData::default();
    plot.push_series("K", nodes, &k.values);
    let idx: Vec<f64> = (0..coercivity.ratios.len()).map(|i| i as f64).collect();
    plot.push_series("coercivity_ratio_sorted", &idx, &coercivity.ratios);
    bundle.insert("plot.csv", plot.to_csv()?);
    bundle.insert_json(
        "summary.json",
        &json!({
            "K_norm_l1": k_norm_l1,
            "degree_values": degree_values,
            "test_functions": p.test_functions,
            "n_frak": nf.n_frak,
            "n_frak_parts": nf,
            "nondegeneracy": nf.k_g.abs(),
            "forcing_amplitude": c,
            "coercivity": {
                "min_ratio": coercivity.min_ratio,
                "trials": coercivity.trials,
                "seed": coercivity.seed,
                "resampled": coercivity.resampled,
                "histogram": coercivity.histogram,
            },
        }),
    )?;
    Ok(bundle)
}

/// Reads a two-column `(y, F)` CSV and resamples it onto `grid`.
fn forcing_from_file(path: &Path, grid: &Grid1D) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut ys = Vec::new();
    let mut fs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 2 {
            bail!(crate::config::ConfigError(format!("{}: expected two columns (y, F)", path.display())));
        }
        ys.push(rec[0].trim().parse::<f64>()?);
        fs.push(rec[1].trim().parse::<f64>()?);
    }
    if ys.len() < 4 || ys.windows(2).any(|w| w[1] <= w[0]) {
        bail!(crate::config::ConfigError(format!("{}: need at least 4 rows with increasing y", path.display())));
    }
    let top = ys[ys.len() - 1];
    let r = Resampler::new(&ys, grid.nodes());
    Ok(grid.nodes().iter().enumerate().map(|(k, &y)| if y > top { 0.0 } else { r.eval(&fs, k) }).collect())
}

pub fn run_solve_u0(p: &SolveU0Params) -> Result<Bundle> {
    let stage = "solve-u0";
    let l = layers(stage, &p.layers)?;
    let grid = numeric(stage, Grid1D::uniform(p.y_max, p.ny))?;
    let pp = numeric(stage, ParallelProfiles::from_flow(&l.flow, &grid))?;
    let f = match &p.forcing {
        U0Forcing::Family(tf) => grid.sample(|y| tf.eval(y)),
        U0Forcing::File(path) => forcing_from_file(path, &grid)?,
    };
    let (v_e, lap) = numeric(stage, outer_trace_on(&l.euler, &l.shear, p.eps, &grid))?;
    let traces = numeric(stage, SplitTraces::leading(&pp, v_e.clone(), lap))?;
    let ladder = numeric(stage, delta_ladder(&traces, &pp, &f, &p.delta_ladder, p.eps, p.accuracy))?;
    let sol = ladder.last();
    let b = numeric(stage, b_norm(sol, &v_e))?;
    let emb = linf_embedding_check(sol, &b, p.sigma);

    let mut bundle = Bundle::default();
    let mut table = Table::new(&["y", "F", "u0", "u_perp"])?;
    for (j, &y) in grid.nodes().iter().enumerate() {
        table.row(&[y, f[j], sol.u0[j], sol.u_perp[j]])?;
    }
    bundle.insert("u0.csv", table.finish()?);
    let mut plot = PlotData::default();
    plot.push_series("u0", grid.nodes(), &sol.u0);
    plot.push_series("u_perp", grid.nodes(), &sol.u_perp);
    bundle.insert("plot.csv", plot.to_csv()?);
    bundle.insert_json(
        "summary.json",
        &json!({
            "kappa": sol.kappa,
            "upsilon": sol.upsilon,
            "b_norm": b.total,
            "b_norm_parts": b,
            "omega_u0": sol.omega_u0,
            "omega_upar": sol.omega_upar,
            "delta_ladder": ladder.deltas,
            "ladder_gaps": ladder.gaps,
            "gaps_decrease": ladder.gaps_decrease(),
            "truncation_flag": sol.truncation_flag,
            "linf_embedding": {"lhs": emb.lhs, "rhs": emb.rhs},
        }),
    )?;
    Ok(bundle)
}

/// Reports at every `ε` (in the given order), computed in parallel.
pub fn residual_reports(l: &FirstOrderLayers, p: &ResidualSweepParams) -> Result<Vec<ResidualReport>> {
    let grid = l.layer_grid();
    p.eps_list
        .par_iter()
        .map(|&eps| {
            let s = numeric("residual-sweep", assemble(l, eps, p.n, p.n0, grid))?;
            Ok(ns_residual(&s, &p.g_ext))
        })
        .collect()
}

pub fn run_residual_sweep(p: &ResidualSweepParams) -> Result<Bundle> {
    let stage = "residual-sweep";
    let mut setup = p.layers.clone();
    setup.forcing = p.g_ext;
    let l = layers(stage, &setup)?;
    let mut reports = residual_reports(&l, p)?;
    reports.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let fit = numeric(stage, fit_sweep(&reports))?;
    let grid = l.layer_grid();
    let inviscid = if p.n == 1 && reports.len() >= 3 {
        let pairs = reports
            .par_iter()
            .map(|r| {
                let hi = numeric(stage, assemble(&l, r.eps, 1, p.n0, grid))?;
                let lo = numeric(stage, assemble(&l, r.eps, 0, p.n0, grid))?;
                Ok((hi, lo))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(numeric(stage, inviscid_limit_table(&pairs))?)
    } else {
        None
    };

    let mut bundle = Bundle::default();
    let mut table = Table::new(&["eps", "r_u_l2", "r_u_sup", "r_v_l2", "r_div", "slope"])?;
    let mut plot = Table::new(&["eps", "metric", "value"])?;
    for r in &reports {
        table.row(&[r.eps, r.r_u_l2, r.r_u_sup, r.r_v_l2, r.r_div_sup, fit.slope_r_u])?;
        for (name, v) in [
            ("r_u_l2", r.r_u_l2),
            ("r_u_sup", r.r_u_sup),
            ("r_v_l2", r.r_v_l2),
            ("r_div_sup", r.r_div_sup),
            ("forcing_measure", r.forcing_measure),
        ] {
            plot.row_mixed(r.eps, name, v)?;
        }
    }
    bundle.insert("residuals.csv", table.finish()?);
    bundle.insert("plot.csv", plot.finish()?);
    bundle.insert_json(
        "summary.json",
        &json!({
            "n": p.n,
            "n0": p.n0,
            "fit": fit,
            "reports": reports,
            "inviscid_limit": inviscid,
        }),
    )?;
    Ok(bundle)
}
