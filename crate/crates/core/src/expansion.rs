//! Composite approximation `(u_s, v_s, P_s)` built from the layers and its
//! residual in the scaled steady Navier–Stokes equations
//!
//! ```text
//! U U_x + V U_y + P_x     = ε U_xx + U_yy + g_u
//! U V_x + V V_y + P_y / ε = ε V_xx + V_yy + g_v / √ε
//! U_x + V_y               = 0
//! ```
//!
//! The leading layer enters through its closed-form derivatives. The outer
//! corrector and the first boundary-layer corrector enter through stream
//! functions differentiated with tensor-product stencils, so each pair is
//! divergence-free up to rounding.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::blasius::{solve_blasius, LeadingFlow};
use crate::error::{check_len, Error, Result};
use crate::euler::{make_shear, solve_v1e, Decay, EulerBoundary, EulerCorrector, ShearFamily, ShearFlow, WallTraces};
use crate::fit::linear_slope;
use crate::grid::{Grid1D, Grid2D, GridKind};
use crate::interp::Resampler;
use crate::prandtl::{chi_jet, forcing_field, march_prandtl_layer, MarchProblem, PrandtlLayer};
use crate::quad::CellRule;
use crate::stencil::DiffOp;

/// External forcing `g^{u,1}_{ext,p}(y)`; every other component is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", deny_unknown_fields)]
pub enum ForcingProfile {
    Zero,
    /// `c e^{−y}`.
    Exponential { amplitude: f64 },
}

impl ForcingProfile {
    /// `g^{u,1}_{ext,p}` sampled on `y`.
    pub fn first_order(&self, y: &[f64]) -> Vec<f64> {
        match *self {
            ForcingProfile::Zero => vec![0.0; y.len()],
            ForcingProfile::Exponential { amplitude } => y.iter().map(|&t| amplitude * libm::exp(-t)).collect(),
        }
    }

    /// The tangential forcing `√ε g^{u,1}_{ext,p}` seen by the scaled system.
    pub fn at_eps(&self, eps: f64, y: &[f64]) -> Vec<f64> {
        let s = libm::sqrt(eps);
        self.first_order(y).into_iter().map(|g| s * g).collect()
    }
}

/// Boundary-layer grid: geometric from `h_wall` up to `h_mid`, uniform to
/// `y_mid`, geometric again up to `h_far`, uniform to `y_max`. The nodes are
/// rescaled so the last one is `y_max`.
pub fn layer_grid(y_max: f64, h_wall: f64, h_mid: f64, y_mid: f64, h_far: f64) -> Result<Grid1D> {
    if !(h_wall > 0.0 && h_wall <= h_mid && h_mid <= h_far && y_mid < y_max) {
        return Err(Error::InvalidGrid(format!(
            "layer grid needs 0 < h_wall <= h_mid <= h_far and y_mid < y_max \
             (h_wall={h_wall}, h_mid={h_mid}, h_far={h_far}, y_mid={y_mid}, y_max={y_max})"
        )));
    }
    let mut nodes = vec![0.0];
    let mut y = 0.0;
    let mut h = h_wall;
    while y < y_max {
        y += h;
        nodes.push(y);
        h = if y < y_mid { (h * 1.02).min(h_mid) } else { (h * 1.03).min(h_far) };
    }
    let scale = y_max / y;
    for v in nodes.iter_mut() {
        *v *= scale;
    }
    let last = nodes.len() - 1;
    nodes[last] = y_max;
    Grid1D::from_nodes(nodes, GridKind::Graded)
}

/// Parameters of the first-order construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstOrderSetup {
    pub x0: f64,
    pub length: f64,
    pub nx: usize,
    pub shear_family: ShearFamily,
    pub shear_amplitude: f64,
    pub shear_scale: f64,
    pub outer_y_max: f64,
    pub outer_ny: usize,
    pub decay: Decay,
    pub layer_y_max: f64,
    pub h_wall: f64,
    pub h_mid: f64,
    pub y_mid: f64,
    pub h_far: f64,
    pub forcing: ForcingProfile,
    pub blasius_tol: f64,
    pub blasius_eta_max: f64,
}

impl Default for FirstOrderSetup {
    fn default() -> Self {
        FirstOrderSetup {
            x0: 1.0,
            length: 0.5,
            nx: 129,
            shear_family: ShearFamily::TanhPlateau,
            shear_amplitude: 0.05,
            shear_scale: 2.0,
            outer_y_max: 20.0,
            outer_ny: 401,
            decay: Decay::Exponential { m1: 1.0 },
            layer_y_max: 100.0,
            h_wall: 0.005,
            h_mid: 0.04,
            y_mid: 15.0,
            h_far: 0.25,
            forcing: ForcingProfile::Exponential { amplitude: 1.0 },
            blasius_tol: 1e-10,
            blasius_eta_max: 12.0,
        }
    }
}

impl FirstOrderSetup {
    /// Multiplies node counts by `factor` (spacings divided by it).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        let nodes = |n: usize| (libm::round((n - 1) as f64 * factor) as usize).max(16) + 1;
        s.nx = nodes(self.nx);
        s.outer_ny = nodes(self.outer_ny);
        s.h_wall /= factor;
        s.h_mid /= factor;
        s.h_far /= factor;
        s
    }
}

/// Every layer up to first order.
#[derive(Debug, Clone)]
pub struct FirstOrderLayers {
    pub flow: LeadingFlow,
    pub shear: ShearFlow,
    pub euler: EulerCorrector,
    pub traces: WallTraces,
    pub layer1: PrandtlLayer,
    pub forcing1: Vec<f64>,
    pub g_ext1: Vec<f64>,
    pub setup: FirstOrderSetup,
}

impl FirstOrderLayers {
    pub fn layer_grid(&self) -> &Grid2D {
        &self.layer1.grid
    }
}

/// Builds the leading layer, the outer corrector driven by the entrainment
/// velocity, and the first boundary-layer corrector.
pub fn build_first_order(setup: &FirstOrderSetup) -> Result<FirstOrderLayers> {
    let outer_grid = Grid1D::uniform(setup.outer_y_max, setup.outer_ny)?;
    let shear = make_shear(setup.shear_family, setup.shear_amplitude, setup.shear_scale, &outer_grid)?;
    let sol = solve_blasius(setup.blasius_tol, setup.blasius_eta_max)?;
    let flow = LeadingFlow::new(sol, setup.x0, shear.u0e[0])?;
    let euler_grid = Grid2D::new(setup.length, setup.nx, outer_grid)?;
    let bottom: Vec<f64> = euler_grid.x_nodes.iter().map(|&x| flow.v_inf(x)).collect();
    let bc = EulerBoundary::separable(bottom, setup.decay, &euler_grid);
    let mut euler = solve_v1e(&shear, &bc, &euler_grid)?;
    euler.decay = Some(setup.decay);
    let traces = euler.wall_traces()?;
    let y_grid = layer_grid(setup.layer_y_max, setup.h_wall, setup.h_mid, setup.y_mid, setup.h_far)?;
    let grid = Grid2D::new(setup.length, setup.nx, y_grid)?;
    let g_ext1 = setup.forcing.first_order(grid.y_grid.nodes());
    let forcing1 = forcing_field(&flow, &traces, &g_ext1, shear.u0e_y[0], &grid)?;
    let bottom_u: Vec<f64> = traces.u.iter().map(|u| -u).collect();
    let init = inflow_profile(&flow, &forcing1[..grid.ny()], bottom_u[0], grid.y_grid.nodes())?;
    let layer1 = march_prandtl_layer(&MarchProblem {
        index: 1,
        flow: &flow,
        grid: &grid,
        forcing: &forcing1,
        bottom: &bottom_u,
        init: &init,
    })?;
    Ok(FirstOrderLayers { flow, shear, euler, traces, layer1, forcing1, g_ext1, setup: setup.clone() })
}

/// Inflow data for the first corrector,
/// `wall (1 − f′(c y)) + (a y²/2 + b y³/6) e^{−y}`. The coefficients give
/// `u_yy(0) = −f¹(0,0)` and `u_yyy(0) = −f¹_y(0,0) + u(0) ū_xy(0,0)`, the two
/// conditions the layer equation and its first y-derivative impose at the
/// corner, where `ū`, `v̄` and `w` vanish.
pub fn inflow_profile(flow: &LeadingFlow, forcing_at_inflow: &[f64], wall: f64, y: &[f64]) -> Result<Vec<f64>> {
    check_len(y.len(), forcing_at_inflow.len())?;
    let c = flow.scale(0.0);
    let f_y = DiffOp::new(y, 1, 4)?.apply_at(forcing_at_inflow, 0);
    let u_xy = -flow.edge_speed * c * flow.sol.eval(0.0).f2 / (2.0 * flow.x0);
    let a = -forcing_at_inflow[0];
    let b = -f_y + wall * u_xy + 3.0 * a;
    Ok(y.iter()
        .map(|&t| {
            let poly = a * t * t / 2.0 + b * t * t * t / 6.0;
            wall * (1.0 - flow.sol.eval(c * t).f1) + poly * libm::exp(-t)
        })
        .collect())
}

/// Velocity and its derivatives on the composite grid, row-major with x
/// outer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fields {
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_y: Vec<f64>,
    pub u_xx: Vec<f64>,
    pub u_yy: Vec<f64>,
    pub v: Vec<f64>,
    pub v_x: Vec<f64>,
    pub v_y: Vec<f64>,
    pub v_xx: Vec<f64>,
    pub v_yy: Vec<f64>,
}

impl Fields {
    fn zeros(n: usize) -> Self {
        let z = vec![0.0; n];
        Fields {
            u: z.clone(),
            u_x: z.clone(),
            u_y: z.clone(),
            u_xx: z.clone(),
            u_yy: z.clone(),
            v: z.clone(),
            v_x: z.clone(),
            v_y: z.clone(),
            v_xx: z.clone(),
            v_yy: z,
        }
    }

    fn accumulate(&mut self, o: &Fields) {
        let pairs: [(&mut Vec<f64>, &Vec<f64>); 10] = [
            (&mut self.u, &o.u),
            (&mut self.u_x, &o.u_x),
            (&mut self.u_y, &o.u_y),
            (&mut self.u_xx, &o.u_xx),
            (&mut self.u_yy, &o.u_yy),
            (&mut self.v, &o.v),
            (&mut self.v_x, &o.v_x),
            (&mut self.v_y, &o.v_y),
            (&mut self.v_xx, &o.v_xx),
            (&mut self.v_yy, &o.v_yy),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// One weighted term of the composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub fields: Fields,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionState {
    pub eps: f64,
    pub n: usize,
    pub n0: f64,
    pub grid: Grid2D,
    /// Terms in summation order: `u⁰_e`, `u⁰_p`, then the outer and
    /// boundary-layer correctors present.
    pub terms: Vec<Term>,
    pub composite: Fields,
    pub p: Vec<f64>,
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
}

impl ExpansionState {
    pub fn us(&self) -> &[f64] {
        &self.composite.u
    }

    pub fn vs(&self) -> &[f64] {
        &self.composite.v
    }

    /// Sum of the stored terms, in order.
    pub fn resum(&self) -> Fields {
        let mut total = Fields::zeros(self.grid.nx() * self.grid.ny());
        for t in &self.terms {
            total.accumulate(&t.fields);
        }
        total
    }
}

/// Tensor-product derivative operators on the composite grid.
struct Ops {
    nx: usize,
    ny: usize,
    dx: [DiffOp; 3],
    dy: [DiffOp; 3],
}

impl Ops {
    fn new(grid: &Grid2D) -> Result<Self> {
        let x = &grid.x_nodes;
        let y = grid.y_grid.nodes();
        Ok(Ops {
            nx: grid.nx(),
            ny: grid.ny(),
            dx: [DiffOp::new(x, 1, 4)?, DiffOp::new(x, 2, 4)?, DiffOp::new(x, 3, 4)?],
            dy: [DiffOp::new(y, 1, 4)?, DiffOp::new(y, 2, 4)?, DiffOp::new(y, 3, 4)?],
        })
    }

    fn x(&self, k: usize, a: &[f64]) -> Vec<f64> {
        self.dx[k - 1].apply_rows(a, self.ny)
    }

    fn y(&self, k: usize, a: &[f64]) -> Vec<f64> {
        self.dy[k - 1].apply_columns(a, self.nx)
    }

    /// `u = ∂_y ψ`, `v = −∂_x ψ` and their derivatives.
    fn stream_fields(&self, psi: &[f64], weight: f64) -> Fields {
        let psi_x = self.x(1, psi);
        let neg = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|a| -weight * a).collect() };
        let pos = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|a| weight * a).collect() };
        let u = self.y(1, psi);
        Fields {
            u_x: pos(self.x(1, &u)),
            u_xx: pos(self.x(2, &u)),
            u_y: pos(self.y(2, psi)),
            u_yy: pos(self.y(3, psi)),
            u: pos(u),
            v_x: neg(self.x(2, psi)),
            v_xx: neg(self.x(3, psi)),
            v_y: neg(self.y(1, &psi_x)),
            v_yy: neg(self.y(2, &psi_x)),
            v: neg(psi_x),
        }
    }
}

/// Outer-grid data resampled at `Y = √ε y` for every x-node.
fn outer_to_layer(values: &[f64], outer: &Grid2D, r: &Resampler, nx: usize, ny: usize) -> Vec<f64> {
    let ny_o = outer.ny();
    let mut out = vec![0.0; nx * ny];
    for i in 0..nx {
        let row = &values[i * ny_o..(i + 1) * ny_o];
        for j in 0..ny {
            out[i * ny + j] = r.eval(row, j);
        }
    }
    out
}

/// The composite truncated at order `n ∈ {0, 1}` on `grid`. Order 1 needs
/// `grid` to be the first corrector's grid.
pub fn assemble(layers: &FirstOrderLayers, eps: f64, n: usize, n0: f64, grid: &Grid2D) -> Result<ExpansionState> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if n > 1 {
        return Err(Error::InvalidParameter(format!(
            "truncation order {n} needs correctors beyond first order, which are not constructed here"
        )));
    }
    let s = libm::sqrt(eps);
    let (nx, ny) = (grid.nx(), grid.ny());
    let y = grid.y_grid.nodes();
    let outer = &layers.euler.grid;
    if outer.nx() != nx || (outer.x_nodes[nx - 1] - grid.x_nodes[nx - 1]).abs() > 1e-12 {
        return Err(Error::InvalidParameter("outer and composite grids use different x-nodes".into()));
    }
    let y_outer_max = outer.y_grid.y_max();
    if s * grid.y_grid.y_max() > y_outer_max {
        return Err(Error::InvalidParameter(format!(
            "outer grid covers Y <= {y_outer_max} but the composite needs Y up to {}; raise outer_y_max",
            s * grid.y_grid.y_max()
        )));
    }
    if n == 1 && grid.y_grid.nodes() != layers.layer1.grid.y_grid.nodes() {
        return Err(Error::InvalidParameter("order 1 needs the first corrector's grid".into()));
    }
    if n == 1 && grid.y_grid.y_max() < 2.0 / s {
        return Err(Error::InvalidParameter(format!(
            "layer grid ends at {} inside the cutoff support 2/sqrt(eps) = {}",
            grid.y_grid.y_max(),
            2.0 / s
        )));
    }
    let size = nx * ny;
    let flow = &layers.flow;
    let ops = Ops::new(grid)?;

    let mut shear_term = Fields::zeros(size);
    let mut leading = Fields::zeros(size);
    for (i, &x) in grid.x_nodes.iter().enumerate() {
        let c = flow.scale(x);
        let xx = x + flow.x0;
        let v_inf = flow.v_inf(x);
        let v_inf_x = -0.5 * v_inf / xx;
        let v_inf_xx = 0.75 * v_inf / (xx * xx);
        let _ = c;
        for (j, &yy) in y.iter().enumerate() {
            let k = i * ny + j;
            let (ue, ue_y, ue_yy) = layers.shear.at(s * yy);
            shear_term.u[k] = ue;
            shear_term.u_y[k] = s * ue_y;
            shear_term.u_yy[k] = eps * ue_yy;
            let p = flow.at(x, yy);
            leading.u[k] = p.u - flow.edge_speed;
            leading.u_x[k] = p.u_x;
            leading.u_y[k] = p.u_y;
            leading.u_xx[k] = p.u_xx;
            leading.u_yy[k] = p.u_yy;
            leading.v[k] = p.v - v_inf;
            leading.v_x[k] = p.v_x - v_inf_x;
            leading.v_y[k] = p.v_y;
            leading.v_xx[k] = p.v_xx - v_inf_xx;
            leading.v_yy[k] = p.v_yy;
        }
    }
    let mut terms = vec![
        Term { name: "u0e".into(), fields: shear_term },
        Term { name: "u0p".into(), fields: leading },
    ];

    let targets: Vec<f64> = y.iter().map(|t| s * t).collect();
    let r = Resampler::new(outer.y_grid.nodes(), &targets);
    let rule = CellRule::new(outer.y_grid.nodes())?;
    let ny_o = outer.ny();
    let mut psi_outer = vec![0.0; nx * ny_o];
    for i in 0..nx {
        let cum = rule.cumulative(&layers.euler.u1e[i * ny_o..(i + 1) * ny_o]);
        psi_outer[i * ny_o..(i + 1) * ny_o].copy_from_slice(&cum);
    }
    // ψ_e(x, √ε y) differentiated in y gives √ε u¹_e; the wall trace of v¹_e
    // is added back as a y-independent part.
    let psi_e = outer_to_layer(&psi_outer, outer, &r, nx, ny);
    let mut euler_term = ops.stream_fields(&psi_e, 1.0);
    for i in 0..nx {
        let v0 = layers.euler.v1e[i * ny_o];
        for j in 0..ny {
            euler_term.v[i * ny + j] += v0;
        }
    }
    let wall_v = &layers.traces.v;
    let dx_wall = DiffOp::new(&grid.x_nodes, 1, 4)?.apply(wall_v);
    let dxx_wall = DiffOp::new(&grid.x_nodes, 2, 4)?.apply(wall_v);
    for i in 0..nx {
        for j in 0..ny {
            euler_term.v_x[i * ny + j] += dx_wall[i];
            euler_term.v_xx[i * ny + j] += dxx_wall[i];
        }
    }
    if n == 0 {
        let only_v = Fields {
            v: euler_term.v,
            v_x: euler_term.v_x,
            v_y: euler_term.v_y,
            v_xx: euler_term.v_xx,
            v_yy: euler_term.v_yy,
            ..Fields::zeros(size)
        };
        terms.push(Term { name: "v1e".into(), fields: only_v });
    } else {
        terms.push(Term { name: "e1".into(), fields: euler_term });
        let layer = &layers.layer1;
        let mut psi1 = vec![0.0; size];
        let lrule = CellRule::new(y)?;
        for i in 0..nx {
            let cum = lrule.cumulative(&layer.up[i * ny..(i + 1) * ny]);
            for j in 0..ny {
                psi1[i * ny + j] = chi_jet(s * y[j]).0[0] * cum[j];
            }
        }
        terms.push(Term { name: "p1".into(), fields: ops.stream_fields(&psi1, s) });
    }

    let mut composite = Fields::zeros(size);
    for t in &terms {
        composite.accumulate(&t.fields);
    }
    let p1 = outer_to_layer(&layers.euler.p1e, outer, &r, nx, ny);
    let p: Vec<f64> = if n == 0 { vec![0.0; size] } else { p1.iter().map(|v| s * v).collect() };
    let p_x = ops.x(1, &p);
    let p_y = ops.y(1, &p);
    Ok(ExpansionState { eps, n, n0, grid: grid.clone(), terms, composite, p, p_x, p_y })
}

/// Interior-restricted residual norms at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub eps: f64,
    pub n: usize,
    pub n0: f64,
    pub r_u_l2: f64,
    pub r_u_sup: f64,
    pub r_v_l2: f64,
    pub r_v_sup: f64,
    pub r_div_l2: f64,
    pub r_div_sup: f64,
    /// `ε^{−N₀} ‖r_u‖`, the remainder forcing this residual produces.
    pub forcing_measure: f64,
    /// Norm of the tangential forcing that was subtracted.
    pub forcing_norm: f64,
    /// Node ranges `[i_lo, i_hi] × [j_lo, j_hi]` used by the norms.
    pub extent: [usize; 4],
}

/// Residual fields of the three equations.
pub fn residual_fields(state: &ExpansionState, forcing: &ForcingProfile) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let f = &state.composite;
    let (nx, ny) = (state.grid.nx(), state.grid.ny());
    let eps = state.eps;
    let g = forcing.at_eps(eps, state.grid.y_grid.nodes());
    let mut ru = vec![0.0; nx * ny];
    let mut rv = vec![0.0; nx * ny];
    let mut rd = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let k = i * ny + j;
            ru[k] = f.u[k] * f.u_x[k] + f.v[k] * f.u_y[k] + state.p_x[k] - eps * f.u_xx[k] - f.u_yy[k] - g[j];
            rv[k] = f.u[k] * f.v_x[k] + f.v[k] * f.v_y[k] + state.p_y[k] / eps - eps * f.v_xx[k] - f.v_yy[k];
            rd[k] = f.u_x[k] + f.v_y[k];
        }
    }
    (ru, rv, rd)
}

fn interior_norms(r: &[f64], grid: &Grid2D, extent: [usize; 4]) -> (f64, f64) {
    let ny = grid.ny();
    let y = grid.y_grid.nodes();
    let x = &grid.x_nodes;
    let [i0, i1, j0, j1] = extent;
    let mut sum = 0.0;
    let mut sup = 0.0f64;
    for i in i0..=i1 {
        let wx = if i == i0 || i == i1 { 0.5 } else { 1.0 } * grid.dx();
        for j in j0..=j1 {
            let hy = if j == j0 {
                0.5 * (y[j + 1] - y[j])
            } else if j == j1 {
                0.5 * (y[j] - y[j - 1])
            } else {
                0.5 * (y[j + 1] - y[j - 1])
            };
            let v = r[i * ny + j];
            sum += wx * hy * v * v;
            sup = sup.max(v.abs());
        }
    }
    let _ = x;
    (libm::sqrt(sum), sup)
}

pub fn ns_residual(state: &ExpansionState, forcing: &ForcingProfile) -> ResidualReport {
    let (nx, ny) = (state.grid.nx(), state.grid.ny());
    let extent = [1, nx - 2, 1, ny - 2];
    let (ru, rv, rd) = residual_fields(state, forcing);
    let (r_u_l2, r_u_sup) = interior_norms(&ru, &state.grid, extent);
    let (r_v_l2, r_v_sup) = interior_norms(&rv, &state.grid, extent);
    let (r_div_l2, r_div_sup) = interior_norms(&rd, &state.grid, extent);
    let g = forcing.at_eps(state.eps, state.grid.y_grid.nodes());
    let mut gfield = vec![0.0; nx * ny];
    for i in 0..nx {
        gfield[i * ny..(i + 1) * ny].copy_from_slice(&g);
    }
    let (forcing_norm, _) = interior_norms(&gfield, &state.grid, extent);
    ResidualReport {
        eps: state.eps,
        n: state.n,
        n0: state.n0,
        r_u_l2,
        r_u_sup,
        r_v_l2,
        r_v_sup,
        r_div_l2,
        r_div_sup,
        forcing_measure: libm::pow(state.eps, -state.n0) * r_u_l2,
        forcing_norm,
        extent,
    }
}

/// Rates fitted over an `ε` sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    /// Slope of `log r_u` against `log ε`.
    pub slope_r_u: f64,
    /// Slope of `log(ε^{−N₀} r_u)` against `log ε`.
    pub slope_forcing: f64,
    /// `(n − 1 − 2N₀)/2`, the exponent of `ε` in the remainder-forcing bound.
    pub theoretical_exponent: f64,
    pub max_divergence: f64,
}

pub fn theoretical_exponent(n: usize, n0: f64) -> f64 {
    0.5 * (n as f64 - 1.0 - 2.0 * n0)
}

pub fn fit_sweep(reports: &[ResidualReport]) -> Result<SweepFit> {
    if reports.len() < 2 {
        return Err(Error::InvalidParameter("a rate fit needs at least two eps values".into()));
    }
    let le: Vec<f64> = reports.iter().map(|r| libm::log(r.eps)).collect();
    let lr: Vec<f64> = reports.iter().map(|r| libm::log(r.r_u_l2)).collect();
    let lf: Vec<f64> = reports.iter().map(|r| libm::log(r.forcing_measure)).collect();
    Ok(SweepFit {
        slope_r_u: linear_slope(&le, &lr),
        slope_forcing: linear_slope(&le, &lf),
        theoretical_exponent: theoretical_exponent(reports[0].n, reports[0].n0),
        max_divergence: reports.iter().map(|r| r.r_div_sup).fold(0.0, f64::max),
    })
}

/// Sup-norm gaps between the order-1 and order-0 truncations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InviscidTable {
    pub note: String,
    pub eps: Vec<f64>,
    pub u_gap: Vec<f64>,
    pub v_gap: Vec<f64>,
    /// Slope of `log u_gap` against `log ε`.
    pub slope_u: f64,
    /// Slope of `log v_gap` against `log ε`.
    pub slope_v: f64,
}

pub fn inviscid_limit_table(pairs: &[(ExpansionState, ExpansionState)]) -> Result<InviscidTable> {
    if pairs.len() < 3 {
        return Err(Error::InvalidParameter("the table needs at least three eps values".into()));
    }
    let mut eps = Vec::new();
    let mut u_gap = Vec::new();
    let mut v_gap = Vec::new();
    for (hi, lo) in pairs {
        check_len(hi.composite.u.len(), lo.composite.u.len())?;
        eps.push(hi.eps);
        let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        u_gap.push(gap(&hi.composite.u, &lo.composite.u));
        v_gap.push(gap(&hi.composite.v, &lo.composite.v));
    }
    let le: Vec<f64> = eps.iter().map(|e| libm::log(*e)).collect();
    let slope = |g: &[f64]| {
        if g.iter().all(|v| *v > 0.0) {
            linear_slope(&le, &g.iter().map(|v| libm::log(*v)).collect::<Vec<_>>())
        } else {
            0.0
        }
    };
    Ok(InviscidTable {
        note: "gaps between truncations of the expansion; the remainder itself is not solved".into(),
        slope_u: slope(&u_gap),
        slope_v: slope(&v_gap),
        eps,
        u_gap,
        v_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_setup() -> FirstOrderSetup {
        FirstOrderSetup {
            nx: 33,
            outer_ny: 101,
            layer_y_max: 60.0,
            h_wall: 0.02,
            h_mid: 0.1,
            y_mid: 10.0,
            h_far: 0.5,
            ..FirstOrderSetup::default()
        }
    }

    #[test]
    fn forcing_weighting() {
        let y = [0.0, 1.0, 2.0];
        assert_eq!(ForcingProfile::Zero.at_eps(1e-3, &y), vec![0.0; 3]);
        let g = ForcingProfile::Exponential { amplitude: 2.0 }.at_eps(0.01, &y);
        assert!((g[1] - 0.1 * 2.0 * libm::exp(-1.0)).abs() < 1e-15);
    }

    #[test]
    fn layer_grid_is_valid() {
        let g = layer_grid(100.0, 0.005, 0.04, 15.0, 0.25).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.y_max(), 100.0);
        assert!(g.max_spacing() <= 0.26);
    }

    #[test]
    fn order_zero_and_one_structure() {
        let layers = build_first_order(&small_setup()).unwrap();
        let grid = layers.layer_grid().clone();
        let eps = 2e-3;
        let s0 = assemble(&layers, eps, 0, 1.05, &grid).unwrap();
        let s1 = assemble(&layers, eps, 1, 1.05, &grid).unwrap();
        let ny = grid.ny();
        for i in 0..grid.nx() {
            assert_eq!(s1.composite.v[i * ny], 0.0);
        }
        for s in [&s0, &s1] {
            let r = s.resum();
            assert_eq!(r.u, s.composite.u);
            assert_eq!(r.v, s.composite.v);
        }
        let again = assemble(&layers, eps, 1, 1.05, &grid).unwrap();
        assert_eq!(again.composite.u, s1.composite.u);
        let rep = ns_residual(&s1, &layers.setup.forcing);
        assert!(rep.r_div_sup < 1e-8, "{}", rep.r_div_sup);
        assert!(assemble(&layers, eps, 2, 1.05, &grid).is_err());
        assert!(assemble(&layers, 1e-4, 1, 1.05, &grid).is_err());
    }
}
