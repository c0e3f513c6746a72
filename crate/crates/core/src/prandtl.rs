//! First-order Prandtl corrector: forcing assembly, the linearized x-march
//! about the self-similar base layer, and the cutoff of the final layer.
//!
//! The marched unknowns are `u` and `w = v − v|_{y=0} = −∫₀^y u_x`, solved
//! together at each station from a single banded system. Time-like
//! stepping in x is second-order backward differencing, started with one
//! implicit Euler step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::blasius::LeadingFlow;
use crate::error::{check_len, Error, Result};
use crate::euler::WallTraces;
use crate::grid::Grid2D;
use crate::linalg::BandMatrix;
use crate::stencil::DiffOp;

/// Value and first three derivatives of a scalar function of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet3(pub [f64; 4]);

const BINOM: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

impl Jet3 {
    pub fn constant(c: f64) -> Self {
        Jet3([c, 0.0, 0.0, 0.0])
    }

    pub fn variable(t: f64) -> Self {
        Jet3([t, 1.0, 0.0, 0.0])
    }

    pub fn mul(self, o: Jet3) -> Jet3 {
        let mut c = [0.0; 4];
        for (n, cn) in c.iter_mut().enumerate() {
            for k in 0..=n {
                *cn += BINOM[n][k] * self.0[k] * o.0[n - k];
            }
        }
        Jet3(c)
    }

    pub fn add(self, o: Jet3) -> Jet3 {
        Jet3(core::array::from_fn(|k| self.0[k] + o.0[k]))
    }

    pub fn scale(self, s: f64) -> Jet3 {
        Jet3(self.0.map(|v| v * s))
    }

    pub fn recip(self) -> Jet3 {
        let a = self.0;
        let mut b = [1.0 / a[0], 0.0, 0.0, 0.0];
        for n in 1..4 {
            let mut s = 0.0;
            for k in 1..=n {
                s += BINOM[n][k] * a[k] * b[n - k];
            }
            b[n] = -s / a[0];
        }
        Jet3(b)
    }

    pub fn exp(self) -> Jet3 {
        let a = self.0;
        let mut e = [libm::exp(a[0]), 0.0, 0.0, 0.0];
        for n in 1..4 {
            let mut s = 0.0;
            for k in 0..n {
                s += BINOM[n - 1][k] * a[k + 1] * e[n - 1 - k];
            }
            e[n] = s;
        }
        Jet3(e)
    }
}

/// `exp(−1/t)` for `t > 0`, zero otherwise.
fn bump(t: Jet3) -> Jet3 {
    if t.0[0] <= 0.0 {
        Jet3::constant(0.0)
    } else {
        t.recip().scale(-1.0).exp()
    }
}

/// Smooth monotone step from 0 (t ≤ 0) to 1 (t ≥ 1).
fn smooth_step(t: f64) -> Jet3 {
    if t <= 0.0 {
        return Jet3::constant(0.0);
    }
    if t >= 1.0 {
        return Jet3::constant(1.0);
    }
    let a = bump(Jet3::variable(t));
    let b = bump(Jet3([1.0 - t, -1.0, 0.0, 0.0]));
    a.mul(a.add(b).recip())
}

/// The cutoff `χ` and its first three derivatives: 1 on `[0, 1]`, 0 on
/// `[2, ∞)`.
pub fn chi_jet(y: f64) -> Jet3 {
    let s = smooth_step(y - 1.0);
    Jet3([1.0 - s.0[0], -s.0[1], -s.0[2], -s.0[3]])
}

pub fn chi(y: f64) -> f64 {
    chi_jet(y).0[0]
}

/// Leading-order Prandtl profiles at one station: `u⁰_p = ū − U`, its x and
/// y derivatives, and the decaying normal velocity `v⁰_p = v̄ − v̄(∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub x: f64,
    pub u0p: Vec<f64>,
    pub u0p_x: Vec<f64>,
    pub u0p_y: Vec<f64>,
    pub v0p: Vec<f64>,
}

pub fn station(flow: &LeadingFlow, x: f64, y: &[f64]) -> Station {
    let v_inf = flow.v_inf(x);
    let mut st = Station {
        x,
        u0p: Vec::with_capacity(y.len()),
        u0p_x: Vec::with_capacity(y.len()),
        u0p_y: Vec::with_capacity(y.len()),
        v0p: Vec::with_capacity(y.len()),
    };
    for &yy in y {
        let p = flow.at(x, yy);
        st.u0p.push(p.u - flow.edge_speed);
        st.u0p_x.push(p.u_x);
        st.u0p_y.push(p.u_y);
        st.v0p.push(p.v - v_inf);
    }
    st
}

/// Outer-flow data entering the first-order forcing at one station.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WallPoint {
    /// `u¹_e(x, 0)`.
    pub u1e: f64,
    /// `∂_x u¹_e(x, 0)`.
    pub u1e_x: f64,
    /// `∂_Y v¹_e(x, 0)`.
    pub v1e_y: f64,
}

impl WallPoint {
    pub fn from_traces(t: &WallTraces, i: usize) -> Self {
        WallPoint { u1e: t.u[i], u1e_x: t.u_x[i], v1e_y: t.v_y[i] }
    }
}

/// The separate groups of terms of `f⁽¹⁾`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Ingredients {
    /// External forcing `g^{u,1}_{ext,p}`.
    pub g_ext1: Vec<f64>,
    /// Terms carrying the Euler corrector:
    /// `−u⁰_p u¹_{ex} − u⁰_{px} u¹_e − v¹_{eY} y u⁰_{py}`.
    pub u1e_terms: Vec<f64>,
    /// Terms carrying the shear slope: `−u⁰_{eY}(0)(y u⁰_{px} + v⁰_p)`.
    pub shear_terms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingF1 {
    pub values: Vec<f64>,
    pub ingredients: F1Ingredients,
}

pub fn compute_f1(st: &Station, wall: WallPoint, g_ext1: &[f64], u0e_y0: f64, y: &[f64]) -> Result<ForcingF1> {
    let n = y.len();
    for len in [st.u0p.len(), st.u0p_x.len(), st.u0p_y.len(), st.v0p.len(), g_ext1.len()] {
        check_len(n, len)?;
    }
    let mut u1e_terms = Vec::with_capacity(n);
    let mut shear_terms = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let e = -st.u0p[j] * wall.u1e_x - st.u0p_x[j] * wall.u1e - wall.v1e_y * y[j] * st.u0p_y[j];
        let s = -u0e_y0 * (y[j] * st.u0p_x[j] + st.v0p[j]);
        u1e_terms.push(e);
        shear_terms.push(s);
        values.push(g_ext1[j] + e + s);
    }
    Ok(ForcingF1 {
        values,
        ingredients: F1Ingredients { g_ext1: g_ext1.to_vec(), u1e_terms, shear_terms },
    })
}

/// `f⁽¹⁾` at every node of `grid`, row-major with x outer.
pub fn forcing_field(
    flow: &LeadingFlow,
    traces: &WallTraces,
    g_ext1: &[f64],
    u0e_y0: f64,
    grid: &Grid2D,
) -> Result<Vec<f64>> {
    check_len(grid.nx(), traces.u.len())?;
    let y = grid.y_grid.nodes();
    let mut out = Vec::with_capacity(grid.nx() * grid.ny());
    for (i, &x) in grid.x_nodes.iter().enumerate() {
        let st = station(flow, x, y);
        let f = compute_f1(&st, WallPoint::from_traces(traces, i), g_ext1, u0e_y0, y)?;
        out.extend_from_slice(&f.values);
    }
    Ok(out)
}

/// A marched corrector layer on its native `(x, y)` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrandtlLayer {
    pub index: usize,
    pub grid: Grid2D,
    pub up: Vec<f64>,
    /// Normal velocity normalized to vanish as `y → ∞`.
    pub vp: Vec<f64>,
    /// `v_p − v_p|_{y=0}`, the marched unknown.
    pub vp_bar: Vec<f64>,
    /// `u_p − u_p|_{y=0}`.
    pub up_bar: Vec<f64>,
    pub decay_rate: f64,
    /// Largest `|u_p|` on the last y-node.
    pub tail_max: f64,
    /// Largest `|∂_x u_p + ∂_y v_p|` on interior nodes, from centred
    /// differences independent of the march.
    pub divergence_residual: f64,
    /// Number of steps that had to be subdivided.
    pub subdivided_steps: usize,
}

/// Data of one march.
pub struct MarchProblem<'a> {
    pub index: usize,
    pub flow: &'a LeadingFlow,
    pub grid: &'a Grid2D,
    /// Forcing at every node, row-major with x outer.
    pub forcing: &'a [f64],
    /// `u_p(x, 0)` at every x-node.
    pub bottom: &'a [f64],
    /// `u_p(0, y)`.
    pub init: &'a [f64],
}

/// Maximum number of step halvings before a march is abandoned.
pub const MAX_HALVINGS: usize = 10;

struct BaseColumn {
    u: Vec<f64>,
    u_x: Vec<f64>,
    u_y: Vec<f64>,
    v: Vec<f64>,
}

fn base_column(flow: &LeadingFlow, x: f64, y: &[f64]) -> BaseColumn {
    let mut b = BaseColumn {
        u: Vec::with_capacity(y.len()),
        u_x: Vec::with_capacity(y.len()),
        u_y: Vec::with_capacity(y.len()),
        v: Vec::with_capacity(y.len()),
    };
    for &yy in y {
        let p = flow.at(x, yy);
        b.u.push(p.u);
        b.u_x.push(p.u_x);
        b.u_y.push(p.u_y);
        b.v.push(p.v);
    }
    b
}

/// Requires `ū > 0` away from the wall and `∂_y ū(0) > 0` at `x`.
pub fn check_oleinik(flow: &LeadingFlow, x: f64, y: &[f64]) -> Result<()> {
    let b = base_column(flow, x, y);
    if !(b.u_y[0] > 0.0) {
        return Err(Error::SignViolation(format!("wall shear {} is not positive at x = {x}", b.u_y[0])));
    }
    if let Some(j) = (1..y.len()).find(|&j| !(b.u[j] > 0.0)) {
        return Err(Error::SignViolation(format!("base velocity not positive at y = {}", y[j])));
    }
    Ok(())
}

/// Backward-difference weights for `∂_x` scaled by the step:
/// `u_x ≈ (a0 uⁿ⁺¹ + a1 uⁿ + a2 uⁿ⁻¹) / Δx`.
#[derive(Clone, Copy)]
struct Bdf {
    a0: f64,
    a1: f64,
    a2: f64,
}

const BDF1: Bdf = Bdf { a0: 1.0, a1: -1.0, a2: 0.0 };
const BDF2: Bdf = Bdf { a0: 1.5, a1: -2.0, a2: 0.5 };

/// One implicit step: returns `(u, w)` at `x`.
#[allow(clippy::too_many_arguments)]
fn step(
    flow: &LeadingFlow,
    y: &[f64],
    x: f64,
    dx: f64,
    bdf: Bdf,
    prev: &[f64],
    prev2: &[f64],
    forcing: &[f64],
    bottom: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let base = base_column(flow, x, y);
    let hist: Vec<f64> = (0..n).map(|j| (bdf.a1 * prev[j] + bdf.a2 * prev2[j]) / dx).collect();
    let c0 = bdf.a0 / dx;
    let size = 2 * n;
    let mut m = BandMatrix::zeros(size, 3, 2);
    let mut rhs = vec![0.0; size];
    m.set(0, 0, 1.0);
    rhs[0] = bottom;
    m.set(1, 1, 1.0);
    for j in 1..n {
        if j < n - 1 {
            let hm = y[j] - y[j - 1];
            let hp = y[j + 1] - y[j];
            let d1 = [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))];
            let d2 = [2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))];
            let r = 2 * j;
            for k in 0..3 {
                let col = 2 * (j + k - 1);
                m.add(r, col, base.v[j] * d1[k] - d2[k]);
            }
            m.add(r, 2 * j, base.u[j] * c0 + base.u_x[j]);
            m.add(r, 2 * j + 1, base.u_y[j]);
            rhs[r] = forcing[j] - base.u[j] * hist[j];
        } else {
            m.set(2 * j, 2 * j, 1.0);
        }
        let r = 2 * j + 1;
        let h2 = 0.5 * (y[j] - y[j - 1]);
        m.add(r, 2 * j + 1, 1.0);
        m.add(r, 2 * j - 1, -1.0);
        m.add(r, 2 * j, h2 * c0);
        m.add(r, 2 * j - 2, h2 * c0);
        rhs[r] = -h2 * (hist[j] + hist[j - 1]);
    }
    let lu = m.factor()?;
    lu.solve_in_place(&mut rhs);
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence { iterations: 1, residual: f64::NAN });
    }
    let mut u: Vec<f64> = (0..n).map(|j| rhs[2 * j]).collect();
    let mut w: Vec<f64> = (0..n).map(|j| rhs[2 * j + 1]).collect();
    u[0] = bottom;
    w[0] = 0.0;
    Ok((u, w))
}

/// Advances from `x - dx` to `x` with `2^level` implicit Euler substeps,
/// interpolating forcing and wall data linearly in x.
#[allow(clippy::too_many_arguments)]
fn substeps(
    flow: &LeadingFlow,
    y: &[f64],
    x: f64,
    dx: f64,
    level: usize,
    start: &[f64],
    f_lo: &[f64],
    f_hi: &[f64],
    b_lo: f64,
    b_hi: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let parts = 1usize << level;
    let h = dx / parts as f64;
    let mut u = start.to_vec();
    let mut w = vec![0.0; y.len()];
    for k in 1..=parts {
        let t = k as f64 / parts as f64;
        let f: Vec<f64> = f_lo.iter().zip(f_hi).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let (un, wn) = step(flow, y, x - dx + t * dx, h, BDF1, &u, &u, &f, (1.0 - t) * b_lo + t * b_hi)?;
        u = un;
        w = wn;
    }
    Ok((u, w))
}

/// Marches the linearized layer from `x = 0` to `x = L`.
pub fn march_prandtl_layer(p: &MarchProblem<'_>) -> Result<PrandtlLayer> {
    let grid = p.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    check_len(nx * ny, p.forcing.len())?;
    check_len(nx, p.bottom.len())?;
    check_len(ny, p.init.len())?;
    let y = grid.y_grid.nodes();
    check_oleinik(p.flow, 0.0, y)?;
    let dx = grid.dx();
    let mut up = vec![0.0; nx * ny];
    let mut w = vec![0.0; nx * ny];
    up[..ny].copy_from_slice(p.init);
    up[0] = p.bottom[0];
    let mut subdivided = 0;
    for i in 1..nx {
        let x = grid.x_nodes[i];
        let f = &p.forcing[i * ny..(i + 1) * ny];
        let prev = up[(i - 1) * ny..i * ny].to_vec();
        let prev2 = if i >= 2 { up[(i - 2) * ny..(i - 1) * ny].to_vec() } else { prev.clone() };
        let bdf = if i >= 2 { BDF2 } else { BDF1 };
        let mut result = step(p.flow, y, x, dx, bdf, &prev, &prev2, f, p.bottom[i]);
        let mut level = 1;
        while result.is_err() && level <= MAX_HALVINGS {
            result = substeps(
                p.flow,
                y,
                x,
                dx,
                level,
                &prev,
                &p.forcing[(i - 1) * ny..i * ny],
                f,
                p.bottom[i - 1],
                p.bottom[i],
            );
            level += 1;
        }
        if level > 1 {
            subdivided += 1;
        }
        let (un, wn) = result.map_err(|_| Error::NoConvergence { iterations: MAX_HALVINGS, residual: f64::NAN })?;
        up[i * ny..(i + 1) * ny].copy_from_slice(&un);
        w[i * ny..(i + 1) * ny].copy_from_slice(&wn);
    }
    if nx >= 3 {
        for j in 0..ny {
            w[j] = 2.0 * w[ny + j] - w[2 * ny + j];
        }
    } else {
        let (a, b) = w.split_at_mut(ny);
        a.copy_from_slice(&b[..ny]);
    }
    finish_layer(p.index, grid.clone(), up, w, subdivided)
}

/// Builds a layer from `u_p` and `v_p − v_p|_{y=0}` sampled on `grid`.
pub fn finish_layer(index: usize, grid: Grid2D, up: Vec<f64>, vp_bar: Vec<f64>, subdivided_steps: usize) -> Result<PrandtlLayer> {
    let (nx, ny) = (grid.nx(), grid.ny());
    check_len(nx * ny, up.len())?;
    check_len(nx * ny, vp_bar.len())?;
    let mut vp = vp_bar.clone();
    let mut up_bar = up.clone();
    for i in 0..nx {
        let top = vp_bar[i * ny + ny - 1];
        let wall = up[i * ny];
        for j in 0..ny {
            vp[i * ny + j] -= top;
            up_bar[i * ny + j] -= wall;
        }
    }
    let tail_max = (0..nx).map(|i| up[i * ny + ny - 1].abs()).fold(0.0, f64::max);
    let dx_op = DiffOp::new(&grid.x_nodes, 1, 2)?;
    let dy_op = DiffOp::new(grid.y_grid.nodes(), 1, 2)?;
    let ux = dx_op.apply_rows(&up, ny);
    let vy = dy_op.apply_columns(&vp, nx);
    let mut divergence_residual: f64 = 0.0;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            divergence_residual = divergence_residual.max((ux[i * ny + j] + vy[i * ny + j]).abs());
        }
    }
    let decay_rate = decay_rate(&up, grid.y_grid.nodes(), nx);
    Ok(PrandtlLayer { index, grid, up, vp, vp_bar, up_bar, decay_rate, tail_max, divergence_residual, subdivided_steps })
}

/// Exponential rate `M` fitted to `max_x |u(x, y)|` for `y ≥ 2` while the
/// envelope stays above `1e-10` of its peak.
fn decay_rate(u: &[f64], y: &[f64], nx: usize) -> f64 {
    let ny = y.len();
    let env: Vec<f64> = (0..ny).map(|j| (0..nx).map(|i| u[i * ny + j].abs()).fold(0.0, f64::max)).collect();
    let peak = env.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return f64::INFINITY;
    }
    let mut ys = Vec::new();
    let mut ls = Vec::new();
    for j in 0..ny {
        if y[j] >= 2.0 && env[j] > 1e-10 * peak {
            ys.push(y[j]);
            ls.push(libm::log(env[j]));
        }
    }
    if ys.len() < 3 {
        return f64::INFINITY;
    }
    -crate::fit::linear_slope(&ys, &ls)
}

/// The cut-off final layer and the error the cutoff introduces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutoffLayer {
    pub eps: f64,
    pub un_p: Vec<f64>,
    pub vn_p: Vec<f64>,
    pub error_en: Vec<f64>,
    /// `χ(√ε y)` on the y-nodes.
    pub chi: Vec<f64>,
}

/// Base-flow and layer values at one node needed by [`cutoff_error`].
#[derive(Debug, Clone, Copy, Default)]
pub struct CutoffPoint {
    pub y: f64,
    pub ubar: f64,
    pub ubar_x: f64,
    pub vbar: f64,
    pub u: f64,
    pub u_y: f64,
    pub v: f64,
    /// `∫₀^y u_p`.
    pub integral: f64,
    pub forcing: f64,
}

/// `𝓔 = 𝓛(u^n_p, v^n_p) − f` evaluated in closed form from the uncut layer,
/// using `v_p = −∫₀^y ∂_x u_p`.
pub fn cutoff_error(eps: f64, p: &CutoffPoint) -> f64 {
    let s = libm::sqrt(eps);
    let c = chi_jet(s * p.y).0;
    -(1.0 - c[0]) * p.forcing - s * p.ubar * c[1] * p.v + s * p.ubar_x * c[1] * p.integral
        + 2.0 * s * p.vbar * c[1] * p.u
        + eps * p.vbar * c[2] * p.integral
        - 3.0 * s * c[1] * p.u_y
        - 3.0 * eps * c[2] * p.u
        - eps * s * c[3] * p.integral
}

/// Applies `u^n_p = χ(√ε y) u_p + √ε χ′ ∫₀^y u_p`, `v^n_p = χ(√ε y) v_p` to a
/// layer with `v_p|_{y=0} = 0` and assembles `𝓔^{(n)}`.
pub fn apply_final_cutoff(layer: &PrandtlLayer, flow: &LeadingFlow, eps: f64, f_n: &[f64]) -> Result<CutoffLayer> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let grid = &layer.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    check_len(nx * ny, f_n.len())?;
    let s = libm::sqrt(eps);
    let y = grid.y_grid.nodes();
    if grid.y_grid.y_max() < 2.0 / s {
        return Err(Error::InvalidParameter(format!(
            "y_max = {} does not contain the cutoff support 2/sqrt(eps) = {}",
            grid.y_grid.y_max(),
            2.0 / s
        )));
    }
    let chi_vals: Vec<f64> = y.iter().map(|&yy| chi(s * yy)).collect();
    let dy_op = DiffOp::new(y, 1, 4)?;
    let mut un_p = vec![0.0; nx * ny];
    let mut vn_p = vec![0.0; nx * ny];
    let mut error_en = vec![0.0; nx * ny];
    for (i, &x) in grid.x_nodes.iter().enumerate() {
        let row = i * ny..(i + 1) * ny;
        let u = &layer.up[row.clone()];
        let v = &layer.vp_bar[row.clone()];
        let integral = crate::quad::cumulative(u, y);
        let u_y = dy_op.apply(u);
        for j in 0..ny {
            let jet = chi_jet(s * y[j]).0;
            un_p[i * ny + j] = jet[0] * u[j] + s * jet[1] * integral[j];
            vn_p[i * ny + j] = jet[0] * v[j];
            let b = flow.at(x, y[j]);
            let pt = CutoffPoint {
                y: y[j],
                ubar: b.u,
                ubar_x: b.u_x,
                vbar: b.v,
                u: u[j],
                u_y: u_y[j],
                v: v[j],
                integral: integral[j],
                forcing: f_n[i * ny + j],
            };
            error_en[i * ny + j] = cutoff_error(eps, &pt);
        }
        vn_p[i * ny] = 0.0;
    }
    Ok(CutoffLayer { eps, un_p, vn_p, error_en, chi: chi_vals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blasius::solve_blasius;
    use crate::grid::Grid1D;

    fn flow() -> LeadingFlow {
        LeadingFlow::new(solve_blasius(1e-10, 12.0).unwrap(), 1.0, 1.0).unwrap()
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(3.0), 0.0);
        let mut prev = 1.0;
        for k in 0..=2000 {
            let y = 1.0 + k as f64 / 2000.0;
            let j = chi_jet(y).0;
            assert!(j[1] <= 0.0 && j[1].abs() <= 4.0);
            assert!(j[0] <= prev + 1e-15);
            prev = j[0];
        }
    }

    #[test]
    fn chi_derivatives_match_differences() {
        let h = 1e-4;
        for &y in &[1.2, 1.5, 1.8] {
            let j = chi_jet(y).0;
            let jp = chi_jet(y + h).0;
            let jm = chi_jet(y - h).0;
            for k in 0..3 {
                let fd = (jp[k] - jm[k]) / (2.0 * h);
                assert!((fd - j[k + 1]).abs() < 1e-6 * (1.0 + j[k + 1].abs()), "order {k} at {y}");
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_layer() {
        let fl = flow();
        let g = Grid2D::new(0.25, 33, Grid1D::uniform(20.0, 101).unwrap()).unwrap();
        let f = vec![0.0; g.nx() * g.ny()];
        let b = vec![0.0; g.nx()];
        let init = vec![0.0; g.ny()];
        let layer = march_prandtl_layer(&MarchProblem { index: 1, flow: &fl, grid: &g, forcing: &f, bottom: &b, init: &init }).unwrap();
        assert!(layer.up.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn ingredients_sum_to_values() {
        let fl = flow();
        let y = Grid1D::uniform(20.0, 81).unwrap();
        let st = station(&fl, 0.0, y.nodes());
        let g: Vec<f64> = y.nodes().iter().map(|v| 2.0 * libm::exp(-v)).collect();
        let wall = WallPoint { u1e: 0.3, u1e_x: -0.2, v1e_y: 0.7 };
        let f = compute_f1(&st, wall, &g, 0.4, y.nodes()).unwrap();
        for j in 0..y.len() {
            let i = &f.ingredients;
            assert!((f.values[j] - (i.g_ext1[j] + i.u1e_terms[j] + i.shear_terms[j])).abs() < 1e-12);
        }
        let zero = compute_f1(&st, WallPoint::default(), &vec![0.0; y.len()], 0.0, y.nodes()).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    fn manufactured_error(nx: usize, ny: usize) -> f64 {
        let fl = flow();
        let g = Grid2D::new(0.5, nx, Grid1D::uniform(25.0, ny).unwrap()).unwrap();
        let y = g.y_grid.nodes();
        let exact = |x: f64, yy: f64| libm::exp(-yy) * libm::sin(x + 1.0);
        let mut f = Vec::new();
        for &x in &g.x_nodes {
            for &yy in y {
                let b = fl.at(x, yy);
                let e = libm::exp(-yy);
                let (sn, cs) = (libm::sin(x + 1.0), libm::cos(x + 1.0));
                let w = -cs * (1.0 - e);
                f.push(b.u * e * cs + e * sn * b.u_x + b.u_y * w - b.v * e * sn - e * sn);
            }
        }
        let bottom: Vec<f64> = g.x_nodes.iter().map(|&x| exact(x, 0.0)).collect();
        let init: Vec<f64> = y.iter().map(|&yy| exact(0.0, yy)).collect();
        let layer = march_prandtl_layer(&MarchProblem { index: 1, flow: &fl, grid: &g, forcing: &f, bottom: &bottom, init: &init }).unwrap();
        assert!(layer.up.iter().step_by(g.ny()).zip(&bottom).all(|(a, b)| a == b));
        let mut err: f64 = 0.0;
        for (i, &x) in g.x_nodes.iter().enumerate() {
            for (j, &yy) in y.iter().enumerate() {
                err = err.max((layer.up[g.idx(i, j)] - exact(x, yy)).abs());
            }
        }
        err
    }

    #[test]
    fn manufactured_solution_converges() {
        let coarse = manufactured_error(17, 101);
        let fine = manufactured_error(33, 201);
        assert!(coarse < 1e-2, "coarse error {coarse}");
        assert!(coarse / fine > 3.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn cutoff_error_matches_direct_evaluation() {
        let fl = flow();
        let eps = 0.04;
        let s = libm::sqrt(eps);
        let u = |x: f64, y: f64| libm::exp(-y / 3.0) * libm::sin(x + 1.0);
        let jint = |x: f64, y: f64| 3.0 * (1.0 - libm::exp(-y / 3.0)) * libm::sin(x + 1.0);
        let v = |x: f64, y: f64| -3.0 * (1.0 - libm::exp(-y / 3.0)) * libm::cos(x + 1.0);
        let un = |x: f64, y: f64| {
            let c = chi_jet(s * y).0;
            c[0] * u(x, y) + s * c[1] * jint(x, y)
        };
        let vn = |x: f64, y: f64| chi(s * y) * v(x, y);
        let op = |x: f64, y: f64, uu: &dyn Fn(f64, f64) -> f64, vv: &dyn Fn(f64, f64) -> f64| {
            let h = 1e-3;
            let b = fl.at(x, y);
            let ux = (uu(x + h, y) - uu(x - h, y)) / (2.0 * h);
            let uy = (uu(x, y + h) - uu(x, y - h)) / (2.0 * h);
            let uyy = (uu(x, y + h) - 2.0 * uu(x, y) + uu(x, y - h)) / (h * h);
            b.u * ux + uu(x, y) * b.u_x + b.v * uy + vv(x, y) * b.u_y - uyy
        };
        for &(x, y) in &[(0.2, 3.0), (0.3, 6.5), (0.1, 8.0), (0.4, 9.7)] {
            let f = op(x, y, &u, &v);
            let direct = op(x, y, &un, &vn) - f;
            let b = fl.at(x, y);
            let pt = CutoffPoint {
                y,
                ubar: b.u,
                ubar_x: b.u_x,
                vbar: b.v,
                u: u(x, y),
                u_y: -u(x, y) / 3.0,
                v: v(x, y),
                integral: jint(x, y),
                forcing: f,
            };
            let closed = cutoff_error(eps, &pt);
            assert!((direct - closed).abs() < 1e-5, "at ({x},{y}): {direct} vs {closed}");
        }
    }
}
