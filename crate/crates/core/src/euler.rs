//! Outer shear flow and the first linearized Euler corrector on the strip
//! `(0, L) × (0, Y_max)`.
//!
//! The normal velocity solves `ΔV = (u_YY / u) V` with Dirichlet data on all
//! four sides. The tangential velocity follows from continuity, marched in
//! x with the trapezoid rule, and the pressure from the normal momentum
//! equation integrated down from `Y_max`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::{bracket, Grid1D, Grid2D};
use crate::linalg::{solve_tridiagonal, BandMatrix};
use crate::stencil::DiffOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShearFamily {
    /// `1 + a tanh(Y/s)`.
    TanhPlateau,
    /// `1 − a e^{−Y/s}`.
    ExpApproach,
}

/// Outer shear profile sampled on the outer grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShearFlow {
    pub family: ShearFamily,
    pub amplitude: f64,
    pub scale: f64,
    pub grid: Grid1D,
    pub u0e: Vec<f64>,
    pub u0e_y: Vec<f64>,
    pub u0e_yy: Vec<f64>,
    /// `‖u_YY ⟨Y⟩²‖_∞` over the grid.
    pub delta_s: f64,
}

/// Lower bound required of `|u⁰_e|`.
pub const SHEAR_FLOOR: f64 = 1e-3;

impl ShearFamily {
    /// Value, first and second derivative at `y`.
    pub fn eval(self, a: f64, s: f64, y: f64) -> (f64, f64, f64) {
        match self {
            ShearFamily::TanhPlateau => {
                let t = libm::tanh(y / s);
                let sech2 = 1.0 - t * t;
                (1.0 + a * t, a / s * sech2, -2.0 * a / (s * s) * t * sech2)
            }
            ShearFamily::ExpApproach => {
                let e = libm::exp(-y / s);
                (1.0 - a * e, a / s * e, -a / (s * s) * e)
            }
        }
    }
}

pub fn make_shear(family: ShearFamily, amplitude: f64, scale: f64, grid: &Grid1D) -> Result<ShearFlow> {
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!("shear scale must be positive, got {scale}")));
    }
    if !(amplitude.abs() < 1.0 - SHEAR_FLOOR) {
        return Err(Error::InvalidParameter(format!(
            "|amplitude| = {} leaves |u0e| below {SHEAR_FLOOR}",
            amplitude.abs()
        )));
    }
    let mut u0e = Vec::with_capacity(grid.len());
    let mut u0e_y = Vec::with_capacity(grid.len());
    let mut u0e_yy = Vec::with_capacity(grid.len());
    for &y in grid.nodes() {
        let (u, d1, d2) = family.eval(amplitude, scale, y);
        u0e.push(u);
        u0e_y.push(d1);
        u0e_yy.push(d2);
    }
    if let Some(j) = u0e.iter().position(|v| v.abs() < SHEAR_FLOOR) {
        return Err(Error::SignViolation(format!("|u0e| below floor at node {j}")));
    }
    let delta_s = shear_smallness(&u0e_yy, grid);
    Ok(ShearFlow { family, amplitude, scale, grid: grid.clone(), u0e, u0e_y, u0e_yy, delta_s })
}

fn shear_smallness(u_yy: &[f64], grid: &Grid1D) -> f64 {
    u_yy.iter().zip(grid.nodes()).map(|(v, &y)| (v * bracket(y) * bracket(y)).abs()).fold(0.0, f64::max)
}

impl ShearFlow {
    /// Exact value and derivatives at any `Y ≥ 0`.
    #[inline]
    pub fn at(&self, y: f64) -> (f64, f64, f64) {
        self.family.eval(self.amplitude, self.scale, y)
    }

    /// Recomputes `delta_s` from the stored samples.
    pub fn recomputed_delta_s(&self) -> f64 {
        shear_smallness(&self.u0e_yy, &self.grid)
    }
}

/// Outer decay class of the corrector traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Decay {
    Algebraic { m1: f64 },
    Exponential { m1: f64 },
}

impl Decay {
    /// Unit-height profile `φ(Y)` with `φ(0) = 1`.
    pub fn profile(self, y: f64) -> f64 {
        match self {
            Decay::Algebraic { m1 } => libm::pow(1.0 + y, -m1),
            Decay::Exponential { m1 } => libm::exp(-m1 * y),
        }
    }
}

/// Dirichlet data for the normal velocity plus the inflow tangential
/// velocity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerBoundary {
    /// `v¹_e(x, 0)` at every x-node.
    pub bottom: Vec<f64>,
    /// `v¹_e(0, Y)` at every Y-node.
    pub left: Vec<f64>,
    /// `v¹_e(L, Y)` at every Y-node.
    pub right: Vec<f64>,
    /// `u¹_e(0, Y)` at every Y-node.
    pub inflow_u: Vec<f64>,
}

impl EulerBoundary {
    /// Side traces `bottom(x_side) φ(Y)`, zero inflow velocity.
    pub fn separable(bottom: Vec<f64>, decay: Decay, grid: &Grid2D) -> Self {
        let ys = grid.y_grid.nodes();
        let (b0, b1) = (bottom[0], bottom[bottom.len() - 1]);
        let left = ys.iter().map(|&y| b0 * decay.profile(y)).collect();
        let right = ys.iter().map(|&y| b1 * decay.profile(y)).collect();
        EulerBoundary { bottom, left, right, inflow_u: vec![0.0; ys.len()] }
    }

    fn check(&self, grid: &Grid2D) -> Result<()> {
        check_len(grid.nx(), self.bottom.len())?;
        check_len(grid.ny(), self.left.len())?;
        check_len(grid.ny(), self.right.len())?;
        check_len(grid.ny(), self.inflow_u.len())?;
        let scale = self
            .bottom
            .iter()
            .chain(&self.left)
            .chain(&self.right)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let tol = 1e-8 * scale;
        let ny = grid.ny();
        let corners = [
            (self.bottom[0], self.left[0], "bottom-left"),
            (self.bottom[grid.nx() - 1], self.right[0], "bottom-right"),
        ];
        for (a, b, name) in corners {
            if (a - b).abs() > tol {
                return Err(Error::InvalidParameter(format!("{name} corner data disagree: {a} vs {b}")));
            }
        }
        for (v, name) in [(self.left[ny - 1], "top-left"), (self.right[ny - 1], "top-right")] {
            if v.abs() > 1e-4 * scale {
                return Err(Error::InvalidParameter(format!(
                    "{name} corner must be ~0 to match the decay condition, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `(u¹_e, v¹_e, P¹_e)` on the strip, row-major with x outer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EulerCorrector {
    pub grid: Grid2D,
    pub v1e: Vec<f64>,
    pub u1e: Vec<f64>,
    pub p1e: Vec<f64>,
    pub v1e_x0: Vec<f64>,
    pub decay: Option<Decay>,
}

fn coefficient(shear: &ShearFlow) -> Vec<f64> {
    shear.u0e_yy.iter().zip(&shear.u0e).map(|(a, b)| a / b).collect()
}

/// Three-point second-derivative weights on a possibly graded grid.
fn second_diff(ys: &[f64], j: usize) -> (f64, f64, f64) {
    let hm = ys[j] - ys[j - 1];
    let hp = ys[j + 1] - ys[j];
    (2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp)))
}

fn validate_inputs(shear: &ShearFlow, bc: &EulerBoundary, grid: &Grid2D) -> Result<()> {
    if shear.grid.nodes() != grid.y_grid.nodes() {
        return Err(Error::InvalidParameter("shear flow and corrector use different Y grids".into()));
    }
    bc.check(grid)
}

/// Right-hand side with boundary contributions moved over, interior only.
fn boundary_rhs(bc: &EulerBoundary, grid: &Grid2D) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (mx, my) = (nx - 2, ny - 2);
    let dx2 = grid.dx() * grid.dx();
    let ys = grid.y_grid.nodes();
    let mut rhs = vec![0.0; mx * my];
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let mut r = 0.0;
            if i == 1 {
                r -= bc.left[j] / dx2;
            }
            if i == nx - 2 {
                r -= bc.right[j] / dx2;
            }
            let (wm, _, _) = second_diff(ys, j);
            if j == 1 {
                r -= wm * bc.bottom[i];
            }
            rhs[(i - 1) * my + (j - 1)] = r;
        }
    }
    rhs
}

fn assemble_full(bc: &EulerBoundary, grid: &Grid2D, interior: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let my = ny - 2;
    let mut v = vec![0.0; nx * ny];
    for j in 0..ny {
        v[j] = bc.left[j];
        v[(nx - 1) * ny + j] = bc.right[j];
    }
    for i in 1..nx - 1 {
        v[i * ny] = bc.bottom[i];
        for j in 1..ny - 1 {
            v[i * ny + j] = interior[(i - 1) * my + (j - 1)];
        }
    }
    v
}

/// Solves for `v¹_e` by sine transform in x and tridiagonal solves in Y
/// (exact for the five-point system), then reconstructs `u¹_e` and `P¹_e`.
pub fn solve_v1e(shear: &ShearFlow, bc: &EulerBoundary, grid: &Grid2D) -> Result<EulerCorrector> {
    validate_inputs(shear, bc, grid)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    if nx < 4 || ny < 4 {
        return Err(Error::GridTooCoarse { nodes: nx.min(ny), needed: 4 });
    }
    let (mx, my) = (nx - 2, ny - 2);
    let dx = grid.dx();
    let ys = grid.y_grid.nodes();
    let c = coefficient(shear);
    let rhs = boundary_rhs(bc, grid);

    let sines: Vec<f64> = (0..mx * mx)
        .map(|t| {
            let (k, i) = (t / mx + 1, t % mx + 1);
            libm::sin(PI * (k * i) as f64 / (mx + 1) as f64)
        })
        .collect();
    let mut hat = vec![0.0; mx * my];
    for k in 0..mx {
        for i in 0..mx {
            let s = sines[k * mx + i];
            if s == 0.0 {
                continue;
            }
            let src = &rhs[i * my..(i + 1) * my];
            let dst = &mut hat[k * my..(k + 1) * my];
            for (d, r) in dst.iter_mut().zip(src) {
                *d += s * r;
            }
        }
    }
    let mut sol_hat = vec![0.0; mx * my];
    let mut a = vec![0.0; my];
    let mut b = vec![0.0; my];
    let mut cc = vec![0.0; my];
    for k in 0..mx {
        let s = libm::sin(PI * (k + 1) as f64 / (2 * (mx + 1)) as f64);
        let lam = -4.0 / (dx * dx) * s * s;
        for j in 1..ny - 1 {
            let (wm, w0, wp) = second_diff(ys, j);
            a[j - 1] = if j > 1 { wm } else { 0.0 };
            b[j - 1] = w0 + lam - c[j];
            cc[j - 1] = if j < ny - 2 { wp } else { 0.0 };
        }
        let x = solve_tridiagonal(&a, &b, &cc, &hat[k * my..(k + 1) * my])?;
        sol_hat[k * my..(k + 1) * my].copy_from_slice(&x);
    }
    let norm = 2.0 / (mx + 1) as f64;
    let mut interior = vec![0.0; mx * my];
    for i in 0..mx {
        for k in 0..mx {
            let s = sines[k * mx + i] * norm;
            if s == 0.0 {
                continue;
            }
            let src = &sol_hat[k * my..(k + 1) * my];
            let dst = &mut interior[i * my..(i + 1) * my];
            for (d, r) in dst.iter_mut().zip(src) {
                *d += s * r;
            }
        }
    }
    if interior.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { index: 0 });
    }
    let v1e = assemble_full(bc, grid, &interior);
    finish(shear, bc, grid, v1e)
}

/// Same discrete system as [`solve_v1e`], assembled as one band matrix and
/// factored by LU. Bandwidth is the shorter side, so keep grids modest.
pub fn solve_v1e_banded(shear: &ShearFlow, bc: &EulerBoundary, grid: &Grid2D) -> Result<EulerCorrector> {
    validate_inputs(shear, bc, grid)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    let (mx, my) = (nx - 2, ny - 2);
    let dx2 = grid.dx() * grid.dx();
    let ys = grid.y_grid.nodes();
    let c = coefficient(shear);
    let x_major = my <= mx;
    let bw = if x_major { my } else { mx };
    let id = |i: usize, j: usize| if x_major { i * my + j } else { j * mx + i };
    let n = mx * my;
    let mut m = BandMatrix::zeros(n, bw, bw);
    let rhs_xy = boundary_rhs(bc, grid);
    let mut rhs = vec![0.0; n];
    for i in 0..mx {
        for j in 0..my {
            let r = id(i, j);
            let (wm, w0, wp) = second_diff(ys, j + 1);
            m.set(r, r, w0 - 2.0 / dx2 - c[j + 1]);
            if i > 0 {
                m.set(r, id(i - 1, j), 1.0 / dx2);
            }
            if i + 1 < mx {
                m.set(r, id(i + 1, j), 1.0 / dx2);
            }
            if j > 0 {
                m.set(r, id(i, j - 1), wm);
            }
            if j + 1 < my {
                m.set(r, id(i, j + 1), wp);
            }
            rhs[r] = rhs_xy[i * my + j];
        }
    }
    let x = m.factor()?.solve(&rhs);
    let mut interior = vec![0.0; n];
    for i in 0..mx {
        for j in 0..my {
            interior[i * my + j] = x[id(i, j)];
        }
    }
    let v1e = assemble_full(bc, grid, &interior);
    finish(shear, bc, grid, v1e)
}

fn finish(shear: &ShearFlow, bc: &EulerBoundary, grid: &Grid2D, v1e: Vec<f64>) -> Result<EulerCorrector> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let dx = grid.dx();
    let ys = grid.y_grid.nodes();
    let dy_op = DiffOp::new(ys, 1, 2)?;
    let dx_op = DiffOp::new(&grid.x_nodes, 1, 2)?;
    let v_y = dy_op.apply_columns(&v1e, nx);
    let mut u1e = vec![0.0; nx * ny];
    u1e[..ny].copy_from_slice(&bc.inflow_u);
    for i in 1..nx {
        for j in 0..ny {
            u1e[i * ny + j] = u1e[(i - 1) * ny + j] - 0.5 * dx * (v_y[(i - 1) * ny + j] + v_y[i * ny + j]);
        }
    }
    let v_x = dx_op.apply_rows(&v1e, ny);
    let mut p1e = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in (0..ny - 1).rev() {
            let g0 = shear.u0e[j] * v_x[i * ny + j];
            let g1 = shear.u0e[j + 1] * v_x[i * ny + j + 1];
            p1e[i * ny + j] = p1e[i * ny + j + 1] + 0.5 * (g0 + g1) * (ys[j + 1] - ys[j]);
        }
    }
    Ok(EulerCorrector {
        grid: grid.clone(),
        v1e_x0: v1e[..ny].to_vec(),
        v1e,
        u1e,
        p1e,
        decay: None,
    })
}

/// Wall traces `u¹_e(x,0)`, `∂_x u¹_e(x,0)`, `v¹_e(x,0)`, `∂_Y v¹_e(x,0)` at
/// every x-node. The x-derivative is taken from continuity, `u_x = −v_Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallTraces {
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    pub v: Vec<f64>,
    pub v_y: Vec<f64>,
}

impl WallTraces {
    pub fn zeros(nx: usize) -> Self {
        WallTraces { u: vec![0.0; nx], u_x: vec![0.0; nx], v: vec![0.0; nx], v_y: vec![0.0; nx] }
    }
}

impl EulerCorrector {
    pub fn wall_traces(&self) -> Result<WallTraces> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let dy_op = DiffOp::new(self.grid.y_grid.nodes(), 1, 4)?;
        let u: Vec<f64> = (0..nx).map(|i| self.u1e[i * ny]).collect();
        let v: Vec<f64> = (0..nx).map(|i| self.v1e[i * ny]).collect();
        let v_y: Vec<f64> = (0..nx).map(|i| dy_op.apply_at(&self.v1e[i * ny..(i + 1) * ny], 0)).collect();
        let u_x = v_y.iter().map(|d| -d).collect();
        Ok(WallTraces { u, u_x, v, v_y })
    }
}

/// Weighted L² norms of the interior residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerResidual {
    pub u_momentum: f64,
    pub v_momentum: f64,
    /// Residual of the elliptic equation itself.
    pub elliptic: f64,
    /// Continuity residual in the trapezoid form used to build `u¹_e`.
    pub divergence: f64,
}

pub fn euler_residual(ec: &EulerCorrector, shear: &ShearFlow) -> Result<EulerResidual> {
    let grid = &ec.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    let dx = grid.dx();
    let ys = grid.y_grid.nodes();
    let dy_op = DiffOp::new(ys, 1, 2)?;
    let dx_op = DiffOp::new(&grid.x_nodes, 1, 2)?;
    let u_x = dx_op.apply_rows(&ec.u1e, ny);
    let v_x = dx_op.apply_rows(&ec.v1e, ny);
    let p_x = dx_op.apply_rows(&ec.p1e, ny);
    let p_y = dy_op.apply_columns(&ec.p1e, nx);
    let v_y = dy_op.apply_columns(&ec.v1e, nx);
    let c = coefficient(shear);
    let (mut ru, mut rv, mut re, mut rd) = (0.0, 0.0, 0.0, 0.0);
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let k = i * ny + j;
            let w = dx * 0.5 * (ys[j + 1] - ys[j - 1]);
            let a = shear.u0e[j] * u_x[k] + shear.u0e_y[j] * ec.v1e[k] + p_x[k];
            let b = shear.u0e[j] * v_x[k] + p_y[k];
            let (wm, w0, wp) = second_diff(ys, j);
            let lap = (ec.v1e[k + ny] - 2.0 * ec.v1e[k] + ec.v1e[k - ny]) / (dx * dx)
                + wm * ec.v1e[k - 1]
                + w0 * ec.v1e[k]
                + wp * ec.v1e[k + 1];
            let e = lap - c[j] * ec.v1e[k];
            ru += w * a * a;
            rv += w * b * b;
            re += w * e * e;
        }
    }
    for i in 0..nx - 1 {
        for j in 0..ny {
            let k = i * ny + j;
            let d = (ec.u1e[k + ny] - ec.u1e[k]) / dx + 0.5 * (v_y[k] + v_y[k + ny]);
            rd = f64::max(rd, d.abs());
        }
    }
    Ok(EulerResidual {
        u_momentum: libm::sqrt(ru),
        v_momentum: libm::sqrt(rv),
        elliptic: libm::sqrt(re),
        divergence: rd,
    })
}

/// `sup_Y |v_i / v_1|` for a supplied higher trace; errors if the base trace
/// is not positive.
pub fn trace_ratio_bound(higher: &[f64], base: &[f64]) -> Result<f64> {
    check_len(base.len(), higher.len())?;
    let mut m = 0.0f64;
    for (j, (h, b)) in higher.iter().zip(base).enumerate() {
        if !(*b > 0.0) {
            return Err(Error::SignViolation(format!("base trace not positive at node {j}")));
        }
        m = m.max((h / b).abs());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(nx: usize, ny: usize) -> Grid2D {
        Grid2D::new(1.0, nx, Grid1D::uniform(4.0, ny).unwrap()).unwrap()
    }

    #[test]
    fn delta_s_zero_for_flat_shear() {
        let g = Grid1D::uniform(20.0, 201).unwrap();
        let s = make_shear(ShearFamily::ExpApproach, 0.0, 1.0, &g).unwrap();
        assert_eq!(s.delta_s, 0.0);
        assert!(make_shear(ShearFamily::ExpApproach, 1.0, 1.0, &g).is_err());
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = strip(17, 21);
        let s = make_shear(ShearFamily::TanhPlateau, 0.1, 1.0, &g.y_grid).unwrap();
        let bc = EulerBoundary {
            bottom: vec![0.0; 17],
            left: vec![0.0; 21],
            right: vec![0.0; 21],
            inflow_u: vec![0.0; 21],
        };
        let ec = solve_v1e(&s, &bc, &g).unwrap();
        assert!(ec.v1e.iter().chain(&ec.u1e).chain(&ec.p1e).all(|v| *v == 0.0));
        let r = euler_residual(&ec, &s).unwrap();
        assert_eq!(r.u_momentum + r.v_momentum + r.divergence, 0.0);
    }

    #[test]
    fn transform_and_band_solvers_agree() {
        let g = strip(19, 23);
        let s = make_shear(ShearFamily::TanhPlateau, 0.2, 0.7, &g.y_grid).unwrap();
        let bottom: Vec<f64> = g.x_nodes.iter().map(|x| 1.0 + 0.3 * x).collect();
        let bc = EulerBoundary::separable(bottom, Decay::Exponential { m1: 4.0 }, &g);
        let a = solve_v1e(&s, &bc, &g).unwrap();
        let b = solve_v1e_banded(&s, &bc, &g).unwrap();
        for (p, q) in a.v1e.iter().zip(&b.v1e) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_mismatch_rejected() {
        let g = strip(17, 21);
        let s = make_shear(ShearFamily::TanhPlateau, 0.1, 1.0, &g.y_grid).unwrap();
        let mut bc = EulerBoundary::separable(vec![1.0; 17], Decay::Exponential { m1: 5.0 }, &g);
        bc.left[0] = 2.0;
        assert!(solve_v1e(&s, &bc, &g).is_err());
    }
}
