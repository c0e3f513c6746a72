//! Blasius base flow `f‴ + f f″ = 0`, `f(0) = f′(0) = 0`, `f′(∞) = 1`, by
//! fixed-step RK4 shooting on `f″(0)`, and the self-similar boundary-layer
//! profiles built from it.
//!
//! With this normalization the similarity map is `η = y √(U / 2(x+x₀))`,
//! `ū = U f′(η)`, `v̄ = √(U / 2(x+x₀)) (η f′ − f)`, which makes the pair
//! divergence free and a solution of `ū ū_x + v̄ ū_y = ū_yy`.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::interp::hermite;

/// Default number of RK4 steps on `[0, eta_max]`.
pub const DEFAULT_STEPS: usize = 4096;
/// Default outer end of the similarity interval.
pub const DEFAULT_ETA_MAX: f64 = 12.0;
/// Default shooting tolerance on `|f′(eta_max) − 1|`.
pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 200;

type State = [f64; 3];

#[inline]
fn rhs(y: &State) -> State {
    [y[1], y[2], -y[0] * y[2]]
}

#[inline]
fn rk4_step(y: &State, h: f64) -> State {
    let k1 = rhs(y);
    let y2 = [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], y[2] + 0.5 * h * k1[2]];
    let k2 = rhs(&y2);
    let y3 = [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], y[2] + 0.5 * h * k2[2]];
    let k3 = rhs(&y3);
    let y4 = [y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]];
    let k4 = rhs(&y4);
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates from `η = 0` with `f″(0) = s`; returns `f′(eta_max)`.
fn shoot(s: f64, eta_max: f64, steps: usize) -> Result<f64> {
    let h = eta_max / steps as f64;
    let mut y = [0.0, 0.0, s];
    for _ in 0..steps {
        y = rk4_step(&y, h);
    }
    if !y[1].is_finite() {
        return Err(Error::NoConvergence { iterations: 0, residual: f64::INFINITY });
    }
    Ok(y[1])
}

fn trajectory(s: f64, eta_max: f64, steps: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = eta_max / steps as f64;
    let mut f = Vec::with_capacity(steps + 1);
    let mut f1 = Vec::with_capacity(steps + 1);
    let mut f2 = Vec::with_capacity(steps + 1);
    let mut y = [0.0, 0.0, s];
    f.push(y[0]);
    f1.push(y[1]);
    f2.push(y[2]);
    for _ in 0..steps {
        y = rk4_step(&y, h);
        f.push(y[0]);
        f1.push(y[1]);
        f2.push(y[2]);
    }
    (f, f1, f2)
}

/// The converged similarity triple on a uniform η grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlasiusSolution {
    pub eta_grid: Grid1D,
    pub f: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// `f″(0)`.
    pub shoot_value: f64,
    pub eta_max: f64,
    pub tol: f64,
    pub iterations: usize,
}

/// Value and derivatives of `f` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    /// Set when the point lies beyond `eta_max` and the asymptote was used.
    pub tail: bool,
}

/// Solves with the default step count.
pub fn solve_blasius(tol: f64, eta_max: f64) -> Result<BlasiusSolution> {
    solve_blasius_with(tol, eta_max, DEFAULT_STEPS)
}

pub fn solve_blasius_with(tol: f64, eta_max: f64, steps: usize) -> Result<BlasiusSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    if !(eta_max >= 10.0) || !eta_max.is_finite() {
        return Err(Error::InvalidParameter(format!("eta_max must be >= 10, got {eta_max}")));
    }
    if steps < 64 {
        return Err(Error::InvalidParameter(format!("need at least 64 steps, got {steps}")));
    }
    let g = |s: f64| shoot(s, eta_max, steps).map(|v| v - 1.0);

    let mut lo = 0.0;
    let mut g_lo = -1.0;
    let mut hi = 1.0;
    let mut g_hi = g(hi)?;
    let mut iterations = 1;
    while g_hi < 0.0 {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = g(hi)?;
        iterations += 1;
        if hi > 64.0 {
            return Err(Error::ShootingBracket { lo: 0.0, hi });
        }
    }
    for _ in 0..6 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        iterations += 1;
        if gm < 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    let (mut s0, mut g0, mut s1, mut g1) = (lo, g_lo, hi, g_hi);
    let mut s = s1;
    let mut gs = g1;
    while gs.abs() > tol {
        if iterations >= MAX_ITER {
            return Err(Error::NoConvergence { iterations, residual: gs.abs() });
        }
        let mut next = s1 - g1 * (s1 - s0) / (g1 - g0);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        s = next;
        gs = g(s)?;
        iterations += 1;
        if gs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        s0 = s1;
        g0 = g1;
        s1 = s;
        g1 = gs;
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    if gs.abs() > tol {
        return Err(Error::NoConvergence { iterations, residual: gs.abs() });
    }
    let (f, f1, f2) = trajectory(s, eta_max, steps);
    let eta_grid = Grid1D::uniform(eta_max, steps + 1)?;
    Ok(BlasiusSolution { eta_grid, f, f1, f2, shoot_value: s, eta_max, tol, iterations })
}

impl BlasiusSolution {
    /// `lim (η f′ − f)`, read off at `eta_max` where `f″` is negligible.
    pub fn displacement(&self) -> f64 {
        let n = self.f.len() - 1;
        self.eta_max * self.f1[n] - self.f[n]
    }

    /// `f″′ = −f f″` on the samples.
    pub fn f3(&self) -> Vec<f64> {
        self.f.iter().zip(&self.f2).map(|(a, b)| -a * b).collect()
    }

    /// Hermite-interpolated jet; beyond `eta_max` the asymptote
    /// `f = η − displacement`, `f′ = 1` is substituted and flagged.
    pub fn eval(&self, eta: f64) -> Jet {
        if eta >= self.eta_max {
            return Jet { f: eta - self.displacement(), f1: 1.0, f2: 0.0, f3: 0.0, f4: 0.0, tail: eta > self.eta_max };
        }
        let eta = eta.max(0.0);
        let nodes = self.eta_grid.nodes();
        let h = self.eta_max / (nodes.len() - 1) as f64;
        let k = ((eta / h) as usize).min(nodes.len() - 2);
        let (a, b) = (nodes[k], nodes[k + 1]);
        let d3a = -self.f[k] * self.f2[k];
        let d3b = -self.f[k + 1] * self.f2[k + 1];
        let f = hermite(a, b, self.f[k], self.f[k + 1], self.f1[k], self.f1[k + 1], eta);
        let f1 = hermite(a, b, self.f1[k], self.f1[k + 1], self.f2[k], self.f2[k + 1], eta);
        let f2 = hermite(a, b, self.f2[k], self.f2[k + 1], d3a, d3b, eta);
        let f3 = -f * f2;
        let f4 = -(f1 * f2 + f * f3);
        Jet { f, f1, f2, f3, f4, tail: false }
    }
}

/// Position in the Blasius family: `x₀ > 0` shifts the virtual leading edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarParams {
    pub x0: f64,
    pub x: f64,
}

impl SelfSimilarParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.x0 >= 0.0 && self.x + self.x0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need x0 >= 0 and x + x0 > 0 (x0={}, x={})",
                self.x0, self.x
            )));
        }
        Ok(())
    }
}

/// Sampled `(ū, v̄)` at one station with the tail flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// True when some node needed the asymptote beyond `eta_max`.
    pub tail_used: bool,
}

/// `ū` and `v̄` at station `p.x` on `y_grid`, unit edge speed.
pub fn blasius_profiles(sol: &BlasiusSolution, p: SelfSimilarParams, y_grid: &Grid1D) -> Result<ProfilePair> {
    p.validate()?;
    let flow = LeadingFlow::new(sol.clone(), p.x0, 1.0)?;
    let mut u = Vec::with_capacity(y_grid.len());
    let mut v = Vec::with_capacity(y_grid.len());
    let mut tail_used = false;
    for &y in y_grid.nodes() {
        let pt = flow.at(p.x, y);
        tail_used |= pt.tail;
        u.push(pt.u);
        v.push(pt.v);
    }
    Ok(ProfilePair { u, v, tail_used })
}

/// The self-similar leading-order layer with edge speed `U`, evaluated
/// pointwise with exact (chain-rule) derivatives.
#[derive(Debug, Clone)]
pub struct LeadingFlow {
    pub sol: BlasiusSolution,
    pub x0: f64,
    pub edge_speed: f64,
}

/// `ū`, `v̄` and their derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LeadingPoint {
    pub u: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub u_yy: f64,
    pub u_yyy: f64,
    pub u_xx: f64,
    pub v: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_yy: f64,
    pub v_xx: f64,
    pub tail: bool,
}

impl LeadingFlow {
    pub fn new(sol: BlasiusSolution, x0: f64, edge_speed: f64) -> Result<Self> {
        if !(x0 > 0.0) {
            return Err(Error::InvalidParameter(format!("x0 must be positive, got {x0}")));
        }
        if !(edge_speed > 0.0) {
            return Err(Error::InvalidParameter(format!("edge speed must be positive, got {edge_speed}")));
        }
        Ok(LeadingFlow { sol, x0, edge_speed })
    }

    /// `√(U / 2(x+x₀))`.
    #[inline]
    pub fn scale(&self, x: f64) -> f64 {
        libm::sqrt(self.edge_speed / (2.0 * (x + self.x0)))
    }

    /// Far-field value of `v̄` at station `x`.
    pub fn v_inf(&self, x: f64) -> f64 {
        self.scale(x) * self.sol.displacement()
    }

    pub fn at(&self, x: f64, y: f64) -> LeadingPoint {
        let big_x = x + self.x0;
        let c = self.scale(x);
        let eta = c * y;
        let j = self.sol.eval(eta);
        let u_edge = self.edge_speed;
        let g = eta * j.f1 - j.f + eta * eta * j.f2;
        let dg = 3.0 * eta * j.f2 + eta * eta * j.f3;
        LeadingPoint {
            u: u_edge * j.f1,
            u_x: -u_edge * j.f2 * eta / (2.0 * big_x),
            u_y: u_edge * c * j.f2,
            u_yy: u_edge * c * c * j.f3,
            u_yyy: u_edge * c * c * c * j.f4,
            u_xx: u_edge / (4.0 * big_x * big_x) * (eta * eta * j.f3 + 3.0 * eta * j.f2),
            v: c * (eta * j.f1 - j.f),
            v_x: -c / (2.0 * big_x) * g,
            v_y: c * c * eta * j.f2,
            v_yy: c * c * c * (j.f2 + eta * j.f3),
            v_xx: c / (4.0 * big_x * big_x) * (3.0 * g + eta * dg),
            tail: j.tail,
        }
    }
}

/// Sign and tail diagnostics of a converged solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignReport {
    pub f1_min: f64,
    pub f1_max: f64,
    pub f2_min: f64,
    pub f2_at_zero: f64,
    pub f3_max: f64,
    pub f2_zero_positive: bool,
    pub f1_in_unit_interval: bool,
    pub f2_nonnegative: bool,
    pub f3_nonpositive: bool,
    /// Least-squares slope of `log f″` against `η` on `[6, eta_max]`.
    pub tail_log_slope: f64,
    /// Least-squares coefficient of `log f″` against `−η²/2` on the same
    /// interval (about 1 for a Gaussian tail).
    pub tail_gaussian_coeff: f64,
}

pub fn verify_blasius_signs(sol: &BlasiusSolution) -> SignReport {
    let f3 = sol.f3();
    let f1_min = sol.f1.iter().copied().fold(f64::INFINITY, f64::min);
    let f1_max = sol.f1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f2_min = sol.f2.iter().copied().fold(f64::INFINITY, f64::min);
    let f3_max = f3.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut xs = Vec::new();
    let mut quad = Vec::new();
    let mut ys = Vec::new();
    for (&eta, &v) in sol.eta_grid.nodes().iter().zip(&sol.f2) {
        if eta >= 6.0 && v > 0.0 {
            xs.push(eta);
            quad.push(-0.5 * eta * eta);
            ys.push(libm::log(v));
        }
    }
    let tail_log_slope = crate::fit::linear_slope(&xs, &ys);
    let tail_gaussian_coeff = crate::fit::linear_slope(&quad, &ys);
    SignReport {
        f1_min,
        f1_max,
        f2_min,
        f2_at_zero: sol.f2[0],
        f3_max,
        f2_zero_positive: sol.f2[0] > 0.0,
        f1_in_unit_interval: f1_min >= 0.0 && f1_max <= 1.0 + 1e-8,
        f2_nonnegative: f2_min >= -1e-10,
        f3_nonpositive: f3_max <= 1e-10,
        tail_log_slope,
        tail_gaussian_coeff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shot_is_trivial() {
        assert_eq!(shoot(0.0, 12.0, 512).unwrap(), 0.0);
    }

    #[test]
    fn converges_and_satisfies_boundary_conditions() {
        let sol = solve_blasius(1e-10, 12.0).unwrap();
        let n = sol.f1.len() - 1;
        assert!((sol.f1[n] - 1.0).abs() <= 1e-10);
        assert_eq!(sol.f[0], 0.0);
        assert_eq!(sol.f1[0], 0.0);
        assert!(sol.shoot_value > 0.46 && sol.shoot_value < 0.48);
    }

    #[test]
    fn leading_flow_is_divergence_free_pointwise() {
        let sol = solve_blasius(1e-10, 12.0).unwrap();
        let flow = LeadingFlow::new(sol, 1.0, 1.0).unwrap();
        for &(x, y) in &[(0.0, 0.5), (0.3, 2.0), (0.7, 4.5)] {
            let p = flow.at(x, y);
            assert!((p.u_x + p.v_y).abs() < 1e-12);
            let mom = p.u * p.u_x + p.v * p.u_y - p.u_yy;
            assert!(mom.abs() < 1e-9, "momentum residual {mom}");
        }
    }

    #[test]
    fn tail_is_flagged() {
        let sol = solve_blasius(1e-10, 12.0).unwrap();
        assert!(sol.eval(13.0).tail);
        assert!(!sol.eval(11.0).tail);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(solve_blasius(0.0, 12.0).is_err());
        assert!(solve_blasius(1e-10, 5.0).is_err());
        assert!(SelfSimilarParams { x0: 0.0, x: 0.0 }.validate().is_err());
    }
}
