//! The boundary-trace problem
//! `𝓛_δ u = −u‴ + (v_s + δ) u″ − u Δ_ε v_s = F`, `u(0) = 0`,
//! `u′(∞) = u″(∞) = 0`.
//!
//! Two independent solvers: the closed-form variation-of-parameters
//! solution for `v_s ≡ 0` and a banded finite-difference solve for general
//! coefficients. The solution is then split along `u_∥` and measured in the
//! `Υ` and `B` norms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::euler::{EulerCorrector, ShearFlow};
use crate::grid::{bracket, Grid1D};
use crate::interp::Resampler;
use crate::kernel::{apply_l_par, omega, project_perp, upsilon_parts, ParallelProfiles, UpsilonParts};
use crate::linalg::BandMatrix;
use crate::quad::{l2_weighted_sampled, CellRule};
use crate::stencil::DiffOp;

/// Closed-form solution of `−u‴ + δu″ = F` with exact derivatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaSolution {
    pub grid: Grid1D,
    pub delta: f64,
    pub u: Vec<f64>,
    pub u_y: Vec<f64>,
    pub u_yy: Vec<f64>,
    pub u_yyy: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    /// `c3 e^{δy}`, evaluated without forming `e^{δy}`.
    pub c3_scaled: Vec<f64>,
    /// The constant making `u(0) = 0`.
    pub big_c1: f64,
}

/// Variation of parameters on the basis `{1, y, e^{δy}}`, every coefficient
/// taken as a tail integral so that all derivatives vanish beyond the
/// support of `F`.
pub fn solve_theta(f: &[f64], delta: f64, grid: &Grid1D) -> Result<ThetaSolution> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    check_len(grid.len(), f.len())?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let rule = CellRule::new(nodes)?;
    let d2 = delta * delta;
    let tail_f = rule.tail(f);
    let yf: Vec<f64> = f.iter().zip(nodes).map(|(v, y)| v * y).collect();
    let tail_yf = rule.tail(&yf);
    // ∫_y^∞ F(t) e^{−δ(t−y)} dt by a backward recurrence over cells.
    let mut damped = vec![0.0; n];
    for k in (0..n - 1).rev() {
        let (s, w) = rule.cell_weights(k);
        let cell: f64 = (0..6).map(|m| w[m] * f[s + m] * libm::exp(-delta * (nodes[s + m] - nodes[k]))).sum();
        damped[k] = libm::exp(-delta * (nodes[k + 1] - nodes[k])) * damped[k + 1] + cell;
    }
    let mut c1 = vec![0.0; n];
    let mut c2 = vec![0.0; n];
    let mut c3 = vec![0.0; n];
    let mut c3_scaled = vec![0.0; n];
    for j in 0..n {
        c1[j] = (delta * tail_yf[j] - tail_f[j]) / d2;
        c2[j] = -tail_f[j] / delta;
        c3_scaled[j] = damped[j] / d2;
        let log_c3 = -delta * nodes[j];
        c3[j] = if damped[j] == 0.0 { 0.0 } else { c3_scaled[j] * libm::exp(log_c3) };
    }
    let big_c1 = -(c1[0] + c3_scaled[0]);
    let mut u = vec![0.0; n];
    let mut u_y = vec![0.0; n];
    let mut u_yy = vec![0.0; n];
    let mut u_yyy = vec![0.0; n];
    for j in 0..n {
        u[j] = big_c1 + c1[j] + c2[j] * nodes[j] + c3_scaled[j];
        u_y[j] = c2[j] + delta * c3_scaled[j];
        u_yy[j] = d2 * c3_scaled[j];
        u_yyy[j] = -f[j] + delta * d2 * c3_scaled[j];
    }
    Ok(ThetaSolution { grid: grid.clone(), delta, u, u_y, u_yy, u_yyy, c1, c2, c3, c3_scaled, big_c1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEstimate {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when both vanish.
    pub ratio: f64,
}

/// `‖u‴⟨y⟩^m e^{ny}‖ + δ‖u″⟨y⟩^m e^{ny}‖` against `‖F⟨y⟩^m e^{ny}‖`.
pub fn theta_weighted_estimate(sol: &ThetaSolution, f: &[f64], m: i32, n: f64) -> Result<WeightedEstimate> {
    check_len(sol.grid.len(), f.len())?;
    if n * sol.grid.y_max() > 30.0 {
        return Err(Error::InvalidParameter(format!(
            "exponential weight e^({n} y) overflows the budget at y_max = {}",
            sol.grid.y_max()
        )));
    }
    let nodes = sol.grid.nodes();
    let w: Vec<f64> = nodes.iter().map(|&y| libm::pow(bracket(y), m as f64) * libm::exp(n * y)).collect();
    let lhs = l2_weighted_sampled(&sol.u_yyy, &w, nodes) + sol.delta * l2_weighted_sampled(&sol.u_yy, &w, nodes);
    let rhs = l2_weighted_sampled(f, &w, nodes);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(WeightedEstimate { lhs, rhs, ratio })
}

/// Coefficients of `𝓛_δ` split as `𝓛_∥ + √ε A + J`:
/// `v_s = v_∥ + √ε v̄¹_p + j_uyy` and `Δ_ε v_s = v_∥″ + √ε v̄¹_p″ + j_u`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitTraces {
    pub v_par: Vec<f64>,
    pub v_par_yy: Vec<f64>,
    pub vbar1p: Vec<f64>,
    pub vbar1p_yy: Vec<f64>,
    /// Remaining coefficient of `u″` (outer and higher layers).
    pub j_uyy: Vec<f64>,
    /// Remaining coefficient of `−u`.
    pub j_u: Vec<f64>,
}

impl SplitTraces {
    /// Leading traces: the parallel profiles plus an outer trace `v_e` and
    /// its scaled Laplacian; no first Prandtl layer.
    pub fn leading(pp: &ParallelProfiles, v_e: Vec<f64>, lap_v_e: Vec<f64>) -> Result<Self> {
        check_len(pp.len(), v_e.len())?;
        check_len(pp.len(), lap_v_e.len())?;
        Ok(SplitTraces {
            v_par: pp.v_par.clone(),
            v_par_yy: pp.v_par_yy.clone(),
            vbar1p: vec![0.0; pp.len()],
            vbar1p_yy: vec![0.0; pp.len()],
            j_uyy: v_e,
            j_u: lap_v_e,
        })
    }

    pub fn v_s(&self, eps: f64) -> Vec<f64> {
        let s = libm::sqrt(eps);
        (0..self.v_par.len()).map(|j| self.v_par[j] + s * self.vbar1p[j] + self.j_uyy[j]).collect()
    }

    pub fn laplacian_v_s(&self, eps: f64) -> Vec<f64> {
        let s = libm::sqrt(eps);
        (0..self.v_par.len()).map(|j| self.v_par_yy[j] + s * self.vbar1p_yy[j] + self.j_u[j]).collect()
    }
}

/// Outer trace `v¹_e(0, √ε y)` and `ε Δv¹_e(0, √ε y)` on the fast grid.
/// Beyond the outer grid the last values are held.
pub fn outer_trace_on(
    euler: &EulerCorrector,
    shear: &ShearFlow,
    eps: f64,
    grid: &Grid1D,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let outer = shear.grid.nodes();
    let s = libm::sqrt(eps);
    let lap: Vec<f64> = (0..outer.len()).map(|j| shear.u0e_yy[j] / shear.u0e[j] * euler.v1e_x0[j]).collect();
    let targets: Vec<f64> = grid.nodes().iter().map(|y| (s * y).min(outer[outer.len() - 1])).collect();
    let r = Resampler::new(outer, &targets);
    let v: Vec<f64> = (0..targets.len()).map(|k| r.eval(&euler.v1e_x0, k)).collect();
    let l: Vec<f64> = (0..targets.len()).map(|k| eps * r.eval(&lap, k)).collect();
    Ok((v, l))
}

/// Banded discretization of `𝓛_δ` on the interleaved unknowns
/// `[u_0, w_0, u_1, w_1, …]` with `w = u′`. Even rows tie `u` to the cell
/// integrals of `w`; odd rows carry the second-order equation for `w`, with
/// `w(y_max) = w′(y_max) = 0` in the last two slots.
#[derive(Debug, Clone)]
pub struct LdeltaOperator {
    pub grid: Grid1D,
    pub delta: f64,
    pub eps: f64,
    pub accuracy: usize,
    pub vs_trace: Vec<f64>,
    pub laplacian_vs: Vec<f64>,
    pub matrix: BandMatrix,
    d1: DiffOp,
    d2: DiffOp,
    d3: DiffOp,
}

impl LdeltaOperator {
    pub fn new(
        grid: &Grid1D,
        vs_trace: Vec<f64>,
        laplacian_vs: Vec<f64>,
        delta: f64,
        eps: f64,
        accuracy: usize,
    ) -> Result<Self> {
        check_len(grid.len(), vs_trace.len())?;
        check_len(grid.len(), laplacian_vs.len())?;
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
        }
        let nodes = grid.nodes();
        let n = nodes.len();
        let d1 = DiffOp::new(nodes, 1, accuracy)?;
        let d2 = DiffOp::new(nodes, 2, accuracy)?;
        let d3 = DiffOp::new(nodes, 3, accuracy)?;
        let rule = CellRule::new(nodes)?;
        let (u_of, w_of) = (|j: usize| 2 * j, |j: usize| 2 * j + 1);
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        entries.push((u_of(0), u_of(0), 1.0));
        for j in 1..n {
            entries.push((u_of(j), u_of(j), 1.0));
            entries.push((u_of(j), u_of(j - 1), -1.0));
            let (s, w) = rule.cell_weights(j - 1);
            for (m, c) in w.iter().enumerate() {
                entries.push((u_of(j), w_of(s + m), -c));
            }
        }
        for j in 1..n - 1 {
            let row = w_of(j);
            let (s, w) = d2.row(j);
            for (m, c) in w.iter().enumerate() {
                entries.push((row, w_of(s + m), -c));
            }
            let (s, w) = d1.row(j);
            for (m, c) in w.iter().enumerate() {
                entries.push((row, w_of(s + m), (vs_trace[j] + delta) * c));
            }
            entries.push((row, u_of(j), -laplacian_vs[j]));
        }
        entries.push((w_of(0), w_of(n - 1), 1.0));
        let (s, w) = d1.row(n - 1);
        for (m, c) in w.iter().enumerate() {
            entries.push((w_of(n - 1), w_of(s + m), *c));
        }
        // Row w_0 holds a condition at the far end; move it next to the
        // last row to keep the band narrow.
        let perm = |r: usize| -> usize {
            if r == w_of(0) {
                w_of(n - 1) - 1
            } else if r > w_of(0) && r <= w_of(n - 1) - 1 {
                r - 1
            } else {
                r
            }
        };
        let mut kl = 0;
        let mut ku = 0;
        for &(r, c, _) in &entries {
            let r = perm(r);
            kl = kl.max(r.saturating_sub(c));
            ku = ku.max(c.saturating_sub(r));
        }
        let mut matrix = BandMatrix::zeros(2 * n, kl, ku);
        for (r, c, v) in entries {
            matrix.add(perm(r), c, v);
        }
        Ok(LdeltaOperator { grid: grid.clone(), delta, eps, accuracy, vs_trace, laplacian_vs, matrix, d1, d2, d3 })
    }

    pub fn from_split(grid: &Grid1D, traces: &SplitTraces, delta: f64, eps: f64, accuracy: usize) -> Result<Self> {
        Self::new(grid, traces.v_s(eps), traces.laplacian_v_s(eps), delta, eps, accuracy)
    }

    /// `𝓛_δ u` at every node by direct stencils on `u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let d3 = self.d3.apply(u);
        let d2 = self.d2.apply(u);
        (0..u.len()).map(|j| -d3[j] + (self.vs_trace[j] + self.delta) * d2[j] - u[j] * self.laplacian_vs[j]).collect()
    }

    /// Discrete `u′` with the operator's stencil.
    pub fn first_derivative(&self, u: &[f64]) -> Vec<f64> {
        self.d1.apply(u)
    }

    /// Right-hand side in the matrix row order.
    fn rhs(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut rhs = vec![0.0; 2 * n];
        for j in 1..n - 1 {
            rhs[2 * j] = f[j];
        }
        rhs
    }

    /// Solves `𝓛_δ u = F`; returns `(u, u′)`.
    pub fn solve_pair(&self, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len(self.grid.len(), f.len())?;
        let n = f.len();
        let rhs = self.rhs(f);
        let lu = self.matrix.clone().factor()?;
        let scale = (0..2 * n).map(|i| self.matrix.get(i, i).abs()).fold(0.0, f64::max);
        if lu.min_pivot() < 1e-13 * scale {
            return Err(Error::IllConditioned { min_pivot: lu.min_pivot(), scale });
        }
        let x = lu.solve(&rhs);
        Ok(((0..n).map(|j| x[2 * j]).collect(), (0..n).map(|j| x[2 * j + 1]).collect()))
    }

    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_pair(f)?.0)
    }
}

/// `𝓛_∥ u + √ε A u + J u` with each piece evaluated separately.
pub fn apply_split(u: &[f64], traces: &SplitTraces, pp: &ParallelProfiles, delta: f64, eps: f64, accuracy: usize) -> Result<Vec<f64>> {
    check_len(pp.len(), u.len())?;
    let nodes = pp.grid.nodes();
    let uyy = DiffOp::new(nodes, 2, accuracy)?.apply(u);
    let l_par = apply_l_par(u, pp, accuracy)?;
    let s = libm::sqrt(eps);
    Ok((0..u.len())
        .map(|j| {
            let a = traces.vbar1p[j] * uyy[j] - u[j] * traces.vbar1p_yy[j];
            let jj = delta * uyy[j] + traces.j_uyy[j] * uyy[j] - u[j] * traces.j_u[j];
            l_par[j] + s * a + jj
        })
        .collect())
}

/// `‖u⁰‖_B` piece by piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BNorm {
    pub upsilon: UpsilonParts,
    /// `ε^{1/4} |κ|`.
    pub kappa_part: f64,
    /// `‖ε^{1/4} u⁰_yy ⟨y⟩ / √v_e‖`.
    pub curvature_part: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct U0Solution {
    pub grid: Grid1D,
    pub delta: f64,
    pub eps: f64,
    pub u0: Vec<f64>,
    pub u_perp: Vec<f64>,
    pub kappa: f64,
    pub omega_u0: f64,
    pub omega_upar: f64,
    pub upsilon: f64,
    /// Set when `|u⁰″|` in the top tenth of the grid exceeds `1e-6` of its
    /// maximum, i.e. the domain is too short for the decay conditions.
    pub truncation_flag: bool,
}

/// `κ = ω[u]/ω[u_∥]` and `u_⊥ = u − κ u_∥`.
pub fn decompose(u: &[f64], pp: &ParallelProfiles) -> Result<(Vec<f64>, f64)> {
    project_perp(u, pp)
}

pub fn solve_l_delta(op: &LdeltaOperator, f: &[f64], pp: &ParallelProfiles) -> Result<U0Solution> {
    if op.grid.nodes() != pp.grid.nodes() {
        return Err(Error::InvalidParameter("operator and parallel profiles use different grids".into()));
    }
    let u0 = op.solve(f)?;
    let (u_perp, kappa) = decompose(&u0, pp)?;
    let nodes = op.grid.nodes();
    let uyy = op.d2.apply(&u0);
    let peak = uyy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let y_top = 0.9 * op.grid.y_max();
    let top = nodes.iter().zip(&uyy).filter(|(y, _)| **y >= y_top).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    Ok(U0Solution {
        grid: op.grid.clone(),
        delta: op.delta,
        eps: op.eps,
        omega_u0: omega(&u0, pp)?,
        omega_upar: omega(&pp.u_par, pp)?,
        upsilon: upsilon_parts(&u_perp, &op.grid)?.total(),
        u0,
        u_perp,
        kappa,
        truncation_flag: peak > 0.0 && top > 1e-6 * peak,
    })
}

/// `‖u_⊥‖_Υ + ε^{1/4}|κ| + ‖ε^{1/4} u⁰_yy ⟨y⟩ / √v_e‖`.
pub fn b_norm(sol: &U0Solution, v_e: &[f64]) -> Result<BNorm> {
    check_len(sol.grid.len(), v_e.len())?;
    if let Some(j) = v_e.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::SignViolation(format!("outer trace not positive at node {j}")));
    }
    let nodes = sol.grid.nodes();
    let q = libm::pow(sol.eps, 0.25);
    let upsilon = upsilon_parts(&sol.u_perp, &sol.grid)?;
    let uyy = DiffOp::new(nodes, 2, 4)?.apply(&sol.u0);
    let w: Vec<f64> = nodes.iter().zip(v_e).map(|(&y, v)| q * bracket(y) / libm::sqrt(*v)).collect();
    let curvature_part = l2_weighted_sampled(&uyy, &w, nodes);
    let kappa_part = q * sol.kappa.abs();
    Ok(BNorm { upsilon, kappa_part, curvature_part, total: upsilon.total() + kappa_part + curvature_part })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCheck {
    /// `ε^{(1+σ)/2} ‖u_⊥‖_∞`.
    pub lhs: f64,
    /// `‖u⁰‖_B`.
    pub rhs: f64,
}

pub fn linf_embedding_check(sol: &U0Solution, b: &BNorm, sigma: f64) -> EmbeddingCheck {
    let sup = sol.u_perp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    EmbeddingCheck { lhs: libm::pow(sol.eps, 0.5 * (1.0 + sigma)) * sup, rhs: b.total }
}

/// Solutions along a decreasing list of `δ` and the `⟨y⟩`-weighted L² gaps
/// between neighbours.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaLadder {
    pub deltas: Vec<f64>,
    pub solutions: Vec<U0Solution>,
    pub gaps: Vec<f64>,
}

impl DeltaLadder {
    pub fn gaps_decrease(&self) -> bool {
        self.gaps.windows(2).all(|w| w[1] < w[0])
    }

    pub fn last(&self) -> &U0Solution {
        &self.solutions[self.solutions.len() - 1]
    }
}

pub fn delta_ladder(
    traces: &SplitTraces,
    pp: &ParallelProfiles,
    f: &[f64],
    deltas: &[f64],
    eps: f64,
    accuracy: usize,
) -> Result<DeltaLadder> {
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("empty delta ladder".into()));
    }
    let mut solutions = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let op = LdeltaOperator::from_split(&pp.grid, traces, d, eps, accuracy)?;
        solutions.push(solve_l_delta(&op, f, pp)?);
    }
    let nodes = pp.grid.nodes();
    let w: Vec<f64> = nodes.iter().map(|&y| bracket(y)).collect();
    let gaps = solutions
        .windows(2)
        .map(|s| {
            let diff: Vec<f64> = s[0].u0.iter().zip(&s[1].u0).map(|(a, b)| a - b).collect();
            l2_weighted_sampled(&diff, &w, nodes)
        })
        .collect();
    Ok(DeltaLadder { deltas: deltas.to_vec(), solutions, gaps })
}

/// Smooth bump `exp(−1/(1 − t²))` on `[a, b]`, zero outside.
pub fn compact_bump(y: f64, a: f64, b: f64) -> f64 {
    let t = (2.0 * y - a - b) / (b - a);
    if t.abs() >= 1.0 {
        0.0
    } else {
        libm::exp(-1.0 / (1.0 - t * t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blasius::{solve_blasius, LeadingFlow};

    fn bump_forcing(grid: &Grid1D) -> Vec<f64> {
        grid.sample(|y| compact_bump(y, 1.0, 3.0))
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = Grid1D::uniform(10.0, 201).unwrap();
        let s = solve_theta(&vec![0.0; 201], 0.5, &g).unwrap();
        assert!(s.u.iter().all(|v| *v == 0.0));
        assert!(solve_theta(&vec![0.0; 201], 0.0, &g).is_err());
    }

    #[test]
    fn theta_derivatives_vanish_past_support() {
        let g = Grid1D::uniform(10.0, 1001).unwrap();
        let s = solve_theta(&bump_forcing(&g), 0.7, &g).unwrap();
        assert!(s.u[0].abs() < 1e-12);
        for (j, &y) in g.nodes().iter().enumerate() {
            if y > 3.0 {
                assert!(s.u_y[j].abs() < 1e-8);
            }
            let recon = s.big_c1 + s.c1[j] + s.c2[j] * y + s.c3_scaled[j];
            assert!((recon - s.u[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn matrix_path_matches_closed_form() {
        let g = Grid1D::uniform(10.0, 1001).unwrap();
        let f = bump_forcing(&g);
        let theta = solve_theta(&f, 0.7, &g).unwrap();
        let op = LdeltaOperator::new(&g, vec![0.0; 1001], vec![0.0; 1001], 0.7, 1e-4, 6).unwrap();
        let u = op.solve(&f).unwrap();
        let gap = u.iter().zip(&theta.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-8, "gap {gap}");
    }

    fn leading_traces(g: &Grid1D) -> (ParallelProfiles, SplitTraces) {
        let flow = LeadingFlow::new(solve_blasius(1e-10, 12.0).unwrap(), 1.0, 1.0).unwrap();
        let pp = ParallelProfiles::from_flow(&flow, g).unwrap();
        let tr = SplitTraces::leading(&pp, vec![0.5; g.len()], vec![0.0; g.len()]).unwrap();
        (pp, tr)
    }

    #[test]
    fn manufactured_solution_second_order() {
        let mut errs = Vec::new();
        for n in [201, 401, 801] {
            let g = Grid1D::uniform(30.0, n).unwrap();
            let (_, tr) = leading_traces(&g);
            let op = LdeltaOperator::from_split(&g, &tr, 0.0, 1e-4, 2).unwrap();
            let exact = g.sample(|y| y * y * libm::exp(-y));
            let f: Vec<f64> = g
                .nodes()
                .iter()
                .enumerate()
                .map(|(j, &y)| {
                    let e = libm::exp(-y);
                    let d2 = (2.0 - 4.0 * y + y * y) * e;
                    let d3 = (-6.0 + 6.0 * y - y * y) * e;
                    -d3 + op.vs_trace[j] * d2 - exact[j] * op.laplacian_vs[j]
                })
                .collect();
            let u = op.solve(&f).unwrap();
            errs.push(u.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
        }
        for w in errs.windows(2) {
            let rate = libm::log2(w[0] / w[1]);
            assert!(rate > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn ladder_and_projection() {
        let g = Grid1D::uniform(20.0, 401).unwrap();
        let (pp, tr) = leading_traces(&g);
        let f = bump_forcing(&g);
        let ladder = delta_ladder(&tr, &pp, &f, &[1e-2, 1e-3, 1e-4, 0.0], 1e-4, 6).unwrap();
        assert!(ladder.gaps_decrease(), "{:?}", ladder.gaps);
        let sol = ladder.last();
        assert!(!sol.truncation_flag);
        assert!(sol.u0[0].abs() < 1e-12);
        let scale = sol.u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(omega(&sol.u_perp, &pp).unwrap().abs() < 1e-10 * scale);
        for j in 0..g.len() {
            assert!((sol.u0[j] - sol.u_perp[j] - sol.kappa * pp.u_par[j]).abs() < 1e-10);
        }
        let (_, k_self) = decompose(&pp.u_par, &pp).unwrap();
        assert!((k_self - 1.0).abs() < 1e-12);
        let (_, k_perp) = decompose(&sol.u_perp, &pp).unwrap();
        assert!(k_perp.abs() < 1e-12);
        let zero = solve_l_delta(&LdeltaOperator::from_split(&g, &tr, 0.0, 1e-4, 6).unwrap(), &vec![0.0; 401], &pp)
            .unwrap();
        assert!(zero.u0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn b_norm_is_homogeneous() {
        let g = Grid1D::uniform(20.0, 401).unwrap();
        let (pp, tr) = leading_traces(&g);
        let op = LdeltaOperator::from_split(&g, &tr, 0.0, 1e-4, 6).unwrap();
        let f = bump_forcing(&g);
        let sol = solve_l_delta(&op, &f, &pp).unwrap();
        let ve = vec![0.5; 401];
        let b = b_norm(&sol, &ve).unwrap();
        let f3: Vec<f64> = f.iter().map(|v| 3.0 * v).collect();
        let b3 = b_norm(&solve_l_delta(&op, &f3, &pp).unwrap(), &ve).unwrap();
        assert!((b3.total - 3.0 * b.total).abs() < 1e-10 * b.total);
        assert!(b_norm(&sol, &vec![0.0; 401]).is_err());
        let e = linf_embedding_check(&sol, &b, 0.01);
        assert!(e.lhs <= e.rhs);
    }

    #[test]
    fn weighted_estimate_of_zero() {
        let g = Grid1D::uniform(10.0, 201).unwrap();
        let s = solve_theta(&vec![0.0; 201], 0.5, &g).unwrap();
        let e = theta_weighted_estimate(&s, &vec![0.0; 201], 1, 0.5).unwrap();
        assert_eq!((e.lhs, e.rhs), (0.0, 0.0));
        assert!(theta_weighted_estimate(&s, &vec![0.0; 201], 0, 4.0).is_err());
    }

    #[test]
    fn interior_rows_exact_on_cubics() {
        let g = Grid1D::uniform(5.0, 101).unwrap();
        let vs = g.sample(|y| libm::sin(y));
        let lap = g.sample(|y| libm::cos(y));
        let op = LdeltaOperator::new(&g, vs.clone(), lap.clone(), 0.3, 1e-3, 6).unwrap();
        let u = g.sample(|y| 1.0 + y - 2.0 * y * y + 0.5 * y * y * y);
        let w = g.sample(|y| 1.0 - 4.0 * y + 1.5 * y * y);
        let x: Vec<f64> = u.iter().zip(&w).flat_map(|(a, b)| [*a, *b]).collect();
        let ax = op.matrix.matvec(&x);
        for (j, &y) in g.nodes().iter().enumerate().take(100).skip(1) {
            let exact = -3.0 + (vs[j] + 0.3) * (-4.0 + 3.0 * y) - u[j] * lap[j];
            assert!((ax[2 * j] - exact).abs() < 1e-8 * (1.0 + exact.abs()));
            assert!(ax[2 * j - 1].abs() < 1e-12);
        }
    }

    #[test]
    fn split_matches_direct() {
        let flow = LeadingFlow::new(solve_blasius(1e-10, 12.0).unwrap(), 1.0, 1.0).unwrap();
        let g = Grid1D::uniform(20.0, 401).unwrap();
        let pp = ParallelProfiles::from_flow(&flow, &g).unwrap();
        let mut tr = SplitTraces::leading(&pp, g.sample(|y| 0.4 + 0.01 * y), g.sample(|y| 1e-3 * y)).unwrap();
        tr.vbar1p = g.sample(|y| libm::exp(-y));
        tr.vbar1p_yy = tr.vbar1p.clone();
        let u = g.sample(|y| y * y * libm::exp(-y));
        let op = LdeltaOperator::from_split(&g, &tr, 0.01, 1e-3, 4).unwrap();
        let direct = op.apply(&u);
        let split = apply_split(&u, &tr, &pp, 0.01, 1e-3, 4).unwrap();
        for (a, b) in direct.iter().zip(&split) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }
}
