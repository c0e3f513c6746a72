//! The parallel operator `𝓛_∥ u = −u‴ + v_∥ u″ − u v_∥″` built from the
//! wall-normal traces of the base layer at `x = 0`, its kernel, and the
//! degree functional `𝐝(f) = ∫ K I_y[f]` that annihilates its range.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blasius::LeadingFlow;
use crate::error::{check_len, Error, Result};
use crate::euler::{EulerCorrector, ShearFlow};
use crate::grid::{bracket, Grid1D};
use crate::interp::Resampler;
use crate::prandtl::{chi, ForcingF1, Station, WallPoint};
use crate::quad::{cumulative, trapz, CellRule};
use crate::stencil::DiffOp;

/// `u_∥ = ū|_{x=0}` and `v_∥ = v̄|_{x=0}` with the derivatives the operator
/// needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParallelProfiles {
    pub grid: Grid1D,
    pub u_par: Vec<f64>,
    pub u_par_y: Vec<f64>,
    pub u_par_yy: Vec<f64>,
    pub u_par_yyy: Vec<f64>,
    pub v_par: Vec<f64>,
    pub v_par_y: Vec<f64>,
    pub v_par_yy: Vec<f64>,
    pub v_par_inf: f64,
}

impl ParallelProfiles {
    /// Traces of the self-similar layer at `x = 0` with exact derivatives.
    pub fn from_flow(flow: &LeadingFlow, grid: &Grid1D) -> Result<Self> {
        let n = grid.len();
        let mut pp = ParallelProfiles {
            grid: grid.clone(),
            u_par: Vec::with_capacity(n),
            u_par_y: Vec::with_capacity(n),
            u_par_yy: Vec::with_capacity(n),
            u_par_yyy: Vec::with_capacity(n),
            v_par: Vec::with_capacity(n),
            v_par_y: Vec::with_capacity(n),
            v_par_yy: Vec::with_capacity(n),
            v_par_inf: flow.v_inf(0.0),
        };
        for &y in grid.nodes() {
            let p = flow.at(0.0, y);
            pp.u_par.push(p.u);
            pp.u_par_y.push(p.u_y);
            pp.u_par_yy.push(p.u_yy);
            pp.u_par_yyy.push(p.u_yyy);
            pp.v_par.push(p.v);
            pp.v_par_y.push(p.v_y);
            pp.v_par_yy.push(p.v_yy);
        }
        pp.validate()?;
        Ok(pp)
    }

    /// Profiles from samples alone; derivatives by fourth-order stencils and
    /// `v_∥(∞)` taken as the last sample.
    pub fn from_samples(grid: &Grid1D, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_len(grid.len(), u.len())?;
        check_len(grid.len(), v.len())?;
        let nodes = grid.nodes();
        let d = |vals: &[f64], k: usize| -> Result<Vec<f64>> { Ok(DiffOp::new(nodes, k, 4)?.apply(vals)) };
        let pp = ParallelProfiles {
            grid: grid.clone(),
            u_par_y: d(&u, 1)?,
            u_par_yy: d(&u, 2)?,
            u_par_yyy: d(&u, 3)?,
            v_par_y: d(&v, 1)?,
            v_par_yy: d(&v, 2)?,
            v_par_inf: v[v.len() - 1],
            u_par: u,
            v_par: v,
        };
        pp.validate()?;
        Ok(pp)
    }

    fn validate(&self) -> Result<()> {
        let scale = self.u_par.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if self.u_par[0].abs() > 1e-12 * scale {
            return Err(Error::SignViolation(format!("u_par(0) = {} is not zero", self.u_par[0])));
        }
        if let Some(j) = (1..self.u_par.len()).find(|&j| !(self.u_par[j] > 0.0)) {
            return Err(Error::SignViolation(format!("u_par not positive at y = {}", self.grid.nodes()[j])));
        }
        if !(self.u_par_y[0] > 0.0) {
            return Err(Error::SignViolation("u_par has nonpositive wall slope".into()));
        }
        if self.v_par[0].abs() > 1e-10 {
            return Err(Error::SignViolation(format!("v_par(0) = {} is not zero", self.v_par[0])));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.u_par.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_par.is_empty()
    }
}

/// Value of sampled data at `y` by four-point interpolation, and whether `y`
/// missed every node.
fn value_at(values: &[f64], nodes: &[f64], y: f64) -> (f64, bool) {
    if let Some(j) = nodes.iter().position(|&t| (t - y).abs() <= 1e-12 * y.abs().max(1.0)) {
        return (values[j], false);
    }
    let r = Resampler::new(nodes, &[y]);
    (r.eval(values, 0), true)
}

/// `∫₁^y v` at every node, plus a flag set when `y = 1` is not a node.
pub fn anchored_integral(values: &[f64], grid: &Grid1D) -> Result<(Vec<f64>, bool)> {
    check_len(grid.len(), values.len())?;
    let nodes = grid.nodes();
    if grid.y_max() < 1.0 {
        return Err(Error::OutOfBounds { value: 1.0, lo: 0.0, hi: grid.y_max() });
    }
    let cum = CellRule::new(nodes)?.cumulative(values);
    let (at_one, interpolated) = value_at(&cum, nodes, 1.0);
    Ok((cum.iter().map(|c| c - at_one).collect(), interpolated))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelWeight {
    pub values: Vec<f64>,
    pub anchor_interpolated: bool,
}

/// `K(y) = u_∥ exp(−∫₁^y v_∥)`.
pub fn compute_k(pp: &ParallelProfiles) -> Result<KernelWeight> {
    let (iv, anchor_interpolated) = anchored_integral(&pp.v_par, &pp.grid)?;
    let values = pp.u_par.iter().zip(&iv).map(|(u, i)| u * libm::exp(-i)).collect();
    Ok(KernelWeight { values, anchor_interpolated })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailAntiderivative {
    pub values: Vec<f64>,
    /// Set when `|f(y_max)| y_max` exceeds `1e-8`, i.e. the truncated tail
    /// is not negligible.
    pub truncated: bool,
}

/// `I_y[f] = −∫_y^∞ f`, with the domain truncated at `y_max`.
pub fn tail_antiderivative(f: &[f64], grid: &Grid1D) -> Result<TailAntiderivative> {
    check_len(grid.len(), f.len())?;
    let tail = CellRule::new(grid.nodes())?.tail(f);
    let truncated = f[f.len() - 1].abs() * grid.y_max() > 1e-8;
    Ok(TailAntiderivative { values: tail.iter().map(|t| -t).collect(), truncated })
}

/// `𝐝(f) = ∫ K I_y[f]`.
pub fn degree(f: &[f64], k: &[f64], grid: &Grid1D) -> Result<f64> {
    check_len(grid.len(), k.len())?;
    let tail = tail_antiderivative(f, grid)?;
    let prod: Vec<f64> = k.iter().zip(&tail.values).map(|(a, b)| a * b).collect();
    Ok(CellRule::new(grid.nodes())?.total(&prod))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeReport {
    pub k: Vec<f64>,
    pub value: f64,
    pub tail: Vec<f64>,
    pub n_frak: Option<f64>,
}

pub fn degree_report(f: &[f64], pp: &ParallelProfiles) -> Result<DegreeReport> {
    let k = compute_k(pp)?.values;
    let tail = tail_antiderivative(f, &pp.grid)?.values;
    let value = degree(f, &k, &pp.grid)?;
    Ok(DegreeReport { k, value, tail, n_frak: None })
}

/// `𝓛_∥ u` by finite differences of the given formal accuracy.
pub fn apply_l_par(u: &[f64], pp: &ParallelProfiles, accuracy: usize) -> Result<Vec<f64>> {
    check_len(pp.len(), u.len())?;
    let nodes = pp.grid.nodes();
    let d3 = DiffOp::new(nodes, 3, accuracy)?.apply(u);
    let d2 = DiffOp::new(nodes, 2, accuracy)?.apply(u);
    Ok((0..u.len()).map(|j| -d3[j] + pp.v_par[j] * d2[j] - u[j] * pp.v_par_yy[j]).collect())
}

/// `‖r ⟨y⟩‖` over the nodes `0 < y ≤ y_hi`.
pub fn interior_residual_norm(r: &[f64], grid: &Grid1D, y_hi: f64) -> f64 {
    let nodes = grid.nodes();
    let end = nodes.iter().rposition(|&y| y <= y_hi).unwrap_or(0);
    if end < 2 {
        return 0.0;
    }
    let sq: Vec<f64> = (1..=end).map(|j| { let t = r[j] * bracket(nodes[j]); t * t }).collect();
    libm::sqrt(trapz(&sq, &nodes[1..=end]))
}

/// The three kernel elements of `𝓛_∥`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelBasis {
    pub u_par: Vec<f64>,
    pub u_tilde_s: Vec<f64>,
    pub u_p_elem: Vec<f64>,
    /// `a(y) = ∫₁^y a′`; the first entry is the (divergent) limit at 0.
    pub a_fun: Vec<f64>,
    /// `g(y) = exp ∫₁^y v_∥`.
    pub g_fun: Vec<f64>,
    /// Exact limit `ũ_s(0) = −u_∥(1)² g(0) / u_∥′(0)`.
    pub limit_at_zero: f64,
    /// `ũ_s` at the first interior node.
    pub first_node_value: f64,
    /// Least-squares slope of `log |ũ_s|` on `[y_max/2, y_max]`.
    pub tail_log_slope: f64,
}

pub fn build_kernel_basis(pp: &ParallelProfiles) -> Result<KernelBasis> {
    let grid = &pp.grid;
    let nodes = grid.nodes();
    let n = nodes.len();
    let rule = CellRule::new(nodes)?;
    let (iv, _) = anchored_integral(&pp.v_par, grid)?;
    let g_fun: Vec<f64> = iv.iter().map(|i| libm::exp(*i)).collect();
    let e_fun: Vec<f64> = iv.iter().map(|i| libm::exp(-*i)).collect();
    let (u1, _) = value_at(&pp.u_par, nodes, 1.0);
    let alpha = pp.u_par_y[0];
    let a_sing = u1 * u1 * g_fun[0] / (alpha * alpha);
    let mut reg = vec![0.0; n];
    for j in 1..n {
        let u = pp.u_par[j];
        reg[j] = u1 * u1 * g_fun[j] / (u * u) - a_sing / (nodes[j] * nodes[j]);
    }
    reg[0] = reg[1] - nodes[1] * (reg[2] - reg[1]) / (nodes[2] - nodes[1]);
    let reg_cum = rule.cumulative(&reg);
    let (reg_one, _) = value_at(&reg_cum, nodes, 1.0);
    let limit_at_zero = -a_sing * alpha;
    let mut a_fun = vec![f64::NEG_INFINITY; n];
    let mut u_tilde_s = vec![limit_at_zero; n];
    for j in 1..n {
        a_fun[j] = -a_sing / nodes[j] + a_sing + reg_cum[j] - reg_one;
        u_tilde_s[j] = pp.u_par[j] * a_fun[j];
    }
    let k: Vec<f64> = pp.u_par.iter().zip(&e_fun).map(|(u, e)| u * e).collect();
    let k_cum = rule.cumulative(&k);
    let se: Vec<f64> = u_tilde_s.iter().zip(&e_fun).map(|(s, e)| s * e).collect();
    let se_cum = rule.cumulative(&se);
    let u_p_elem = (0..n).map(|j| u_tilde_s[j] * k_cum[j] - pp.u_par[j] * se_cum[j]).collect();
    let mut ys = Vec::new();
    let mut ls = Vec::new();
    for j in 1..n {
        if nodes[j] >= 0.5 * grid.y_max() && u_tilde_s[j] != 0.0 {
            ys.push(nodes[j]);
            ls.push(libm::log(u_tilde_s[j].abs()));
        }
    }
    Ok(KernelBasis {
        u_par: pp.u_par.clone(),
        first_node_value: u_tilde_s[1],
        u_tilde_s,
        u_p_elem,
        a_fun,
        g_fun,
        limit_at_zero,
        tail_log_slope: crate::fit::linear_slope(&ys, &ls),
    })
}

/// `ω[g] = ∫ g″ u_∥″`.
pub fn omega(g: &[f64], pp: &ParallelProfiles) -> Result<f64> {
    check_len(pp.len(), g.len())?;
    let nodes = pp.grid.nodes();
    let gyy = DiffOp::new(nodes, 2, 4)?.apply(g);
    let prod: Vec<f64> = gyy.iter().zip(&pp.u_par_yy).map(|(a, b)| a * b).collect();
    Ok(CellRule::new(nodes)?.total(&prod))
}

/// The four pieces of `‖h‖_Υ = ‖h‴⟨y⟩‖ + ‖h″⟨y⟩‖ + ‖h′‖_loc + ‖h‖_loc`, with
/// `‖·‖_loc = ‖· χ(y/10)‖`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpsilonParts {
    pub yyy: f64,
    pub yy: f64,
    pub y_loc: f64,
    pub loc: f64,
}

impl UpsilonParts {
    pub fn total(&self) -> f64 {
        self.yyy + self.yy + self.y_loc + self.loc
    }
}

pub fn upsilon_parts(h: &[f64], grid: &Grid1D) -> Result<UpsilonParts> {
    check_len(grid.len(), h.len())?;
    let nodes = grid.nodes();
    let d1 = DiffOp::new(nodes, 1, 4)?.apply(h);
    let d2 = DiffOp::new(nodes, 2, 4)?.apply(h);
    let d3 = DiffOp::new(nodes, 3, 4)?.apply(h);
    let br: Vec<f64> = nodes.iter().map(|&y| bracket(y)).collect();
    let loc: Vec<f64> = nodes.iter().map(|&y| chi(y / 10.0)).collect();
    let norm = |v: &[f64], w: &[f64]| {
        let sq: Vec<f64> = v.iter().zip(w).map(|(a, b)| (a * b) * (a * b)).collect();
        libm::sqrt(trapz(&sq, nodes))
    };
    Ok(UpsilonParts { yyy: norm(&d3, &br), yy: norm(&d2, &br), y_loc: norm(&d1, &loc), loc: norm(h, &loc) })
}

pub fn upsilon_norm(h: &[f64], grid: &Grid1D) -> Result<f64> {
    Ok(upsilon_parts(h, grid)?.total())
}

/// Smooth random probe: a sum of Gaussian bumps under the envelope
/// `(1 − e^{−y}) e^{−y/4}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFunction {
    /// `(amplitude, centre, width)` per bump.
    pub bumps: Vec<(f64, f64, f64)>,
}

impl ProbeFunction {
    pub fn random(rng: &mut ChaCha8Rng, y_max: f64) -> Self {
        let bumps = (0..3)
            .map(|_| {
                (rng.gen_range(-1.0..1.0), rng.gen_range(0.5..(0.5 * y_max).max(0.6)), rng.gen_range(0.3..2.0))
            })
            .collect();
        ProbeFunction { bumps }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let env = (1.0 - libm::exp(-y)) * libm::exp(-0.25 * y);
        env * self.bumps.iter().map(|&(a, c, w)| a * { let z = (y - c) / w; libm::exp(-z * z) }).sum::<f64>()
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.sample(|y| self.eval(y))
    }
}

/// `u − κ u_∥` with `κ = ω[u] / ω[u_∥]`.
pub fn project_perp(u: &[f64], pp: &ParallelProfiles) -> Result<(Vec<f64>, f64)> {
    let w_par = omega(&pp.u_par, pp)?;
    if !(w_par > 0.0) {
        return Err(Error::SignViolation(format!("omega[u_par] = {w_par} is not positive")));
    }
    let kappa = omega(u, pp)? / w_par;
    Ok((u.iter().zip(&pp.u_par).map(|(a, b)| a - kappa * b).collect(), kappa))
}

/// `‖𝓛_∥ u_⊥ ⟨y⟩‖ / ‖u_⊥‖_Υ`, or `None` when `u_⊥` is numerically zero.
pub fn coercivity_ratio(u: &[f64], pp: &ParallelProfiles) -> Result<Option<f64>> {
    let (perp, _) = project_perp(u, pp)?;
    let den = upsilon_norm(&perp, &pp.grid)?;
    if den < 1e-12 {
        return Ok(None);
    }
    let lu = apply_l_par(&perp, pp, 4)?;
    let nodes = pp.grid.nodes();
    let sq: Vec<f64> = lu.iter().zip(nodes).map(|(v, &y)| { let t = v * bracket(y); t * t }).collect();
    Ok(Some(libm::sqrt(trapz(&sq, nodes)) / den))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub min_ratio: f64,
    pub trials: usize,
    pub seed: u64,
    pub resampled: usize,
    /// All ratios in increasing order.
    pub ratios: Vec<f64>,
    /// Counts over ten equal bins spanning `[min, max]`.
    pub histogram: Vec<usize>,
}

pub fn coercivity_probe(pp: &ParallelProfiles, trials: usize, seed: u64) -> Result<CoercivityReport> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    let mut resampled = 0;
    while ratios.len() < trials {
        let probe = ProbeFunction::random(&mut rng, pp.grid.y_max());
        match coercivity_ratio(&probe.sample(&pp.grid), pp)? {
            Some(r) => ratios.push(r),
            None => resampled += 1,
        }
        if resampled > 10 * trials {
            return Err(Error::NoConvergence { iterations: resampled, residual: 0.0 });
        }
    }
    ratios.sort_by(|a, b| a.total_cmp(b));
    let (lo, hi) = (ratios[0], ratios[ratios.len() - 1]);
    let mut histogram = vec![0usize; 10];
    for r in &ratios {
        let b = if hi > lo { (((r - lo) / (hi - lo)) * 10.0) as usize } else { 0 };
        histogram[b.min(9)] += 1;
    }
    Ok(CoercivityReport { min_ratio: lo, trials, seed, resampled, ratios, histogram })
}

/// The parts of `𝔫 = ∫K [g + u⁰_{eY}(0)(y u⁰_{px} + v⁰_p) + u⁰_e(0) ∫Δv¹_e dY]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NFrakReport {
    pub n_frak: f64,
    /// `∫ K g^{u,1}_{ext,p}`.
    pub k_g: f64,
    pub shear_part: f64,
    pub euler_part: f64,
    /// Set when no Euler corrector was supplied and its part was taken as 0.
    pub euler_missing: bool,
}

/// `∫₀^{Y_max} Δv¹_e(0, Y) dY`, using `Δv = (u⁰_{eYY} / u⁰_e) v` on the inflow
/// trace.
pub fn inflow_laplacian_integral(euler: &EulerCorrector, shear: &ShearFlow) -> Result<f64> {
    check_len(shear.u0e.len(), euler.v1e_x0.len())?;
    let vals: Vec<f64> = (0..shear.u0e.len()).map(|j| shear.u0e_yy[j] / shear.u0e[j] * euler.v1e_x0[j]).collect();
    Ok(trapz(&vals, shear.grid.nodes()))
}

pub fn compute_n_frak(
    k: &[f64],
    grid: &Grid1D,
    f1: &ForcingF1,
    st: &Station,
    shear: &ShearFlow,
    euler: Option<&EulerCorrector>,
) -> Result<NFrakReport> {
    let n = grid.len();
    for len in [k.len(), f1.values.len(), st.u0p_x.len(), st.v0p.len()] {
        check_len(n, len)?;
    }
    let rule = CellRule::new(grid.nodes())?;
    let nodes = grid.nodes();
    let integral = |h: &dyn Fn(usize) -> f64| -> f64 {
        let v: Vec<f64> = (0..n).map(|j| k[j] * h(j)).collect();
        rule.total(&v)
    };
    let k_g = integral(&|j| f1.ingredients.g_ext1[j]);
    let u0e_y0 = shear.u0e_y[0];
    let shear_part = integral(&|j| u0e_y0 * (nodes[j] * st.u0p_x[j] + st.v0p[j]));
    let (euler_part, euler_missing) = match euler {
        Some(ec) => (shear.u0e[0] * inflow_laplacian_integral(ec, shear)? * rule.total(k), false),
        None => (0.0, true),
    };
    Ok(NFrakReport { n_frak: k_g + shear_part + euler_part, k_g, shear_part, euler_part, euler_missing })
}

/// Amplitude `c` for which `∫ K c e^{−y} = target`.
pub fn calibrate_amplitude(k: &[f64], grid: &Grid1D, target: f64) -> Result<f64> {
    check_len(grid.len(), k.len())?;
    let rule = CellRule::new(grid.nodes())?;
    let v: Vec<f64> = grid.nodes().iter().zip(k).map(|(y, kv)| kv * libm::exp(-y)).collect();
    let base = rule.total(&v);
    if base.abs() < 1e-14 {
        return Err(Error::InvalidParameter("the kernel integral against e^-y vanishes".into()));
    }
    Ok(target / base)
}

/// How the layer-1 trace `v̄¹_p|_{x=0}` enters `r = v̄¹_p u_∥′ − u_∥ v̄¹_p′`.
pub enum LayerTrace<'a> {
    /// Sampled `v̄¹_p(0, y)`.
    Supplied(&'a [f64]),
    /// Inflow profile `u¹_p(0, y)`; `r` then follows from the layer
    /// equation at `x = 0`.
    FromInflow(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// `|I_h − I_{2h}|` summed over both sides.
    pub quadrature_error: f64,
    /// `u_∥′(0) + ∫ u_∥ u⁰_{px} exp(−∫₀^y v_∥)`.
    pub scalar_gap: f64,
}

/// `r(y)` from the chosen layer trace.
pub fn r_profile(pp: &ParallelProfiles, st: &Station, f1: &ForcingF1, trace: LayerTrace<'_>) -> Result<Vec<f64>> {
    let n = pp.len();
    let nodes = pp.grid.nodes();
    match trace {
        LayerTrace::Supplied(v) => {
            check_len(n, v.len())?;
            let vy = DiffOp::new(nodes, 1, 4)?.apply(v);
            Ok((0..n).map(|j| v[j] * pp.u_par_y[j] - pp.u_par[j] * vy[j]).collect())
        }
        LayerTrace::FromInflow(u) => {
            check_len(n, u.len())?;
            check_len(n, f1.values.len())?;
            let uy = DiffOp::new(nodes, 1, 4)?.apply(u);
            let uyy = DiffOp::new(nodes, 2, 4)?.apply(u);
            Ok((0..n).map(|j| f1.values[j] - u[j] * st.u0p_x[j] - pp.v_par[j] * uy[j] + uyy[j]).collect())
        }
    }
}

/// Trapezoid integral of `values` on `nodes`, and the same on every other
/// node (a trailing node is dropped when the count is even).
fn paired_trapz(values: &[f64], nodes: &[f64]) -> (f64, f64) {
    let m = if nodes.len() % 2 == 1 { nodes.len() } else { nodes.len() - 1 };
    let fine = trapz(&values[..m], &nodes[..m]);
    let cv: Vec<f64> = values[..m].iter().step_by(2).copied().collect();
    let cn: Vec<f64> = nodes[..m].iter().step_by(2).copied().collect();
    (fine, trapz(&cv, &cn))
}

/// Scalar integration-by-parts identity of the base layer, evaluated with
/// the trapezoid rule.
pub fn scalar_identity_gap(pp: &ParallelProfiles, st: &Station) -> Result<f64> {
    check_len(pp.len(), st.u0p_x.len())?;
    let nodes = pp.grid.nodes();
    let iv = cumulative(&pp.v_par, nodes);
    let vals: Vec<f64> = (0..pp.len()).map(|j| pp.u_par[j] * st.u0p_x[j] * libm::exp(-iv[j])).collect();
    Ok(pp.u_par_y[0] + trapz(&vals, nodes))
}

/// Both sides of
/// `∫K [r + v¹_{eY}(0)(y u_∥′ − u⁰_p)] = −∫K u⁰_{eY}(0)(y u⁰_{px} + v⁰_p) + ∫K g`.
pub fn verify_cg_identity(
    pp: &ParallelProfiles,
    st: &Station,
    f1: &ForcingF1,
    wall: WallPoint,
    u0e_y0: f64,
    trace: LayerTrace<'_>,
) -> Result<CgIdentity> {
    let n = pp.len();
    let nodes = pp.grid.nodes();
    let k = compute_k(pp)?.values;
    let r = r_profile(pp, st, f1, trace)?;
    let left: Vec<f64> =
        (0..n).map(|j| k[j] * (r[j] + wall.v1e_y * (nodes[j] * pp.u_par_y[j] - st.u0p[j]))).collect();
    let right: Vec<f64> = (0..n)
        .map(|j| k[j] * (f1.ingredients.g_ext1[j] - u0e_y0 * (nodes[j] * st.u0p_x[j] + st.v0p[j])))
        .collect();
    let (lhs, lhs2) = paired_trapz(&left, nodes);
    let (rhs, rhs2) = paired_trapz(&right, nodes);
    Ok(CgIdentity {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        quadrature_error: (lhs - lhs2).abs() + (rhs - rhs2).abs(),
        scalar_gap: scalar_identity_gap(pp, st)?,
    })
}

/// Solvability residual `u_∥′(0) e^{∫₀¹ v_∥} u¹_e(0,0) − ∫K (f − r)` at
/// `x = 0`; zero for admissible data.
pub fn integral_condition(pp: &ParallelProfiles, f: &[f64], r: &[f64], u1e_wall: f64) -> Result<f64> {
    check_len(pp.len(), f.len())?;
    check_len(pp.len(), r.len())?;
    let (iv, _) = anchored_integral(&pp.v_par, &pp.grid)?;
    let k = compute_k(pp)?.values;
    let vals: Vec<f64> = (0..pp.len()).map(|j| k[j] * (f[j] - r[j])).collect();
    let e0 = libm::exp(-iv[0]);
    Ok(pp.u_par_y[0] * e0 * u1e_wall - CellRule::new(pp.grid.nodes())?.total(&vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blasius::solve_blasius;

    fn profiles(n: usize) -> ParallelProfiles {
        let flow = LeadingFlow::new(solve_blasius(1e-10, 12.0).unwrap(), 1.0, 1.0).unwrap();
        ParallelProfiles::from_flow(&flow, &Grid1D::uniform(20.0, n).unwrap()).unwrap()
    }

    #[test]
    fn k_vanishes_at_wall_and_matches_u_at_one() {
        let pp = profiles(401);
        let k = compute_k(&pp).unwrap();
        assert_eq!(k.values[0], 0.0);
        assert!(!k.anchor_interpolated);
        let j = pp.grid.nodes().iter().position(|&y| (y - 1.0).abs() < 1e-12).unwrap();
        assert!((k.values[j] - pp.u_par[j]).abs() < 1e-14);
    }

    #[test]
    fn tail_of_exponential() {
        let g = Grid1D::uniform(20.0, 401).unwrap();
        let f = g.sample(|y| libm::exp(-y));
        let t = tail_antiderivative(&f, &g).unwrap();
        assert!((t.values[0] - (-1.0 + libm::exp(-20.0))).abs() < 1e-10);
        assert_eq!(t.values[400], 0.0);
    }

    #[test]
    fn constant_input_gives_minus_v_yy() {
        let pp = profiles(401);
        let lu = apply_l_par(&vec![1.0; 401], &pp, 2).unwrap();
        for j in 0..401 {
            assert!((lu[j] + pp.v_par_yy[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_elements_have_small_residual() {
        let pp = profiles(801);
        let b = build_kernel_basis(&pp).unwrap();
        for u in [&b.u_par, &b.u_tilde_s, &b.u_p_elem] {
            let r = apply_l_par(u, &pp, 4).unwrap();
            let scale = interior_residual_norm(u, &pp.grid, 10.0);
            assert!(interior_residual_norm(&r, &pp.grid, 10.0) < 1e-5 * scale.max(1.0));
        }
        for j in 1..801 {
            assert!((b.u_tilde_s[j] - b.u_par[j] * b.a_fun[j]).abs() <= 1e-12 * b.u_tilde_s[j].abs().max(1.0));
        }
    }

    #[test]
    fn probe_ratio_is_scale_invariant() {
        let pp = profiles(401);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = ProbeFunction::random(&mut rng, 20.0).sample(&pp.grid);
        let scaled: Vec<f64> = p.iter().map(|v| 10.0 * v).collect();
        let a = coercivity_ratio(&p, &pp).unwrap().unwrap();
        let b = coercivity_ratio(&scaled, &pp).unwrap().unwrap();
        assert!((a - b).abs() <= 1e-10 * a);
        assert!(coercivity_ratio(&pp.u_par, &pp).unwrap().is_none());
    }
}
