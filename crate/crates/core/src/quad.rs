//! Quadrature on sampled functions: composite trapezoid for norms and
//! definite integrals, and a locally quintic rule for cumulative integrals
//! that need more accuracy.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::grid::{Grid1D, WeightSpec};
use crate::stencil::fd_weights;

/// Composite trapezoid over all nodes.
pub fn trapz(values: &[f64], nodes: &[f64]) -> f64 {
    values
        .windows(2)
        .zip(nodes.windows(2))
        .map(|(v, y)| 0.5 * (v[0] + v[1]) * (y[1] - y[0]))
        .sum()
}

/// `∫_0^{y_i}` at every node.
pub fn cumulative(values: &[f64], nodes: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        out[i] = out[i - 1] + 0.5 * (values[i - 1] + values[i]) * (nodes[i] - nodes[i - 1]);
    }
    out
}

/// `∫_{y_i}^{y_max}` at every node.
pub fn cumulative_tail(values: &[f64], nodes: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + 0.5 * (values[i] + values[i + 1]) * (nodes[i + 1] - nodes[i]);
    }
    out
}

fn lerp_at(values: &[f64], grid: &Grid1D, y: f64) -> (usize, f64) {
    let k = grid.locate(y);
    let nodes = grid.nodes();
    let t = (y - nodes[k]) / (nodes[k + 1] - nodes[k]);
    (k, values[k] + t * (values[k + 1] - values[k]))
}

/// `∫_from^to` by trapezoid, with linear interpolation at endpoints that are
/// not nodes. Reversed bounds flip the sign.
pub fn integrate(values: &[f64], grid: &Grid1D, from: f64, to: f64) -> Result<f64> {
    check_len(grid.len(), values.len())?;
    let (lo, hi) = (0.0, grid.y_max());
    for b in [from, to] {
        if !(b >= lo - 1e-12 * hi && b <= hi * (1.0 + 1e-12)) {
            return Err(Error::OutOfBounds { value: b, lo, hi });
        }
    }
    if to < from {
        return integrate(values, grid, to, from).map(|v| -v);
    }
    let (a, b) = (from.clamp(lo, hi), to.clamp(lo, hi));
    if a == b {
        return Ok(0.0);
    }
    let nodes = grid.nodes();
    let (ka, fa) = lerp_at(values, grid, a);
    let (kb, fb) = lerp_at(values, grid, b);
    if ka == kb {
        return Ok(0.5 * (fa + fb) * (b - a));
    }
    let mut s = 0.5 * (fa + values[ka + 1]) * (nodes[ka + 1] - a);
    for k in ka + 1..kb {
        s += 0.5 * (values[k] + values[k + 1]) * (nodes[k + 1] - nodes[k]);
    }
    s += 0.5 * (values[kb] + fb) * (b - nodes[kb]);
    Ok(s)
}

/// `√(∫ |values · weight|²)` by the trapezoid rule.
pub fn weighted_l2_norm(values: &[f64], grid: &Grid1D, weight: &WeightSpec) -> Result<f64> {
    check_len(grid.len(), values.len())?;
    let w = weight.sample(grid)?;
    Ok(l2_weighted_sampled(values, &w, grid.nodes()))
}

/// Same as [`weighted_l2_norm`] with an already sampled weight.
pub fn l2_weighted_sampled(values: &[f64], weight: &[f64], nodes: &[f64]) -> f64 {
    let sq: Vec<f64> = values.iter().zip(weight).map(|(v, w)| (v * w) * (v * w)).collect();
    libm::sqrt(trapz(&sq, nodes))
}

/// Plain L² norm.
pub fn l2_norm(values: &[f64], nodes: &[f64]) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    libm::sqrt(trapz(&sq, nodes))
}

/// Maximum absolute value.
pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Per-cell integration weights of the interpolating quintic through six
/// neighbouring nodes. Cumulative sums built from it are sixth-order on
/// smooth data.
#[derive(Debug, Clone)]
pub struct CellRule {
    starts: Vec<usize>,
    weights: Vec<[f64; 6]>,
}

impl CellRule {
    pub fn new(nodes: &[f64]) -> Result<Self> {
        let n = nodes.len();
        if n < 6 {
            return Err(Error::GridTooCoarse { nodes: n, needed: 6 });
        }
        let mut starts = Vec::with_capacity(n - 1);
        let mut weights = Vec::with_capacity(n - 1);
        for k in 0..n - 1 {
            let s = k.saturating_sub(2).min(n - 6);
            let z = &nodes[s..s + 6];
            let (a, b) = (nodes[k], nodes[k + 1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let mut w = [0.0; 6];
            for &(t, gw) in GAUSS4.iter() {
                let c = fd_weights(mid + half * t, z, 0);
                for (wj, cj) in w.iter_mut().zip(&c[0]) {
                    *wj += gw * half * cj;
                }
            }
            starts.push(s);
            weights.push(w);
        }
        Ok(CellRule { starts, weights })
    }

    /// Integral over cell `[y_k, y_{k+1}]`.
    #[inline]
    pub fn cell(&self, values: &[f64], k: usize) -> f64 {
        let s = self.starts[k];
        self.weights[k].iter().zip(&values[s..s + 6]).map(|(w, v)| w * v).sum()
    }

    /// First node and weights of cell `k`.
    #[inline]
    pub fn cell_weights(&self, k: usize) -> (usize, &[f64; 6]) {
        (self.starts[k], &self.weights[k])
    }

    pub fn total(&self, values: &[f64]) -> f64 {
        (0..self.starts.len()).map(|k| self.cell(values, k)).sum()
    }

    /// `∫_0^{y_i}` at every node.
    pub fn cumulative(&self, values: &[f64]) -> Vec<f64> {
        let n = self.starts.len() + 1;
        let mut out = vec![0.0; n];
        for k in 0..n - 1 {
            out[k + 1] = out[k] + self.cell(values, k);
        }
        out
    }

    /// `∫_{y_i}^{y_max}` at every node.
    pub fn tail(&self, values: &[f64]) -> Vec<f64> {
        let n = self.starts.len() + 1;
        let mut out = vec![0.0; n];
        for k in (0..n - 1).rev() {
            out[k] = out[k + 1] + self.cell(values, k);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_linear() {
        let g = Grid1D::uniform(1.0, 21).unwrap();
        assert_eq!(integrate(&vec![0.0; 21], &g, 0.0, 1.0).unwrap(), 0.0);
        let y = g.sample(|y| y);
        assert!((integrate(&y, &g, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((integrate(&y, &g, 0.13, 0.77).unwrap() - 0.5 * (0.77f64.powi(2) - 0.13f64.powi(2))).abs() < 1e-12);
        assert!((integrate(&y, &g, 0.77, 0.13).unwrap() + 0.5 * (0.77f64.powi(2) - 0.13f64.powi(2))).abs() < 1e-12);
        assert!(integrate(&y, &g, 0.0, 1.5).is_err());
    }

    #[test]
    fn quintic_rule_is_exact_on_quintics() {
        let g = Grid1D::graded(3.0, 0.05, 1.1, 0.3).unwrap();
        let rule = CellRule::new(g.nodes()).unwrap();
        let p = g.sample(|y| y.powi(5) - y * y + 1.0);
        let c = rule.cumulative(&p);
        for (y, v) in g.nodes().iter().zip(&c) {
            let exact = y.powi(6) / 6.0 - y.powi(3) / 3.0 + y;
            assert!((v - exact).abs() < 1e-11);
        }
        let t = rule.tail(&p);
        assert!((t[0] - c[c.len() - 1]).abs() < 1e-11);
    }

    #[test]
    fn unit_norm() {
        let g = Grid1D::uniform(1.0, 33).unwrap();
        let n = weighted_l2_norm(&vec![1.0; 33], &g, &WeightSpec::unit()).unwrap();
        assert!((n - 1.0).abs() < 1e-14);
    }
}
