//! Local cubic interpolation between node sets.

use alloc::vec::Vec;

use crate::stencil::fd_weights;

/// Cubic Hermite interpolation on `[x0, x1]` from values and slopes.
#[inline]
pub fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * h * d1
}

/// Precomputed four-point Lagrange weights taking samples on `source`
/// nodes to a list of target points. Targets outside the source range are
/// flagged and receive the nearest end window (callers decide what to do
/// with them).
#[derive(Debug, Clone)]
pub struct Resampler {
    starts: Vec<usize>,
    weights: Vec<[f64; 4]>,
    outside: Vec<bool>,
}

impl Resampler {
    pub fn new(source: &[f64], targets: &[f64]) -> Self {
        let n = source.len();
        let (lo, hi) = (source[0], source[n - 1]);
        let mut starts = Vec::with_capacity(targets.len());
        let mut weights = Vec::with_capacity(targets.len());
        let mut outside = Vec::with_capacity(targets.len());
        for &x in targets {
            let k = match source.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                Ok(i) => i,
                Err(i) => i.saturating_sub(1),
            };
            let s = k.saturating_sub(1).min(n - 4);
            let c = fd_weights(x, &source[s..s + 4], 0);
            starts.push(s);
            weights.push([c[0][0], c[0][1], c[0][2], c[0][3]]);
            outside.push(x < lo - 1e-12 * hi.abs().max(1.0) || x > hi * (1.0 + 1e-12));
        }
        Resampler { starts, weights, outside }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    #[inline]
    pub fn is_outside(&self, k: usize) -> bool {
        self.outside[k]
    }

    #[inline]
    pub fn eval(&self, values: &[f64], k: usize) -> f64 {
        let s = self.starts[k];
        let w = &self.weights[k];
        w[0] * values[s] + w[1] * values[s + 1] + w[2] * values[s + 2] + w[3] * values[s + 3]
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|k| self.eval(values, k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubic() {
        let p = |x: f64| x * x * x - 2.0 * x + 0.5;
        let dp = |x: f64| 3.0 * x * x - 2.0;
        let v = hermite(0.3, 0.9, p(0.3), p(0.9), dp(0.3), dp(0.9), 0.71);
        assert!((v - p(0.71)).abs() < 1e-14);
    }

    #[test]
    fn lagrange_reproduces_cubic() {
        let src: Vec<f64> = (0..20).map(|i| (i as f64 * 0.1).powf(1.3)).collect();
        let vals: Vec<f64> = src.iter().map(|x| x * x * x - x).collect();
        let tg = [0.0, 0.05, 0.77, 1.9, src[19]];
        let r = Resampler::new(&src, &tg);
        for (k, &x) in tg.iter().enumerate() {
            assert!((r.eval(&vals, k) - (x * x * x - x)).abs() < 1e-12);
            assert!(!r.is_outside(k));
        }
    }
}
