//! Finite-difference stencils on arbitrary node sets.
//!
//! Weights come from Fornberg's recursion, so the same code serves uniform
//! and graded grids, interior and one-sided rows.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Fornberg weights. `c[k][j]` is the weight of `f(z[j])` in the `k`-th
/// derivative at `x0`, for `k = 0..=m`.
pub fn fd_weights(x0: f64, z: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = z.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = z[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = z[i] - x0;
        for j in 0..i {
            let c3 = z[i] - z[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

fn uniform(z: &[f64]) -> bool {
    let h = z[1] - z[0];
    z.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

/// A derivative operator of fixed order, precomputed row by row.
#[derive(Debug, Clone)]
pub struct DiffOp {
    order: usize,
    starts: Vec<usize>,
    lens: Vec<usize>,
    width: usize,
    weights: Vec<f64>,
}

impl DiffOp {
    /// `accuracy` is the formal order of the truncation error. Interior rows
    /// on locally uniform spacing use the narrowest centred stencil reaching
    /// it; other rows use windows of `order + accuracy` nodes, one-sided
    /// near the ends.
    pub fn new(nodes: &[f64], order: usize, accuracy: usize) -> Result<Self> {
        if order == 0 || order > 4 {
            return Err(Error::InvalidParameter(alloc::format!(
                "derivative order {order} not in 1..=4"
            )));
        }
        if accuracy == 0 {
            return Err(Error::InvalidParameter("accuracy must be positive".into()));
        }
        let n = nodes.len();
        let full = order + accuracy;
        let needed = full.max(order + 4);
        if n < needed {
            return Err(Error::GridTooCoarse { nodes: n, needed });
        }
        let centred = if full % 2 == 0 && accuracy % 2 == 0 { full - 1 } else { full };
        let mut starts = Vec::with_capacity(n);
        let mut lens = Vec::with_capacity(n);
        let mut weights = vec![0.0; n * full];
        for i in 0..n {
            let half = centred / 2;
            let (start, len) = if i >= half && i + half < n && uniform(&nodes[i - half..=i + half]) {
                (i - half, centred)
            } else {
                let s = i.saturating_sub(full / 2).min(n - full);
                (s, full)
            };
            let c = fd_weights(nodes[i], &nodes[start..start + len], order);
            weights[i * full..i * full + len].copy_from_slice(&c[order]);
            starts.push(start);
            lens.push(len);
        }
        Ok(DiffOp { order, starts, lens, width: full, weights })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Stencil of row `i` as `(first column, weights)`.
    #[inline]
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        let off = i * self.width;
        (self.starts[i], &self.weights[off..off + self.lens[i]])
    }

    #[inline]
    pub fn apply_at(&self, values: &[f64], i: usize) -> f64 {
        let (s, w) = self.row(i);
        w.iter().zip(&values[s..s + w.len()]).map(|(a, b)| a * b).sum()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.apply_at(values, i)).collect()
    }

    /// Applies the operator along the second index of a row-major `nx × ny`
    /// array.
    pub fn apply_columns(&self, values: &[f64], nx: usize) -> Vec<f64> {
        let ny = self.len();
        let mut out = vec![0.0; nx * ny];
        for i in 0..nx {
            let col = &values[i * ny..(i + 1) * ny];
            for j in 0..ny {
                out[i * ny + j] = self.apply_at(col, j);
            }
        }
        out
    }

    /// Applies the operator along the first index of a row-major `nx × ny`
    /// array.
    pub fn apply_rows(&self, values: &[f64], ny: usize) -> Vec<f64> {
        let nx = self.len();
        let mut out = vec![0.0; nx * ny];
        for i in 0..nx {
            let (s, w) = self.row(i);
            for (k, wk) in w.iter().enumerate() {
                let src = &values[(s + k) * ny..(s + k + 1) * ny];
                let dst = &mut out[i * ny..(i + 1) * ny];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += wk * v;
                }
            }
        }
        out
    }
}

/// Second-order accurate derivative of the given order.
pub fn derivative(values: &[f64], grid: &Grid1D, order: usize) -> Result<Vec<f64>> {
    derivative_acc(values, grid, order, 2)
}

/// Derivative with an explicit formal accuracy.
pub fn derivative_acc(values: &[f64], grid: &Grid1D, order: usize, accuracy: usize) -> Result<Vec<f64>> {
    crate::error::check_len(grid.len(), values.len())?;
    Ok(DiffOp::new(grid.nodes(), order, accuracy)?.apply(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_classic_centred() {
        let c = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((c[1][0] + 0.5).abs() < 1e-15 && (c[1][2] - 0.5).abs() < 1e-15);
        assert!((c[2][0] - 1.0).abs() < 1e-15 && (c[2][1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = Grid1D::uniform(5.0, 41).unwrap();
        let ones = vec![1.0; g.len()];
        for k in 1..=4 {
            let d = derivative(&ones, &g, k).unwrap();
            assert!(d.iter().all(|v| v.abs() < 1e-7), "order {k}");
        }
    }

    #[test]
    fn second_derivative_of_square_is_two() {
        let g = Grid1D::uniform(3.0, 31).unwrap();
        let sq = g.sample(|y| y * y);
        let d = derivative(&sq, &g, 2).unwrap();
        assert!(d.iter().all(|v| (v - 2.0).abs() < 1e-10));
    }

    #[test]
    fn graded_reproduces_cubics() {
        let g = Grid1D::graded(10.0, 0.05, 1.05, 0.5).unwrap();
        let p = g.sample(|y| 1.0 - 2.0 * y + 0.5 * y * y * y);
        let d3 = derivative(&p, &g, 3).unwrap();
        assert!(d3.iter().all(|v| (v - 3.0).abs() < 1e-6));
        let d1 = derivative_acc(&p, &g, 1, 3).unwrap();
        for (y, v) in g.nodes().iter().zip(&d1) {
            assert!((v - (-2.0 + 1.5 * y * y)).abs() < 1e-8);
        }
    }

    #[test]
    fn too_coarse_is_reported() {
        let g = Grid1D::uniform(1.0, 16).unwrap();
        assert!(DiffOp::new(g.nodes(), 4, 14).is_err());
    }
}
