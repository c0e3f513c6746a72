//! Direct solvers for banded and tridiagonal systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored in the
/// column-major layout used by LAPACK's `gbtrf` (with `kl` extra rows for
/// pivoting fill-in).
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + j * self.ldab
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && i + self.ku >= j
    }

    /// Sets entry `(i, j)`; panics outside the declared band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let p = self.pos(i, j);
        self.ab[p] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let p = self.pos(i, j);
        self.ab[p] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.pos(i, j)]
        } else {
            0.0
        }
    }

    /// `A x` using the unfactored matrix.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                *yi += self.ab[self.pos(i, j)] * xj;
            }
        }
        y
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ld = self.ldab;
        let mut ipiv = vec![0usize; n];
        let scale = self.ab.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * 1e-300_f64.max(f64::EPSILON * 1e-6);
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.ab[kv + j * ld].abs();
            for t in 1..=km {
                let v = self.ab[kv + t + j * ld].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            ipiv[j] = j + jp;
            if !(best > tiny) {
                return Err(Error::Singular { index: j });
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = kv + j - c + c * ld;
                    let b = kv + j + jp - c + c * ld;
                    self.ab.swap(a, b);
                }
            }
            let piv = self.ab[kv + j * ld];
            for t in 1..=km {
                self.ab[kv + t + j * ld] /= piv;
            }
            for c in j + 1..=ju {
                let ujc = self.ab[kv + j - c + c * ld];
                if ujc != 0.0 {
                    for t in 1..=km {
                        let l = self.ab[kv + t + j * ld];
                        self.ab[kv + j + t - c + c * ld] -= l * ujc;
                    }
                }
            }
        }
        Ok(BandLu { m: self, ipiv })
    }
}

/// Factored band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = rhs.to_vec();
        self.solve_in_place(&mut b);
        b
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let kv = self.m.kl + self.m.ku;
        let ld = self.m.ldab;
        let ab = &self.m.ab;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let bj = b[j];
            for t in 1..=km {
                b[j + t] -= ab[kv + t + j * ld] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= ab[kv + j * ld];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= ab[kv + i - j + j * ld] * bj;
            }
        }
    }

    /// Smallest absolute pivot of `U`, a cheap conditioning indicator.
    pub fn min_pivot(&self) -> f64 {
        let kv = self.m.kl + self.m.ku;
        (0..self.m.n).map(|j| self.m.ab[kv + j * self.m.ldab].abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Thomas algorithm for `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i`.
/// Intended for diagonally dominant systems; reports a vanishing pivot.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut m = b[0];
    if m == 0.0 {
        return Err(Error::Singular { index: 0 });
    }
    cp[0] = c[0] / m;
    dp[0] = d[0] / m;
    for i in 1..n {
        m = b[i] - a[i] * cp[i - 1];
        if m.abs() < 1e-300 {
            return Err(Error::Singular { index: i });
        }
        cp[i] = if i + 1 < n { c[i] / m } else { 0.0 };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_check(m: &BandMatrix, x: &[f64], rhs: &[f64]) {
        let ax = m.matvec(x);
        for (u, v) in ax.iter().zip(rhs) {
            assert!((u - v).abs() < 1e-10, "{u} vs {v}");
        }
    }

    #[test]
    fn band_lu_needs_pivoting() {
        let n = 12;
        let mut m = BandMatrix::zeros(n, 2, 3);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 3).min(n - 1) {
                let v = ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 0.0 } else { 0.5 };
                m.set(i, j, v);
            }
        }
        m.set(0, 0, 0.0);
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 3.5).collect();
        let lu = m.clone().factor().unwrap();
        let x = lu.solve(&rhs);
        dense_check(&m, &x, &rhs);
    }

    #[test]
    fn singular_band_is_reported() {
        let m = BandMatrix::zeros(20, 1, 1);
        assert!(m.factor().is_err());
    }

    #[test]
    fn thomas_matches_band() {
        let n = 30;
        let a: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { -1.0 }).collect();
        let b = vec![2.5; n];
        let c: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { -1.0 }).collect();
        let d: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve_tridiagonal(&a, &b, &c, &d).unwrap();
        let mut m = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            m.set(i, i, b[i]);
            if i > 0 {
                m.set(i, i - 1, a[i]);
            }
            if i + 1 < n {
                m.set(i, i + 1, c[i]);
            }
        }
        dense_check(&m, &x, &d);
    }
}
