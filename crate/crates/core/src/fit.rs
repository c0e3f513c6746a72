//! Least-squares slopes for convergence and rate studies.

/// Slope of the least-squares line through `(x_i, y_i)`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: alloc::vec::Vec<f64> = x.iter().map(|v| libm::log(*v)).collect();
    let ly: alloc::vec::Vec<f64> = y.iter().map(|v| libm::log(*v)).collect();
    linear_slope(&lx, &ly)
}

/// Observed orders `log2(e_k / e_{k+1})` between successive halvings.
pub fn halving_orders(errors: &[f64]) -> alloc::vec::Vec<f64> {
    errors.windows(2).map(|w| libm::log2(w[0] / w[1])).collect()
}

/// Slope through the origin, `Σ x y / Σ x²`.
pub fn proportional_fit(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: alloc::vec::Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y) + 1.5).abs() < 1e-12);
        assert!(halving_orders(&[1.0, 0.25, 0.0625]).iter().all(|o| (o - 2.0).abs() < 1e-12));
    }
}
