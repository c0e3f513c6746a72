//! Reference values computed without the core crate: a fixed-step RK4
//! shooting solve of `f‴ + f f″ = 0` with Richardson extrapolation over a
//! step halving.

/// `f′(η_max)` for wall curvature `s`, integrated with `steps` RK4 steps.
fn rk4_edge_slope(s: f64, eta_max: f64, steps: usize) -> f64 {
    let h = eta_max / steps as f64;
    let rhs = |y: [f64; 3]| [y[1], y[2], -y[0] * y[2]];
    let mut y = [0.0, 0.0, s];
    for _ in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], y[2] + 0.5 * h * k1[2]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], y[2] + 0.5 * h * k2[2]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]]);
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y[1]
}

/// Wall curvature with `f′(η_max) = 1` at a fixed step count, by bisection.
fn shoot_bisect(eta_max: f64, steps: usize) -> f64 {
    let (mut lo, mut hi) = (0.1, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rk4_edge_slope(mid, eta_max, steps) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Oracle value of `f″(0)` and the step-halving change it was built from.
pub fn blasius_wall_curvature(eta_max: f64) -> (f64, f64) {
    let coarse = shoot_bisect(eta_max, 1200);
    let fine = shoot_bisect(eta_max, 2400);
    (fine + (fine - coarse) / 15.0, (fine - coarse).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_value() {
        let (s, change) = blasius_wall_curvature(12.0);
        assert!((s - 0.469_6).abs() < 1e-4, "{s}");
        assert!(change < 1e-8);
    }
}
