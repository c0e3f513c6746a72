use approx::assert_abs_diff_eq;
use layerkit_core::blasius::{solve_blasius, solve_blasius_with, verify_blasius_signs, LeadingFlow};

/// Classical RK4 on `f‴ = −f f″` from `(0, 0, s)`; returns `f′(eta_max)`.
fn edge_slope(s: f64, eta_max: f64, steps: usize) -> f64 {
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

fn shoot(eta_max: f64, steps: usize) -> f64 {
    let (mut lo, mut hi) = (0.1, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if edge_slope(mid, eta_max, steps) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn wall_curvature_matches_step_halved_shooting() {
    let coarse = shoot(12.0, 1500);
    let fine = shoot(12.0, 3000);
    let oracle = fine + (fine - coarse) / 15.0;
    let sol = solve_blasius(1e-10, 12.0).unwrap();
    assert_abs_diff_eq!(sol.shoot_value, oracle, epsilon = 1e-8);
    assert_abs_diff_eq!(sol.shoot_value, 0.469_600, epsilon = 1e-6);
}

#[test]
fn step_count_does_not_move_the_solution() {
    let a = solve_blasius_with(1e-10, 12.0, 2048).unwrap();
    let b = solve_blasius_with(1e-10, 12.0, 8192).unwrap();
    assert_abs_diff_eq!(a.shoot_value, b.shoot_value, epsilon = 1e-9);
    assert_abs_diff_eq!(a.displacement(), b.displacement(), epsilon = 1e-8);
}

#[test]
fn displacement_matches_tabulated_value() {
    let sol = solve_blasius(1e-10, 12.0).unwrap();
    // lim (η − f) for f‴ + f f″ = 0 is 1.2168 (= 1.7208 / √2).
    assert_abs_diff_eq!(sol.displacement(), 1.216_78, epsilon = 1e-4);
}

#[test]
fn signs_hold() {
    let r = verify_blasius_signs(&solve_blasius(1e-10, 12.0).unwrap());
    assert!(r.f2_zero_positive && r.f1_in_unit_interval && r.f2_nonnegative && r.f3_nonpositive);
}

#[test]
fn far_field_vertical_velocity_is_positive() {
    for x0 in [0.5, 1.0, 2.0] {
        let flow = LeadingFlow::new(solve_blasius(1e-10, 12.0).unwrap(), x0, 1.0).unwrap();
        assert!(flow.v_inf(0.0) > 0.0);
        assert!(flow.v_inf(0.3) < flow.v_inf(0.0));
    }
}
