use approx::assert_relative_eq;
use layerkit_core::blasius::{solve_blasius, LeadingFlow};
use layerkit_core::grid::Grid1D;
use layerkit_core::kernel::{apply_l_par, compute_k, degree, project_perp, ParallelProfiles};
use layerkit_core::u0::{b_norm, compact_bump, solve_l_delta, LdeltaOperator};
use proptest::prelude::*;

fn profiles() -> ParallelProfiles {
    let flow = LeadingFlow::new(solve_blasius(1e-10, 12.0).unwrap(), 1.0, 1.0).unwrap();
    ParallelProfiles::from_flow(&flow, &Grid1D::uniform(20.0, 401).unwrap()).unwrap()
}

fn bump(pp: &ParallelProfiles, lo: f64, width: f64) -> Vec<f64> {
    pp.grid.sample(|y| compact_bump(y, lo, lo + width))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_idempotent(lo in 0.2f64..6.0, width in 0.5f64..4.0, c in -3.0f64..3.0) {
        let pp = profiles();
        let u: Vec<f64> = bump(&pp, lo, width).iter().zip(&pp.u_par).map(|(b, p)| b + c * p).collect();
        let (once, _) = project_perp(&u, &pp).unwrap();
        let (twice, kappa) = project_perp(&once, &pp).unwrap();
        prop_assert!(kappa.abs() < 1e-12);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, lo in 0.2f64..6.0) {
        let pp = profiles();
        let k = compute_k(&pp).unwrap().values;
        let f = bump(&pp, lo, 2.0);
        let g: Vec<f64> = pp.grid.nodes().iter().map(|y| (-y).exp()).collect();
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let lhs = degree(&mix, &k, &pp.grid).unwrap();
        let rhs = a * degree(&f, &k, &pp.grid).unwrap() + b * degree(&g, &k, &pp.grid).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn b_norm_is_homogeneous(c in -5.0f64..5.0, lo in 0.5f64..4.0) {
        prop_assume!(c.abs() > 1e-3);
        let pp = profiles();
        let v_e = vec![0.8; pp.len()];
        let op = LdeltaOperator::new(&pp.grid, v_e.clone(), vec![0.0; pp.len()], 0.0, 1e-4, 4).unwrap();
        let f = bump(&pp, lo, 2.0);
        let scaled: Vec<f64> = f.iter().map(|v| c * v).collect();
        let base = b_norm(&solve_l_delta(&op, &f, &pp).unwrap(), &v_e).unwrap().total;
        let other = b_norm(&solve_l_delta(&op, &scaled, &pp).unwrap(), &v_e).unwrap().total;
        prop_assert!((other - c.abs() * base).abs() <= 1e-9 * other.max(1e-300));
    }
}

#[test]
fn range_of_the_parallel_operator_has_zero_degree() {
    let pp = profiles();
    let k = compute_k(&pp).unwrap().values;
    let u = bump(&pp, 1.0, 3.0);
    let lu = apply_l_par(&u, &pp, 4).unwrap();
    let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert_relative_eq!(degree(&lu, &k, &pp.grid).unwrap() / scale, 0.0, epsilon = 1e-6);
}
