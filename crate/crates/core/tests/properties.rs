use lasso_zero_core::bp::{check_certificate, solve_bp, ToleranceConfig};
use lasso_zero_core::design::{DesignMatrix, ResponseVector};
use lasso_zero_core::gev::GevParams;
use lasso_zero_core::lasso_zero::{apply_threshold, median_aggregate, ThresholdRule};
use lasso_zero_core::rng::{gaussian_matrix, gaussian_vector, SeededRng};
use lasso_zero_core::stats::{median, upper_quantile, upper_quantile_rank};
use proptest::prelude::*;

fn values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1e3f64..1e3, 1..40)
}

proptest! {
    #[test]
    fn median_is_order_free_and_central(mut v in values()) {
        let m = median(&v);
        let below = v.iter().filter(|x| **x <= m).count();
        let above = v.iter().filter(|x| **x >= m).count();
        prop_assert!(2 * below >= v.len() && 2 * above >= v.len());
        v.reverse();
        prop_assert_eq!(median(&v), m);
    }

    #[test]
    fn median_aggregate_is_columnwise(m in 1usize..8, p in 1usize..6, seed in any::<u64>()) {
        let b = gaussian_matrix(&SeededRng::new(seed), m, p);
        let agg = median_aggregate(&b);
        for (j, a) in agg.iter().enumerate() {
            let col: Vec<f64> = b.column(j).iter().copied().collect();
            prop_assert_eq!(*a, median(&col));
        }
    }

    #[test]
    fn thresholds(v in values(), tau in 0.0f64..500.0) {
        let hard = apply_threshold(&v, tau, ThresholdRule::Hard);
        let soft = apply_threshold(&v, tau, ThresholdRule::Soft);
        for ((x, h), s) in v.iter().zip(&hard).zip(&soft) {
            if x.abs() <= tau {
                prop_assert!(*h == 0.0 && *s == 0.0);
            } else {
                prop_assert_eq!(h, x);
                prop_assert!((s.abs() - (x.abs() - tau)).abs() <= 1e-9 * x.abs());
                prop_assert!(s.signum() == x.signum() || *s == 0.0);
            }
        }
        prop_assert_eq!(apply_threshold(&hard, tau, ThresholdRule::Hard), hard);
    }

    #[test]
    fn upper_quantile_rank_bounds(r in 1usize..5000, alpha in 0.0001f64..0.9999) {
        let k = upper_quantile_rank(r, alpha);
        prop_assert!((1..=r).contains(&k));
        prop_assert!(upper_quantile_rank(r, alpha / 2.0) >= k);
    }

    #[test]
    fn upper_quantile_exceedances(v in values(), alpha in 0.01f64..0.99) {
        let q = upper_quantile(&v, alpha);
        let above = v.iter().filter(|x| **x > q).count() as f64;
        prop_assert!(above <= alpha * v.len() as f64 + 1e-9);
    }

    #[test]
    fn gev_inverse_cdf_round_trip(mu in -5.0f64..5.0, sigma in 0.1f64..5.0, xi in -0.4f64..0.4, u in 0.001f64..0.999) {
        let g = GevParams::new(mu, sigma, xi);
        let x = g.inverse_cdf(u);
        prop_assert!((g.cdf(x) - u).abs() < 1e-9);
        prop_assert!((g.upper_quantile(1.0 - u) - x).abs() < 1e-9 * (1.0 + x.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn basis_pursuit_certificates(n in 2usize..12, extra in 0usize..12, seed in any::<u64>(), scale in 0.01f64..100.0) {
        let rng = SeededRng::new(seed);
        let x = DesignMatrix::new(gaussian_matrix(&rng.derive(1), n, n + extra)).unwrap();
        let y = ResponseVector::new(gaussian_vector(&rng.derive(2), n) * scale).unwrap();
        let tol = ToleranceConfig::default();
        let sol = solve_bp(&x, &y, &tol).unwrap();
        prop_assert!(check_certificate(&x, None, &y, &sol.beta, &[], &sol.dual, &tol).passed());
        // scaling the response scales the solution
        let sol2 = solve_bp(&x, &y.scaled(3.0), &tol).unwrap();
        let l1 = |b: &[f64]| b.iter().map(|v| v.abs()).sum::<f64>();
        prop_assert!((l1(&sol2.beta) - 3.0 * l1(&sol.beta)).abs() <= 1e-7 * (1.0 + l1(&sol2.beta)));
    }
}
