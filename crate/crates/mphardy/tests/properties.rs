//! Property tests for the algebraic invariants that hold for arbitrary
//! admissible inputs, not just the hand-picked examples.

use mphardy::config::{s1_config, ProblemConfig};
use mphardy::grid::{quadrature_of, Grid};
use mphardy::linalg::SymMatrix;
use mphardy::measure::{gamma_moment, WeightedGaussianMeasure};
use proptest::prelude::*;

fn pole_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(
        prop::collection::vec(-2.0f64..2.0, 3),
        n..=n,
    )
    .prop_filter("poles pairwise distinct", |poles| {
        for i in 0..poles.len() {
            for j in (i + 1)..poles.len() {
                let d: f64 = poles[i]
                    .iter()
                    .zip(&poles[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < 1e-2 {
                    return false;
                }
            }
        }
        true
    })
}

fn spd_diag_strategy() -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(0.2f64..4.0, 3).prop_map(|d| SymMatrix::diagonal(&d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn critical_coupling_increases_with_dimension(n in 3usize..12) {
        let lo = ProblemConfig { dim: n, ..s1_config(0.25) }.c0();
        let hi = ProblemConfig { dim: n + 1, ..s1_config(0.25) }.c0();
        prop_assert!(hi > lo);
    }

    #[test]
    fn drift_gap_bounded_for_random_configs(
        poles in (2usize..=4).prop_flat_map(pole_strategy),
        a in spd_diag_strategy(),
        x in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let cfg = ProblemConfig { poles, matrix_a: a, ..s1_config(0.25) };
        prop_assume!(cfg.ensure_valid().is_ok());
        let m = WeightedGaussianMeasure::new(&cfg).unwrap();
        prop_assert!(m.drift_gap(&x) <= m.drift_gap_bound() + 1e-10);
    }

    #[test]
    fn pole_sum_estimates_hold_everywhere(
        poles in (2usize..=5).prop_flat_map(pole_strategy),
        x in prop::collection::vec(-5.0f64..5.0, 3),
        pole_pick in 0usize..5,
    ) {
        let cfg = ProblemConfig { poles, ..s1_config(0.25) };
        prop_assume!(cfg.ensure_valid().is_ok());
        let m = WeightedGaussianMeasure::new(&cfg).unwrap();
        let i = pole_pick % cfg.pole_count();
        prop_assert!(m.appendix_check(i, &x).is_ok());
        prop_assert!(m.equivalence_check(i, std::slice::from_ref(&x)).is_ok());
    }

    #[test]
    fn equivalence_constants_are_ordered(
        poles in (1usize..=4).prop_flat_map(pole_strategy),
        a in spd_diag_strategy(),
    ) {
        let cfg = ProblemConfig { poles, matrix_a: a, ..s1_config(0.25) };
        prop_assume!(cfg.ensure_valid().is_ok());
        let m = WeightedGaussianMeasure::new(&cfg).unwrap();
        let b = m.equivalence_bounds(0);
        prop_assert!(b.c1 > 0.0 && b.c1 <= 1.0 + 1e-15);
        prop_assert!(b.c2 >= 1.0 - 1e-15);
        prop_assert!(b.alpha_tilde_min <= b.alpha_tilde_max + 1e-15);
    }

    #[test]
    fn quadrature_is_linear(
        coeffs in prop::collection::vec(-3.0f64..3.0, 4),
        scale in -2.0f64..2.0,
    ) {
        let grid = Grid::new(vec![0.0; 2], 1.5, 13).unwrap();
        let f = |x: &[f64]| coeffs[0] + coeffs[1] * x[0] + coeffs[2] * x[1] + coeffs[3] * x[0] * x[1];
        let g = |x: &[f64]| (x[0] - 0.3).cos();
        let combo = |x: &[f64]| scale * f(x) + g(x);
        let lhs = quadrature_of(&grid, combo);
        let rhs = scale * quadrature_of(&grid, f) + quadrature_of(&grid, g);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn radial_moment_recursion(beta in 0.0f64..3.0, dim in 3usize..6) {
        // ∫r^{2(β+1)}e^{−r²/2} = 2(β+N/2)·∫r^{2β}e^{−r²/2}.
        let low = gamma_moment(beta, dim).unwrap();
        let high = gamma_moment(beta + 1.0, dim).unwrap();
        let expect = 2.0 * (beta + dim as f64 / 2.0);
        prop_assert!((high / low - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn density_positive_and_log_concave_along_segments(
        x in prop::collection::vec(-4.0f64..4.0, 3),
        y in prop::collection::vec(-4.0f64..4.0, 3),
        lambda in 0.0f64..1.0,
    ) {
        let (cfg, m) = (s1_config(0.25), WeightedGaussianMeasure::new(&s1_config(0.25)).unwrap());
        let _ = cfg;
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let lx = m.density(&x).ln();
        let ly = m.density(&y).ln();
        let lm = m.density(&mid).ln();
        prop_assert!(m.density(&x) > 0.0);
        prop_assert!(lm >= lambda * lx + (1.0 - lambda) * ly - 1e-9);
    }
}
