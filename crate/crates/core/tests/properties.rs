use proptest::prelude::*;

use flatpencil_core::dressing::{build_kernel, solve, Kernel, PotentialSet, Quadrature, SolverOptions};
use flatpencil_core::functions::{Potential, Profile};
use flatpencil_core::geometry::{flatness_residual, MetricField};
use flatpencil_core::grid::{GridChart, Order, TensorField};
use flatpencil_core::lame::{frame_from_metric, tilde_frame};
use flatpencil_core::pencil::{combine, nijenhuis, AffinorField, PencilSpec};
use flatpencil_core::two_component::{lequa_residual, TwoComponentSpec};

fn square(points: usize) -> GridChart {
    GridChart::new(vec![0.5, 1.0], vec![1.5, 2.0], vec![points, points]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn partial_is_linear(a in -3.0..3.0f64, b in -3.0..3.0f64, k in 0.5..2.0f64) {
        let chart = square(17);
        let f = TensorField::sample_scalar(&chart, |u| (k * u[0]).sin() * u[1]).unwrap();
        let g = TensorField::sample_scalar(&chart, |u| (u[0] * u[1]).exp()).unwrap();
        for order in [Order::Second, Order::Fourth] {
            let lhs = f.linear_combination(a, &g, b).unwrap().partial(1, order).unwrap();
            let rhs = f.partial(1, order).unwrap().linear_combination(a, &g.partial(1, order).unwrap(), b).unwrap();
            let diff = lhs.linear_combination(1.0, &rhs, -1.0).unwrap().max_abs();
            prop_assert!(diff <= 1e-11 * (1.0 + rhs.max_abs()), "{diff:e}");
        }
    }

    #[test]
    fn fourth_order_partial_is_exact_on_quartics(c in prop::array::uniform5(-2.0..2.0f64)) {
        let chart = square(9);
        let poly = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
        let dpoly = |t: f64| c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * 4.0 * c[4]));
        let f = TensorField::sample_scalar(&chart, |u| poly(u[0])).unwrap();
        let d = f.partial(0, Order::Fourth).unwrap();
        let exact = TensorField::sample_scalar(&chart, |u| dpoly(u[0])).unwrap();
        let diff = d.linear_combination(1.0, &exact, -1.0).unwrap().max_abs();
        prop_assert!(diff <= 1e-11, "{diff:e}");
    }

    #[test]
    fn combination_is_bilinear(l1 in 0.5..2.0f64, l2 in 0.5..2.0f64, m in 0.1..1.0f64) {
        let chart = square(9);
        let g1 = MetricField::diagonal(&chart, |u, d| { d[0] = u[0]; d[1] = 1.0 + u[1] * u[1]; }).unwrap();
        let g2 = MetricField::diagonal(&chart, |u, d| { d[0] = 2.0 + u[1]; d[1] = m; }).unwrap();
        let pencil = PencilSpec::new(g1.clone(), g2.clone()).unwrap();
        let combined = combine(&pencil, l1, l2).unwrap();
        let expected = g1.contra().linear_combination(l1, g2.contra(), l2).unwrap();
        let diff = combined.contra().linear_combination(1.0, &expected, -1.0).unwrap().max_abs();
        prop_assert_eq!(diff, 0.0);
    }

    #[test]
    fn separated_diagonal_metrics_are_flat(a in 0.5..2.0f64, b in -0.4..0.4f64, c in 0.5..2.0f64) {
        // Each diagonal entry depending on its own coordinate only is flat.
        let chart = square(41);
        let g = MetricField::diagonal(&chart, |u, d| {
            d[0] = a + b * u[0] * u[0];
            d[1] = c * (0.3 * u[1]).exp();
        })
        .unwrap();
        let r = flatness_residual(&g, Order::Fourth).unwrap();
        prop_assert!(r <= 1e-7, "{r:e}");
    }

    #[test]
    fn diagonal_affinor_with_separated_eigenvalues_has_no_torsion(a in 0.5..2.0f64, b in 0.1..1.0f64) {
        let chart = square(21);
        let g1 = MetricField::diagonal(&chart, |u, d| { d[0] = a * u[0]; d[1] = (b * u[1]).exp(); }).unwrap();
        let g2 = MetricField::diagonal(&chart, |_, d| d.fill(1.0)).unwrap();
        let affinor = AffinorField::from_pencil(&PencilSpec::new(g1, g2).unwrap()).unwrap();
        let r = nijenhuis(&affinor, Order::Fourth).unwrap();
        prop_assert!(r <= 1e-9, "{r:e}");
    }

    #[test]
    fn tilde_frame_is_an_involution(scale in 0.5..3.0f64, rate in -1.0..1.0f64, k in 1.0..4.0f64) {
        let chart = square(13);
        let g = MetricField::diagonal(&chart, |u, d| { d[0] = 1.0; d[1] = 1.0 / (u[0] * u[0]); }).unwrap();
        let frame = frame_from_metric(&g, &[1.0, 1.0], Order::Fourth).unwrap();
        let prof = vec![Profile::Exp { scale, rate }, Profile::Constant(-k)];
        let back: Vec<Profile> = prof.iter().map(Profile::reciprocal).collect();
        let tilde = tilde_frame(&frame, &prof).unwrap();
        prop_assert_eq!(&tilde.eps, &vec![1.0, -1.0]);
        let round = tilde_frame(&tilde, &back).unwrap();
        prop_assert_eq!(&round.eps, &frame.eps);
        let dh = round.h.linear_combination(1.0, &frame.h, -1.0).unwrap().max_abs();
        let db = round.beta.linear_combination(1.0, &frame.beta, -1.0).unwrap().max_abs();
        prop_assert!(dh <= 1e-13 && db <= 1e-13, "{dh:e} {db:e}");
    }

    #[test]
    fn linear_equation_is_linear_in_the_potential(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64) {
        // ln(u1 - u2) and u1 + u2 both solve it for the identity profiles.
        let chart = GridChart::new(vec![3.5, 1.5], vec![4.5, 2.5], vec![11, 11]).unwrap();
        let potential = Potential::from_expr(&format!("{a:e}*ln(x - y) + {b:e}*(x + y) + {c:e}")).unwrap();
        let spec = TwoComponentSpec::new(chart, [-1.0, 1.0], [Profile::identity(), Profile::identity()], potential).unwrap();
        prop_assert!(lequa_residual(&spec) <= 1e-10);
    }

    #[test]
    fn weak_potentials_dress_to_first_order(eps in 1e-4..1e-3f64, s in -0.5..0.5f64) {
        let mut set = PotentialSet::zero(2);
        set.set(0, 1, Potential::Gaussian { amp: eps, cx: 0.5, cy: 1.0, sx: 1.0, sy: 1.0 }).unwrap();
        let quad = Quadrature { length: 10.0, panels: 20, points: 4 };
        let (k, _) = build_kernel(&set, &[0.1, 0.2], None, s, quad.length).unwrap();
        let sol = solve(&k, s, &quad, &SolverOptions::default()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let first = k.eval(i, j, s, s);
                prop_assert!((sol.k_diag[(i, j)] - first).abs() <= 10.0 * eps * eps);
            }
        }
    }
}
