use flatpencil_core::functions::{Potential, Profile};
use flatpencil_core::geometry::{constant_curvature_residual, flatness_residual, MetricField};
use flatpencil_core::grid::{GridChart, Order};
use flatpencil_core::lame::{frame_from_metric, lame_residuals, reduction_residual};
use flatpencil_core::pencil::{check_compatible, CompatMode, PencilSpec};
use flatpencil_core::two_component::{
    criterion_check, g_family, integrate_b, lequa_residual, log_spec, TwoComponentSpec,
};
use flatpencil_core::Error;

fn chart(points: usize) -> GridChart {
    GridChart::new(vec![3.5, 1.5], vec![4.5, 2.5], vec![points, points]).unwrap()
}

#[test]
fn log_potential_solves_linear_equation() {
    let spec = log_spec(chart(21), 0.5).unwrap();
    assert!(lequa_residual(&spec) <= 1e-10);
    let spec = log_spec(chart(21), -1.7).unwrap();
    assert!(lequa_residual(&spec) <= 1e-10);
}

#[test]
fn edges_reproduce_square_root() {
    let spec = log_spec(chart(81), 0.5).unwrap();
    let (x0, y0) = (3.5, 1.5);
    let out = integrate_b(&spec, |x| (x - y0).sqrt(), |y| (x0 - y).sqrt(), Order::Fourth).unwrap();
    let exact = spec.b.as_ref().unwrap();
    for i in 0..2 {
        let diff = out.b[i].linear_combination(1.0, &exact[i], -1.0).unwrap().max_abs();
        assert!(diff <= 1e-6, "b{}: {diff:e}", i + 1);
    }
    assert!(out.residual < 1e-6);
}

#[test]
fn family_members_are_pairwise_flat_compatible() {
    let spec = log_spec(chart(81), 0.5).unwrap();
    let g: Vec<MetricField> = (0..3).map(|n| g_family(&spec, n).unwrap()).collect();
    for a in 0..3 {
        for b in (a + 1)..3 {
            let pencil = PencilSpec::new(g[a].clone(), g[b].clone()).unwrap();
            let report = check_compatible(&pencil, CompatMode::Flat, Order::Fourth, 1e-5).unwrap();
            assert!(report.passed, "G{a}, G{b}: {:?}", report.checks);
        }
    }
}

#[test]
fn third_member_has_constant_curvature() {
    let spec = log_spec(chart(81), 0.5).unwrap();
    let g3 = g_family(&spec, 3).unwrap();
    let r = constant_curvature_residual(&g3, 0.25, Order::Fourth).unwrap();
    assert!(r <= 1e-5, "{r:e}");
    let generic = log_spec(chart(81), 0.3).unwrap();
    let r = flatness_residual(&g_family(&generic, 3).unwrap(), Order::Fourth).unwrap();
    assert!(r >= 1e-2, "{r:e}");
}

#[test]
fn stated_box_touches_degenerate_locus() {
    let chart = GridChart::new(vec![2.0, 0.0], vec![3.0, 1.0], vec![21, 21]).unwrap();
    let spec = log_spec(chart, 0.5).unwrap();
    assert!(matches!(g_family(&spec, 3), Err(Error::DegenerateMetric { .. })));
}

#[test]
fn integrated_pairs_are_flat_for_random_edges() {
    let spec = log_spec(chart(81), 0.3).unwrap();
    let out = integrate_b(&spec, |x| 1.0 + 0.2 * x.sin(), |y| 2.0 + 0.1 * y * y, Order::Fourth).unwrap();
    let mut spec = spec;
    spec.b = Some(out.b);
    let report = criterion_check(&spec, Order::Fourth, 1e-5).unwrap();
    assert!(
        report.equations_pass && report.pencil.passed && report.agree,
        "{report:?}"
    );
}

#[test]
fn wrong_potential_breaks_both_sides() {
    let spec = TwoComponentSpec::new(
        chart(81),
        [-1.0, 1.0],
        [Profile::identity(), Profile::identity()],
        Potential::from_expr("0.05 * x * y").unwrap(),
    )
    .unwrap();
    let out = integrate_b(&spec, |_| 1.0, |_| 1.0, Order::Fourth).unwrap();
    let mut spec = spec;
    spec.b = Some(out.b);
    let report = criterion_check(&spec, Order::Fourth, 1e-5).unwrap();
    assert!(
        !report.equations_pass && !report.pencil.passed && report.agree,
        "{report:?}"
    );
}

#[test]
fn frames_of_pairs_solve_lame_system() {
    let spec = log_spec(chart(81), 0.5).unwrap();
    let g2 = g_family(&spec, 0).unwrap();
    let frame = frame_from_metric(&g2, &[-1.0, 1.0], Order::Fourth).unwrap();
    let r = lame_residuals(&frame, Order::Fourth).unwrap();
    assert!(r.max < 1e-5, "{r:?}");
    let red = reduction_residual(&frame, &[Profile::identity(), Profile::identity()], Order::Fourth).unwrap();
    assert!(red < 1e-5, "{red:e}");
}
