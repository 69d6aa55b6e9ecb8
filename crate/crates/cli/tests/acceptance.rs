//! Acceptance criteria, one verdict line each.

use std::process::{Command, ExitCode};

use serde_json::{json, Value};

use flatpencil::catalog::{entries, lookup, Expect};
use flatpencil::runner::{run, Overrides, Report};
use flatpencil::scenario::Scenario;
use flatpencil_core::dressing::{
    build_kernel, reduction_pde_residual, solve, FnKernel, Kernel, PotentialSet, Quadrature, SolverOptions,
};
use flatpencil_core::functions::{Potential, Profile};
use flatpencil_core::geometry::flatness_residual;
use flatpencil_core::grid::{GridChart, Order};
use flatpencil_core::two_component::{g_family, integrate_b, lequa_residual, log_spec};
use flatpencil_core::Error;

struct Line {
    ok: bool,
    text: String,
}

/// Measurements of one criterion.
#[derive(Default)]
struct Criterion {
    lines: Vec<Line>,
}

impl Criterion {
    fn at_most(&mut self, what: &str, value: f64, limit: f64) {
        self.lines.push(Line {
            ok: value <= limit,
            text: format!("{what} = {value:.3e} (<= {limit:.0e})"),
        });
    }

    fn at_least(&mut self, what: &str, value: f64, limit: f64) {
        self.lines.push(Line {
            ok: value >= limit,
            text: format!("{what} = {value:.3e} (>= {limit:.0e})"),
        });
    }

    fn holds(&mut self, what: &str, ok: bool) {
        self.lines.push(Line {
            ok,
            text: format!("{what}: {}", if ok { "yes" } else { "no" }),
        });
    }

    fn note(&mut self, text: impl Into<String>) {
        self.lines.push(Line {
            ok: true,
            text: format!("note: {}", text.into()),
        });
    }

    fn passed(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|l| l.ok)
    }
}

fn catalog(name: &str) -> Report {
    run(&lookup(name).unwrap(), Overrides::default()).unwrap_or_else(|e| panic!("{name}: {e:#}"))
}

fn scenario(value: Value) -> Report {
    run(&Scenario::from_value(value).unwrap(), Overrides::default()).unwrap()
}

fn check(report: &Report, name: &str) -> f64 {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("{}: no check {name}", report.kind))
        .residual
}

fn max_check(report: &Report, keep: impl Fn(&str) -> bool) -> f64 {
    report
        .checks
        .iter()
        .filter(|c| keep(&c.name))
        .map(|c| c.residual)
        .fold(0.0, f64::max)
}

fn s4_chart(points: usize) -> GridChart {
    GridChart::new(vec![3.5, 1.5], vec![4.5, 2.5], vec![points, points]).unwrap()
}

fn flatness_and_curvature() -> Criterion {
    let mut c = Criterion::default();
    c.at_most("euclidean flatness", check(&catalog("euclidean"), "flatness"), 1e-12);
    let polar = catalog("polar");
    c.at_most("polar flatness at h = 1e-2", check(&polar, "flatness"), 1e-6);
    let observed = polar.details["convergence"]["observed_order"].as_f64().unwrap();
    c.at_most("polar order-4 deviation", (observed - 4.0).abs(), 0.3);
    let second = run(
        &lookup("polar").unwrap(),
        Overrides {
            order: Some(2),
            tolerance: Some(1e-3),
            ..Default::default()
        },
    )
    .unwrap();
    let observed = second.details["convergence"]["observed_order"].as_f64().unwrap();
    c.at_most("polar order-2 deviation", (observed - 2.0).abs(), 0.3);
    c.at_most(
        "sphere K = 1 defect",
        check(&catalog("sphere"), "constant_curvature"),
        1e-5,
    );
    c
}

fn log_family() -> Criterion {
    let mut c = Criterion::default();
    let report = catalog("s4-log-pencil");
    for pair in ["family_G0_G1", "family_G0_G2", "family_G1_G2"] {
        c.at_most(pair, check(&report, pair), 1e-5);
    }
    let generic = log_spec(s4_chart(81), 0.3).unwrap();
    let r = flatness_residual(&g_family(&generic, 3).unwrap(), Order::Fourth).unwrap();
    c.at_least("G3 flatness at c = 0.3", r, 1e-2);
    let k = catalog("s4-constant-curvature");
    c.at_most("G3 K = 1/4 defect at c = 1/2", check(&k, "g3_constant_curvature"), 1e-5);
    let stated = GridChart::new(vec![2.0, 0.0], vec![3.0, 1.0], vec![21, 21]).unwrap();
    let degenerate = matches!(
        g_family(&log_spec(stated, 0.5).unwrap(), 3),
        Err(Error::DegenerateMetric { .. })
    );
    c.holds("G3 on [2,3]x[0,1] rejected as degenerate at u2 = 0", degenerate);
    c.note("family checked on [3.5,4.5]x[1.5,2.5]");
    c
}

fn two_component_criterion() -> Criterion {
    let mut c = Criterion::default();
    let spec = log_spec(s4_chart(21), 0.5).unwrap();
    c.at_most("log potential lequa residual", lequa_residual(&spec), 1e-10);
    let spec = log_spec(s4_chart(81), 0.5).unwrap();
    let (x0, y0) = (3.5, 1.5);
    let out = integrate_b(&spec, |x| (x - y0).sqrt(), |y| (x0 - y).sqrt(), Order::Fourth).unwrap();
    let exact = spec.b.as_ref().unwrap();
    let diff = (0..2)
        .map(|i| out.b[i].linear_combination(1.0, &exact[i], -1.0).unwrap().max_abs())
        .fold(0.0, f64::max);
    c.at_most("integrated b versus sqrt(u1 - u2)", diff, 1e-6);
    let (mut positive, mut negative, mut agree) = (0, 0, true);
    for name in [
        "s4-log-pencil",
        "s4-integrated",
        "s4-constant-potential",
        "s4-separable-potential",
        "s4-wrong-potential",
        "s4-wrong-b",
    ] {
        let criterion = &catalog(name).details["criterion"];
        agree &= criterion["agree"].as_bool().unwrap();
        if criterion["equations_pass"].as_bool().unwrap() {
            positive += 1;
        } else {
            negative += 1;
        }
    }
    c.holds("equations and direct check agree on every case", agree);
    c.at_least("positive cases", positive as f64, 3.0);
    c.at_least("negative cases", negative as f64, 2.0);
    c
}

fn lame_case(chart: Value, metric: &[&str], eps: &[f64], profiles: Option<Value>, tol: f64) -> Value {
    let mut s = json!({
        "kind": "lame", "tolerance": tol, "chart": chart, "metric": metric, "eps": eps, "coupling": 10.0,
    });
    if let Some(p) = profiles {
        s["profiles"] = p;
    }
    s
}

fn lame_agreement() -> Criterion {
    let mut c = Criterion::default();
    let linear = |offset: f64| json!({ "type": "linear", "slope": 1.0, "offset": offset });
    let exp = json!({ "type": "exp", "scale": 1.0, "rate": 1.0 });
    let constant = json!({ "type": "constant", "value": 2.0 });
    let cube = json!({ "lower": [0.0, 0.0, 0.0], "upper": [1.0, 1.0, 1.0], "points": 11 });
    let polar = json!({ "lower": [1.0, 0.0], "upper": [2.0, 1.0], "points": 101 });
    let sphere = json!({ "lower": [0.8, 0.0], "upper": [1.8, 1.0], "points": 41 });
    let diag_u = json!({ "lower": [3.0, 5.0, 7.0], "upper": [4.0, 6.0, 8.0], "points": 13 });
    let s4 = json!({ "lower": [3.5, 1.5], "upper": [4.5, 2.5], "points": 81 });
    let cases = vec![
        (
            "euclidean",
            lame_case(
                cube.clone(),
                &["1", "1", "1"],
                &[1.0; 3],
                Some(json!([linear(3.0), exp.clone(), constant.clone()])),
                1e-6,
            ),
        ),
        (
            "polar",
            lame_case(
                polar.clone(),
                &["1", "1/u1^2"],
                &[1.0, 1.0],
                Some(json!([linear(0.0), constant.clone()])),
                1e-6,
            ),
        ),
        (
            "sphere",
            lame_case(
                sphere,
                &["1", "1/sin(u1)^2"],
                &[1.0, 1.0],
                Some(json!([exp.clone(), constant.clone()])),
                1e-6,
            ),
        ),
        (
            "diag-u g1",
            lame_case(
                diag_u.clone(),
                &["u1", "u2", "u3"],
                &[1.0; 3],
                Some(json!([linear(0.0), linear(0.0), linear(0.0)])),
                1e-5,
            ),
        ),
        (
            "diag-u g2",
            lame_case(
                diag_u,
                &["1", "1", "1"],
                &[1.0; 3],
                Some(json!([linear(0.0), linear(0.0), linear(0.0)])),
                1e-5,
            ),
        ),
        (
            "G0",
            lame_case(
                s4.clone(),
                &["-1/(u1-u2)", "1/(u1-u2)"],
                &[-1.0, 1.0],
                Some(json!([linear(0.0), linear(0.0)])),
                1e-5,
            ),
        ),
        (
            "G1",
            lame_case(
                s4.clone(),
                &["-u1/(u1-u2)", "u2/(u1-u2)"],
                &[-1.0, 1.0],
                Some(json!([linear(0.0), linear(0.0)])),
                1e-5,
            ),
        ),
        (
            "G2",
            lame_case(
                s4.clone(),
                &["-u1^2/(u1-u2)", "u2^2/(u1-u2)"],
                &[-1.0, 1.0],
                Some(json!([linear(0.0), linear(0.0)])),
                1e-5,
            ),
        ),
        (
            "G3",
            lame_case(
                s4,
                &["-u1^3/(u1-u2)", "u2^3/(u1-u2)"],
                &[-1.0, 1.0],
                Some(json!([exp, linear(0.0)])),
                1e-5,
            ),
        ),
    ];
    let (mut flat, mut curved, mut tilde_flat, mut tilde_curved) = (0, 0, 0, 0);
    for (name, s) in cases {
        let report = scenario(s);
        let d = &report.details;
        let agree = d["agree"].as_bool().unwrap() && d["reduction"]["agree"].as_bool().unwrap();
        if d["flat"].as_bool().unwrap() {
            flat += 1;
        } else {
            curved += 1;
        }
        if d["reduction"]["tilde_flatness"].as_f64().unwrap() <= report.settings.tolerance {
            tilde_flat += 1;
        } else {
            tilde_curved += 1;
        }
        c.holds(
            &format!(
                "{name}: lame {:.1e} vs flatness {:.1e}, reduction {:.1e} vs tilde flatness {:.1e} agree",
                d["lame"]["max"].as_f64().unwrap(),
                d["flatness"].as_f64().unwrap(),
                d["reduction"]["residual"].as_f64().unwrap(),
                d["reduction"]["tilde_flatness"].as_f64().unwrap(),
            ),
            agree,
        );
    }
    c.holds(
        "both verdicts occur for flatness and for tilde flatness",
        flat * curved * tilde_flat * tilde_curved > 0,
    );
    c.at_most("coupling factor", 10.0, 10.0);
    c
}

fn nijenhuis_criterion() -> Criterion {
    let mut c = Criterion::default();
    for e in entries() {
        let report = catalog(e.name);
        let Some(n) = report.details.get("nijenhuis").and_then(Value::as_f64) else {
            continue;
        };
        if e.expect == Expect::Pass {
            c.at_most(&format!("{} Nijenhuis", e.name), n, 10.0 * report.settings.tolerance);
        }
    }
    let counter = catalog("nijenhuis-counter");
    c.at_least(
        "counter-case Nijenhuis",
        counter.details["nijenhuis"].as_f64().unwrap(),
        1e-2,
    );
    c
}

fn gaussian(amp: f64, cx: f64, cy: f64) -> Potential {
    Potential::Gaussian {
        amp,
        cx,
        cy,
        sx: 1.0,
        sy: 1.0,
    }
}

fn dressing_oracles() -> Criterion {
    let mut c = Criterion::default();
    let opts = SolverOptions::default();
    let zero = FnKernel {
        n: 3,
        f: |_: usize, _: usize, _: f64, _: f64| 0.0,
    };
    let sol = solve(&zero, 0.3, &Quadrature::default(), &opts).unwrap();
    c.at_most("zero kernel", sol.k_diag.amax(), 0.0);

    let alpha = 0.8;
    let rank_one = FnKernel {
        n: 2,
        f: move |i: usize, j: usize, s: f64, sp: f64| {
            if i == 0 && j == 0 {
                alpha * (-s - sp).exp()
            } else {
                0.0
            }
        },
    };
    let long = Quadrature {
        length: 30.0,
        panels: 60,
        points: 6,
    };
    let worst = [0.0f64, 0.4, 1.3]
        .iter()
        .map(|&s| {
            let e = (-2.0 * s).exp();
            let exact = alpha * e / (1.0 - alpha * e / 2.0);
            (solve(&rank_one, s, &long, &opts).unwrap().beta()[(0, 0)] - exact).abs()
        })
        .fold(0.0, f64::max);
    c.at_most("rank-one closed form", worst, 1e-9);

    let mut weak = PotentialSet::zero(2);
    weak.set(0, 1, gaussian(1e-3, 0.5, 0.8)).unwrap();
    let (s, length) = (-1.0, 12.0);
    let (k, _) = build_kernel(&weak, &[0.1, -0.2], None, s, length).unwrap();
    let quad = Quadrature {
        length,
        panels: 24,
        points: 6,
    };
    let sol = solve(&k, s, &quad, &opts).unwrap();
    let m = 6000;
    let h = length / m as f64;
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let conv: f64 = (0..=m)
                .map(|step| {
                    let q = s + step as f64 * h;
                    let w = if step == 0 || step == m {
                        1.0
                    } else if step % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    w * (0..2).map(|l| k.eval(i, l, s, q) * k.eval(l, j, q, s)).sum::<f64>()
                })
                .sum::<f64>()
                * h
                / 3.0;
            worst = worst.max((sol.k_diag[(i, j)] - k.eval(i, j, s, s) - conv).abs());
        }
    }
    c.at_most("two-term Neumann series", worst, 1e-8);

    let mut set = PotentialSet::zero(3);
    set.set(0, 1, gaussian(0.3, 1.0, 1.5)).unwrap();
    set.set(0, 2, gaussian(-0.2, 1.5, 1.0)).unwrap();
    set.set(1, 2, gaussian(0.25, 1.2, 1.2)).unwrap();
    let (k, _) = build_kernel(&set, &[0.1, 0.2, 0.3], None, 0.0, 10.0).unwrap();
    let betas: Vec<_> = [64, 128, 256]
        .iter()
        .map(|&panels| {
            let quad = Quadrature {
                length: 10.0,
                panels,
                points: 2,
            };
            solve(&k, 0.0, &quad, &opts).unwrap().beta()
        })
        .collect();
    let ratio = (&betas[0] - &betas[1]).amax() / (&betas[1] - &betas[2]).amax();
    c.at_most(
        "panel-doubling ratio deviation from 16",
        (ratio / 16.0 - 1.0).abs(),
        0.3,
    );
    c
}

fn reduced_dressing() -> Criterion {
    let mut c = Criterion::default();
    let report = catalog("dressing-reduced");
    let lame = max_check(&report, |n| n.starts_with("lame_") || n == "reduction");
    c.at_most("Lamé and reduction residuals", lame, 1e-5);
    c.at_most(
        "pencil compatibility",
        max_check(&report, |n| n.starts_with("pencil_")),
        1e-4,
    );
    c
}

fn reduction_pde() -> Criterion {
    let mut c = Criterion::default();
    let probes = flatpencil_core::dressing::random_probes(7, 200, [-3.0, 3.0, -3.0, 3.0]);
    let off_axis: Vec<_> = probes.iter().copied().filter(|(x, y)| (x - y).abs() > 1e-3).collect();

    let mut sep = PotentialSet::zero(2);
    sep.set(
        0,
        1,
        Potential::Separable {
            a: Profile::Exp { scale: 0.5, rate: -0.7 },
            b: Profile::Linear {
                slope: 0.3,
                offset: 1.0,
            },
        },
    )
    .unwrap();
    sep.set(0, 0, Potential::from_expr("sin(x) - sin(y)").unwrap()).unwrap();
    sep.set(1, 1, Potential::from_expr("0.4*(x^3 - y^3)").unwrap()).unwrap();
    let constant = [Profile::Constant(2.0), Profile::Constant(-1.5)];
    let r = reduction_pde_residual(&sep, &constant, &probes).unwrap();
    c.at_most(
        "constant profile, separable potential: off-diagonal",
        offdiag_max(&r),
        1e-10,
    );
    c.at_most("constant profile, separable potential: diagonal", diag_max(&r), 1e-10);

    let mut log = PotentialSet::zero(2);
    log.set(0, 1, Potential::Log { c: 0.7 }).unwrap();
    log.set(0, 0, Potential::SkewLog { c: -0.4 }).unwrap();
    log.set(1, 1, Potential::SkewLog { c: 1.3 }).unwrap();
    let linear = [Profile::identity(), Profile::identity()];
    let r = reduction_pde_residual(&log, &linear, &off_axis).unwrap();
    c.at_most("linear profile, log potential: off-diagonal", offdiag_max(&r), 1e-10);
    c.at_most("linear profile, skew log potential: diagonal", diag_max(&r), 1e-10);

    let mut wrong = PotentialSet::zero(2);
    wrong.set(0, 1, Potential::from_expr("x*y").unwrap()).unwrap();
    let r = reduction_pde_residual(&wrong, &linear, &probes).unwrap();
    c.at_least("linear profile, potential xy", r.max, 1e-2);
    let mut wrong = PotentialSet::zero(2);
    wrong.set(0, 1, gaussian(1.0, 0.0, 0.0)).unwrap();
    let r = reduction_pde_residual(&wrong, &constant, &probes).unwrap();
    c.at_least("constant profile, Gaussian potential", r.max, 1e-2);
    c
}

fn offdiag_max(r: &flatpencil_core::dressing::ReductionPdeReport) -> f64 {
    r.offdiag.iter().map(|(_, v)| *v).fold(0.0, f64::max)
}

fn diag_max(r: &flatpencil_core::dressing::ReductionPdeReport) -> f64 {
    r.diag.iter().map(|(_, v)| *v).fold(0.0, f64::max)
}

fn dubrovin_gates() -> Criterion {
    let mut c = Criterion::default();
    let (mut pass, mut fail) = (0, 0);
    for name in ["dubrovin-quadratic", "dubrovin-linear", "dubrovin-cubic"] {
        let d = catalog(name).details;
        let pencil = d["pencil"]["passed"].as_bool().unwrap_or(false);
        if pencil {
            pass += 1;
        } else {
            fail += 1;
        }
        c.holds(
            &format!("{name}: gates agree with pencil verdict ({pencil})"),
            d["agree"].as_bool().unwrap(),
        );
    }
    c.at_least("flat cases", pass as f64, 2.0);
    c.at_least("non-flat cases", fail as f64, 1.0);
    c
}

fn determinism() -> Criterion {
    let mut c = Criterion::default();
    let dir = tempfile::tempdir().unwrap();
    for name in ["reduce-log", "dressing-reduced", "s4-integrated"] {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(
            &path,
            format!(r#"{{"kind": "catalog", "entry": "{name}", "seed": 11}}"#),
        )
        .unwrap();
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let out = Command::new(env!("CARGO_BIN_EXE_flatpencil"))
                    .arg("run")
                    .arg(&path)
                    .output()
                    .unwrap();
                assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        c.holds(
            &format!("{name}: byte-identical reports"),
            !runs[0].is_empty() && runs[0] == runs[1],
        );
    }
    c
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Criterion); 10] = [
        ("flatness and constant curvature", flatness_and_curvature),
        ("log pencil family", log_family),
        ("two-component criterion", two_component_criterion),
        ("Lamé and reduction agreement", lame_agreement),
        ("Nijenhuis torsion", nijenhuis_criterion),
        ("dressing solver oracles", dressing_oracles),
        ("reduced dressing pencil", reduced_dressing),
        ("reduction equations for potentials", reduction_pde),
        ("Dubrovin relations", dubrovin_gates),
        ("deterministic reports", determinism),
    ];
    let mut failed = 0;
    for (k, (title, f)) in criteria.iter().enumerate() {
        let c = f();
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("criterion {:>2}: {verdict}  {title}", k + 1);
        for l in &c.lines {
            println!("    [{}] {}", if l.ok { "ok" } else { "xx" }, l.text);
        }
        if !c.passed() {
            failed += 1;
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
