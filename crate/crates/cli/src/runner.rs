//! Scenario execution.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use flatpencil_core::dressing::{
    default_phi, dress_frame, random_probes, reduction_identity_residual, reduction_pde_residual,
    verify_tilde_consistency, PotentialKernel, PotentialSet, Quadrature, SolverOptions,
};
use flatpencil_core::expr::Expr;
use flatpencil_core::functions::{Potential, Profile, ProfileSpec};
use flatpencil_core::geometry::{
    constant_curvature_residual, convergence_study, curvature_defect_field, flatness_residual, MetricField,
};
use flatpencil_core::grid::{GridChart, Order, TensorField, Variance};
use flatpencil_core::lame::{
    frame_from_metric, lame_residuals, metric_pair_from_frame, reduction_residual, tilde_frame, LameFrame,
};
use flatpencil_core::pencil::{
    check_almost_compatible, check_compatible, check_diagonal_form, dubrovin_construct, generate_from_potentials,
    nijenhuis, nonsingularity_of, AffinorField, CompatMode, PencilReport, PencilSpec,
};
use flatpencil_core::report::{all_pass, Check};
use flatpencil_core::two_component::{build_pair, criterion_check, g_family, integrate_b, TwoComponentSpec};

use crate::catalog;
use crate::scenario::{BSpec, ChartSpec, MetricSpec, ModeSpec, PotentialEntry, ProbeSpec, Scenario, Task};

/// Command-line overrides of the scenario settings.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub order: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub tolerance: f64,
    pub order: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl GridInfo {
    fn of(chart: &GridChart) -> Self {
        Self {
            lower: chart.lower().to_vec(),
            upper: chart.upper().to_vec(),
            points: chart.points().to_vec(),
            spacing: (0..chart.dim()).map(|a| chart.spacing(a)).collect(),
        }
    }
}

/// Per-node data for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: String,
    pub settings: Settings,
    pub scenario: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridInfo>,
    pub checks: Vec<Check>,
    pub details: Value,
    pub verdict: String,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

/// What a kind produces before it is wrapped into a [`Report`].
struct Outcome {
    grid: Option<GridInfo>,
    checks: Vec<Check>,
    details: Value,
    tables: Vec<Table>,
}

impl Outcome {
    fn new(chart: Option<&GridChart>) -> Self {
        Self {
            grid: chart.map(GridInfo::of),
            checks: Vec::new(),
            details: json!({}),
            tables: Vec::new(),
        }
    }
}

pub fn run(scenario: &Scenario, overrides: Overrides) -> Result<Report> {
    if let Task::Catalog { entry } = &scenario.task {
        let mut inner = catalog::lookup(entry)?;
        // Settings given next to the catalog reference win over the entry's own.
        let c = &scenario.common;
        inner.common.tolerance = c.tolerance.or(inner.common.tolerance);
        inner.common.order = c.order.or(inner.common.order);
        inner.common.seed = c.seed.or(inner.common.seed);
        return run(&inner, overrides);
    }
    let settings = Settings {
        tolerance: overrides
            .tolerance
            .or(scenario.common.tolerance)
            .unwrap_or_else(|| scenario.task.default_tolerance()),
        order: overrides.order.or(scenario.common.order).unwrap_or(4),
        seed: overrides.seed.or(scenario.common.seed).unwrap_or(0),
    };
    if !(settings.tolerance >= 0.0) {
        bail!("tolerance must be a non-negative number");
    }
    let order = Order::from_int(settings.order as usize)?;
    let outcome =
        execute(&scenario.task, order, &settings).with_context(|| format!("{} failed", scenario.task.kind()))?;
    let verdict = if all_pass(&outcome.checks) { "pass" } else { "fail" };
    Ok(Report {
        name: scenario.common.name.clone(),
        kind: scenario.task.kind().to_string(),
        settings,
        scenario: scenario.to_value(),
        grid: outcome.grid,
        checks: outcome.checks,
        details: outcome.details,
        verdict: verdict.to_string(),
        tables: outcome.tables,
    })
}

fn parse_all(sources: &[String], dim: usize) -> Result<Vec<Expr>> {
    sources
        .iter()
        .map(|s| Expr::parse_coords(s, dim).with_context(|| format!("cannot parse `{s}`")))
        .collect()
}

fn build_metric(spec: &MetricSpec, chart: &GridChart) -> Result<MetricField> {
    let n = chart.dim();
    Ok(match spec {
        MetricSpec::Diagonal(d) => {
            if d.len() != n {
                bail!("diagonal metric needs {n} entries");
            }
            let e = parse_all(d, n)?;
            MetricField::diagonal(chart, |u, out| {
                for (o, e) in out.iter_mut().zip(&e) {
                    *o = e.eval(u);
                }
            })?
        }
        MetricSpec::Contra(rows) => {
            let flat = square(rows, n)?;
            let e = parse_all(&flat, n)?;
            MetricField::from_closure(chart, |u, out| {
                for (o, e) in out.iter_mut().zip(&e) {
                    *o = e.eval(u);
                }
            })?
        }
    })
}

fn square<T: Clone>(rows: &[Vec<T>], n: usize) -> Result<Vec<T>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        bail!("expected a {n}×{n} matrix");
    }
    Ok(rows.iter().flatten().cloned().collect())
}

fn vector_closure(sources: &[String], count: usize, dim: usize) -> Result<impl Fn(&[f64], &mut [f64])> {
    if sources.len() != count {
        bail!("expected {count} components");
    }
    let e = parse_all(sources, dim)?;
    Ok(move |u: &[f64], out: &mut [f64]| {
        for (o, e) in out.iter_mut().zip(&e) {
            *o = e.eval(u);
        }
    })
}

fn profiles(specs: &[ProfileSpec]) -> Result<Vec<Profile>> {
    specs.iter().map(|p| Ok(p.build()?)).collect()
}

fn potential_set(dim: usize, entries: &[PotentialEntry]) -> Result<PotentialSet> {
    let mut set = PotentialSet::zero(dim);
    for e in entries {
        if e.i == 0 || e.j == 0 {
            bail!("potential indices are 1-based");
        }
        set.set(e.i - 1, e.j - 1, e.potential.build()?)?;
    }
    Ok(set)
}

fn pencil_checks(prefix: &str, report: &PencilReport) -> Vec<Check> {
    report
        .checks
        .iter()
        .map(|c| Check {
            name: format!("{prefix}{}", c.name),
            ..c.clone()
        })
        .collect()
}

/// Nijenhuis torsion of the pencil's affinor; `None` when it cannot be formed.
fn pencil_nijenhuis(pencil: &PencilSpec, order: Order) -> Option<f64> {
    AffinorField::from_pencil(pencil)
        .and_then(|a| nijenhuis(&a, order))
        .ok()
}

fn failed_check(name: &str) -> Check {
    Check {
        name: name.to_string(),
        residual: f64::INFINITY,
        tolerance: 0.0,
        passed: false,
    }
}

fn coords_header(chart: &GridChart) -> Vec<String> {
    (1..=chart.dim()).map(|a| format!("u{a}")).collect()
}

/// One row per node: coordinates followed by every component of each field.
fn table(name: &str, chart: &GridChart, fields: &[(&str, &TensorField)]) -> Table {
    let mut header = coords_header(chart);
    for (label, f) in fields {
        if f.components() == 1 {
            header.push(label.to_string());
        } else {
            header.extend((0..f.components()).map(|c| format!("{label}_{c}")));
        }
    }
    let rows = (0..chart.len())
        .map(|node| {
            let mut row = chart.node_coords(node);
            for (_, f) in fields {
                row.extend_from_slice(f.node(node));
            }
            row
        })
        .collect();
    Table {
        name: name.to_string(),
        header,
        rows,
    }
}

fn frame_table(name: &str, frame: &LameFrame) -> Table {
    table(name, frame.chart(), &[("H", &frame.h), ("beta", &frame.beta)])
}

fn execute(task: &Task, order: Order, settings: &Settings) -> Result<Outcome> {
    let tol = settings.tolerance;
    match task {
        Task::CheckFlat {
            chart,
            metric,
            curvature,
            convergence,
        } => check_flat(chart, metric, *curvature, *convergence, order, tol),
        Task::CheckPencil {
            chart,
            g1,
            g2,
            mode,
            lambdas,
            nonsingular_threshold,
        } => {
            let grid = chart.build()?;
            let mut pencil = PencilSpec::new(build_metric(g1, &grid)?, build_metric(g2, &grid)?)?;
            if let Some(l) = lambdas {
                pencil = pencil.with_lambdas(l.clone());
            }
            let report = match mode {
                ModeSpec::Almost => check_almost_compatible(&pencil, order, tol)?,
                ModeSpec::Flat => check_compatible(&pencil, CompatMode::Flat, order, tol)?,
                ModeSpec::General => check_compatible(&pencil, CompatMode::General, order, tol)?,
                ModeSpec::ConstantCurvature { k1, k2 } => {
                    check_compatible(&pencil, CompatMode::ConstantCurvature { k1: *k1, k2: *k2 }, order, tol)?
                }
            };
            let affinor = AffinorField::from_pencil(&pencil)?;
            let nonsingular = nonsingularity_of(&affinor, nonsingular_threshold.unwrap_or(1e-8));
            let mut out = Outcome::new(Some(&grid));
            out.checks = pencil_checks("", &report);
            out.details = json!({
                "pencil": report,
                "nonsingularity": nonsingular,
                "nijenhuis": nijenhuis(&affinor, order)?,
            });
            out.tables.push(eigen_table(&grid, &affinor));
            Ok(out)
        }
        Task::Nijenhuis { chart, g1, g2, affinor } => {
            let grid = chart.build()?;
            let n = grid.dim();
            let field = match (g1, g2, affinor) {
                (Some(g1), Some(g2), None) => {
                    let pencil = PencilSpec::new(build_metric(g1, &grid)?, build_metric(g2, &grid)?)?;
                    AffinorField::from_pencil(&pencil)?
                }
                (None, None, Some(rows)) => {
                    let v =
                        vector_closure(&square(rows, n)?, n * n, n).map_err(|_| anyhow!("affinor must be {n}×{n}"))?;
                    let t = TensorField::sample(&grid, &[Variance::Upper, Variance::Lower], &[], |u, out| v(u, out))?;
                    AffinorField::from_field(t)?
                }
                _ => bail!("give either g1 and g2, or affinor"),
            };
            let residual = nijenhuis(&field, order)?;
            let mut out = Outcome::new(Some(&grid));
            out.checks.push(Check::at_most("nijenhuis", residual, tol));
            out.details = json!({
                "nijenhuis": residual,
                "nonsingularity": nonsingularity_of(&field, 1e-8),
            });
            out.tables.push(eigen_table(&grid, &field));
            Ok(out)
        }
        Task::DiagonalForm { chart, g1, g2 } => {
            let grid = chart.build()?;
            let pencil = PencilSpec::new(build_metric(g1, &grid)?, build_metric(g2, &grid)?)?;
            let form = check_diagonal_form(&pencil, order, tol)?;
            let mut out = Outcome::new(Some(&grid));
            out.checks.push(Check::at_most("diagonal_form", form.residual, tol));
            out.details = json!({ "residual": form.residual });
            out.tables.push(table("eigenfunctions", &grid, &[("f", &form.f)]));
            Ok(out)
        }
        Task::Dubrovin { chart, eta, f, c } => {
            let grid = chart.build()?;
            let n = grid.dim();
            let eta = square(eta, n)?;
            let g2 = MetricField::from_closure(&grid, |_, out| out.copy_from_slice(&eta))?;
            let f = vector_closure(f, n, n)?;
            let (g1, report) = dubrovin_construct(&g2, f, *c, order, tol)?;
            let mut out = Outcome::new(Some(&grid));
            out.checks = report.gates.clone();
            match &report.pencil {
                Some(p) => out.checks.extend(pencil_checks("pencil_", p)),
                None => out.checks.push(failed_check("pencil_constructed")),
            }
            out.details = serde_json::to_value(&report)?;
            out.details["nijenhuis"] = json!(PencilSpec::new(g1, g2).ok().and_then(|p| pencil_nijenhuis(&p, order)));
            Ok(out)
        }
        Task::Potentials { chart, eta, h } => {
            let grid = chart.build()?;
            let n = grid.dim();
            let eta = square(eta, n)?;
            let h = vector_closure(h, n, n)?;
            let (pencil, report) = generate_from_potentials(&grid, &eta, h, order, tol)?;
            let mut out = Outcome::new(Some(&grid));
            if report.degenerate {
                out.checks.push(failed_check("nondegenerate"));
            }
            if let Some(r) = report.flatness {
                out.checks.push(Check::at_most("flatness", r, tol));
            }
            if let Some(r) = report.bracket_connection_residual {
                out.checks.push(Check::at_most("bracket_connection", r, tol));
            }
            if let Some(p) = &report.compatibility {
                out.checks.extend(pencil_checks("pencil_", p));
            }
            out.details = serde_json::to_value(&report)?;
            out.details["nijenhuis"] = json!(pencil.as_ref().and_then(|p| pencil_nijenhuis(p, order)));
            Ok(out)
        }
        Task::Lame {
            chart,
            metric,
            eps,
            profiles: prof,
            coupling,
        } => lame(chart, metric, eps, prof.as_deref(), *coupling, order, tol),
        Task::Reduce {
            dim,
            potentials,
            profiles: prof,
            probes,
            u,
            identity_tolerance,
        } => {
            let set = potential_set(*dim, potentials)?;
            let prof = profiles(prof)?;
            if prof.len() != *dim || u.len() != *dim {
                bail!("need {dim} profiles and a {dim}-component u");
            }
            let points = match probes {
                ProbeSpec::Points(p) => p.clone(),
                ProbeSpec::Random(r) => random_probes(settings.seed, r.count, r.region),
            };
            let pde = reduction_pde_residual(&set, &prof, &points)?;
            let plain = PotentialKernel {
                set: &set,
                u: u.clone(),
                profiles: None,
            };
            let weighted = PotentialKernel {
                set: &set,
                u: u.clone(),
                profiles: Some(&prof),
            };
            let id_plain = reduction_identity_residual(&plain, &points);
            let id_weighted = reduction_identity_residual(&weighted, &points);
            let mut out = Outcome::new(None);
            out.checks.push(Check::at_most("reduction_pde", pde.max, tol));
            out.checks
                .push(Check::at_most("kernel_identity", id_plain, *identity_tolerance));
            out.checks.push(Check::at_most(
                "weighted_kernel_identity",
                id_weighted,
                *identity_tolerance,
            ));
            out.details = json!({ "pde": pde, "probes": points });
            Ok(out)
        }
        Task::Dress {
            chart,
            potentials,
            s,
            quadrature,
            eps,
            phi,
            profiles: prof,
            cond_cap,
            tail_limit,
        } => {
            let grid = chart.build()?;
            let set = potential_set(grid.dim(), potentials)?;
            let quad = match quadrature {
                Some(q) => *q,
                None => default_quadrature(&set, &grid, *s),
            };
            let mut opts = SolverOptions::default();
            if let Some(c) = cond_cap {
                opts.cond_cap = *c;
            }
            if let Some(t) = tail_limit {
                opts.tail_limit = *t;
            }
            let phi = match phi {
                Some(p) => p.build()?,
                None => default_phi(),
            };
            let prof = prof.as_deref().map(profiles).transpose()?;
            dress(
                &set,
                &grid,
                *s,
                &quad,
                &opts,
                &phi,
                eps,
                prof.as_deref(),
                order,
                settings,
            )
        }
        Task::TwoComponent {
            chart,
            eps,
            profiles: prof,
            potential,
            b,
            family,
            g3_curvature,
        } => {
            let grid = chart.build()?;
            let potential = Potential::from_expr_in(potential, ["u1", "u2"])?;
            let prof = [prof[0].build()?, prof[1].build()?];
            let spec = TwoComponentSpec::new(grid.clone(), *eps, prof, potential)?;
            two_component(spec, b, family.as_deref(), *g3_curvature, order, tol)
        }
        Task::Catalog { .. } => unreachable!("resolved in run"),
    }
}

fn eigen_table(chart: &GridChart, affinor: &AffinorField) -> Table {
    let n = chart.dim();
    let mut header = coords_header(chart);
    header.extend((1..=n).map(|k| format!("lambda{k}")));
    let rows = (0..chart.len())
        .map(|node| {
            let mut row = chart.node_coords(node);
            row.extend_from_slice(&affinor.eigenvalues[node]);
            row
        })
        .collect();
    Table {
        name: "eigenvalues".into(),
        header,
        rows,
    }
}

fn check_flat(
    chart: &ChartSpec,
    metric: &MetricSpec,
    curvature: f64,
    convergence: bool,
    order: Order,
    tol: f64,
) -> Result<Outcome> {
    let grid = chart.build()?;
    let g = build_metric(metric, &grid)?;
    let (_, curv) = g.geometry(order)?;
    let residual = if curvature == 0.0 {
        flatness_residual(&g, order)?
    } else {
        constant_curvature_residual(&g, curvature, order)?
    };
    let mut out = Outcome::new(Some(&grid));
    let name = if curvature == 0.0 {
        "flatness"
    } else {
        "constant_curvature"
    };
    out.checks.push(Check::at_most(name, residual, tol));
    let mut details = json!({
        "residual": residual,
        "curvature": curvature,
        "min_abs_det": g.min_abs_det(),
    });
    if convergence {
        let coarse = chart.coarsened()?.build()?;
        let gc = build_metric(metric, &coarse)?;
        let study = convergence_study(&g, &gc, curvature, order)?;
        let nominal = order.as_int() as f64;
        out.checks.push(Check::at_most(
            "convergence_order_deviation",
            (study.observed_order - nominal).abs(),
            0.3,
        ));
        details["convergence"] = json!({
            "coarse_points": coarse.points(),
            "coarse_defect": study.coarse,
            "fine_defect": study.fine,
            "observed_order": study.observed_order,
            "nominal_order": nominal,
        });
    }
    out.details = details;
    let defect = curvature_defect_field(&curv, &grid, curvature);
    out.tables
        .push(table("curvature_defect", &grid, &[("defect", &defect)]));
    Ok(out)
}

fn lame(
    chart: &ChartSpec,
    metric: &[String],
    eps: &[f64],
    prof: Option<&[ProfileSpec]>,
    coupling: f64,
    order: Order,
    tol: f64,
) -> Result<Outcome> {
    let grid = chart.build()?;
    let g = build_metric(&MetricSpec::Diagonal(metric.to_vec()), &grid)?;
    let frame = frame_from_metric(&g, eps, order)?;
    let lame_tol = coupling * tol;
    let r = lame_residuals(&frame, order)?;
    let flat = flatness_residual(&g, order)?;
    let mut out = Outcome::new(Some(&grid));
    out.checks.push(Check::at_most("lame_offdiag", r.r_offdiag, lame_tol));
    out.checks.push(Check::at_most("lame_diag", r.r_diag, lame_tol));
    let lame_pass = r.max <= lame_tol;
    let mut details = json!({
        "lame": r,
        "flatness": flat,
        "flat": flat <= tol,
        "agree": lame_pass == (flat <= tol),
    });
    if let Some(prof) = prof {
        let prof = profiles(prof)?;
        let reduced = reduction_residual(&frame, &prof, order)?;
        out.checks.push(Check::at_most("reduction", reduced, lame_tol));
        let tilde = tilde_frame(&frame, &prof)?;
        let rt = lame_residuals(&tilde, order)?;
        out.checks.push(Check::at_most("tilde_lame", rt.max, lame_tol));
        let n = grid.dim();
        let exprs = parse_all(metric, n)?;
        let gt = MetricField::diagonal(&grid, |u, d| {
            for i in 0..n {
                d[i] = prof[i].value(u[i]) * exprs[i].eval(u);
            }
        })?;
        let tilde_flat = flatness_residual(&gt, order)?;
        details["reduction"] = json!({
            "residual": reduced,
            "tilde_lame": rt.max,
            "tilde_flatness": tilde_flat,
            "agree": (reduced <= lame_tol) == (tilde_flat <= tol),
        });
    }
    out.details = details;
    out.tables.push(frame_table("frame", &frame));
    Ok(out)
}

/// Truncation covering the potentials' decay envelope, with panels of width
/// at most one half.
pub fn default_quadrature(set: &PotentialSet, chart: &GridChart, s: f64) -> Quadrature {
    match set.default_length(chart, s) {
        Some(length) => Quadrature {
            length,
            panels: ((2.0 * length).ceil() as usize).max(16),
            points: 4,
        },
        None => Quadrature::default(),
    }
}

/// Residual of the discretized integral equation.
const DISCRETE_TOLERANCE: f64 = 1e-10;
/// Weighted kernel against the rescaled plain kernel.
const WEIGHTED_TOLERANCE: f64 = 1e-8;

#[allow(clippy::too_many_arguments)]
fn dress(
    set: &PotentialSet,
    grid: &GridChart,
    s: f64,
    quad: &Quadrature,
    opts: &SolverOptions,
    phi: &Profile,
    eps: &[f64],
    prof: Option<&[Profile]>,
    order: Order,
    settings: &Settings,
) -> Result<Outcome> {
    let tol = settings.tolerance;
    let dressed = dress_frame(set, grid, s, quad, opts, phi, eps)?;
    let frame = &dressed.frame;
    let r = lame_residuals(frame, order)?;
    let consistency = frame.consistency_defect(order)?;
    let mut out = Outcome::new(Some(grid));
    out.checks.push(Check::at_most("lame_offdiag", r.r_offdiag, tol));
    out.checks.push(Check::at_most("lame_diag", r.r_diag, tol));
    out.checks.push(Check::at_most("lame_coefficients", consistency, tol));
    out.checks.push(Check::at_most(
        "discrete_residual",
        dressed.residual_max,
        DISCRETE_TOLERANCE,
    ));
    let mut details = json!({
        "quadrature": quad,
        "cond_max": dressed.cond_max,
        "discrete_residual_max": dressed.residual_max,
        "lame": r,
    });
    if let Some(prof) = prof {
        let reduced = reduction_residual(frame, prof, order)?;
        out.checks.push(Check::at_most("reduction", reduced, tol));
        let lo = grid.lower().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = grid.upper().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let region = [s - hi, s + quad.length - lo, s - hi, s + quad.length - lo];
        let probes = random_probes(settings.seed, 64, region);
        let pde = reduction_pde_residual(set, prof, &probes)?;
        out.checks.push(Check::at_most("reduction_pde", pde.max, tol));
        let center: Vec<f64> = (0..grid.dim())
            .map(|a| 0.5 * (grid.lower()[a] + grid.upper()[a]))
            .collect();
        let tilde_tol = tol.min(WEIGHTED_TOLERANCE);
        let tilde = verify_tilde_consistency(set, prof, &center, s, quad, opts, tilde_tol)?;
        out.checks.push(Check::at_most(
            "weighted_solve",
            tilde.kernel_defect.max(tilde.beta_defect),
            tilde_tol,
        ));
        details["reduction"] = json!({ "residual": reduced, "pde": pde, "weighted_solve": tilde });
        match metric_pair_from_frame(frame, prof, order, tol) {
            Ok(pair) => {
                let report = check_compatible(&pair, CompatMode::Flat, order, tol)?;
                out.checks.extend(pencil_checks("pencil_", &report));
                details["pencil"] = serde_json::to_value(&report)?;
                details["nijenhuis"] = json!(pencil_nijenhuis(&pair, order));
            }
            Err(e) => {
                out.checks.push(failed_check("pencil_constructed"));
                details["pencil_error"] = json!(e.to_string());
            }
        }
    }
    out.details = details;
    out.tables.push(frame_table("frame", frame));
    Ok(out)
}

fn two_component(
    mut spec: TwoComponentSpec,
    b: &BSpec,
    family: Option<&[u32]>,
    g3_curvature: Option<f64>,
    order: Order,
    tol: f64,
) -> Result<Outcome> {
    let grid = spec.chart.clone();
    let mut details = json!({});
    match b {
        BSpec::Given(src) => {
            let e = parse_all(src.as_slice(), 2)?;
            spec = spec.with_b(|u| (e[0].eval(u), e[1].eval(u)))?;
        }
        BSpec::Edges(src) => {
            let e1 = Profile::from_expr(&src[0]).with_context(|| format!("cannot parse `{}`", src[0]))?;
            let e2 = Profile::from_expr(&src[1]).with_context(|| format!("cannot parse `{}`", src[1]))?;
            let integrated = integrate_b(&spec, |t| e1.value(t), |t| e2.value(t), order)?;
            details["integration_residual"] = json!(integrated.residual);
            spec.b = Some(integrated.b);
        }
    }
    let report = criterion_check(&spec, order, tol)?;
    let mut out = Outcome::new(Some(&grid));
    out.checks.push(Check::at_most("lequa", report.lequa, tol));
    out.checks.push(Check::at_most("b_system", report.b_system, tol));
    out.checks.extend(pencil_checks("pencil_", &report.pencil));
    details["criterion"] = serde_json::to_value(&report)?;
    details["nijenhuis"] = json!(build_pair(&spec).ok().and_then(|p| pencil_nijenhuis(&p, order)));
    if let Some(members) = family {
        let metrics = members
            .iter()
            .map(|&n| g_family(&spec, n).map(|g| (n, g)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut pairs = Vec::new();
        for a in 0..metrics.len() {
            for c in (a + 1)..metrics.len() {
                let pencil = PencilSpec::new(metrics[a].1.clone(), metrics[c].1.clone())?;
                let r = check_compatible(&pencil, CompatMode::Flat, order, tol)?;
                let worst = r.checks.iter().map(|c| c.residual).fold(0.0, f64::max);
                let name = format!("family_G{}_G{}", metrics[a].0, metrics[c].0);
                out.checks.push(Check::at_most(name.clone(), worst, tol));
                pairs.push(json!({ "pair": name, "report": r }));
            }
        }
        details["family"] = json!(pairs);
    }
    if let Some(k) = g3_curvature {
        let g3 = g_family(&spec, 3)?;
        let r = constant_curvature_residual(&g3, k, order)?;
        out.checks.push(Check::at_most("g3_constant_curvature", r, tol));
        details["g3"] = json!({ "curvature": k, "residual": r });
    }
    out.details = details;
    let [b1, b2] = spec.b.as_ref().expect("b set above");
    out.tables.push(table("b", &grid, &[("b1", b1), ("b2", b2)]));
    Ok(out)
}
