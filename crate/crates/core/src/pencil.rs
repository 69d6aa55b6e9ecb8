//! Compatibility checks for pairs of metrics.
//!
//! A [`PencilSpec`] is checked on a finite set of pencil weights. Curvature
//! of `λ₁g₁ + λ₂g₂` is a rational function of the weights whose numerator
//! has bounded degree, so linearity on a spanning sample together with
//! flatness of each sampled member is the practical stand-in for "every
//! member of the pencil".

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{constant_curvature_residual_of, ConnectionField, CurvatureField, MetricField};
use crate::grid::{interior_or_err, GridChart, Order, TensorField, Variance};
use crate::report::{all_pass, Check};

pub const DEFAULT_LAMBDAS: [(f64, f64); 5] = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0), (2.0, 3.0)];

/// Ordered pair of metrics on a shared chart with pencil weight samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilSpec {
    pub g1: MetricField,
    pub g2: MetricField,
    pub lambdas: Vec<(f64, f64)>,
}

impl PencilSpec {
    pub fn new(g1: MetricField, g2: MetricField) -> Result<Self> {
        if g1.chart() != g2.chart() {
            return Err(Error::ChartMismatch);
        }
        Ok(Self {
            g1,
            g2,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
        })
    }

    pub fn with_lambdas(mut self, lambdas: Vec<(f64, f64)>) -> Self {
        self.lambdas = lambdas;
        self
    }

    pub fn chart(&self) -> &GridChart {
        self.g1.chart()
    }
}

/// `λ₁g₁^{ij} + λ₂g₂^{ij}` as a metric field.
pub fn combine(pencil: &PencilSpec, lambda1: f64, lambda2: f64) -> Result<MetricField> {
    let data = pencil
        .g1
        .contra()
        .linear_combination(lambda1, pencil.g2.contra(), lambda2)?;
    MetricField::from_contra(data).map_err(|e| match e {
        Error::DegenerateMetric { node, .. } => Error::DegenerateCombination { lambda1, lambda2, node },
        other => other,
    })
}

/// Which curvature condition `check_compatible` imposes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CompatMode {
    /// Every sampled member is flat.
    Flat,
    /// Member curvature equals `λ₁K₁ + λ₂K₂`.
    ConstantCurvature { k1: f64, k2: f64 },
    /// `R^{ij}_{kl}` is linear along the pencil.
    General,
}

/// Residuals for a single pencil weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleResidual {
    pub lambda: (f64, f64),
    pub connection: Option<f64>,
    pub curvature: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilReport {
    pub mode: Option<CompatMode>,
    pub samples: Vec<SampleResidual>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

struct Member {
    metric: MetricField,
    conn: ConnectionField,
    curv: Option<CurvatureField>,
}

fn member(metric: MetricField, order: Order, with_curvature: bool) -> Result<Member> {
    let conn = metric.connection(order)?;
    let curv = if with_curvature {
        Some(CurvatureField::new(&metric, &conn, order)?)
    } else {
        None
    };
    Ok(Member { metric, conn, curv })
}

fn linearity_residual(
    combined: &TensorField,
    a: &TensorField,
    b: &TensorField,
    lambda: (f64, f64),
    nodes: &[usize],
) -> f64 {
    let mut worst: f64 = 0.0;
    for &node in nodes {
        let c = combined.node(node);
        let x = a.node(node);
        let y = b.node(node);
        for k in 0..c.len() {
            worst = worst.max((c[k] - lambda.0 * x[k] - lambda.1 * y[k]).abs());
        }
    }
    worst
}

fn run_pencil(pencil: &PencilSpec, mode: Option<CompatMode>, order: Order, tol: f64) -> Result<PencilReport> {
    let chart = pencil.chart();
    let with_curv = mode.is_some();
    let conn_nodes = interior_or_err(chart, order.half_width())?;
    let curv_nodes = interior_or_err(chart, order.curvature_margin())?;
    let m1 = member(pencil.g1.clone(), order, with_curv)?;
    let m2 = member(pencil.g2.clone(), order, with_curv)?;

    let mut samples = Vec::new();
    let mut checks = Vec::new();
    let mut conn_worst: f64 = 0.0;
    let mut curv_worst: f64 = 0.0;
    let mut skipped = 0usize;
    for &lambda in &pencil.lambdas {
        let combined = match combine(pencil, lambda.0, lambda.1) {
            Ok(m) => m,
            Err(e @ Error::DegenerateCombination { .. }) => {
                skipped += 1;
                samples.push(SampleResidual {
                    lambda,
                    connection: None,
                    curvature: None,
                    skipped: Some(e.to_string()),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let mc = member(combined, order, with_curv)?;
        let conn = linearity_residual(
            &mc.conn.gamma_contra,
            &m1.conn.gamma_contra,
            &m2.conn.gamma_contra,
            lambda,
            &conn_nodes,
        );
        conn_worst = conn_worst.max(conn);
        let curv = match mode {
            None => None,
            Some(CompatMode::Flat) => Some(mc.curv.as_ref().unwrap().r_mixed.max_abs_over(&curv_nodes)),
            Some(CompatMode::ConstantCurvature { k1, k2 }) => Some(constant_curvature_residual_of(
                mc.curv.as_ref().unwrap(),
                chart,
                lambda.0 * k1 + lambda.1 * k2,
            )?),
            Some(CompatMode::General) => Some(linearity_residual(
                &mc.curv.as_ref().unwrap().r_contra,
                &m1.curv.as_ref().unwrap().r_contra,
                &m2.curv.as_ref().unwrap().r_contra,
                lambda,
                &curv_nodes,
            )),
        };
        if let Some(r) = curv {
            curv_worst = curv_worst.max(r);
        }
        samples.push(SampleResidual {
            lambda,
            connection: Some(conn),
            curvature: curv,
            skipped: None,
        });
        drop(mc.metric);
    }
    if skipped == pencil.lambdas.len() {
        return Err(Error::InvalidArgument(
            "every pencil weight sample is degenerate".into(),
        ));
    }
    checks.push(Check::at_most("connection_linearity", conn_worst, tol));
    match mode {
        None => {}
        Some(CompatMode::Flat) => {
            let r1 = m1.curv.as_ref().unwrap().r_mixed.max_abs_over(&curv_nodes);
            let r2 = m2.curv.as_ref().unwrap().r_mixed.max_abs_over(&curv_nodes);
            checks.push(Check::at_most("flatness_g1", r1, tol));
            checks.push(Check::at_most("flatness_g2", r2, tol));
            checks.push(Check::at_most("flatness_combinations", curv_worst, tol));
        }
        Some(CompatMode::ConstantCurvature { .. }) => {
            checks.push(Check::at_most("constant_curvature_combinations", curv_worst, tol));
        }
        Some(CompatMode::General) => {
            checks.push(Check::at_most("curvature_linearity", curv_worst, tol));
        }
    }
    let passed = all_pass(&checks);
    Ok(PencilReport {
        mode,
        samples,
        checks,
        passed,
    })
}

/// Connection linearity along the pencil (almost compatibility).
pub fn check_almost_compatible(pencil: &PencilSpec, order: Order, tol: f64) -> Result<PencilReport> {
    run_pencil(pencil, None, order, tol)
}

/// Connection linearity plus the curvature condition selected by `mode`.
pub fn check_compatible(pencil: &PencilSpec, mode: CompatMode, order: Order, tol: f64) -> Result<PencilReport> {
    run_pencil(pencil, Some(mode), order, tol)
}

fn matrix_at(field: &TensorField, node: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, field.node(node))
}

/// Affinor `v^i_j = g₁^{is}g_{2,sj}` with per-node eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinorField {
    pub v: TensorField,
    /// Real parts of the eigenvalues per node, ascending.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Nodes where a conjugate pair was found.
    pub complex_nodes: Vec<usize>,
}

impl AffinorField {
    pub fn from_pencil(pencil: &PencilSpec) -> Result<Self> {
        let chart = pencil.chart();
        let n = chart.dim();
        let mut data = Vec::with_capacity(chart.len() * n * n);
        for node in 0..chart.len() {
            let v = matrix_at(pencil.g1.contra(), node, n) * matrix_at(pencil.g2.cov(), node, n);
            for i in 0..n {
                for j in 0..n {
                    data.push(v[(i, j)]);
                }
            }
        }
        let v = TensorField::from_data(chart, &[Variance::Upper, Variance::Lower], data)?;
        Self::from_field(v)
    }

    pub fn from_field(v: TensorField) -> Result<Self> {
        let chart = v.chart().clone();
        let n = chart.dim();
        let mut eigenvalues = Vec::with_capacity(chart.len());
        let mut complex_nodes = Vec::new();
        for node in 0..chart.len() {
            let m = matrix_at(&v, node, n);
            let scale = m.amax().max(1.0);
            let schur = Schur::try_new(m, 1e-14, 10_000).ok_or(Error::EigensolveFailure(node))?;
            let ev = schur.complex_eigenvalues();
            if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::EigensolveFailure(node));
            }
            if ev.iter().any(|z| z.im.abs() > 1e-10 * scale) {
                complex_nodes.push(node);
            }
            let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
            re.sort_by(|a, b| a.total_cmp(b));
            eigenvalues.push(re);
        }
        Ok(Self {
            v,
            eigenvalues,
            complex_nodes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonsingularityReport {
    pub min_gap: f64,
    pub min_gap_node: usize,
    pub min_gap_coords: Vec<f64>,
    pub complex_pairs: usize,
    pub threshold: f64,
    pub nonsingular: bool,
}

/// Smallest distance between roots of `det(g₁ − λg₂) = 0` over every node.
pub fn nonsingularity(pencil: &PencilSpec, threshold: f64) -> Result<NonsingularityReport> {
    let affinor = AffinorField::from_pencil(pencil)?;
    Ok(nonsingularity_of(&affinor, threshold))
}

pub fn nonsingularity_of(affinor: &AffinorField, threshold: f64) -> NonsingularityReport {
    let mut min_gap = f64::INFINITY;
    let mut min_node = 0;
    for (node, ev) in affinor.eigenvalues.iter().enumerate() {
        let gap = ev.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if gap < min_gap {
            min_gap = gap;
            min_node = node;
        }
    }
    if !affinor.complex_nodes.is_empty() {
        // A conjugate pair is never a pair of distinct real roots.
        min_gap = min_gap.min(0.0);
    }
    NonsingularityReport {
        min_gap,
        min_gap_node: min_node,
        min_gap_coords: affinor.v.chart().node_coords(min_node),
        complex_pairs: affinor.complex_nodes.len(),
        threshold,
        nonsingular: min_gap > threshold && affinor.complex_nodes.is_empty(),
    }
}

/// Max over interior nodes of the Nijenhuis tensor
/// `N^k_{ij} = v^s_i∂_s v^k_j − v^s_j∂_s v^k_i + v^k_s∂_j v^s_i − v^k_s∂_i v^s_j`.
pub fn nijenhuis(affinor: &AffinorField, order: Order) -> Result<f64> {
    Ok(nijenhuis_field(affinor, order)?.max_abs_over(&interior_or_err(affinor.v.chart(), order.half_width())?))
}

/// The full `N^k_{ij}` field, component `(k*N + i)*N + j`.
pub fn nijenhuis_field(affinor: &AffinorField, order: Order) -> Result<TensorField> {
    let v = &affinor.v;
    let chart = v.chart();
    let n = chart.dim();
    let dv = v.gradient(order)?;
    let mut out = TensorField::zeros(chart, &[Variance::Upper, Variance::Lower, Variance::Lower]);
    for node in 0..chart.len() {
        let vn = v.node(node);
        let at = |a: usize, b: usize| vn[a * n + b];
        let d = |axis: usize, a: usize, b: usize| dv[axis].get(node, a * n + b);
        let slot = out.node_mut(node);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for s in 0..n {
                        acc += at(s, i) * d(s, k, j) - at(s, j) * d(s, k, i) + at(k, s) * d(j, s, i)
                            - at(k, s) * d(i, s, j);
                    }
                    slot[(k * n + i) * n + j] = acc;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalForm {
    /// `f^i = g₁^{ii}/g₂^{ii}` per node, N components.
    pub f: TensorField,
    /// Max interior `|∂_j f^i|`, `j ≠ i`.
    pub residual: f64,
}

/// Verify `g₂ = diag(g^i)`, `g₁ = diag(f^i(u^i)g^i)` in the supplied coordinates.
pub fn check_diagonal_form(pencil: &PencilSpec, order: Order, tol: f64) -> Result<DiagonalForm> {
    for g in [&pencil.g1, &pencil.g2] {
        let (value, node) = g.off_diagonal_max();
        if value > tol {
            return Err(Error::NotDiagonal { node, value });
        }
    }
    let chart = pencil.chart();
    let n = chart.dim();
    let mut f = TensorField::with_components(chart, n);
    for node in 0..chart.len() {
        let a = pencil.g1.contra().node(node);
        let b = pencil.g2.contra().node(node);
        for i in 0..n {
            f.set(node, i, a[i * n + i] / b[i * n + i]);
        }
    }
    let nodes = interior_or_err(chart, order.half_width())?;
    let mut residual: f64 = 0.0;
    for j in 0..n {
        let df = f.partial(j, order)?;
        for &node in &nodes {
            for i in (0..n).filter(|&i| i != j) {
                residual = residual.max(df.get(node, i).abs());
            }
        }
    }
    Ok(DiagonalForm { f, residual })
}

/// Residuals produced by [`dubrovin_construct`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DubrovinReport {
    pub c: f64,
    /// `Δ^{ij}_sΔ^{sk}_l − Δ^{ik}_sΔ^{sj}_l`
    pub quadratic_residual: f64,
    /// `(g₁^{is}g₂^{jp} − g₂^{is}g₁^{jp})∂_s∂_p f^k`
    pub contraction_residual: f64,
    /// `Δ^{ij}_k − g_{2,ks}Δ^{sij}`
    pub lowering_defect: f64,
    /// `Δ^{ijk}` from the connection difference versus `∇^i∇^j f^k`.
    pub connection_form_residual: f64,
    pub gates: Vec<Check>,
    pub gates_pass: bool,
    pub pencil: Option<PencilReport>,
    pub pencil_error: Option<String>,
    /// Whether the gate verdict equals the flat-pencil verdict.
    pub agree: bool,
}

/// Build `g₁ = ∇^i f^j + ∇^j f^i + c g₂` in flat coordinates of `g₂` and
/// evaluate the quadratic and contraction conditions on `f`.
pub fn dubrovin_construct<F>(
    g2: &MetricField,
    f: F,
    c: f64,
    order: Order,
    tol: f64,
) -> Result<(MetricField, DubrovinReport)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let chart = g2.chart().clone();
    let n = chart.dim();
    let conn2 = g2.connection(order)?;
    let conn_nodes = interior_or_err(&chart, order.half_width())?;
    let flat_residual = conn2.gamma_mixed.max_abs_over(&conn_nodes);
    if flat_residual > tol {
        return Err(Error::NotFlatCoordinates {
            residual: flat_residual,
            tol,
        });
    }
    let mut fv = TensorField::with_components(&chart, n);
    {
        let sampled = TensorField::sample(&chart, &[Variance::Upper], &[], f)?;
        for node in 0..chart.len() {
            fv.node_mut(node).copy_from_slice(sampled.node(node));
        }
    }
    // df[s] = ∂_s f^j, ddf[s][p] = ∂_p∂_s f^j
    let df = fv.gradient(order)?;
    let ddf: Vec<Vec<TensorField>> = df.iter().map(|d| d.gradient(order)).collect::<Result<_>>()?;

    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut g1_data = vec![0.0; chart.len() * n * n];
    for node in 0..chart.len() {
        let g = g2.contra().node(node);
        for i in 0..n {
            for j in 0..n {
                let mut v = c * g[i * n + j];
                for s in 0..n {
                    v += g[i * n + s] * df[s].get(node, j) + g[j * n + s] * df[s].get(node, i);
                }
                g1_data[node * n * n + i * n + j] = v;
            }
        }
    }
    let g1_field = TensorField::from_data(&chart, &[Variance::Upper, Variance::Upper], g1_data)?;
    let g1 = MetricField::from_contra(g1_field)?;
    let conn1 = g1.connection(order)?;

    let nodes = interior_or_err(&chart, order.curvature_margin())?;
    let mut quadratic: f64 = 0.0;
    let mut contraction: f64 = 0.0;
    let mut lowering: f64 = 0.0;
    let mut conn_form: f64 = 0.0;
    let mut upper = vec![0.0; n * n * n]; // Δ^{ijk}
    let mut mixed = vec![0.0; n * n * n]; // Δ^{ij}_k at idx(i, j, k)
    for &node in &nodes {
        let g = g2.contra().node(node);
        let gl = g2.cov().node(node);
        let h1 = g1.contra().node(node);
        let second = |s: usize, p: usize, k: usize| ddf[s][p].get(node, k);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut up = 0.0;
                    for s in 0..n {
                        for p in 0..n {
                            up += g[i * n + s] * g[j * n + p] * second(s, p, k);
                        }
                    }
                    upper[idx(i, j, k)] = up;
                    mixed[idx(i, j, k)] = (0..n).map(|s| g[i * n + s] * second(s, k, j)).sum();
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lowered: f64 = (0..n).map(|s| gl[k * n + s] * upper[idx(s, i, j)]).sum();
                    lowering = lowering.max((mixed[idx(i, j, k)] - lowered).abs());
                    // Δ^{ijk} = g₁^{is}g₂^{jp}(Γ^k_{2,ps} − Γ^k_{1,ps})
                    let g1m = conn1.gamma_mixed.node(node);
                    let g2m = conn2.gamma_mixed.node(node);
                    let mut from_conn = 0.0;
                    for s in 0..n {
                        for p in 0..n {
                            from_conn += h1[i * n + s] * g[j * n + p] * (g2m[idx(k, p, s)] - g1m[idx(k, p, s)]);
                        }
                    }
                    conn_form = conn_form.max((from_conn - upper[idx(i, j, k)]).abs());
                    let mut cterm = 0.0;
                    for s in 0..n {
                        for p in 0..n {
                            cterm += (h1[i * n + s] * g[j * n + p] - g[i * n + s] * h1[j * n + p]) * second(s, p, k);
                        }
                    }
                    contraction = contraction.max(cterm.abs());
                    for l in 0..n {
                        let mut q = 0.0;
                        for s in 0..n {
                            q += mixed[idx(i, j, s)] * mixed[idx(s, k, l)] - mixed[idx(i, k, s)] * mixed[idx(s, j, l)];
                        }
                        quadratic = quadratic.max(q.abs());
                    }
                }
            }
        }
    }
    let gates = vec![
        Check::at_most("quadratic_relation", quadratic, tol),
        Check::at_most("contraction_relation", contraction, tol),
    ];
    let gates_pass = all_pass(&gates);
    let pair = PencilSpec::new(g1.clone(), g2.clone())?;
    let (pencil, pencil_error) = match check_compatible(&pair, CompatMode::Flat, order, tol) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let flat_verdict = pencil.as_ref().map(|r| r.passed).unwrap_or(false);
    Ok((
        g1,
        DubrovinReport {
            c,
            quadratic_residual: quadratic,
            contraction_residual: contraction,
            lowering_defect: lowering,
            connection_form_residual: conn_form,
            gates,
            gates_pass,
            pencil,
            pencil_error,
            agree: gates_pass == flat_verdict,
        },
    ))
}

/// Result of [`generate_from_potentials`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialReport {
    pub degenerate: bool,
    pub degenerate_reason: Option<String>,
    pub flatness: Option<f64>,
    /// `max |b^{ij}_k + Γ^{ij}_k|` for the generated metric.
    pub bracket_connection_residual: Option<f64>,
    pub compatibility: Option<PencilReport>,
    pub passed: bool,
}

/// Build `g₂^{ij} = η^{is}∂_s h^j + η^{js}∂_s h^i` and the bracket
/// coefficients `b^{ij}_k = η^{is}∂_s∂_k h^j`, then pair `g₂` with `η`.
/// The returned pencil is `(g₂, η)`; it is `None` when `g₂` is degenerate.
pub fn generate_from_potentials<H>(
    chart: &GridChart,
    eta: &[f64],
    h: H,
    order: Order,
    tol: f64,
) -> Result<(Option<PencilSpec>, PotentialReport)>
where
    H: Fn(&[f64], &mut [f64]),
{
    let n = chart.dim();
    if eta.len() != n * n {
        return Err(Error::ShapeMismatch("eta must be N×N".into()));
    }
    for i in 0..n {
        for j in 0..n {
            if eta[i * n + j] != eta[j * n + i] {
                return Err(Error::InvalidArgument("eta must be symmetric".into()));
            }
        }
    }
    let det = DMatrix::from_row_slice(n, n, eta).determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::InvalidArgument("eta must be nondegenerate".into()));
    }
    let hv = {
        let sampled = TensorField::sample(chart, &[Variance::Upper], &[], h)?;
        let mut f = TensorField::with_components(chart, n);
        for node in 0..chart.len() {
            f.node_mut(node).copy_from_slice(sampled.node(node));
        }
        f
    };
    let dh = hv.gradient(order)?;
    let ddh: Vec<Vec<TensorField>> = dh.iter().map(|d| d.gradient(order)).collect::<Result<_>>()?;
    let mut g_data = vec![0.0; chart.len() * n * n];
    for node in 0..chart.len() {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for s in 0..n {
                    v += eta[i * n + s] * dh[s].get(node, j) + eta[j * n + s] * dh[s].get(node, i);
                }
                g_data[node * n * n + i * n + j] = v;
            }
        }
    }
    let g_field = TensorField::from_data(chart, &[Variance::Upper, Variance::Upper], g_data)?;
    let eta_metric = MetricField::from_closure(chart, |_, out| out.copy_from_slice(eta))?;
    let g2 = match MetricField::from_contra(g_field) {
        Ok(m) => m,
        Err(e @ Error::DegenerateMetric { .. }) => {
            return Ok((
                None,
                PotentialReport {
                    degenerate: true,
                    degenerate_reason: Some(e.to_string()),
                    flatness: None,
                    bracket_connection_residual: None,
                    compatibility: None,
                    passed: false,
                },
            ))
        }
        Err(e) => return Err(e),
    };
    let (conn, curv) = g2.geometry(order)?;
    let curv_nodes = interior_or_err(chart, order.curvature_margin())?;
    let flatness = curv.r_mixed.max_abs_over(&curv_nodes);
    let mut bracket: f64 = 0.0;
    for &node in &curv_nodes {
        let gc = conn.gamma_contra.node(node);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let b: f64 = (0..n).map(|s| eta[i * n + s] * ddh[s][k].get(node, j)).sum();
                    bracket = bracket.max((b + gc[(i * n + j) * n + k]).abs());
                }
            }
        }
    }
    let pencil = PencilSpec::new(g2, eta_metric)?;
    let compatibility = if flatness <= tol {
        Some(check_compatible(&pencil, CompatMode::Flat, order, tol)?)
    } else {
        None
    };
    let passed = compatibility.as_ref().map(|r| r.passed).unwrap_or(false);
    Ok((
        Some(pencil),
        PotentialReport {
            degenerate: false,
            degenerate_reason: None,
            flatness: Some(flatness),
            bracket_connection_residual: Some(bracket),
            compatibility,
            passed,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> GridChart {
        GridChart::cube(2, 1.0, 2.0, 41).unwrap()
    }

    fn diag(chart: &GridChart, f: impl Fn(&[f64]) -> [f64; 2]) -> MetricField {
        MetricField::diagonal(chart, |u, d| d.copy_from_slice(&f(u))).unwrap()
    }

    #[test]
    fn combine_examples() {
        let c = chart();
        let p = PencilSpec::new(diag(&c, |_| [2.0, 2.0]), diag(&c, |_| [1.0, 1.0])).unwrap();
        let m = combine(&p, 1.0, 1.0).unwrap();
        assert!(m.contra().data().chunks(4).all(|g| g == [3.0, 0.0, 0.0, 3.0]));
        assert_eq!(combine(&p, 1.0, 0.0).unwrap().contra(), p.g1.contra());
        let q = PencilSpec::new(diag(&c, |u| [u[0], u[1]]), diag(&c, |_| [1.0, 1.0])).unwrap();
        assert!(matches!(
            combine(&q, 1.0, -1.0),
            Err(Error::DegenerateCombination { .. })
        ));
    }

    #[test]
    fn almost_compatibility_examples() {
        let c = chart();
        let eye = diag(&c, |_| [1.0, 1.0]);
        let diag_u = PencilSpec::new(diag(&c, |u| [u[0], u[1]]), eye.clone()).unwrap();
        let r = check_almost_compatible(&diag_u, Order::Fourth, 1e-5).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.samples.iter().any(|s| s.skipped.is_some()));
        let twisted = PencilSpec::new(diag(&c, |u| [1.0 + u[1] * u[1], 1.0]), eye).unwrap();
        let r = check_almost_compatible(&twisted, Order::Fourth, 1e-8).unwrap();
        assert!(r.checks[0].residual > 0.1);
    }

    #[test]
    fn nonsingularity_examples() {
        let c = GridChart::new(vec![2.0, 0.2], vec![3.0, 1.0], vec![9, 9]).unwrap();
        let p = PencilSpec::new(diag(&c, |u| [u[0], u[1]]), diag(&c, |_| [1.0, 1.0])).unwrap();
        let r = nonsingularity(&p, 1e-8).unwrap();
        assert!((r.min_gap - 1.0).abs() < 1e-12 && r.nonsingular);
        let q = PencilSpec::new(diag(&c, |_| [2.0, 2.0]), diag(&c, |_| [1.0, 1.0])).unwrap();
        let r = nonsingularity(&q, 1e-8).unwrap();
        assert!(r.min_gap.abs() < 1e-14 && !r.nonsingular);
    }

    #[test]
    fn nijenhuis_examples() {
        let c = chart();
        let eye = diag(&c, |_| [1.0, 1.0]);
        let same = PencilSpec::new(eye.clone(), eye.clone()).unwrap();
        assert_eq!(
            nijenhuis(&AffinorField::from_pencil(&same).unwrap(), Order::Fourth).unwrap(),
            0.0
        );
        let p = PencilSpec::new(diag(&c, |u| [u[0], u[1]]), eye).unwrap();
        assert!(nijenhuis(&AffinorField::from_pencil(&p).unwrap(), Order::Fourth).unwrap() < 1e-12);
        let twist = TensorField::sample(&c, &[Variance::Upper, Variance::Lower], &[], |u, v| {
            v.copy_from_slice(&[u[0], u[0], 0.0, u[1]]);
        })
        .unwrap();
        let a = AffinorField::from_field(twist).unwrap();
        // N^1_{12} = −u¹ on this box.
        let r = nijenhuis(&a, Order::Fourth).unwrap();
        assert!((r - 2.0 + 2.0 * c.spacing(0)).abs() < 1e-9, "{r}");
    }

    #[test]
    fn diagonal_form_examples() {
        let c = chart();
        let eye = diag(&c, |_| [1.0, 1.0]);
        let good = PencilSpec::new(diag(&c, |u| [u[0], u[1]]), eye.clone()).unwrap();
        assert!(check_diagonal_form(&good, Order::Fourth, 1e-10).unwrap().residual < 1e-12);
        let swapped = PencilSpec::new(diag(&c, |u| [u[1], u[0]]), eye.clone()).unwrap();
        let r = check_diagonal_form(&swapped, Order::Fourth, 1e-10).unwrap().residual;
        assert!((r - 1.0).abs() < 1e-10);
        let full = MetricField::from_closure(&c, |_, g| g.copy_from_slice(&[2.0, 0.5, 0.5, 2.0])).unwrap();
        assert!(matches!(
            check_diagonal_form(&PencilSpec::new(full, eye).unwrap(), Order::Fourth, 1e-10),
            Err(Error::NotDiagonal { .. })
        ));
    }
}
