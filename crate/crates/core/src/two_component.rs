//! Two-component diagonal pairs.
//!
//! A pair `g₂ = diag(ε¹/(b¹)², ε²/(b²)²)`, `g₁ = diag(ε¹f¹/(b¹)², ε²f²/(b²)²)`
//! is a flat pencil exactly when
//! `∂b²/∂u¹ = ε¹F_{u²}b¹`, `∂b¹/∂u² = −ε²F_{u¹}b²` for some `F` solving
//! `2F_{u¹u²}(f¹ − f²) + F_{u²}(f¹)′ − F_{u¹}(f²)′ = 0`.
//! The potential is a [`Potential`] read with `x = u¹`, `y = u²`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{Potential, Profile};
use crate::geometry::MetricField;
use crate::grid::{interior_or_err, GridChart, Order, TensorField};
use crate::pencil::{check_compatible, CompatMode, PencilReport, PencilSpec};

/// Smallest admissible `|b^i|`.
pub const B_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TwoComponentSpec {
    pub chart: GridChart,
    pub eps: [f64; 2],
    pub profiles: [Profile; 2],
    pub potential: Potential,
    /// Scalar fields `b¹`, `b²`, if already known.
    pub b: Option<[TensorField; 2]>,
}

impl TwoComponentSpec {
    pub fn new(chart: GridChart, eps: [f64; 2], profiles: [Profile; 2], potential: Potential) -> Result<Self> {
        if chart.dim() != 2 {
            return Err(Error::ShapeMismatch("two-component chart must be 2-d".into()));
        }
        if eps.iter().any(|&e| e != 1.0 && e != -1.0) {
            return Err(Error::InvalidArgument("signs must be +1 or -1".into()));
        }
        Ok(Self {
            chart,
            eps,
            profiles,
            potential,
            b: None,
        })
    }

    /// Sample `b¹`, `b²` from a closure returning both at `u`.
    pub fn with_b<F>(mut self, b: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> (f64, f64),
    {
        let b1 = TensorField::sample_scalar(&self.chart, |u| b(u).0)?;
        let b2 = TensorField::sample_scalar(&self.chart, |u| b(u).1)?;
        self.b = Some([b1, b2]);
        Ok(self)
    }

    fn b_fields(&self) -> Result<&[TensorField; 2]> {
        let b = self
            .b
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("b fields are not set".into()))?;
        check_nonvanishing(b)?;
        Ok(b)
    }
}

fn check_nonvanishing(b: &[TensorField; 2]) -> Result<()> {
    for field in b {
        for node in 0..field.chart().len() {
            let v = field.get(node, 0);
            if !(v.abs() >= B_FLOOR) {
                return Err(Error::VanishingB { node, value: v });
            }
        }
    }
    Ok(())
}

/// Max over the chart of
/// `|2F_{u¹u²}(f¹ − f²) + F_{u²}(f¹)′ − F_{u¹}(f²)′|`, with analytic
/// derivatives of `F`.
pub fn lequa_residual(spec: &TwoComponentSpec) -> f64 {
    let chart = &spec.chart;
    let [p1, p2] = &spec.profiles;
    let mut u = [0.0; 2];
    let mut worst: f64 = 0.0;
    for node in 0..chart.len() {
        chart.fill_coords(node, &mut u);
        let jet = spec.potential.jet(u[0], u[1]);
        let r = 2.0 * jet.dxy * (p1.value(u[0]) - p2.value(u[1])) + jet.dy * p1.derivative(u[0])
            - jet.dx * p2.derivative(u[1]);
        worst = worst.max(r.abs());
    }
    worst
}

/// Max interior residual of the linear system for `b` by finite differences.
pub fn b_system_residual(spec: &TwoComponentSpec, order: Order) -> Result<f64> {
    let [b1, b2] = spec.b_fields()?;
    system_residual(&spec.chart, spec.eps, &spec.potential, b1, b2, order)
}

fn system_residual(
    chart: &GridChart,
    eps: [f64; 2],
    potential: &Potential,
    b1: &TensorField,
    b2: &TensorField,
    order: Order,
) -> Result<f64> {
    let nodes = interior_or_err(chart, order.half_width())?;
    let d1b2 = b2.partial(0, order)?;
    let d2b1 = b1.partial(1, order)?;
    let mut u = [0.0; 2];
    let mut worst: f64 = 0.0;
    for &node in &nodes {
        chart.fill_coords(node, &mut u);
        let jet = potential.jet(u[0], u[1]);
        let r1 = d1b2.get(node, 0) - eps[0] * jet.dy * b1.get(node, 0);
        let r2 = d2b1.get(node, 0) + eps[1] * jet.dx * b2.get(node, 0);
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    Ok(worst)
}

/// Integrated `b` fields and their finite-difference consistency residual.
#[derive(Debug, Clone)]
pub struct BIntegration {
    pub b: [TensorField; 2],
    pub residual: f64,
}

/// Fourth-order cumulative integral of samples on a uniform grid.
fn cumulative(values: &[f64], h: f64, out: &mut [f64]) {
    let n = values.len();
    out[0] = 0.0;
    for k in 0..n - 1 {
        let piece = if k == 0 {
            9.0 * values[0] + 19.0 * values[1] - 5.0 * values[2] + values[3]
        } else if k == n - 2 {
            values[k - 2] - 5.0 * values[k - 1] + 19.0 * values[k] + 9.0 * values[k + 1]
        } else {
            -values[k - 1] + 13.0 * values[k] + 13.0 * values[k + 1] - values[k + 2]
        };
        out[k + 1] = out[k] + h * piece / 24.0;
    }
}

/// Solve the Goursat problem for `b` from `b¹` on the edge `u² = u²₀` and
/// `b²` on the edge `u¹ = u¹₀`. Columns in `u¹` are advanced by RK4; `b¹` on
/// each column follows from its edge value by integrating `−ε²F_{u¹}b²` in `u²`.
pub fn integrate_b<E1, E2>(spec: &TwoComponentSpec, edge1: E1, edge2: E2, order: Order) -> Result<BIntegration>
where
    E1: Fn(f64) -> f64,
    E2: Fn(f64) -> f64,
{
    let chart = &spec.chart;
    let (n1, n2) = (chart.points()[0], chart.points()[1]);
    if n2 < 4 {
        return Err(Error::ChartTooCoarse {
            axis: 1,
            points: n2,
            order: 4,
            required: 4,
        });
    }
    let (h1, h2) = (chart.spacing(0), chart.spacing(1));
    let ys: Vec<f64> = (0..n2).map(|k| chart.coord(1, k)).collect();
    let [e1, e2] = spec.eps;
    let pot = &spec.potential;

    let mut integrand = vec![0.0; n2];
    let mut acc = vec![0.0; n2];
    // b¹ on the column u¹ = x for the state b² on that column.
    let mut column_b1 = |x: f64, b2: &[f64], out: &mut [f64]| {
        for k in 0..n2 {
            integrand[k] = -e2 * pot.jet(x, ys[k]).dx * b2[k];
        }
        cumulative(&integrand, h2, &mut acc);
        let start = edge1(x);
        for k in 0..n2 {
            out[k] = start + acc[k];
        }
    };
    let rhs = |x: f64, b1: &[f64], out: &mut [f64]| {
        for k in 0..n2 {
            out[k] = e1 * pot.jet(x, ys[k]).dy * b1[k];
        }
    };

    let mut b1_all = vec![0.0; n1 * n2];
    let mut b2_all = vec![0.0; n1 * n2];
    let mut state: Vec<f64> = ys.iter().map(|&y| edge2(y)).collect();
    let mut b1c = vec![0.0; n2];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n2], vec![0.0; n2], vec![0.0; n2], vec![0.0; n2]);
    let mut tmp = vec![0.0; n2];
    for i in 0..n1 {
        let x = chart.coord(0, i);
        column_b1(x, &state, &mut b1c);
        for k in 0..n2 {
            b1_all[i * n2 + k] = b1c[k];
            b2_all[i * n2 + k] = state[k];
        }
        if i + 1 == n1 {
            break;
        }
        rhs(x, &b1c, &mut k1);
        for k in 0..n2 {
            tmp[k] = state[k] + 0.5 * h1 * k1[k];
        }
        column_b1(x + 0.5 * h1, &tmp, &mut b1c);
        rhs(x + 0.5 * h1, &b1c, &mut k2);
        for k in 0..n2 {
            tmp[k] = state[k] + 0.5 * h1 * k2[k];
        }
        column_b1(x + 0.5 * h1, &tmp, &mut b1c);
        rhs(x + 0.5 * h1, &b1c, &mut k3);
        for k in 0..n2 {
            tmp[k] = state[k] + h1 * k3[k];
        }
        column_b1(x + h1, &tmp, &mut b1c);
        rhs(x + h1, &b1c, &mut k4);
        for k in 0..n2 {
            state[k] += h1 / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
    }
    // Node layout is last-axis-fastest, so (i, k) maps to i * n2 + k.
    let b1 = TensorField::from_data(chart, &[], b1_all)?;
    let b2 = TensorField::from_data(chart, &[], b2_all)?;
    let b = [b1, b2];
    check_nonvanishing(&b)?;
    let residual = system_residual(chart, spec.eps, pot, &b[0], &b[1], order)?;
    Ok(BIntegration { b, residual })
}

fn diagonal_metric<F>(spec: &TwoComponentSpec, entry: F) -> Result<MetricField>
where
    F: Fn(usize, f64) -> f64,
{
    let [b1, b2] = spec.b_fields()?;
    let chart = &spec.chart;
    let mut data = vec![0.0; chart.len() * 4];
    let mut u = [0.0; 2];
    for node in 0..chart.len() {
        chart.fill_coords(node, &mut u);
        let (x1, x2) = (b1.get(node, 0), b2.get(node, 0));
        data[node * 4] = spec.eps[0] * entry(0, u[0]) / (x1 * x1);
        data[node * 4 + 3] = spec.eps[1] * entry(1, u[1]) / (x2 * x2);
    }
    let sig = [crate::grid::Variance::Upper, crate::grid::Variance::Upper];
    MetricField::from_contra(TensorField::from_data(chart, &sig, data)?)
}

/// `(g₁, g₂)` with `g₁ = diag(ε^i f^i/(b^i)²)` and `g₂ = diag(ε^i/(b^i)²)`.
pub fn build_pair(spec: &TwoComponentSpec) -> Result<PencilSpec> {
    let g1 = diagonal_metric(spec, |i, t| spec.profiles[i].value(t))?;
    let g2 = diagonal_metric(spec, |_, _| 1.0)?;
    PencilSpec::new(g1, g2)
}

/// `G_n = diag(ε^i (u^i)^n/(b^i)²)` for `n ∈ 0..=3`.
pub fn g_family(spec: &TwoComponentSpec, n: u32) -> Result<MetricField> {
    if n > 3 {
        return Err(Error::InvalidArgument(format!("family index {n} outside 0..=3")));
    }
    diagonal_metric(spec, |_, t| t.powi(n as i32))
}

/// Both sides of the flat-pencil criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub lequa: f64,
    pub b_system: f64,
    pub equations_pass: bool,
    pub pencil: PencilReport,
    pub agree: bool,
}

/// Compare the verdict of the two scalar equations with the direct
/// compatibility check of [`build_pair`].
pub fn criterion_check(spec: &TwoComponentSpec, order: Order, tol: f64) -> Result<CriterionReport> {
    let lequa = lequa_residual(spec);
    let b_system = b_system_residual(spec, order)?;
    let equations_pass = lequa <= tol && b_system <= tol;
    let pair = build_pair(spec)?;
    let pencil = check_compatible(&pair, CompatMode::Flat, order, tol)?;
    let agree = equations_pass == pencil.passed;
    Ok(CriterionReport {
        lequa,
        b_system,
        equations_pass,
        pencil,
        agree,
    })
}

/// The log-potential data `F = c ln(u¹ − u²)`, `f^i = u^i`, `ε = (−1, 1)`,
/// `b¹ = b² = (u¹ − u²)^c`.
pub fn log_spec(chart: GridChart, c: f64) -> Result<TwoComponentSpec> {
    let potential = Potential::from_expr(&format!("{c:e} * ln(x - y)"))?;
    TwoComponentSpec::new(
        chart,
        [-1.0, 1.0],
        [Profile::identity(), Profile::identity()],
        potential,
    )?
    .with_b(|u| {
        let w = (u[0] - u[1]).powf(c);
        (w, w)
    })
}
