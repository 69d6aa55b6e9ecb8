//! Metrics, Levi-Civita connections and Riemann curvature on grids.
//!
//! Conventions: `Γ^i_{jk} = ½ g^{is}(∂_j g_{sk} + ∂_k g_{js} − ∂_s g_{jk})`,
//! `R^i_{jkl} = −∂_kΓ^i_{jl} + ∂_lΓ^i_{jk} − Γ^i_{pk}Γ^p_{jl} + Γ^i_{pl}Γ^p_{jk}`
//! and `R^{ij}_{kl} = g^{is}R^j_{skl}`. With these signs the unit sphere has
//! `R^{ij}_{kl} = +(δ^i_kδ^j_l − δ^i_lδ^j_k)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{interior_or_err, GridChart, Order, TensorField, Variance};

const UP: Variance = Variance::Upper;
const LO: Variance = Variance::Lower;

/// Relative nondegeneracy floor: `|det g| ≥ FLOOR · (max|g|)^N`.
pub const DEFAULT_FLOOR: f64 = 1e-8;

/// Contravariant metric with its pointwise inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    g_contra: TensorField,
    g_cov: TensorField,
    min_abs_det: f64,
    floor: f64,
    inverse_defect: f64,
}

impl MetricField {
    /// Sample `g^{ij}(u)` from a closure writing the N×N row-major matrix.
    pub fn from_closure<F>(chart: &GridChart, closure: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let g = TensorField::sample(chart, &[UP, UP], &[(0, 1)], closure)?;
        Self::from_contra(g)
    }

    /// Diagonal metric from per-axis closures for `g^{ii}(u)`.
    pub fn diagonal<F>(chart: &GridChart, diag: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let n = chart.dim();
        Self::from_closure(chart, |u, out| {
            let mut d = vec![0.0; n];
            diag(u, &mut d);
            out.fill(0.0);
            for i in 0..n {
                out[i * n + i] = d[i];
            }
        })
    }

    pub fn from_contra(g_contra: TensorField) -> Result<Self> {
        Self::with_floor(g_contra, DEFAULT_FLOOR)
    }

    pub fn with_floor(g_contra: TensorField, floor_factor: f64) -> Result<Self> {
        let chart = g_contra.chart().clone();
        let n = chart.dim();
        if g_contra.components() != n * n {
            return Err(Error::ShapeMismatch("metric must have N×N components".into()));
        }
        let scale = g_contra.max_abs();
        let floor = floor_factor * scale.powi(n as i32);
        let mut cov = vec![0.0; g_contra.data().len()];
        let mut min_abs_det = f64::INFINITY;
        let mut inverse_defect: f64 = 0.0;
        for node in 0..chart.len() {
            let m = DMatrix::from_row_slice(n, n, g_contra.node(node));
            let lu = m.clone().lu();
            let det = lu.determinant();
            min_abs_det = min_abs_det.min(det.abs());
            if !(det.abs() >= floor) || det == 0.0 {
                return Err(Error::DegenerateMetric {
                    node,
                    coords: chart.node_coords(node),
                    det,
                    floor,
                });
            }
            let inv = lu.try_inverse().ok_or_else(|| Error::DegenerateMetric {
                node,
                coords: chart.node_coords(node),
                det,
                floor,
            })?;
            // Symmetrize the inverse so the stored covariant metric is exactly symmetric.
            let inv = (&inv + inv.transpose()) * 0.5;
            let check = &m * &inv;
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    inverse_defect = inverse_defect.max((check[(i, j)] - target).abs());
                    cov[node * n * n + i * n + j] = inv[(i, j)];
                }
            }
        }
        let g_cov = TensorField::from_data(&chart, &[LO, LO], cov)?;
        Ok(Self {
            g_contra,
            g_cov,
            min_abs_det,
            floor,
            inverse_defect,
        })
    }

    pub fn chart(&self) -> &GridChart {
        self.g_contra.chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn contra(&self) -> &TensorField {
        &self.g_contra
    }

    pub fn cov(&self) -> &TensorField {
        &self.g_cov
    }

    pub fn min_abs_det(&self) -> f64 {
        self.min_abs_det
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Largest entry of `g^{is}g_{sj} − δ^i_j` over the chart.
    pub fn inverse_defect(&self) -> f64 {
        self.inverse_defect
    }

    /// Largest off-diagonal magnitude of `g^{ij}`.
    pub fn off_diagonal_max(&self) -> (f64, usize) {
        let n = self.dim();
        let mut worst = (0.0, 0);
        for node in 0..self.chart().len() {
            let g = self.g_contra.node(node);
            for i in 0..n {
                for j in 0..n {
                    if i != j && g[i * n + j].abs() > worst.0 {
                        worst = (g[i * n + j].abs(), node);
                    }
                }
            }
        }
        worst
    }

    pub fn connection(&self, order: Order) -> Result<ConnectionField> {
        ConnectionField::new(self, order)
    }

    /// Connection and curvature in one call.
    pub fn geometry(&self, order: Order) -> Result<(ConnectionField, CurvatureField)> {
        let conn = self.connection(order)?;
        let curv = CurvatureField::new(self, &conn, order)?;
        Ok((conn, curv))
    }
}

/// Christoffel symbols in mixed and contravariant form.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionField {
    /// `Γ^i_{jk}`, component `(i*N + j)*N + k`.
    pub gamma_mixed: TensorField,
    /// `Γ^{ij}_k = g^{is}Γ^j_{sk}`, component `(i*N + j)*N + k`.
    pub gamma_contra: TensorField,
}

impl ConnectionField {
    pub fn new(metric: &MetricField, order: Order) -> Result<Self> {
        let chart = metric.chart();
        let n = chart.dim();
        // dg[a] holds ∂_a g_{bc}.
        let dg = metric.cov().gradient(order)?;
        let mut mixed = TensorField::zeros(chart, &[UP, LO, LO]);
        let mut contra = TensorField::zeros(chart, &[UP, UP, LO]);
        let mut lowered = vec![0.0; n * n * n];
        for node in 0..chart.len() {
            let ginv = metric.contra().node(node);
            // Γ_{sjk} = ½(∂_j g_{sk} + ∂_k g_{js} − ∂_s g_{jk})
            for s in 0..n {
                for j in 0..n {
                    for k in j..n {
                        let v = 0.5
                            * (dg[j].get(node, s * n + k) + dg[k].get(node, j * n + s) - dg[s].get(node, j * n + k));
                        lowered[(s * n + j) * n + k] = v;
                        lowered[(s * n + k) * n + j] = v;
                    }
                }
            }
            let out = mixed.node_mut(node);
            for i in 0..n {
                for j in 0..n {
                    for k in j..n {
                        let v: f64 = (0..n).map(|s| ginv[i * n + s] * lowered[(s * n + j) * n + k]).sum();
                        out[(i * n + j) * n + k] = v;
                        out[(i * n + k) * n + j] = v;
                    }
                }
            }
            let gm = mixed.node(node).to_vec();
            let out = contra.node_mut(node);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[(i * n + j) * n + k] = (0..n).map(|s| ginv[i * n + s] * gm[(j * n + s) * n + k]).sum();
                    }
                }
            }
        }
        Ok(Self {
            gamma_mixed: mixed,
            gamma_contra: contra,
        })
    }
}

/// Riemann curvature in mixed and raised form.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    /// `R^i_{jkl}`, component `((i*N + j)*N + k)*N + l`.
    pub r_mixed: TensorField,
    /// `R^{ij}_{kl}`, component `((i*N + j)*N + k)*N + l`.
    pub r_contra: TensorField,
    order: Order,
}

impl CurvatureField {
    pub fn new(metric: &MetricField, conn: &ConnectionField, order: Order) -> Result<Self> {
        let chart = metric.chart();
        if conn.gamma_mixed.chart() != chart {
            return Err(Error::ChartMismatch);
        }
        let n = chart.dim();
        let dgam = conn.gamma_mixed.gradient(order)?;
        let mut mixed = TensorField::zeros(chart, &[UP, LO, LO, LO]);
        let mut contra = TensorField::zeros(chart, &[UP, UP, LO, LO]);
        let idx3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
        let idx4 = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        for node in 0..chart.len() {
            let gam = conn.gamma_mixed.node(node);
            let out = mixed.node_mut(node);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in (k + 1)..n {
                            let mut v = -dgam[k].get(node, idx3(i, j, l)) + dgam[l].get(node, idx3(i, j, k));
                            for p in 0..n {
                                v += -gam[idx3(i, p, k)] * gam[idx3(p, j, l)] + gam[idx3(i, p, l)] * gam[idx3(p, j, k)];
                            }
                            out[idx4(i, j, k, l)] = v;
                            out[idx4(i, j, l, k)] = -v;
                        }
                    }
                }
            }
            let rm = mixed.node(node).to_vec();
            let ginv = metric.contra().node(node);
            let out = contra.node_mut(node);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            out[idx4(i, j, k, l)] = (0..n).map(|s| ginv[i * n + s] * rm[idx4(j, s, k, l)]).sum();
                        }
                    }
                }
            }
        }
        Ok(Self {
            r_mixed: mixed,
            r_contra: contra,
            order,
        })
    }

    pub fn order(&self) -> Order {
        self.order
    }
}

/// Max over interior nodes of `|R^i_{jkl}|`.
pub fn flatness_residual(metric: &MetricField, order: Order) -> Result<f64> {
    let (_, curv) = metric.geometry(order)?;
    let nodes = interior_or_err(metric.chart(), order.curvature_margin())?;
    Ok(curv.r_mixed.max_abs_over(&nodes))
}

/// Max over interior nodes of `|R^{ij}_{kl} − K(δ^i_kδ^j_l − δ^i_lδ^j_k)|`.
pub fn constant_curvature_residual(metric: &MetricField, k_value: f64, order: Order) -> Result<f64> {
    let (_, curv) = metric.geometry(order)?;
    constant_curvature_residual_of(&curv, metric.chart(), k_value)
}

pub fn constant_curvature_residual_of(curv: &CurvatureField, chart: &GridChart, k_value: f64) -> Result<f64> {
    let nodes = interior_or_err(chart, curv.order().curvature_margin())?;
    Ok(curvature_defect_field(curv, chart, k_value).max_abs_over(&nodes))
}

/// Curvature defects of the same metric on a chart and on the chart with
/// doubled spacing, compared on the interior nodes of the coarse chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStudy {
    pub coarse: f64,
    pub fine: f64,
    pub observed_order: f64,
}

pub fn convergence_study(
    fine: &MetricField,
    coarse: &MetricField,
    k_value: f64,
    order: Order,
) -> Result<ConvergenceStudy> {
    let (fc, cc) = (fine.chart(), coarse.chart());
    let nested = fc.dim() == cc.dim()
        && (0..fc.dim()).all(|a| {
            fc.points()[a] == 2 * cc.points()[a] - 1 && fc.lower()[a] == cc.lower()[a] && fc.upper()[a] == cc.upper()[a]
        });
    if !nested {
        return Err(Error::InvalidArgument(
            "coarse chart must have exactly doubled spacing".into(),
        ));
    }
    let (_, curv_f) = fine.geometry(order)?;
    let (_, curv_c) = coarse.geometry(order)?;
    let df = curvature_defect_field(&curv_f, fc, k_value);
    let dc = curvature_defect_field(&curv_c, cc, k_value);
    let nodes = interior_or_err(cc, order.curvature_margin())?;
    let coarse_max = dc.max_abs_over(&nodes);
    let fine_nodes: Vec<usize> = nodes
        .iter()
        .map(|&n| {
            let m: Vec<usize> = cc.multi_index(n).iter().map(|i| 2 * i).collect();
            fc.flat_index(&m)
        })
        .collect();
    let fine_max = df.max_abs_over(&fine_nodes);
    Ok(ConvergenceStudy {
        coarse: coarse_max,
        fine: fine_max,
        observed_order: (coarse_max / fine_max).log2(),
    })
}

/// Per-node `max |R^{ij}_{kl} − K(δ^i_kδ^j_l − δ^i_lδ^j_k)|` as a scalar field.
pub fn curvature_defect_field(curv: &CurvatureField, chart: &GridChart, k_value: f64) -> TensorField {
    let n = chart.dim();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = TensorField::zeros(chart, &[]);
    for node in 0..chart.len() {
        let r = curv.r_contra.node(node);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let target = k_value * (delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k));
                        worst = worst.max((r[((i * n + j) * n + k) * n + l] - target).abs());
                    }
                }
            }
        }
        out.set(node, 0, worst);
    }
    out
}
