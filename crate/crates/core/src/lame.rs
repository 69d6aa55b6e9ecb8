//! Lamé coefficients and rotation coefficients of diagonal metrics.
//!
//! For `g^{ii} = ε^i/H_i²` the rotation coefficients are
//! `β_{ik} = (1/H_i)∂_iH_k`. Flatness is equivalent to
//!
//! * `∂_kβ_{ij} = β_{ik}β_{kj}` for distinct `i, j, k`,
//! * `ε^i∂_iβ_{ij} + ε^j∂_jβ_{ji} + Σ_{s≠i,j} ε^sβ_{si}β_{sj} = 0`,
//!
//! and the second metric `f^i(u^i)g^{ii}` is flat as well exactly when
//! the second family holds with `ε^i` replaced by `ε^i f^i` after the
//! substitution `β → √f^i β √f^j⁻¹`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::Profile;
use crate::geometry::MetricField;
use crate::grid::{interior_or_err, GridChart, Order, TensorField, Variance};
use crate::pencil::PencilSpec;

/// Lamé and rotation coefficients with axis signs.
#[derive(Debug, Clone, PartialEq)]
pub struct LameFrame {
    /// `H_i`, N components per node.
    pub h: TensorField,
    /// `β_{ik}`, component `i*N + k`; the diagonal is zero.
    pub beta: TensorField,
    /// `ε^i ∈ {+1, −1}`.
    pub eps: Vec<f64>,
}

impl LameFrame {
    /// Assemble a frame from independently computed parts.
    pub fn from_parts(h: TensorField, beta: TensorField, eps: Vec<f64>) -> Result<Self> {
        let chart = h.chart();
        let n = chart.dim();
        if h.components() != n || beta.components() != n * n || eps.len() != n {
            return Err(Error::ShapeMismatch(
                "frame needs N Lamé and N×N rotation components".into(),
            ));
        }
        if beta.chart() != chart {
            return Err(Error::ChartMismatch);
        }
        validate_signs(&eps)?;
        for node in 0..chart.len() {
            for i in 0..n {
                if !(h.get(node, i) > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "Lamé coefficient H_{} is not positive at node {node}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { h, beta, eps })
    }

    pub fn chart(&self) -> &GridChart {
        self.h.chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    /// `β_{ik}` recomputed from `H` by finite differences.
    pub fn beta_from_h(h: &TensorField, order: Order) -> Result<TensorField> {
        let chart = h.chart();
        let n = chart.dim();
        let dh = h.gradient(order)?;
        let mut beta = TensorField::zeros(chart, &[Variance::Lower, Variance::Lower]);
        for node in 0..chart.len() {
            for i in 0..n {
                let hi = h.get(node, i);
                for k in (0..n).filter(|&k| k != i) {
                    beta.set(node, i * n + k, dh[i].get(node, k) / hi);
                }
            }
        }
        Ok(beta)
    }

    /// Max interior `|β_{ik} − (1/H_i)∂_iH_k|`.
    pub fn consistency_defect(&self, order: Order) -> Result<f64> {
        let fd = Self::beta_from_h(&self.h, order)?;
        let nodes = interior_or_err(self.chart(), order.half_width())?;
        let diff = fd.linear_combination(1.0, &self.beta, -1.0)?;
        Ok(diff.max_abs_over(&nodes))
    }
}

fn validate_signs(eps: &[f64]) -> Result<()> {
    if eps.iter().any(|&e| e != 1.0 && e != -1.0) {
        return Err(Error::InvalidArgument("signs must be +1 or -1".into()));
    }
    Ok(())
}

/// Frame of a diagonal contravariant metric with signs `ε^i`.
pub fn frame_from_metric(metric: &MetricField, eps: &[f64], order: Order) -> Result<LameFrame> {
    let chart = metric.chart();
    let n = chart.dim();
    if eps.len() != n {
        return Err(Error::ShapeMismatch("one sign per axis required".into()));
    }
    validate_signs(eps)?;
    let scale = metric.contra().max_abs();
    let (off, node) = metric.off_diagonal_max();
    if off > 1e-12 * scale {
        return Err(Error::NotDiagonal { node, value: off });
    }
    let mut h = TensorField::with_components(chart, n);
    for node in 0..chart.len() {
        let g = metric.contra().node(node);
        for i in 0..n {
            let value = eps[i] * g[i * n + i];
            if !(value > 0.0) {
                return Err(Error::SignMismatch { node, axis: i, value });
            }
            h.set(node, i, value.powf(-0.5));
        }
    }
    let beta = LameFrame::beta_from_h(&h, order)?;
    Ok(LameFrame {
        h,
        beta,
        eps: eps.to_vec(),
    })
}

/// Residual of both equation families for one index pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    /// Max over `k ∉ {i, j}` of `|∂_kβ_{ij} − β_{ik}β_{kj}|`.
    pub offdiag: f64,
    pub diag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LameResiduals {
    pub r_offdiag: f64,
    pub r_diag: f64,
    pub pairs: Vec<PairResidual>,
    pub max: f64,
}

fn axis_profile_values(chart: &GridChart, profiles: &[Profile]) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let n = chart.dim();
    if profiles.len() != n {
        return Err(Error::ShapeMismatch("one profile per axis required".into()));
    }
    (0..n)
        .map(|i| {
            if profiles[i].sign_on(chart.lower()[i], chart.upper()[i]).is_none() {
                return Err(Error::SignChange { axis: i });
            }
            let pts = chart.points()[i];
            let t: Vec<f64> = (0..pts).map(|k| chart.coord(i, k)).collect();
            Ok((
                t.iter().map(|&x| profiles[i].value(x)).collect(),
                t.iter().map(|&x| profiles[i].derivative(x)).collect(),
            ))
        })
        .collect()
}

/// Residual of `φ^i∂_iβ_{ij} + ½φ^i′β_{ij} + φ^j∂_jβ_{ji} + ½φ^j′β_{ji}
/// + Σ φ^sβ_{si}β_{sj}` with `φ^i = ε^i f^i(u^i)`, per pair.
fn diag_family(frame: &LameFrame, dbeta: &[TensorField], profiles: &[Profile], nodes: &[usize]) -> Result<Vec<f64>> {
    let chart = frame.chart();
    let n = chart.dim();
    let values = axis_profile_values(chart, profiles)?;
    let mut out = vec![0.0f64; n * n];
    for &node in nodes {
        let b = frame.beta.node(node);
        let phi = |a: usize| {
            let k = chart.axis_index(node, a);
            (frame.eps[a] * values[a].0[k], frame.eps[a] * values[a].1[k])
        };
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let (pi, dpi) = phi(i);
                let (pj, dpj) = phi(j);
                let mut r = pi * dbeta[i].get(node, i * n + j)
                    + 0.5 * dpi * b[i * n + j]
                    + pj * dbeta[j].get(node, j * n + i)
                    + 0.5 * dpj * b[j * n + i];
                for s in (0..n).filter(|&s| s != i && s != j) {
                    r += phi(s).0 * b[s * n + i] * b[s * n + j];
                }
                out[i * n + j] = out[i * n + j].max(r.abs());
            }
        }
    }
    Ok(out)
}

/// Residuals of both Lamé families over interior nodes.
pub fn lame_residuals(frame: &LameFrame, order: Order) -> Result<LameResiduals> {
    let chart = frame.chart();
    let n = chart.dim();
    let nodes = interior_or_err(chart, order.curvature_margin())?;
    let dbeta = frame.beta.gradient(order)?;
    let ones = vec![Profile::Constant(1.0); n];
    let diag = diag_family(frame, &dbeta, &ones, &nodes)?;
    let mut offdiag = vec![0.0f64; n * n];
    for &node in &nodes {
        let b = frame.beta.node(node);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                for k in (0..n).filter(|&k| k != i && k != j) {
                    let r = dbeta[k].get(node, i * n + j) - b[i * n + k] * b[k * n + j];
                    offdiag[i * n + j] = offdiag[i * n + j].max(r.abs());
                }
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            pairs.push(PairResidual {
                i,
                j,
                offdiag: offdiag[i * n + j],
                diag: diag[i * n + j],
            });
        }
    }
    let r_offdiag = offdiag.iter().fold(0.0f64, |m, &v| m.max(v));
    let r_diag = diag.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(LameResiduals {
        r_offdiag,
        r_diag,
        pairs,
        max: r_offdiag.max(r_diag),
    })
}

/// Max interior residual of the reduced diagonal family for profiles `f^i(u^i)`.
pub fn reduction_residual(frame: &LameFrame, profiles: &[Profile], order: Order) -> Result<f64> {
    let nodes = interior_or_err(frame.chart(), order.curvature_margin())?;
    let dbeta = frame.beta.gradient(order)?;
    let per_pair = diag_family(frame, &dbeta, profiles, &nodes)?;
    Ok(per_pair.iter().fold(0.0f64, |m, &v| m.max(v)))
}

/// Frame of `f^i(u^i)g^{ii}`: `H̃_i = H_i/√|f^i|`, `ε̃^i = ε^i sgn f^i`,
/// `β̃_{ik} = √|f^i|/√|f^k| β_{ik}`.
pub fn tilde_frame(frame: &LameFrame, profiles: &[Profile]) -> Result<LameFrame> {
    let chart = frame.chart();
    let n = chart.dim();
    let values = axis_profile_values(chart, profiles)?;
    let eps: Vec<f64> = (0..n).map(|i| frame.eps[i] * values[i].0[0].signum()).collect();
    let mut h = frame.h.clone();
    let mut beta = frame.beta.clone();
    for node in 0..chart.len() {
        let root: Vec<f64> = (0..n)
            .map(|a| values[a].0[chart.axis_index(node, a)].abs().sqrt())
            .collect();
        for i in 0..n {
            h.set(node, i, frame.h.get(node, i) / root[i]);
            for k in (0..n).filter(|&k| k != i) {
                beta.set(node, i * n + k, root[i] / root[k] * frame.beta.get(node, i * n + k));
            }
        }
    }
    Ok(LameFrame { h, beta, eps })
}

/// `g₂ = diag(ε^i/H_i²)`, `g₁ = diag(ε^i f^i/H_i²)`, gated on the Lamé and
/// reduction residuals being below `tol`.
pub fn metric_pair_from_frame(frame: &LameFrame, profiles: &[Profile], order: Order, tol: f64) -> Result<PencilSpec> {
    let lame = lame_residuals(frame, order)?;
    let reduced = reduction_residual(frame, profiles, order)?;
    if lame.r_offdiag > tol || lame.r_diag > tol || reduced > tol {
        return Err(Error::ResidualsTooLarge(format!(
            "offdiag {:e}, diag {:e}, reduction {:e} (tolerance {tol:e})",
            lame.r_offdiag, lame.r_diag, reduced
        )));
    }
    let chart = frame.chart();
    let n = chart.dim();
    let values = axis_profile_values(chart, profiles)?;
    let mut g2 = vec![0.0; chart.len() * n * n];
    let mut g1 = vec![0.0; chart.len() * n * n];
    for node in 0..chart.len() {
        for i in 0..n {
            let hi = frame.h.get(node, i);
            let g = frame.eps[i] / (hi * hi);
            g2[node * n * n + i * n + i] = g;
            g1[node * n * n + i * n + i] = values[i].0[chart.axis_index(node, i)] * g;
        }
    }
    let sig = [Variance::Upper, Variance::Upper];
    let g1 = MetricField::from_contra(TensorField::from_data(chart, &sig, g1)?)?;
    let g2 = MetricField::from_contra(TensorField::from_data(chart, &sig, g2)?)?;
    PencilSpec::new(g1, g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::flatness_residual;

    fn polar(points: usize) -> MetricField {
        let chart = GridChart::cube(2, 1.0, 2.0, points).unwrap();
        MetricField::diagonal(&chart, |u, d| {
            d[0] = 1.0;
            d[1] = 1.0 / (u[0] * u[0]);
        })
        .unwrap()
    }

    #[test]
    fn euclidean_frame() {
        let chart = GridChart::cube(3, 0.0, 1.0, 9).unwrap();
        let g = MetricField::diagonal(&chart, |_, d| d.fill(1.0)).unwrap();
        let f = frame_from_metric(&g, &[1.0; 3], Order::Fourth).unwrap();
        assert!(f.h.data().iter().all(|&v| v == 1.0));
        assert_eq!(f.beta.max_abs(), 0.0);
        let r = lame_residuals(&f, Order::Fourth).unwrap();
        assert_eq!((r.r_offdiag, r.r_diag), (0.0, 0.0));
    }

    #[test]
    fn polar_frame_by_hand() {
        let g = polar(101);
        let f = frame_from_metric(&g, &[1.0, 1.0], Order::Fourth).unwrap();
        let chart = g.chart().clone();
        for node in 0..chart.len() {
            let r = chart.node_coords(node)[0];
            assert!((f.h.get(node, 1) - r).abs() < 1e-14);
            assert!((f.beta.get(node, 1) - 1.0).abs() < 1e-12);
            assert_eq!(f.beta.get(node, 2), 0.0);
        }
        let r = lame_residuals(&f, Order::Fourth).unwrap();
        assert_eq!(r.r_offdiag, 0.0);
        assert!(r.r_diag < 1e-10);
    }

    #[test]
    fn sign_mismatch() {
        let g = polar(9);
        assert!(matches!(
            frame_from_metric(&g, &[-1.0, 1.0], Order::Fourth),
            Err(Error::SignMismatch { axis: 0, .. })
        ));
    }

    #[test]
    fn sphere_frame_is_not_flat() {
        let chart = GridChart::new(vec![0.8, 0.0], vec![1.8, 1.0], vec![41, 41]).unwrap();
        let g = MetricField::diagonal(&chart, |u, d| {
            d[0] = 1.0;
            d[1] = 1.0 / u[0].sin().powi(2);
        })
        .unwrap();
        let f = frame_from_metric(&g, &[1.0, 1.0], Order::Fourth).unwrap();
        let r = lame_residuals(&f, Order::Fourth).unwrap();
        assert!(r.r_diag > 0.1);
        assert!(flatness_residual(&g, Order::Fourth).unwrap() > 0.1);
    }

    #[test]
    fn unit_profile_reduces_to_diag_family_exactly() {
        let chart = GridChart::new(vec![0.8, 0.0], vec![1.8, 1.0], vec![21, 21]).unwrap();
        let g = MetricField::diagonal(&chart, |u, d| {
            d[0] = 1.0 + 0.1 * u[1];
            d[1] = 1.0 / u[0].sin().powi(2);
        })
        .unwrap();
        let f = frame_from_metric(&g, &[1.0, 1.0], Order::Fourth).unwrap();
        let ones = vec![Profile::Constant(1.0); 2];
        assert_eq!(
            reduction_residual(&f, &ones, Order::Fourth).unwrap(),
            lame_residuals(&f, Order::Fourth).unwrap().r_diag
        );
    }

    #[test]
    fn polar_tilde_by_hand() {
        let g = polar(21);
        let f = frame_from_metric(&g, &[1.0, 1.0], Order::Fourth).unwrap();
        let t = tilde_frame(&f, &[Profile::identity(), Profile::Constant(1.0)]).unwrap();
        let chart = g.chart().clone();
        for node in 0..chart.len() {
            let r = chart.node_coords(node)[0];
            assert!((t.h.get(node, 0) - 1.0 / r.sqrt()).abs() < 1e-14);
            assert!((t.h.get(node, 1) - r).abs() < 1e-14);
            // β̃_{12} = √u¹ · β_{12}
            assert!((t.beta.get(node, 1) - r.sqrt() * f.beta.get(node, 1)).abs() < 1e-14);
        }
        assert!(t.consistency_defect(Order::Fourth).unwrap() < 1e-9);
    }

    #[test]
    fn constant_pair_from_trivial_frame() {
        let chart = GridChart::cube(2, 0.0, 1.0, 9).unwrap();
        let g = MetricField::diagonal(&chart, |_, d| d.fill(1.0)).unwrap();
        let f = frame_from_metric(&g, &[1.0, 1.0], Order::Fourth).unwrap();
        let p = metric_pair_from_frame(
            &f,
            &[Profile::Constant(2.0), Profile::Constant(3.0)],
            Order::Fourth,
            1e-10,
        )
        .unwrap();
        assert!(p.g1.contra().data().chunks(4).all(|g| g == [2.0, 0.0, 0.0, 3.0]));
        assert!(p.g2.contra().data().chunks(4).all(|g| g == [1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn profile_sign_change_is_rejected() {
        let g = polar(9);
        let f = frame_from_metric(&g, &[1.0, 1.0], Order::Fourth).unwrap();
        let bad = Profile::Linear {
            slope: 1.0,
            offset: -1.5,
        };
        assert!(matches!(
            reduction_residual(&f, &[bad, Profile::Constant(1.0)], Order::Fourth),
            Err(Error::SignChange { axis: 0 })
        ));
    }
}
