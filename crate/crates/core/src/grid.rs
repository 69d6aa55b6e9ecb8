//! Uniform tensor-product grids and finite-difference calculus.
//!
//! Every derivative taken elsewhere in the crate is a [`TensorField::partial`]
//! call on a field sampled over a [`GridChart`]. Interior nodes use central
//! stencils, boundary nodes use one-sided stencils of the same order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order of accuracy of the finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Order {
    Second,
    #[default]
    Fourth,
}

impl Order {
    pub fn from_int(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Order::Second),
            4 => Ok(Order::Fourth),
            other => Err(Error::InvalidArgument(format!(
                "order of accuracy must be 2 or 4, got {other}"
            ))),
        }
    }

    pub fn as_int(self) -> usize {
        match self {
            Order::Second => 2,
            Order::Fourth => 4,
        }
    }

    /// Half-width of the central stencil.
    pub fn half_width(self) -> usize {
        self.as_int() / 2
    }

    /// Interior margin (in nodes) for quantities built from two nested
    /// derivative passes, such as curvature. Nodes at this distance from the
    /// boundary see only central stencils in both passes.
    pub fn curvature_margin(self) -> usize {
        2 * self.half_width()
    }
}

// One-sided and central first-derivative weights, scaled by 1/h at use.
// Offsets are relative to the evaluation node.
const C2_CENTRAL: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
const C2_LEFT: [(isize, f64); 3] = [(0, -1.5), (1, 2.0), (2, -0.5)];

const C4_CENTRAL: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const C4_LEFT0: [(isize, f64); 5] = [
    (0, -25.0 / 12.0),
    (1, 48.0 / 12.0),
    (2, -36.0 / 12.0),
    (3, 16.0 / 12.0),
    (4, -3.0 / 12.0),
];
const C4_LEFT1: [(isize, f64); 5] = [
    (-1, -3.0 / 12.0),
    (0, -10.0 / 12.0),
    (1, 18.0 / 12.0),
    (2, -6.0 / 12.0),
    (3, 1.0 / 12.0),
];

/// Stencil for node `i` of `n` along one axis. The bool requests mirroring
/// (offsets and weights negated) for the right boundary.
fn stencil(order: Order, i: usize, n: usize) -> (&'static [(isize, f64)], bool) {
    match order {
        Order::Second => {
            if i == 0 {
                (&C2_LEFT, false)
            } else if i == n - 1 {
                (&C2_LEFT, true)
            } else {
                (&C2_CENTRAL, false)
            }
        }
        Order::Fourth => {
            if i == 0 {
                (&C4_LEFT0, false)
            } else if i == 1 {
                (&C4_LEFT1, false)
            } else if i == n - 1 {
                (&C4_LEFT0, true)
            } else if i == n - 2 {
                (&C4_LEFT1, true)
            } else {
                (&C4_CENTRAL, false)
            }
        }
    }
}

/// Rectangular box with uniform spacing along each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridChart {
    lower: Vec<f64>,
    upper: Vec<f64>,
    points: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl GridChart {
    pub const MIN_POINTS: usize = 5;

    pub fn new(lower: Vec<f64>, upper: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let dim = lower.len();
        if dim == 0 || upper.len() != dim || points.len() != dim {
            return Err(Error::InvalidChart(format!(
                "inconsistent dimensions: lower {}, upper {}, points {}",
                lower.len(),
                upper.len(),
                points.len()
            )));
        }
        for axis in 0..dim {
            if !(lower[axis].is_finite() && upper[axis].is_finite()) {
                return Err(Error::InvalidChart(format!("axis {axis} has non-finite bounds")));
            }
            if upper[axis] <= lower[axis] {
                return Err(Error::InvalidChart(format!(
                    "axis {axis}: upper {} must exceed lower {}",
                    upper[axis], lower[axis]
                )));
            }
            if points[axis] < Self::MIN_POINTS {
                return Err(Error::InvalidChart(format!(
                    "axis {axis}: {} points, need at least {}",
                    points[axis],
                    Self::MIN_POINTS
                )));
            }
        }
        let spacing = (0..dim)
            .map(|a| (upper[a] - lower[a]) / (points[a] - 1) as f64)
            .collect();
        let mut strides = vec![1; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * points[a + 1];
        }
        Ok(Self {
            lower,
            upper,
            points,
            spacing,
            strides,
        })
    }

    /// Same bounds and point count on every axis.
    pub fn cube(dim: usize, lower: f64, upper: f64, points: usize) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim], vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        if index + 1 == self.points[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + index as f64 * self.spacing[axis]
        }
    }

    /// Index of node `node` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.points[axis]
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.axis_index(node, a)).collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        let mut u = vec![0.0; self.dim()];
        self.fill_coords(node, &mut u);
        u
    }

    pub fn fill_coords(&self, node: usize, out: &mut [f64]) {
        for (axis, slot) in out.iter_mut().enumerate() {
            *slot = self.coord(axis, self.axis_index(node, axis));
        }
    }

    /// Nodes at least `margin` nodes away from every face.
    pub fn interior_nodes(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&node| {
                (0..self.dim()).all(|a| {
                    let i = self.axis_index(node, a);
                    i >= margin && i + margin < self.points[a]
                })
            })
            .collect()
    }

    pub fn require_points(&self, axis: usize, order: Order) -> Result<()> {
        let required = match order {
            Order::Second => 3,
            Order::Fourth => 5,
        };
        if self.points[axis] < required {
            return Err(Error::ChartTooCoarse {
                axis,
                points: self.points[axis],
                order: order.as_int(),
                required,
            });
        }
        Ok(())
    }
}

/// Position of an index slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variance {
    Upper,
    Lower,
}

/// Dense tensor field on a chart. Values are stored node-major; each node
/// holds `dim^rank` components in row-major slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    chart: GridChart,
    signature: Vec<Variance>,
    ncomp: usize,
    data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(chart: &GridChart, signature: &[Variance]) -> Self {
        let ncomp = chart.dim().pow(signature.len() as u32);
        Self {
            chart: chart.clone(),
            signature: signature.to_vec(),
            ncomp,
            data: vec![0.0; chart.len() * ncomp],
        }
    }

    /// Field with an arbitrary number of components per node (e.g. a list of
    /// N scalar functions). The signature is recorded as a single upper slot
    /// when `ncomp == dim`, and empty otherwise.
    pub fn with_components(chart: &GridChart, ncomp: usize) -> Self {
        let signature = if ncomp == chart.dim() {
            vec![Variance::Upper]
        } else {
            Vec::new()
        };
        Self {
            chart: chart.clone(),
            signature,
            ncomp,
            data: vec![0.0; chart.len() * ncomp],
        }
    }

    /// Evaluate `closure(u, out)` at every node. Components listed in
    /// `symmetric` slot pairs are averaged and must agree to 1e-10 relative.
    pub fn sample<F>(
        chart: &GridChart,
        signature: &[Variance],
        symmetric: &[(usize, usize)],
        closure: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]),
    {
        let mut field = Self::zeros(chart, signature);
        let mut u = vec![0.0; chart.dim()];
        for node in 0..chart.len() {
            chart.fill_coords(node, &mut u);
            let values = field.node_mut(node);
            closure(&u, values);
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample {
                    node,
                    coords: u.clone(),
                });
            }
        }
        for &(a, b) in symmetric {
            field.symmetrize(a, b)?;
        }
        Ok(field)
    }

    pub fn sample_scalar<F>(chart: &GridChart, closure: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        Self::sample(chart, &[], &[], |u, out| out[0] = closure(u))
    }

    /// Build from raw node-major values.
    pub fn from_data(chart: &GridChart, signature: &[Variance], data: Vec<f64>) -> Result<Self> {
        let ncomp = chart.dim().pow(signature.len() as u32);
        if data.len() != ncomp * chart.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                ncomp * chart.len(),
                data.len()
            )));
        }
        if let Some(node) = data.chunks(ncomp).position(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteSample {
                node,
                coords: chart.node_coords(node),
            });
        }
        Ok(Self {
            chart: chart.clone(),
            signature: signature.to_vec(),
            ncomp,
            data,
        })
    }

    fn symmetrize(&mut self, a: usize, b: usize) -> Result<()> {
        let rank = self.rank();
        if a >= rank || b >= rank || a == b {
            return Err(Error::ShapeMismatch(format!(
                "symmetric pair ({a},{b}) invalid for rank {rank}"
            )));
        }
        let n = self.chart.dim();
        let mut idx = vec![0usize; rank];
        for comp in 0..self.ncomp {
            decode(comp, n, &mut idx);
            if idx[a] <= idx[b] {
                continue;
            }
            idx.swap(a, b);
            let partner = encode(&idx, n);
            idx.swap(a, b);
            for node in 0..self.chart.len() {
                let base = node * self.ncomp;
                let x = self.data[base + comp];
                let y = self.data[base + partner];
                let avg = 0.5 * (x + y);
                let defect = (x - y).abs();
                if defect > 1e-10 * (1.0 + avg.abs()) {
                    return Err(Error::AsymmetricSample { node, a, b, defect });
                }
                self.data[base + comp] = avg;
                self.data[base + partner] = avg;
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn signature(&self) -> &[Variance] {
        &self.signature
    }

    pub fn rank(&self) -> usize {
        self.signature.len()
    }

    pub fn components(&self) -> usize {
        self.ncomp
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn node(&self, node: usize) -> &[f64] {
        &self.data[node * self.ncomp..(node + 1) * self.ncomp]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.data[node * self.ncomp..(node + 1) * self.ncomp]
    }

    pub fn get(&self, node: usize, comp: usize) -> f64 {
        self.data[node * self.ncomp + comp]
    }

    pub fn set(&mut self, node: usize, comp: usize, value: f64) {
        self.data[node * self.ncomp + comp] = value;
    }

    /// Flat component offset of a slot multi-index.
    pub fn comp_index(&self, idx: &[usize]) -> usize {
        encode(idx, self.chart.dim())
    }

    /// Partial derivative along `axis`. Interior nodes use central stencils,
    /// the first and last `order/2` nodes one-sided stencils of equal order.
    pub fn partial(&self, axis: usize, order: Order) -> Result<TensorField> {
        if axis >= self.chart.dim() {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for a {}-d chart",
                self.chart.dim()
            )));
        }
        self.chart.require_points(axis, order)?;
        let n = self.chart.points[axis];
        let stride = self.chart.strides[axis] as isize;
        let inv_h = 1.0 / self.chart.spacing[axis];
        let ncomp = self.ncomp;
        let mut out = vec![0.0; self.data.len()];
        for node in 0..self.chart.len() {
            let i = self.chart.axis_index(node, axis);
            let (weights, mirrored) = stencil(order, i, n);
            let base = node * ncomp;
            for &(offset, w) in weights {
                let (offset, w) = if mirrored { (-offset, -w) } else { (offset, w) };
                if offset == 0 {
                    continue;
                }
                let other = (node as isize + offset * stride) as usize * ncomp;
                // Differences against the centre make constants differentiate to exactly zero.
                for c in 0..ncomp {
                    out[base + c] += w * (self.data[other + c] - self.data[base + c]);
                }
            }
            for v in &mut out[base..base + ncomp] {
                *v *= inv_h;
            }
        }
        Ok(TensorField {
            chart: self.chart.clone(),
            signature: self.signature.clone(),
            ncomp,
            data: out,
        })
    }

    /// All first partials, indexed by axis.
    pub fn gradient(&self, order: Order) -> Result<Vec<TensorField>> {
        (0..self.chart.dim()).map(|axis| self.partial(axis, order)).collect()
    }

    /// `a * self + b * other`, on a shared chart and shape.
    pub fn linear_combination(&self, a: f64, other: &TensorField, b: f64) -> Result<TensorField> {
        if self.chart != other.chart || self.ncomp != other.ncomp {
            return Err(Error::ShapeMismatch(
                "linear combination of fields with different shapes".into(),
            ));
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(TensorField {
            chart: self.chart.clone(),
            signature: self.signature.clone(),
            ncomp: self.ncomp,
            data,
        })
    }

    /// Largest absolute component over the nodes listed.
    pub fn max_abs_over(&self, nodes: &[usize]) -> f64 {
        nodes
            .iter()
            .flat_map(|&n| self.node(n).iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn encode(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

pub(crate) fn decode(mut comp: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = comp % n;
        comp /= n;
    }
}

/// Interior nodes for a margin, failing when the chart has none.
pub(crate) fn interior_or_err(chart: &GridChart, margin: usize) -> Result<Vec<usize>> {
    let nodes = chart.interior_nodes(margin);
    if nodes.is_empty() {
        return Err(Error::InvalidChart(format!("no interior nodes with margin {margin}")));
    }
    Ok(nodes)
}
