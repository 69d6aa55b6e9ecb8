//! Scenario files.
//!
//! A scenario is a JSON object with a `kind` tag, optional common settings
//! (`name`, `description`, `tolerance`, `order`, `seed`) and kind-specific
//! fields. Expressions are strings over `u1 … uN`.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use flatpencil_core::dressing::Quadrature;
use flatpencil_core::functions::{PotentialSpec, ProfileSpec};
use flatpencil_core::grid::GridChart;

/// Settings shared by every kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

const COMMON_KEYS: [&str; 5] = ["name", "description", "tolerance", "order", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub common: Common,
    pub task: Task,
}

impl Scenario {
    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut map) = value else {
            bail!("scenario must be a JSON object");
        };
        let mut common = serde_json::Map::new();
        for key in COMMON_KEYS {
            if let Some(v) = map.remove(key) {
                common.insert(key.to_string(), v);
            }
        }
        let common: Common = serde_json::from_value(Value::Object(common)).context("invalid common settings")?;
        let task: Task = serde_json::from_value(Value::Object(map)).context("invalid scenario")?;
        Ok(Self { common, task })
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).context("scenario is not valid JSON")?;
        Self::from_value(value)
    }

    pub fn to_value(&self) -> Value {
        let mut out = serde_json::to_value(&self.task).expect("task serializes");
        if let (Value::Object(map), Value::Object(common)) = (
            &mut out,
            serde_json::to_value(&self.common).expect("settings serialize"),
        ) {
            for (k, v) in common {
                map.insert(k, v);
            }
        }
        out
    }
}

/// Uniform box. `points` is either one count for every axis or one per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Points {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

impl ChartSpec {
    pub fn build(&self) -> Result<GridChart> {
        let points = match &self.points {
            Points::Uniform(p) => vec![*p; self.lower.len()],
            Points::PerAxis(p) => p.clone(),
        };
        Ok(GridChart::new(self.lower.clone(), self.upper.clone(), points)?)
    }

    /// The same box with every spacing doubled. Needs odd point counts.
    pub fn coarsened(&self) -> Result<Self> {
        let half = |p: usize| {
            if p % 2 == 0 {
                bail!("convergence study needs odd point counts, got {p}");
            }
            Ok((p + 1) / 2)
        };
        let points = match &self.points {
            Points::Uniform(p) => Points::Uniform(half(*p)?),
            Points::PerAxis(p) => Points::PerAxis(p.iter().map(|&p| half(p)).collect::<Result<_>>()?),
        };
        Ok(Self { points, ..self.clone() })
    }
}

/// Contravariant metric given in full or by its diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Contra(Vec<Vec<String>>),
    Diagonal(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModeSpec {
    Flat,
    ConstantCurvature {
        k1: f64,
        k2: f64,
    },
    General,
    /// Connection linearity only.
    Almost,
}

/// `Φ_{ij}` with 1-based indices `i ≤ j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialEntry {
    pub i: usize,
    pub j: usize,
    pub potential: PotentialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomProbes {
    pub count: usize,
    /// `[xlo, xhi, ylo, yhi]`
    pub region: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    Points(Vec<(f64, f64)>),
    Random(RandomProbes),
}

/// Source of `b¹`, `b²` in the two-component construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BSpec {
    /// Expressions in `u1`, `u2`.
    Given([String; 2]),
    /// `b¹` on `u² = lower` as an expression in `t`, `b²` on `u¹ = lower`.
    Edges([String; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    CheckFlat {
        chart: ChartSpec,
        metric: MetricSpec,
        /// Expected constant curvature; zero checks flatness.
        #[serde(default)]
        curvature: f64,
        /// Also run on the chart with doubled spacing and report the observed order.
        #[serde(default)]
        convergence: bool,
    },
    CheckPencil {
        chart: ChartSpec,
        g1: MetricSpec,
        g2: MetricSpec,
        #[serde(default = "flat_mode")]
        mode: ModeSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambdas: Option<Vec<(f64, f64)>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nonsingular_threshold: Option<f64>,
    },
    Nijenhuis {
        chart: ChartSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g1: Option<MetricSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g2: Option<MetricSpec>,
        /// `v^i_j` row by row, instead of a pair.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        affinor: Option<Vec<Vec<String>>>,
    },
    DiagonalForm {
        chart: ChartSpec,
        g1: MetricSpec,
        g2: MetricSpec,
    },
    Dubrovin {
        chart: ChartSpec,
        /// Constant flat metric `g₂`.
        eta: Vec<Vec<f64>>,
        /// Components `f^i`.
        f: Vec<String>,
        #[serde(default)]
        c: f64,
    },
    Potentials {
        chart: ChartSpec,
        eta: Vec<Vec<f64>>,
        /// Components `h^i`.
        h: Vec<String>,
    },
    Lame {
        chart: ChartSpec,
        /// Diagonal of the contravariant metric.
        metric: Vec<String>,
        eps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profiles: Option<Vec<ProfileSpec>>,
        /// Lamé tolerance relative to the flatness tolerance.
        #[serde(default = "default_coupling")]
        coupling: f64,
    },
    Reduce {
        dim: usize,
        potentials: Vec<PotentialEntry>,
        profiles: Vec<ProfileSpec>,
        probes: ProbeSpec,
        /// Point `u` at which the kernel identity is probed.
        u: Vec<f64>,
        #[serde(default = "default_identity_tolerance")]
        identity_tolerance: f64,
    },
    Dress {
        chart: ChartSpec,
        potentials: Vec<PotentialEntry>,
        #[serde(default)]
        s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadrature: Option<Quadrature>,
        eps: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<ProfileSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        profiles: Option<Vec<ProfileSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cond_cap: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_limit: Option<f64>,
    },
    TwoComponent {
        chart: ChartSpec,
        eps: [f64; 2],
        profiles: [ProfileSpec; 2],
        /// `F` as an expression in `u1`, `u2`.
        potential: String,
        b: BSpec,
        /// Members `G_n` checked pairwise for flat compatibility.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        family: Option<Vec<u32>>,
        /// Expected constant curvature of `G_3`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g3_curvature: Option<f64>,
    },
    Catalog {
        entry: String,
    },
}

fn flat_mode() -> ModeSpec {
    ModeSpec::Flat
}

fn default_coupling() -> f64 {
    10.0
}

fn default_identity_tolerance() -> f64 {
    1e-8
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::CheckFlat { .. } => "check-flat",
            Task::CheckPencil { .. } => "check-pencil",
            Task::Nijenhuis { .. } => "nijenhuis",
            Task::DiagonalForm { .. } => "diagonal-form",
            Task::Dubrovin { .. } => "dubrovin",
            Task::Potentials { .. } => "potentials",
            Task::Lame { .. } => "lame",
            Task::Reduce { .. } => "reduce",
            Task::Dress { .. } => "dress",
            Task::TwoComponent { .. } => "two-component",
            Task::Catalog { .. } => "catalog",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Task::CheckFlat { .. } | Task::DiagonalForm { .. } => 1e-6,
            Task::Reduce { .. } => 1e-10,
            _ => 1e-5,
        }
    }
}
