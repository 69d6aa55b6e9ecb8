//! Built-in scenarios.

use anyhow::{anyhow, Result};
use serde_json::{json, Value};

use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Pass,
    Fail,
}

impl Expect {
    pub fn as_str(self) -> &'static str {
        match self {
            Expect::Pass => "pass",
            Expect::Fail => "fail",
        }
    }
}

pub struct Entry {
    pub name: &'static str,
    pub description: &'static str,
    pub expect: Expect,
    pub scenario: Value,
}

const S4_BOX: [[f64; 2]; 2] = [[3.5, 1.5], [4.5, 2.5]];

fn s4_chart() -> Value {
    json!({ "lower": S4_BOX[0], "upper": S4_BOX[1], "points": 81 })
}

fn linear() -> Value {
    json!({ "type": "linear", "slope": 1.0, "offset": 0.0 })
}

fn gaussian(i: usize, j: usize, amp: f64, cx: f64, cy: f64) -> Value {
    json!({ "i": i, "j": j, "potential": { "type": "gaussian", "amp": amp, "cx": cx, "cy": cy, "sx": 1.0, "sy": 1.0 } })
}

fn three_gaussians() -> Value {
    json!([
        gaussian(1, 2, 0.3, 1.0, 1.5),
        gaussian(1, 3, -0.2, 1.5, 1.0),
        gaussian(2, 3, 0.25, 1.2, 1.2),
    ])
}

fn quadrature() -> Value {
    json!({ "length": 10.0, "panels": 20, "points": 4 })
}

/// Every entry in a fixed order.
pub fn entries() -> Vec<Entry> {
    use Expect::*;
    vec![
        Entry {
            name: "euclidean",
            description: "Constant identity metric on a 3-d box; curvature vanishes exactly.",
            expect: Pass,
            scenario: json!({
                "kind": "check-flat", "tolerance": 1e-12,
                "chart": { "lower": [0.0, 0.0, 0.0], "upper": [1.0, 1.0, 1.0], "points": 11 },
                "metric": { "contra": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]] },
            }),
        },
        Entry {
            name: "polar",
            description: "Flat metric in polar coordinates diag(1, 1/r^2) at h = 1e-2 with a convergence study.",
            expect: Pass,
            scenario: json!({
                "kind": "check-flat", "tolerance": 1e-6, "convergence": true,
                "chart": { "lower": [1.0, 0.0], "upper": [2.0, 1.0], "points": 101 },
                "metric": { "diagonal": ["1", "1/u1^2"] },
            }),
        },
        Entry {
            name: "sphere",
            description: "Unit sphere diag(1, 1/sin^2 u1); constant curvature K = 1.",
            expect: Pass,
            scenario: json!({
                "kind": "check-flat", "tolerance": 1e-5, "curvature": 1.0,
                "chart": { "lower": [0.8, 0.0], "upper": [1.8, 1.0], "points": 41 },
                "metric": { "diagonal": ["1", "1/sin(u1)^2"] },
            }),
        },
        Entry {
            name: "diag-u",
            description: "Pencil diag(u1, u2, u3) and the identity; compatible and nonsingular on disjoint ranges.",
            expect: Pass,
            scenario: json!({
                "kind": "check-pencil", "tolerance": 1e-5,
                "chart": { "lower": [3.0, 5.0, 7.0], "upper": [4.0, 6.0, 8.0], "points": 13 },
                "g1": { "diagonal": ["u1", "u2", "u3"] },
                "g2": { "diagonal": ["1", "1", "1"] },
                "nonsingular_threshold": 0.5,
            }),
        },
        Entry {
            name: "s4-log-pencil",
            description: "Two-component pair with F = ln(u1-u2)/2 and b = sqrt(u1-u2); G0, G1, G2 pairwise compatible.",
            expect: Pass,
            scenario: json!({
                "kind": "two-component", "tolerance": 1e-5,
                "chart": s4_chart(), "eps": [-1.0, 1.0], "profiles": [linear(), linear()],
                "potential": "0.5*ln(u1-u2)",
                "b": { "given": ["sqrt(u1-u2)", "sqrt(u1-u2)"] },
                "family": [0, 1, 2],
            }),
        },
        Entry {
            name: "s4-constant-curvature",
            description: "Third family member of the log pencil has constant curvature K = 1/4.",
            expect: Pass,
            scenario: json!({
                "kind": "two-component", "tolerance": 1e-5,
                "chart": s4_chart(), "eps": [-1.0, 1.0], "profiles": [linear(), linear()],
                "potential": "0.5*ln(u1-u2)",
                "b": { "given": ["sqrt(u1-u2)", "sqrt(u1-u2)"] },
                "g3_curvature": 0.25,
            }),
        },
        Entry {
            name: "dressing-gaussian",
            description: "Rotation coefficients dressed from three Gaussian potentials; Lamé system holds.",
            expect: Pass,
            scenario: json!({
                "kind": "dress", "tolerance": 1e-5,
                "chart": { "lower": [0.0, 0.0, 0.0], "upper": [0.4, 0.4, 0.4], "points": 11 },
                "potentials": three_gaussians(), "quadrature": quadrature(), "eps": [1.0, 1.0, 1.0],
            }),
        },
        Entry {
            name: "dressing-separable",
            description: "Single product-separable kernel entry; the Neumann series terminates after one term.",
            expect: Pass,
            scenario: json!({
                "kind": "dress", "tolerance": 1e-5,
                "chart": { "lower": [0.0, 0.0], "upper": [0.4, 0.4], "points": 13 },
                "potentials": [gaussian(1, 2, 0.5, 1.0, 1.0)], "quadrature": quadrature(), "eps": [1.0, 1.0],
            }),
        },
        Entry {
            name: "dressing-reduced",
            description:
                "Gaussian potentials with the constant profile (3, 3, 3); the dressed frame yields a flat pair.",
            expect: Pass,
            scenario: json!({
                "kind": "dress", "tolerance": 1e-5,
                "chart": { "lower": [0.0, 0.0, 0.0], "upper": [0.4, 0.4, 0.4], "points": 11 },
                "potentials": three_gaussians(), "quadrature": quadrature(), "eps": [1.0, 1.0, 1.0],
                "profiles": [
                    { "type": "constant", "value": 3.0 },
                    { "type": "constant", "value": 3.0 },
                    { "type": "constant", "value": 3.0 },
                ],
            }),
        },
        Entry {
            name: "s4-integrated",
            description: "Log potential with c = 0.3 and b integrated from smooth edge data.",
            expect: Pass,
            scenario: json!({
                "kind": "two-component", "tolerance": 1e-5,
                "chart": s4_chart(), "eps": [-1.0, 1.0], "profiles": [linear(), linear()],
                "potential": "0.3*ln(u1-u2)",
                "b": { "edges": ["1 + 0.2*sin(t)", "2 + 0.1*t^2"] },
            }),
        },
        Entry {
            name: "s4-constant-potential",
            description: "Constant F with b1(u1), b2(u2); any profiles give a flat pencil.",
            expect: Pass,
            scenario: json!({
                "kind": "two-component", "tolerance": 1e-5,
                "chart": s4_chart(), "eps": [1.0, -1.0],
                "profiles": [linear(), { "type": "exp", "scale": 1.0, "rate": 1.0 }],
                "potential": "0.7",
                "b": { "given": ["1 + u1^2", "exp(u2)"] },
            }),
        },
        Entry {
            name: "s4-separable-potential",
            description: "Constant profiles (2, 3) with a sum-separable F and integrated b.",
            expect: Pass,
            scenario: json!({
                "kind": "two-component", "tolerance": 1e-5,
                "chart": s4_chart(), "eps": [1.0, 1.0],
                "profiles": [{ "type": "constant", "value": 2.0 }, { "type": "constant", "value": 3.0 }],
                "potential": "0.02*u1^2 + 0.1*sin(u2)",
                "b": { "edges": ["1 + 0.1*t", "1 + 0.05*t^2"] },
            }),
        },
        Entry {
            name: "s4-wrong-potential",
            description: "F = u1 u2 / 20 violates the linear equation for F; the pair is not a flat pencil.",
            expect: Fail,
            scenario: json!({
                "kind": "two-component", "tolerance": 1e-5,
                "chart": s4_chart(), "eps": [-1.0, 1.0], "profiles": [linear(), linear()],
                "potential": "0.05*u1*u2",
                "b": { "edges": ["1", "1"] },
            }),
        },
        Entry {
            name: "s4-wrong-b",
            description: "Log potential with b2 that does not solve the linear system for b.",
            expect: Fail,
            scenario: json!({
                "kind": "two-component", "tolerance": 1e-5,
                "chart": s4_chart(), "eps": [-1.0, 1.0], "profiles": [linear(), linear()],
                "potential": "0.5*ln(u1-u2)",
                "b": { "given": ["sqrt(u1-u2)", "1 + 0.1*u1*u2"] },
            }),
        },
        Entry {
            name: "nijenhuis-counter",
            description: "Pair diag(1 + u2^2, 1) and the identity; the Nijenhuis tensor is 2 u2^3.",
            expect: Fail,
            scenario: json!({
                "kind": "nijenhuis", "tolerance": 1e-5,
                "chart": { "lower": [0.0, 0.0], "upper": [1.0, 1.0], "points": 21 },
                "g1": { "diagonal": ["1 + u2^2", "1"] },
                "g2": { "diagonal": ["1", "1"] },
            }),
        },
        Entry {
            name: "nijenhuis-twist",
            description: "Affinor [[u1, u1], [0, u2]]; the Nijenhuis tensor is -u1.",
            expect: Fail,
            scenario: json!({
                "kind": "nijenhuis", "tolerance": 1e-5,
                "chart": { "lower": [1.0, 3.0], "upper": [2.0, 4.0], "points": 21 },
                "affinor": [["u1", "u1"], ["0", "u2"]],
            }),
        },
        Entry {
            name: "dubrovin-quadratic",
            description: "f = (u1^2/2, u2^2/2) in flat coordinates of the identity; both relations hold.",
            expect: Pass,
            scenario: json!({
                "kind": "dubrovin", "tolerance": 1e-5,
                "chart": { "lower": [2.0, 2.0], "upper": [3.0, 3.0], "points": 41 },
                "eta": [[1.0, 0.0], [0.0, 1.0]], "f": ["0.5*u1^2", "0.5*u2^2"], "c": 0.0,
            }),
        },
        Entry {
            name: "dubrovin-linear",
            description: "Linear f; the second derivatives vanish and the pencil is constant.",
            expect: Pass,
            scenario: json!({
                "kind": "dubrovin", "tolerance": 1e-5,
                "chart": { "lower": [1.0, 1.0], "upper": [2.0, 2.0], "points": 21 },
                "eta": [[1.0, 0.0], [0.0, -1.0]], "f": ["2*u1 + u2", "u1 - u2"], "c": 1.0,
            }),
        },
        Entry {
            name: "dubrovin-cubic",
            description: "f = (u2^3, 0); the contraction relation fails and the pencil is not flat.",
            expect: Fail,
            scenario: json!({
                "kind": "dubrovin", "tolerance": 1e-5,
                "chart": { "lower": [1.0, 1.0], "upper": [2.0, 2.0], "points": 21 },
                "eta": [[1.0, 0.0], [0.0, 1.0]], "f": ["u2^3", "0"], "c": 1.0,
            }),
        },
        Entry {
            name: "potentials-quadratic",
            description: "Metric generated from h = (u1^2/2, u2^2/2) with the identity; a compatible flat pair.",
            expect: Pass,
            scenario: json!({
                "kind": "potentials", "tolerance": 1e-5,
                "chart": { "lower": [2.0, 2.0], "upper": [3.0, 3.0], "points": 41 },
                "eta": [[1.0, 0.0], [0.0, 1.0]], "h": ["0.5*u1^2", "0.5*u2^2"],
            }),
        },
        Entry {
            name: "diagonal-form-u",
            description: "diag(u1, u2) against the identity is already in diagonal form with f^i = u^i.",
            expect: Pass,
            scenario: json!({
                "kind": "diagonal-form", "tolerance": 1e-10,
                "chart": { "lower": [1.0, 3.0], "upper": [2.0, 4.0], "points": 21 },
                "g1": { "diagonal": ["u1", "u2"] },
                "g2": { "diagonal": ["1", "1"] },
            }),
        },
        Entry {
            name: "lame-polar",
            description: "Lamé residuals of the polar metric with the linear reduction profile.",
            expect: Pass,
            scenario: json!({
                "kind": "lame", "tolerance": 1e-6,
                "chart": { "lower": [1.0, 1.0], "upper": [2.0, 2.0], "points": 41 },
                "metric": ["1", "1/u1^2"], "eps": [1.0, 1.0],
            }),
        },
        Entry {
            name: "lame-sphere",
            description: "Lamé residuals of the sphere metric; curved, so the residuals are large.",
            expect: Fail,
            scenario: json!({
                "kind": "lame", "tolerance": 1e-6,
                "chart": { "lower": [0.8, 0.0], "upper": [1.8, 1.0], "points": 41 },
                "metric": ["1", "1/sin(u1)^2"], "eps": [1.0, 1.0],
            }),
        },
        Entry {
            name: "reduce-log",
            description: "Log potentials with the linear profile solve the reduction equations exactly.",
            expect: Pass,
            scenario: json!({
                "kind": "reduce", "tolerance": 1e-10, "dim": 2,
                "potentials": [
                    { "i": 1, "j": 2, "potential": { "type": "log", "c": 0.7 } },
                    { "i": 1, "j": 1, "potential": { "type": "skew_log", "c": -0.4 } },
                    { "i": 2, "j": 2, "potential": { "type": "skew_log", "c": 1.3 } },
                ],
                "profiles": [linear(), linear()],
                "probes": { "random": { "count": 32, "region": [-3.0, -1.5, -1.0, -0.2] } },
                "u": [0.0, 0.0],
            }),
        },
    ]
}

pub fn lookup(name: &str) -> Result<Scenario> {
    let entry = entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| anyhow!("unknown catalog entry `{name}`"))?;
    let mut scenario = Scenario::from_value(entry.scenario)?;
    scenario.common.name.get_or_insert_with(|| name.to_string());
    scenario
        .common
        .description
        .get_or_insert_with(|| entry.description.to_string());
    Ok(scenario)
}
