//! Closed-form functions used as inputs: single-variable reduction profiles
//! f(t) and two-variable dressing potentials Φ(x, y).
//!
//! Both carry analytic derivatives so that pointwise PDE residuals are not
//! limited by finite-difference truncation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// A nonvanishing function of one variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `slope * t + offset`
    Linear {
        slope: f64,
        offset: f64,
    },
    /// `scale * exp(rate * t)`
    Exp {
        scale: f64,
        rate: f64,
    },
    /// Expression in `t` with its symbolic derivative.
    Expr {
        f: Expr,
        df: Expr,
    },
    /// `1 / f(t)`
    Reciprocal(Box<Profile>),
}

impl Profile {
    pub fn identity() -> Self {
        Profile::Linear {
            slope: 1.0,
            offset: 0.0,
        }
    }

    pub fn from_expr(source: &str) -> Result<Self> {
        let f = Expr::parse(source, &["t"])?;
        if let Some(v) = f.as_constant() {
            return Ok(Profile::Constant(v));
        }
        let df = f.diff(0);
        Ok(Profile::Expr { f, df })
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Linear { slope, offset } => slope * t + offset,
            Profile::Exp { scale, rate } => scale * (rate * t).exp(),
            Profile::Expr { f, .. } => f.eval(&[t]),
            Profile::Reciprocal(p) => 1.0 / p.value(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(_) => 0.0,
            Profile::Linear { slope, .. } => *slope,
            Profile::Exp { scale, rate } => scale * rate * (rate * t).exp(),
            Profile::Expr { df, .. } => df.eval(&[t]),
            Profile::Reciprocal(p) => {
                let v = p.value(t);
                -p.derivative(t) / (v * v)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_))
    }

    /// Sign of the profile on `[lo, hi]`, or `None` when it vanishes or
    /// changes sign there. Checked on 1025 equispaced samples.
    pub fn sign_on(&self, lo: f64, hi: f64) -> Option<f64> {
        let samples = 1024;
        let mut sign = 0.0;
        for k in 0..=samples {
            let t = lo + (hi - lo) * k as f64 / samples as f64;
            let v = self.value(t);
            if !v.is_finite() || v == 0.0 {
                return None;
            }
            let s = v.signum();
            if sign == 0.0 {
                sign = s;
            } else if s != sign {
                return None;
            }
        }
        Some(sign)
    }

    pub fn describe(&self) -> String {
        match self {
            Profile::Constant(c) => format!("{c}"),
            Profile::Linear { slope, offset } => format!("{slope}*t + {offset}"),
            Profile::Exp { scale, rate } => format!("{scale}*exp({rate}*t)"),
            Profile::Expr { f, .. } => f.to_string(),
            Profile::Reciprocal(p) => format!("1/({})", p.describe()),
        }
    }

    pub fn reciprocal(&self) -> Profile {
        match self {
            Profile::Constant(c) => Profile::Constant(1.0 / c),
            Profile::Reciprocal(p) => (**p).clone(),
            other => Profile::Reciprocal(Box::new(other.clone())),
        }
    }
}

/// Serializable description of a profile, as used in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProfileSpec {
    Constant { value: f64 },
    Linear { slope: f64, offset: f64 },
    Exp { scale: f64, rate: f64 },
    Expr { f: String },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        Ok(match self {
            ProfileSpec::Constant { value } => Profile::Constant(*value),
            ProfileSpec::Linear { slope, offset } => Profile::Linear {
                slope: *slope,
                offset: *offset,
            },
            ProfileSpec::Exp { scale, rate } => Profile::Exp {
                scale: *scale,
                rate: *rate,
            },
            ProfileSpec::Expr { f } => Profile::from_expr(f)?,
        })
    }
}

/// Partial derivatives of a potential at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxy: f64,
}

impl Jet {
    fn scaled(self, a: f64) -> Jet {
        Jet {
            value: a * self.value,
            dx: a * self.dx,
            dy: a * self.dy,
            dxy: a * self.dxy,
        }
    }

    fn plus(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxy: self.dxy + o.dxy,
        }
    }
}

/// A function Φ(x, y) with analytic first and mixed second partials.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `amp * exp(-((x-cx)/sx)^2 - ((y-cy)/sy)^2)`
    Gaussian {
        amp: f64,
        cx: f64,
        cy: f64,
        sx: f64,
        sy: f64,
    },
    /// `amp * (x - y) * exp(-((x-c)^2 + (y-c)^2)/sigma^2)`, skew-symmetric.
    SkewGaussian {
        amp: f64,
        c: f64,
        sigma: f64,
    },
    /// `c * ln|y - x|`
    Log {
        c: f64,
    },
    /// `c * sgn(y - x) * ln|y - x|`, skew-symmetric.
    SkewLog {
        c: f64,
    },
    /// `a(x) + b(y)`
    Separable {
        a: Profile,
        b: Profile,
    },
    /// General expression in `x`, `y` with symbolic partials.
    Expr {
        f: Expr,
        fx: Expr,
        fy: Expr,
        fxy: Expr,
    },
    /// Linear combination of potentials.
    Sum(Vec<(f64, Potential)>),
}

impl Potential {
    pub fn from_expr(source: &str) -> Result<Self> {
        Self::from_expr_in(source, ["x", "y"])
    }

    /// Parse with custom names for the two arguments.
    pub fn from_expr_in(source: &str, vars: [&str; 2]) -> Result<Self> {
        let f = Expr::parse(source, &vars)?;
        let fx = f.diff(0);
        let fy = f.diff(1);
        let fxy = fx.diff(1);
        Ok(Potential::Expr { f, fx, fy, fxy })
    }

    pub fn jet(&self, x: f64, y: f64) -> Jet {
        match self {
            Potential::Zero => Jet::default(),
            Potential::Gaussian { amp, cx, cy, sx, sy } => {
                let a = (x - cx) / sx;
                let b = (y - cy) / sy;
                let v = amp * (-a * a - b * b).exp();
                let gx = -2.0 * a / sx;
                let gy = -2.0 * b / sy;
                Jet {
                    value: v,
                    dx: gx * v,
                    dy: gy * v,
                    dxy: gx * gy * v,
                }
            }
            Potential::SkewGaussian { amp, c, sigma } => {
                let s2 = sigma * sigma;
                let e = (-((x - c).powi(2) + (y - c).powi(2)) / s2).exp();
                let d = x - y;
                let ex = -2.0 * (x - c) / s2;
                let ey = -2.0 * (y - c) / s2;
                Jet {
                    value: amp * d * e,
                    dx: amp * e * (1.0 + d * ex),
                    dy: amp * e * (-1.0 + d * ey),
                    // d/dy of e (1 + d ex) = e ey (1 + d ex) - e ex
                    dxy: amp * e * (ey * (1.0 + d * ex) - ex),
                }
            }
            Potential::Log { c } => {
                let w = y - x;
                Jet {
                    value: c * w.abs().ln(),
                    dx: -c / w,
                    dy: c / w,
                    dxy: c / (w * w),
                }
            }
            Potential::SkewLog { c } => {
                let w = y - x;
                let s = w.signum();
                Jet {
                    value: c * s * w.abs().ln(),
                    dx: -c / w.abs(),
                    dy: c / w.abs(),
                    dxy: c * s / (w * w),
                }
            }
            Potential::Separable { a, b } => Jet {
                value: a.value(x) + b.value(y),
                dx: a.derivative(x),
                dy: b.derivative(y),
                dxy: 0.0,
            },
            Potential::Expr { f, fx, fy, fxy } => {
                let p = [x, y];
                Jet {
                    value: f.eval(&p),
                    dx: fx.eval(&p),
                    dy: fy.eval(&p),
                    dxy: fxy.eval(&p),
                }
            }
            Potential::Sum(terms) => terms
                .iter()
                .fold(Jet::default(), |acc, (w, p)| acc.plus(p.jet(x, y).scaled(*w))),
        }
    }

    /// Whether Φ(x, y) = -Φ(y, x) holds at a set of probe points.
    pub fn is_skew(&self, probes: &[(f64, f64)]) -> bool {
        probes.iter().all(|&(x, y)| {
            let a = self.jet(x, y).value;
            let b = self.jet(y, x).value;
            (a + b).abs() <= 1e-12 * (1.0 + a.abs())
        })
    }

    /// Box outside which Φ and its partials fall below 1e-12 relative to
    /// their peak, or `None` for potentials without decay.
    pub fn envelope(&self) -> Option<[f64; 4]> {
        const R: f64 = 6.5;
        match self {
            Potential::Zero => Some([0.0, 0.0, 0.0, 0.0]),
            Potential::Gaussian { cx, cy, sx, sy, .. } => Some([
                cx - R * sx.abs(),
                cx + R * sx.abs(),
                cy - R * sy.abs(),
                cy + R * sy.abs(),
            ]),
            Potential::SkewGaussian { c, sigma, .. } => {
                let r = (R + 0.5) * sigma.abs();
                Some([c - r, c + r, c - r, c + r])
            }
            Potential::Sum(terms) => {
                let mut acc: Option<[f64; 4]> = None;
                for (_, p) in terms {
                    let e = p.envelope()?;
                    if matches!(p, Potential::Zero) {
                        continue;
                    }
                    acc = Some(match acc {
                        None => e,
                        Some(a) => [a[0].min(e[0]), a[1].max(e[1]), a[2].min(e[2]), a[3].max(e[3])],
                    });
                }
                Some(acc.unwrap_or([0.0; 4]))
            }
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Potential::Zero => "0".into(),
            Potential::Gaussian { amp, cx, cy, sx, sy } => format!("{amp}*exp(-((x-{cx})/{sx})^2 - ((y-{cy})/{sy})^2)"),
            Potential::SkewGaussian { amp, c, sigma } => {
                format!("{amp}*(x-y)*exp(-((x-{c})^2 + (y-{c})^2)/{sigma}^2)")
            }
            Potential::Log { c } => format!("{c}*ln|y-x|"),
            Potential::SkewLog { c } => format!("{c}*sgn(y-x)*ln|y-x|"),
            Potential::Separable { a, b } => {
                format!("a(x) + b(y), a = {}, b = {}", a.describe(), b.describe())
            }
            Potential::Expr { f, .. } => f.to_string(),
            Potential::Sum(terms) => terms
                .iter()
                .map(|(w, p)| format!("{w}*[{}]", p.describe()))
                .collect::<Vec<_>>()
                .join(" + "),
        }
    }
}

/// Serializable description of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Gaussian {
        amp: f64,
        cx: f64,
        cy: f64,
        sx: f64,
        sy: f64,
    },
    SkewGaussian {
        amp: f64,
        c: f64,
        sigma: f64,
    },
    Log {
        c: f64,
    },
    SkewLog {
        c: f64,
    },
    Separable {
        a: ProfileSpec,
        b: ProfileSpec,
    },
    Expr {
        f: String,
    },
    Sum {
        terms: Vec<(f64, PotentialSpec)>,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        Ok(match self {
            PotentialSpec::Zero => Potential::Zero,
            PotentialSpec::Gaussian { amp, cx, cy, sx, sy } => {
                if *sx <= 0.0 || *sy <= 0.0 {
                    return Err(Error::InvalidArgument("Gaussian widths must be positive".into()));
                }
                Potential::Gaussian {
                    amp: *amp,
                    cx: *cx,
                    cy: *cy,
                    sx: *sx,
                    sy: *sy,
                }
            }
            PotentialSpec::SkewGaussian { amp, c, sigma } => {
                if *sigma <= 0.0 {
                    return Err(Error::InvalidArgument("Gaussian width must be positive".into()));
                }
                Potential::SkewGaussian {
                    amp: *amp,
                    c: *c,
                    sigma: *sigma,
                }
            }
            PotentialSpec::Log { c } => Potential::Log { c: *c },
            PotentialSpec::SkewLog { c } => Potential::SkewLog { c: *c },
            PotentialSpec::Separable { a, b } => Potential::Separable {
                a: a.build()?,
                b: b.build()?,
            },
            PotentialSpec::Expr { f } => Potential::from_expr(f)?,
            PotentialSpec::Sum { terms } => {
                Potential::Sum(terms.iter().map(|(w, p)| Ok((*w, p.build()?))).collect::<Result<_>>()?)
            }
        })
    }
}
