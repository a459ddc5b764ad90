//! JSON description of a medium.
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "G": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.5}]},
//!   "w": {"type": "expression", "expr": "1 + 0.25*sin(2*PI*x)"},
//!   "a": {"type": "constant", "value": 1.0},
//!   "perturbation": {
//!     "a": {"decay_rate": 2.0, "decay_constant": 0.5,
//!           "profile": {"type": "power", "amplitude": 0.5}}
//!   }
//! }
//! ```
//!
//! `G` is either a scalar field (meaning `g(x)·Id`) or
//! `{"type": "matrix", "entries": [[g11, g12], [g12, g22]]}` with scalar
//! fields as entries. Perturbation of `G` is isotropic.

use super::field::{DecayingField, Expression, MatrixField, PeriodicField, Profile, ScalarFn, Term};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub dimension: usize,
    #[serde(rename = "G")]
    pub g: MatrixSpec,
    pub w: ScalarSpec,
    pub a: ScalarSpec,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub validation: ValidationSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarSpec {
    Constant {
        value: f64,
    },
    CosineSeries {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        terms: Vec<TermSpec>,
    },
    Expression {
        expr: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Matrix(MatrixEntries),
    Scalar(ScalarSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntries {
    #[serde(rename = "type")]
    pub kind: MatrixTag,
    pub entries: Vec<Vec<ScalarSpec>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixTag {
    Matrix,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(rename = "G", default)]
    pub g: Option<DecaySpec>,
    #[serde(default)]
    pub w: Option<DecaySpec>,
    #[serde(default)]
    pub a: Option<DecaySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySpec {
    /// `ρ`; use `null` or omit for compactly supported profiles.
    #[serde(default)]
    pub decay_rate: Option<f64>,
    pub decay_constant: f64,
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    Power {
        amplitude: f64,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    Expression {
        expr: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Half-width of the box in which perturbations are sampled.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Bound on first finite-difference slopes.
    #[serde(default = "default_max_slope")]
    pub max_slope: f64,
}

fn default_samples() -> usize {
    16384
}
fn default_radius() -> f64 {
    16.0
}
fn default_max_slope() -> f64 {
    1e6
}

impl Default for ValidationSpec {
    fn default() -> Self {
        ValidationSpec {
            samples: default_samples(),
            radius: default_radius(),
            max_slope: default_max_slope(),
        }
    }
}

impl MediumConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

fn center(c: &[f64], d: usize) -> Result<[f64; 2]> {
    match c.len() {
        0 => Ok([0.0, 0.0]),
        n if n == d => Ok([c[0], if d == 2 { c[1] } else { 0.0 }]),
        n => Err(Error::DimensionMismatch { expected: d, found: n }),
    }
}

impl ScalarSpec {
    pub(crate) fn build(&self, d: usize) -> Result<ScalarFn> {
        Ok(match self {
            ScalarSpec::Constant { value } => ScalarFn::Constant(*value),
            ScalarSpec::CosineSeries { mean, terms } => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    if t.k.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: t.k.len(),
                        });
                    }
                    out.push(Term {
                        k: [t.k[0], if d == 2 { t.k[1] } else { 0 }],
                        cos: t.cos,
                        sin: t.sin,
                    });
                }
                ScalarFn::Series {
                    mean: *mean,
                    terms: out,
                }
            }
            ScalarSpec::Expression { expr } => ScalarFn::Expression(Expression::parse(expr, d)?),
        })
    }
}

impl MatrixSpec {
    pub(crate) fn build(&self, d: usize) -> Result<MatrixField> {
        match self {
            MatrixSpec::Scalar(s) => Ok(MatrixField::Isotropic(PeriodicField(s.build(d)?))),
            MatrixSpec::Matrix(m) => {
                if m.entries.len() != d || m.entries.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: m.entries.len(),
                    });
                }
                if d == 1 {
                    let g = PeriodicField(m.entries[0][0].build(1)?);
                    return Ok(MatrixField::Isotropic(g));
                }
                let e12 = serde_json::to_value(&m.entries[0][1]).ok();
                let e21 = serde_json::to_value(&m.entries[1][0]).ok();
                if e12 != e21 {
                    return Err(Error::InvalidConfig(
                        "matrix G must be symmetric: entries[0][1] != entries[1][0]".into(),
                    ));
                }
                Ok(MatrixField::Full([
                    PeriodicField(m.entries[0][0].build(2)?),
                    PeriodicField(m.entries[0][1].build(2)?),
                    PeriodicField(m.entries[1][1].build(2)?),
                ]))
            }
        }
    }
}

impl DecaySpec {
    pub(crate) fn build(&self, d: usize) -> Result<DecayingField> {
        let rate = self.decay_rate.unwrap_or(f64::INFINITY);
        if rate <= 0.0 || self.decay_constant < 0.0 {
            return Err(Error::InvalidConfig(
                "decay_rate must be positive and decay_constant nonnegative".into(),
            ));
        }
        let profile = match &self.profile {
            ProfileSpec::Bump {
                amplitude,
                radius,
                center: c,
            } => {
                if *radius <= 0.0 {
                    return Err(Error::InvalidConfig("bump radius must be positive".into()));
                }
                Profile::Bump {
                    amplitude: *amplitude,
                    radius: *radius,
                    center: center(c, d)?,
                }
            }
            ProfileSpec::Power { amplitude } => {
                if rate.is_infinite() {
                    return Err(Error::InvalidConfig("power profile needs a finite decay_rate".into()));
                }
                Profile::Power {
                    amplitude: *amplitude,
                    rate,
                }
            }
            ProfileSpec::Gaussian {
                amplitude,
                width,
                center: c,
            } => Profile::Gaussian {
                amplitude: *amplitude,
                width: *width,
                center: center(c, d)?,
            },
            ProfileSpec::Expression { expr } => Profile::Expression(Expression::parse(expr, d)?),
        };
        Ok(DecayingField {
            profile,
            decay_rate: rate,
            decay_constant: self.decay_constant,
        })
    }
}
