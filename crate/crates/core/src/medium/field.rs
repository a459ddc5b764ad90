//! Scalar and matrix coefficient fields.

use crate::error::{Error, Result};
use exmex::prelude::*;
use exmex::FlatEx;
use std::f64::consts::PI;

/// One term `cos·cos(2πk·x) + sin·sin(2πk·x)` of a trigonometric series.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub k: [i32; 2],
    pub cos: f64,
    pub sin: f64,
}

/// Closed-form expression in the variables `x`, `y` (or `x1`, `x2`), with
/// its partial derivatives precomputed symbolically.
#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    expr: Box<FlatEx<f64>>,
    partials: [Option<Box<FlatEx<f64>>>; 2],
    axes: Vec<usize>,
}

impl Expression {
    pub fn parse(source: &str, d: usize) -> Result<Self> {
        let expr =
            exmex::parse::<f64>(source).map_err(|e| Error::InvalidConfig(format!("cannot parse '{source}': {e}")))?;
        let mut axes = Vec::new();
        for name in expr.var_names() {
            let axis = match name.as_str() {
                "x" | "x1" => 0,
                "y" | "x2" => 1,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown variable '{other}' in '{source}'"
                    )))
                }
            };
            if axis >= d {
                return Err(Error::InvalidConfig(format!(
                    "variable '{name}' exceeds dimension {d} in '{source}'"
                )));
            }
            if axes.contains(&axis) {
                return Err(Error::InvalidConfig(format!("axis {axis} named twice in '{source}'")));
            }
            axes.push(axis);
        }
        let mut partials = [None, None];
        for (slot, &axis) in axes.iter().enumerate() {
            let p = expr
                .clone()
                .partial(slot)
                .map_err(|e| Error::InvalidConfig(format!("cannot differentiate '{source}': {e}")))?;
            partials[axis] = Some(Box::new(p));
        }
        Ok(Expression {
            source: source.to_string(),
            expr: Box::new(expr),
            partials,
            axes,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn args(&self, x: &[f64; 2]) -> Vec<f64> {
        self.axes.iter().map(|&a| x[a]).collect()
    }

    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        self.expr.eval(&self.args(x)).unwrap_or(f64::NAN)
    }

    pub fn partial(&self, axis: usize, x: &[f64; 2]) -> f64 {
        match &self.partials[axis] {
            Some(p) => p.eval(&self.args(x)).unwrap_or(f64::NAN),
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ScalarFn {
    Constant(f64),
    Series { mean: f64, terms: Vec<Term> },
    Expression(Expression),
}

impl ScalarFn {
    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Series { mean, terms } => {
                let mut s = *mean;
                for t in terms {
                    let ph = 2.0 * PI * (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1]);
                    let (sn, cs) = ph.sin_cos();
                    s += t.cos * cs + t.sin * sn;
                }
                s
            }
            ScalarFn::Expression(e) => e.eval(x),
        }
    }

    pub fn grad(&self, x: &[f64; 2]) -> [f64; 2] {
        match self {
            ScalarFn::Constant(_) => [0.0, 0.0],
            ScalarFn::Series { terms, .. } => {
                let mut g = [0.0, 0.0];
                for t in terms {
                    let ph = 2.0 * PI * (t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1]);
                    let (sn, cs) = ph.sin_cos();
                    let dphase = -t.cos * sn + t.sin * cs;
                    g[0] += dphase * 2.0 * PI * t.k[0] as f64;
                    g[1] += dphase * 2.0 * PI * t.k[1] as f64;
                }
                g
            }
            ScalarFn::Expression(e) => [e.partial(0, x), e.partial(1, x)],
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ScalarFn::Constant(_) => true,
            ScalarFn::Series { terms, .. } => terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0),
            ScalarFn::Expression(_) => false,
        }
    }
}

fn reduce(x: &[f64; 2]) -> [f64; 2] {
    [x[0].rem_euclid(1.0), x[1].rem_euclid(1.0)]
}

/// A `Z^d`-periodic scalar field: evaluated after reducing each coordinate
/// modulo 1.
#[derive(Debug, Clone)]
pub struct PeriodicField(pub ScalarFn);

impl PeriodicField {
    pub fn constant(c: f64) -> Self {
        PeriodicField(ScalarFn::Constant(c))
    }

    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        self.0.eval(&reduce(x))
    }

    pub fn grad(&self, x: &[f64; 2]) -> [f64; 2] {
        self.0.grad(&reduce(x))
    }
}

/// Symmetric 2×2 matrix stored as `(m11, m12, m22)`; in one dimension only
/// `m11` is meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym2 {
    pub fn scalar(c: f64) -> Self {
        Sym2 {
            m11: c,
            m12: 0.0,
            m22: c,
        }
    }

    pub fn zero() -> Self {
        Sym2::scalar(0.0)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m12 * v[0] + self.m22 * v[1]]
    }

    pub fn quad(&self, v: [f64; 2]) -> f64 {
        let a = self.apply(v);
        a[0] * v[0] + a[1] * v[1]
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2 {
            m11: self.m11 + o.m11,
            m12: self.m12 + o.m12,
            m22: self.m22 + o.m22,
        }
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2 {
            m11: self.m11 * s,
            m12: self.m12 * s,
            m22: self.m22 * s,
        }
    }

    /// Smallest and largest eigenvalue in dimension `d`.
    pub fn eig_range(&self, d: usize) -> (f64, f64) {
        if d == 1 {
            return (self.m11, self.m11);
        }
        let tr = 0.5 * (self.m11 + self.m22);
        let disc = (0.25 * (self.m11 - self.m22).powi(2) + self.m12 * self.m12).sqrt();
        (tr - disc, tr + disc)
    }
}

#[derive(Debug, Clone)]
pub enum MatrixField {
    Isotropic(PeriodicField),
    Full([PeriodicField; 3]),
}

impl MatrixField {
    pub fn eval(&self, x: &[f64; 2]) -> Sym2 {
        match self {
            MatrixField::Isotropic(f) => Sym2::scalar(f.eval(x)),
            MatrixField::Full([a, b, c]) => Sym2 {
                m11: a.eval(x),
                m12: b.eval(x),
                m22: c.eval(x),
            },
        }
    }

    /// `∂_axis G(x)`.
    pub fn partial(&self, axis: usize, x: &[f64; 2]) -> Sym2 {
        match self {
            MatrixField::Isotropic(f) => Sym2::scalar(f.grad(x)[axis]),
            MatrixField::Full([a, b, c]) => Sym2 {
                m11: a.grad(x)[axis],
                m12: b.grad(x)[axis],
                m22: c.grad(x)[axis],
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            MatrixField::Isotropic(f) => f.0.is_constant(),
            MatrixField::Full(fs) => fs.iter().all(|f| f.0.is_constant()),
        }
    }
}

/// Shape of a decaying perturbation, evaluated at centred coordinates.
#[derive(Debug, Clone)]
pub enum Profile {
    /// `A exp(1 − 1/(1 − r²/R²))` inside the ball of radius `R`, zero outside.
    Bump {
        amplitude: f64,
        radius: f64,
        center: [f64; 2],
    },
    /// `A ⟨x⟩^{-ρ}` with `ρ` the declared decay rate.
    Power {
        amplitude: f64,
        rate: f64,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        center: [f64; 2],
    },
    Expression(Expression),
}

impl Profile {
    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        match self {
            Profile::Bump {
                amplitude,
                radius,
                center,
            } => {
                let r2 = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / radius.powi(2);
                if r2 >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
                }
            }
            Profile::Power { amplitude, rate } => amplitude * (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-0.5 * rate),
            Profile::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                amplitude * (-0.5 * r2 / (width * width)).exp()
            }
            Profile::Expression(e) => e.eval(x),
        }
    }

    pub fn grad(&self, x: &[f64; 2]) -> [f64; 2] {
        match self {
            Profile::Bump {
                amplitude,
                radius,
                center,
            } => {
                let dx = [x[0] - center[0], x[1] - center[1]];
                let r2 = (dx[0] * dx[0] + dx[1] * dx[1]) / radius.powi(2);
                if r2 >= 1.0 {
                    return [0.0, 0.0];
                }
                let q = 1.0 - r2;
                let v = amplitude * (1.0 - 1.0 / q).exp();
                let s = -v / (q * q) * 2.0 / radius.powi(2);
                [s * dx[0], s * dx[1]]
            }
            Profile::Power { amplitude, rate } => {
                let br2 = 1.0 + x[0] * x[0] + x[1] * x[1];
                let s = -amplitude * rate * br2.powf(-0.5 * rate - 1.0);
                [s * x[0], s * x[1]]
            }
            Profile::Gaussian {
                amplitude,
                width,
                center,
            } => {
                let dx = [x[0] - center[0], x[1] - center[1]];
                let r2 = dx[0] * dx[0] + dx[1] * dx[1];
                let v = amplitude * (-0.5 * r2 / (width * width)).exp();
                let s = -v / (width * width);
                [s * dx[0], s * dx[1]]
            }
            Profile::Expression(e) => [e.partial(0, x), e.partial(1, x)],
        }
    }
}

/// Perturbation with a declared envelope `|value(x)| ≤ C⟨x⟩^{-ρ}`.
#[derive(Debug, Clone)]
pub struct DecayingField {
    pub profile: Profile,
    pub decay_rate: f64,
    pub decay_constant: f64,
}

impl DecayingField {
    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        self.profile.eval(x)
    }

    pub fn grad(&self, x: &[f64; 2]) -> [f64; 2] {
        self.profile.grad(x)
    }

    pub fn envelope(&self, x: &[f64; 2]) -> f64 {
        if self.decay_rate.is_infinite() {
            return self.decay_constant;
        }
        self.decay_constant * (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-0.5 * self.decay_rate)
    }

    /// Whether the profile vanishes outside a bounded set.
    pub fn is_compact(&self) -> bool {
        matches!(self.profile, Profile::Bump { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_and_derivative() {
        let e = Expression::parse("1+0.5*cos(2*PI*x)", 1).unwrap();
        assert!((e.eval(&[0.0, 0.0]) - 1.5).abs() < 1e-15);
        assert!((e.partial(0, &[0.25, 0.0]) + PI).abs() < 1e-12);
        assert_eq!(e.partial(1, &[0.25, 0.0]), 0.0);
    }

    #[test]
    fn expression_rejects_unknown_variables() {
        assert!(Expression::parse("z+1", 2).is_err());
        assert!(Expression::parse("x*y", 1).is_err());
    }

    #[test]
    fn two_dimensional_expression_maps_axes_by_name() {
        let e = Expression::parse("y + 10*x", 2).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0]), 12.0);
        assert_eq!(e.partial(0, &[1.0, 2.0]), 10.0);
        assert_eq!(e.partial(1, &[1.0, 2.0]), 1.0);
    }

    #[test]
    fn series_gradient_matches_finite_difference() {
        let f = ScalarFn::Series {
            mean: 1.0,
            terms: vec![
                Term {
                    k: [1, 2],
                    cos: 0.3,
                    sin: -0.1,
                },
                Term {
                    k: [0, 1],
                    cos: 0.0,
                    sin: 0.2,
                },
            ],
        };
        let x = [0.13, 0.71];
        let g = f.grad(&x);
        let h = 1e-6;
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            assert!((fd - g[a]).abs() < 1e-7);
        }
    }

    #[test]
    fn profile_gradients_match_finite_difference() {
        let profiles = [
            Profile::Bump {
                amplitude: 0.3,
                radius: 2.0,
                center: [0.5, -0.2],
            },
            Profile::Power {
                amplitude: 0.7,
                rate: 2.5,
            },
            Profile::Gaussian {
                amplitude: 1.1,
                width: 1.5,
                center: [0.0, 1.0],
            },
        ];
        let x = [0.4, 0.9];
        let h = 1e-6;
        for p in &profiles {
            let g = p.grad(&x);
            for a in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let fd = (p.eval(&xp) - p.eval(&xm)) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-7, "{p:?}");
            }
        }
    }

    #[test]
    fn sym_eigen_range() {
        let m = Sym2 {
            m11: 2.0,
            m12: 1.0,
            m22: 2.0,
        };
        let (lo, hi) = m.eig_range(2);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
    }
}
