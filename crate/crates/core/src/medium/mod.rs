//! Coefficient fields of `w ∂_t²u − div(G∇u) + w a ∂_t u = 0`.
//!
//! A [`Medium`] is a periodic background `(G_p, w_p, a_p)` plus optional
//! decaying perturbations `(G_0, w_0, a_0)`. Periodic parts are evaluated at
//! coordinates reduced mod 1; perturbations at coordinates centred on the
//! computational torus.

mod config;
mod field;
mod grid;

pub use config::{
    DecaySpec, MatrixEntries, MatrixSpec, MatrixTag, MediumConfig, PerturbationSpec, ProfileSpec, ScalarSpec, TermSpec,
    ValidationSpec,
};
pub use field::{DecayingField, Expression, MatrixField, PeriodicField, Profile, ScalarFn, Sym2, Term};
pub use grid::TorusGrid;

use crate::error::{Error, Result};
use crate::halton::halton;
use serde::Serialize;

/// Sampled extrema of the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds {
    pub g_min: f64,
    pub g_max: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub a_min: f64,
    pub a_max: f64,
}

impl Bounds {
    fn empty() -> Self {
        Bounds {
            g_min: f64::INFINITY,
            g_max: f64::NEG_INFINITY,
            w_min: f64::INFINITY,
            w_max: f64::NEG_INFINITY,
            a_min: f64::INFINITY,
            a_max: f64::NEG_INFINITY,
        }
    }

    fn merge(&self, o: &Bounds) -> Bounds {
        Bounds {
            g_min: self.g_min.min(o.g_min),
            g_max: self.g_max.max(o.g_max),
            w_min: self.w_min.min(o.w_min),
            w_max: self.w_max.max(o.w_max),
            a_min: self.a_min.min(o.a_min),
            a_max: self.a_max.max(o.a_max),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Medium {
    d: usize,
    g_p: MatrixField,
    w_p: PeriodicField,
    a_p: PeriodicField,
    g_0: Option<DecayingField>,
    w_0: Option<DecayingField>,
    a_0: Option<DecayingField>,
    bounds: Bounds,
    periodic_bounds: Bounds,
}

/// Coefficients tabulated on a torus grid.
#[derive(Debug, Clone)]
pub struct CoefficientTables {
    pub grid: TorusGrid,
    pub g: Vec<Sym2>,
    pub w: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Largest perturbation magnitude on the torus seam.
    pub wrap_residual: f64,
}

/// Tolerance for the wrap-around of perturbations at the torus seam.
pub const WRAP_TOLERANCE: f64 = 1e-8;

const SIGN_SLACK: f64 = 1e-14;

pub fn build_medium(config: &MediumConfig) -> Result<Medium> {
    let d = config.dimension;
    if d != 1 && d != 2 {
        return Err(Error::InvalidConfig(format!("dimension must be 1 or 2, got {d}")));
    }
    let pert = &config.perturbation;
    let m = Medium {
        d,
        g_p: config.g.build(d)?,
        w_p: PeriodicField(config.w.build(d)?),
        a_p: PeriodicField(config.a.build(d)?),
        g_0: pert.g.as_ref().map(|s| s.build(d)).transpose()?,
        w_0: pert.w.as_ref().map(|s| s.build(d)).transpose()?,
        a_0: pert.a.as_ref().map(|s| s.build(d)).transpose()?,
        bounds: Bounds::empty(),
        periodic_bounds: Bounds::empty(),
    };
    m.validated(&config.validation, true)
}

impl Medium {
    /// Medium from already-built fields (validated like a config).
    pub fn from_fields(
        d: usize,
        g_p: MatrixField,
        w_p: PeriodicField,
        a_p: PeriodicField,
        perturbations: [Option<DecayingField>; 3],
    ) -> Result<Medium> {
        let [g_0, w_0, a_0] = perturbations;
        Medium {
            d,
            g_p,
            w_p,
            a_p,
            g_0,
            w_0,
            a_0,
            bounds: Bounds::empty(),
            periodic_bounds: Bounds::empty(),
        }
        .validated(&ValidationSpec::default(), true)
    }

    fn validated(mut self, v: &ValidationSpec, require_damping: bool) -> Result<Medium> {
        let samples = v.samples.max(10_000) as u64;
        let mut pb = Bounds::empty();
        for i in 0..samples {
            let p = halton(i, self.d);
            let x = [p[0], if self.d == 2 { p[1] } else { 0.0 }];
            pb = pb.merge(&self.check_point(&x, true)?);
        }
        if pb.g_min <= 0.0 {
            return Err(Error::EllipticityViolation {
                field: "G_p",
                min: pb.g_min,
                at: vec![],
            });
        }
        if require_damping && pb.a_max <= SIGN_SLACK {
            return Err(Error::ZeroDamping { max: pb.a_max });
        }
        let mut full = pb;
        if self.is_perturbed() {
            for i in 0..samples {
                let p = halton(i + samples, self.d);
                let x = [
                    v.radius * (2.0 * p[0] - 1.0),
                    if self.d == 2 {
                        v.radius * (2.0 * p[1] - 1.0)
                    } else {
                        0.0
                    },
                ];
                full = full.merge(&self.check_point(&x, false)?);
                self.check_decay(&x)?;
            }
            full = full.merge(&self.check_point(&[0.0, 0.0], false)?);
        }
        self.check_slopes(v, samples.min(1024))?;
        self.periodic_bounds = pb;
        self.bounds = full;
        Ok(self)
    }

    fn check_point(&self, x: &[f64; 2], periodic: bool) -> Result<Bounds> {
        let at = || x[..self.d].to_vec();
        let (g, w, a) = if periodic {
            (self.g_p(x), self.w_p(x), self.a_p(x))
        } else {
            (self.g(x), self.w(x), self.a(x))
        };
        let (lo, hi) = g.eig_range(self.d);
        if !(lo.is_finite() && hi.is_finite() && w.is_finite() && a.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "coefficient not finite at x = {:?}",
                at()
            )));
        }
        if lo <= 0.0 {
            return Err(Error::EllipticityViolation {
                field: "G",
                min: lo,
                at: at(),
            });
        }
        if w <= 0.0 {
            return Err(Error::EllipticityViolation {
                field: "w",
                min: w,
                at: at(),
            });
        }
        if a < -SIGN_SLACK {
            return Err(Error::NegativeAbsorption { value: a, at: at() });
        }
        Ok(Bounds {
            g_min: lo,
            g_max: hi,
            w_min: w,
            w_max: w,
            a_min: a,
            a_max: a,
        })
    }

    fn check_decay(&self, x: &[f64; 2]) -> Result<()> {
        let fields = [("G_0", &self.g_0), ("w_0", &self.w_0), ("a_0", &self.a_0)];
        for (name, f) in fields {
            if let Some(f) = f {
                let v = f.eval(x).abs();
                let bound = f.envelope(x);
                if v > bound * (1.0 + 1e-12) + 1e-300 {
                    return Err(Error::DecayBoundViolation {
                        field: name,
                        value: v,
                        bound,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_slopes(&self, v: &ValidationSpec, samples: u64) -> Result<()> {
        let h = 1e-6;
        for i in 0..samples {
            let p = halton(i + 7919, self.d);
            let x = if self.is_perturbed() {
                [
                    v.radius * (2.0 * p[0] - 1.0),
                    if self.d == 2 {
                        v.radius * (2.0 * p[1] - 1.0)
                    } else {
                        0.0
                    },
                ]
            } else {
                [p[0], if self.d == 2 { p[1] } else { 0.0 }]
            };
            for axis in 0..self.d {
                let mut xh = x;
                xh[axis] += h;
                let g0 = self.g(&x);
                let g1 = self.g(&xh);
                let slopes = [
                    (
                        "G",
                        (g1.m11 - g0.m11)
                            .abs()
                            .max((g1.m12 - g0.m12).abs())
                            .max((g1.m22 - g0.m22).abs())
                            / h,
                    ),
                    ("w", (self.w(&xh) - self.w(&x)).abs() / h),
                    ("a", (self.a(&xh) - self.a(&x)).abs() / h),
                ];
                for (field, slope) in slopes {
                    if !(slope <= v.max_slope) {
                        return Err(Error::RoughCoefficient {
                            field,
                            slope,
                            bound: v.max_slope,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_perturbed(&self) -> bool {
        self.g_0.is_some() || self.w_0.is_some() || self.a_0.is_some()
    }

    /// Sampled bounds of the full medium.
    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Sampled bounds of the periodic part.
    pub fn periodic_bounds(&self) -> Bounds {
        self.periodic_bounds
    }

    pub fn g_p(&self, x: &[f64; 2]) -> Sym2 {
        self.g_p.eval(x)
    }

    pub fn w_p(&self, x: &[f64; 2]) -> f64 {
        self.w_p.eval(x)
    }

    pub fn a_p(&self, x: &[f64; 2]) -> f64 {
        self.a_p.eval(x)
    }

    pub fn b_p(&self, x: &[f64; 2]) -> f64 {
        self.w_p(x) * self.a_p(x)
    }

    pub fn g(&self, x: &[f64; 2]) -> Sym2 {
        let g = self.g_p(x);
        match &self.g_0 {
            Some(p) => g.add(&Sym2::scalar(p.eval(x))),
            None => g,
        }
    }

    pub fn w(&self, x: &[f64; 2]) -> f64 {
        self.w_p(x) + self.w_0.as_ref().map_or(0.0, |p| p.eval(x))
    }

    pub fn a(&self, x: &[f64; 2]) -> f64 {
        self.a_p(x) + self.a_0.as_ref().map_or(0.0, |p| p.eval(x))
    }

    pub fn b(&self, x: &[f64; 2]) -> f64 {
        self.w(x) * self.a(x)
    }

    /// `∂_axis G(x)`.
    pub fn g_partial(&self, axis: usize, x: &[f64; 2]) -> Sym2 {
        let g = self.g_p.partial(axis, x);
        match &self.g_0 {
            Some(p) => g.add(&Sym2::scalar(p.grad(x)[axis])),
            None => g,
        }
    }

    pub fn w_grad(&self, x: &[f64; 2]) -> [f64; 2] {
        let mut g = self.w_p.grad(x);
        if let Some(p) = &self.w_0 {
            let q = p.grad(x);
            g[0] += q[0];
            g[1] += q[1];
        }
        g
    }

    pub fn g_p_field(&self) -> &MatrixField {
        &self.g_p
    }

    pub fn w_p_field(&self) -> &PeriodicField {
        &self.w_p
    }

    pub fn a_p_field(&self) -> &PeriodicField {
        &self.a_p
    }

    pub fn perturbations(&self) -> [Option<&DecayingField>; 3] {
        [self.g_0.as_ref(), self.w_0.as_ref(), self.a_0.as_ref()]
    }

    /// The medium with every perturbation removed.
    pub fn periodic_part(&self) -> Medium {
        Medium {
            g_0: None,
            w_0: None,
            a_0: None,
            bounds: self.periodic_bounds,
            ..self.clone()
        }
    }

    /// The same `G` and `w` with `a ≡ 0`. Such a medium is outside the
    /// damped setting and is meant only for conservation checks.
    pub fn undamped(&self) -> Medium {
        let zero = Bounds {
            a_min: 0.0,
            a_max: 0.0,
            ..self.bounds
        };
        Medium {
            a_p: PeriodicField::constant(0.0),
            a_0: None,
            bounds: zero,
            periodic_bounds: Bounds {
                a_min: 0.0,
                a_max: 0.0,
                ..self.periodic_bounds
            },
            ..self.clone()
        }
    }

    fn perturbation_magnitude(&self, x: &[f64; 2]) -> f64 {
        let mut s = 0.0f64;
        for f in [&self.g_0, &self.w_0, &self.a_0].into_iter().flatten() {
            s = s.max(f.eval(x).abs());
        }
        s
    }
}

/// Tabulate `G`, `w`, `a`, `b` on the nodes of `g`.
pub fn sample_on_grid(m: &Medium, g: &TorusGrid) -> Result<CoefficientTables> {
    if m.d != g.d {
        return Err(Error::DimensionMismatch {
            expected: m.d,
            found: g.d,
        });
    }
    let n = g.n;
    let h = g.spacing();
    let cell_len = n.pow(g.d as u32);
    let mut cg = Vec::with_capacity(cell_len);
    let mut cw = Vec::with_capacity(cell_len);
    let mut ca = Vec::with_capacity(cell_len);
    for c in 0..cell_len {
        let x = if g.d == 1 {
            [c as f64 * h, 0.0]
        } else {
            [(c / n) as f64 * h, (c % n) as f64 * h]
        };
        cg.push(m.g_p(&x));
        cw.push(m.w_p(&x));
        ca.push(m.a_p(&x));
    }
    let len = g.len();
    let mpa = g.points_per_axis();
    let cell_index = |idx: usize| -> usize {
        if g.d == 1 {
            idx % n
        } else {
            ((idx / mpa) % n) * n + (idx % mpa) % n
        }
    };
    let mut t = CoefficientTables {
        grid: *g,
        g: Vec::with_capacity(len),
        w: Vec::with_capacity(len),
        a: Vec::with_capacity(len),
        b: Vec::with_capacity(len),
        wrap_residual: 0.0,
    };
    for idx in 0..len {
        let c = cell_index(idx);
        t.g.push(cg[c]);
        t.w.push(cw[c]);
        t.a.push(ca[c]);
    }
    if m.is_perturbed() {
        for idx in 0..len {
            let x = g.centered_coords(idx);
            if let Some(p) = &m.g_0 {
                t.g[idx] = t.g[idx].add(&Sym2::scalar(p.eval(&x)));
            }
            if let Some(p) = &m.w_0 {
                t.w[idx] += p.eval(&x);
            }
            if let Some(p) = &m.a_0 {
                t.a[idx] += p.eval(&x);
            }
        }
        let half = 0.5 * g.side();
        let mut seam = 0.0f64;
        for i in 0..mpa {
            let s = -half + i as f64 * h;
            seam = seam.max(m.perturbation_magnitude(&[-half, if g.d == 2 { s } else { 0.0 }]));
            if g.d == 2 {
                seam = seam.max(m.perturbation_magnitude(&[s, -half]));
            }
        }
        t.wrap_residual = seam;
        if seam > WRAP_TOLERANCE {
            log::warn!(
                "perturbation reaches {seam:.2e} at the torus seam (tolerance {WRAP_TOLERANCE:.0e}); enlarge the torus"
            );
        }
    }
    t.b = t.w.iter().zip(&t.a).map(|(w, a)| w * a).collect();
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> MediumConfig {
        MediumConfig::from_json(text).unwrap()
    }

    const CONST: &str = r#"{"dimension": 1, "G": {"type": "constant", "value": 1.0},
        "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#;

    #[test]
    fn constant_medium_bounds() {
        let m = build_medium(&cfg(CONST)).unwrap();
        let b = m.bounds();
        assert_eq!((b.g_min, b.g_max), (1.0, 1.0));
        assert_eq!((b.w_min, b.w_max), (1.0, 1.0));
    }

    #[test]
    fn cosine_conductivity_extrema() {
        let m = build_medium(&cfg(
            r#"{"dimension": 1, "G": {"type": "expression", "expr": "1+0.5*cos(2*PI*x)"},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
        ))
        .unwrap();
        let b = m.bounds();
        assert!((b.g_min - 0.5).abs() < 1e-6, "{}", b.g_min);
        assert!((b.g_max - 1.5).abs() < 1e-6, "{}", b.g_max);
    }

    #[test]
    fn sign_changing_absorption_is_rejected() {
        let e = build_medium(&cfg(r#"{"dimension": 1, "G": {"type": "constant", "value": 1.0},
                "w": {"type": "constant", "value": 1.0},
                "a": {"type": "cosine-series", "terms": [{"k": [1], "cos": 1.0}]}}"#))
        .unwrap_err();
        assert!(matches!(e, Error::NegativeAbsorption { .. }));
    }

    #[test]
    fn zero_damping_is_rejected() {
        let e = build_medium(&cfg(r#"{"dimension": 1, "G": {"type": "constant", "value": 1.0},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 0.0}}"#))
        .unwrap_err();
        assert!(matches!(e, Error::ZeroDamping { .. }));
    }

    #[test]
    fn non_elliptic_g_is_rejected() {
        let e = build_medium(&cfg(
            r#"{"dimension": 1, "G": {"type": "expression", "expr": "0.5+cos(2*PI*x)"},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
        ))
        .unwrap_err();
        assert!(matches!(e, Error::EllipticityViolation { .. }));
    }

    #[test]
    fn table_at_node_zero() {
        let m = build_medium(&cfg(
            r#"{"dimension": 1, "G": {"type": "expression", "expr": "1+0.5*cos(2*PI*x)"},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
        ))
        .unwrap();
        let g = TorusGrid::new(1, 8, 1).unwrap();
        let t = sample_on_grid(&m, &g).unwrap();
        assert!((t.g[0].m11 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn perturbed_absorption_peaks_at_centre() {
        let m = build_medium(&cfg(r#"{"dimension": 1, "G": {"type": "constant", "value": 1.0},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0},
                "perturbation": {"a": {"decay_rate": 2.0, "decay_constant": 1.0,
                    "profile": {"type": "power", "amplitude": 1.0}}}}"#))
        .unwrap();
        let g = TorusGrid::new(1, 4, 64).unwrap();
        let t = sample_on_grid(&m, &g).unwrap();
        for (idx, a) in t.a.iter().enumerate() {
            let x = g.centered_coords(idx)[0];
            assert!((a - 1.0 - 1.0 / (1.0 + x * x)).abs() < 1e-15);
        }
        let peak = t.a.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(peak, t.a[g.len() / 2]);
        assert!(t.wrap_residual > WRAP_TOLERANCE);
    }

    #[test]
    fn dimension_mismatch() {
        let m = build_medium(&cfg(CONST)).unwrap();
        let g = TorusGrid::new(2, 4, 2).unwrap();
        assert!(matches!(sample_on_grid(&m, &g), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn decay_envelope_checked() {
        let e = build_medium(&cfg(r#"{"dimension": 1, "G": {"type": "constant", "value": 1.0},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0},
                "perturbation": {"a": {"decay_rate": 3.0, "decay_constant": 1.0,
                    "profile": {"type": "expression", "expr": "1/(1+x^2)"}}}}"#))
        .unwrap_err();
        assert!(matches!(e, Error::DecayBoundViolation { .. }));
    }
}
