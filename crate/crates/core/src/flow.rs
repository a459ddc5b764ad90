//! Hamiltonian flow of `p(x, ξ) = ⟨G(x)ξ, ξ⟩ / w(x)` and an empirical
//! audit of the geometric damping condition
//! `∫₀ᵀ a(φᵗ(x₀, ξ₀)) dt ≥ α` on the level set `p = 1`.
//!
//! The audit samples finitely many trajectories. It is evidence for the
//! condition, not a proof of it.

use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::reduce::mean;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

impl PhasePoint {
    pub fn new(x: &[f64], xi: &[f64]) -> Result<Self> {
        if x.len() != xi.len() || x.is_empty() || x.len() > 2 {
            return Err(Error::InvalidPhasePoint(format!(
                "position has {} components and momentum {}",
                x.len(),
                xi.len()
            )));
        }
        let mut p = PhasePoint {
            x: [0.0; 2],
            xi: [0.0; 2],
        };
        p.x[..x.len()].copy_from_slice(x);
        p.xi[..xi.len()].copy_from_slice(xi);
        if p.x.iter().chain(&p.xi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPhasePoint("non-finite component".into()));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<PhasePoint>,
    pub p_values: Vec<f64>,
    /// Running `∫₀ᵗ a(x(s)) ds`.
    pub damping_integral: Vec<f64>,
    /// Step actually used after any halving.
    pub dt: f64,
}

impl Trajectory {
    pub fn end(&self) -> &PhasePoint {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn total_damping(&self) -> f64 {
        *self.damping_integral.last().unwrap_or(&0.0)
    }

    /// `max_t |p(t) − p(0)|`.
    pub fn max_drift(&self) -> f64 {
        let p0 = self.p_values[0];
        self.p_values.iter().map(|p| (p - p0).abs()).fold(0.0, f64::max)
    }
}

pub fn hamiltonian(m: &Medium, z: &PhasePoint) -> f64 {
    m.g(&z.x).quad(z.xi) / m.w(&z.x)
}

const MAX_HALVINGS: u32 = 6;
const DRIFT_TOLERANCE: f64 = 1e-6;

type State = [f64; 5];

fn rhs(m: &Medium, y: &State) -> State {
    let d = m.dim();
    let x = [y[0], y[1]];
    let xi = [y[2], y[3]];
    let g = m.g(&x);
    let w = m.w(&x);
    let gw = m.w_grad(&x);
    let q = g.quad(xi);
    let gx = g.apply(xi);
    let mut out = [0.0; 5];
    for i in 0..d {
        out[i] = 2.0 * gx[i] / w;
        let dq = m.g_partial(i, &x).quad(xi);
        out[2 + i] = -(dq * w - q * gw[i]) / (w * w);
    }
    out[4] = m.a(&x);
    out
}

fn axpy(y: &State, h: f64, k: &State) -> State {
    let mut o = *y;
    for i in 0..5 {
        o[i] += h * k[i];
    }
    o
}

fn rk4(m: &Medium, y: &State, h: f64) -> State {
    let k1 = rhs(m, y);
    let k2 = rhs(m, &axpy(y, h / 2.0, &k1));
    let k3 = rhs(m, &axpy(y, h / 2.0, &k2));
    let k4 = rhs(m, &axpy(y, h, &k3));
    let mut o = *y;
    for i in 0..5 {
        o[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

fn try_integrate(m: &Medium, start: &PhasePoint, t_end: f64, dt: f64) -> Trajectory {
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut y: State = [start.x[0], start.x[1], start.xi[0], start.xi[1], 0.0];
    let mut tr = Trajectory {
        times: Vec::with_capacity(steps + 1),
        samples: Vec::with_capacity(steps + 1),
        p_values: Vec::with_capacity(steps + 1),
        damping_integral: Vec::with_capacity(steps + 1),
        dt: h,
    };
    let record = |y: &State, t: f64, tr: &mut Trajectory| {
        let z = PhasePoint {
            x: [y[0], y[1]],
            xi: [y[2], y[3]],
        };
        tr.times.push(t);
        tr.p_values.push(hamiltonian(m, &z));
        tr.samples.push(z);
        tr.damping_integral.push(y[4]);
    };
    record(&y, 0.0, &mut tr);
    for s in 1..=steps {
        y = rk4(m, &y, h);
        record(&y, s as f64 * h, &mut tr);
    }
    tr
}

/// RK4 integration of Hamilton's equations on `[0, T]`. The step is
/// halved (up to six times) until `|p(t) − p(0)| ≤ 10⁻⁶ p(0)`.
pub fn integrate_flow(m: &Medium, start: &PhasePoint, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidPhasePoint(format!(
            "need dt > 0 and a finite horizon, got dt = {dt}, T = {t_end}"
        )));
    }
    let p0 = hamiltonian(m, start);
    if !(p0 > 0.0) {
        return Err(Error::InvalidPhasePoint(format!("p(start) = {p0} is not positive")));
    }
    let mut h = dt;
    let mut drift = f64::INFINITY;
    for _ in 0..=MAX_HALVINGS {
        let tr = try_integrate(m, start, t_end, h);
        drift = tr.max_drift();
        if drift.is_finite() && drift <= DRIFT_TOLERANCE * p0 {
            return Ok(tr);
        }
        h /= 2.0;
    }
    Err(Error::StepUnderflow {
        dt: h * 2.0,
        drift: drift / p0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GccOptions {
    pub dt: f64,
    pub bins: usize,
    /// Pass threshold `α`; `None` reports only.
    pub alpha: Option<f64>,
}

impl Default for GccOptions {
    fn default() -> Self {
        GccOptions {
            dt: 0.01,
            bins: 20,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GccReport {
    pub horizon: f64,
    pub ensemble: usize,
    pub seed: u64,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Start point of the least damped trajectory.
    pub worst: PhasePoint,
    pub histogram: Histogram,
    pub max_relative_drift: f64,
    pub alpha: Option<f64>,
    pub pass: Option<bool>,
}

/// Point on `p = 1` above `x` in direction `θ`.
pub fn level_set_point(m: &Medium, x: [f64; 2], theta: [f64; 2]) -> PhasePoint {
    let s = (m.w(&x) / m.g(&x).quad(theta)).sqrt();
    PhasePoint {
        x,
        xi: [theta[0] * s, theta[1] * s],
    }
}

fn draw(m: &Medium, n: usize, seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = m.dim();
    (0..n)
        .map(|_| {
            if d == 1 {
                let x = rng.gen::<f64>();
                let th = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                level_set_point(m, [x, 0.0], [th, 0.0])
            } else {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                let a = rng.gen::<f64>() * std::f64::consts::TAU;
                level_set_point(m, x, [a.cos(), a.sin()])
            }
        })
        .collect()
}

pub fn gcc_audit(m: &Medium, t_end: f64, ensemble: usize, seed: u64) -> Result<GccReport> {
    gcc_audit_with(m, t_end, ensemble, seed, &GccOptions::default())
}

pub fn gcc_audit_with(m: &Medium, t_end: f64, ensemble: usize, seed: u64, opts: &GccOptions) -> Result<GccReport> {
    if ensemble == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let starts = draw(m, ensemble, seed);
    let runs: Vec<Result<(f64, f64)>> = starts
        .par_iter()
        .map(|z| {
            let tr = integrate_flow(m, z, t_end, opts.dt)?;
            Ok((tr.total_damping(), tr.max_drift() / tr.p_values[0]))
        })
        .collect();
    let mut totals = Vec::with_capacity(ensemble);
    let mut drift = 0.0f64;
    for r in runs {
        let (v, dr) = r?;
        totals.push(v);
        drift = drift.max(dr);
    }
    let (mut imin, mut max) = (0, f64::NEG_INFINITY);
    for (i, &v) in totals.iter().enumerate() {
        if v < totals[imin] {
            imin = i;
        }
        max = max.max(v);
    }
    let min = totals[imin];
    let bins = opts.bins.max(1);
    let mut counts = vec![0; bins];
    let width = max - min;
    for &v in &totals {
        let b = if width > 0.0 {
            (((v - min) / width) * bins as f64).floor() as usize
        } else {
            0
        };
        counts[b.min(bins - 1)] += 1;
    }
    Ok(GccReport {
        horizon: t_end,
        ensemble,
        seed,
        min,
        mean: mean(&totals),
        max,
        worst: starts[imin],
        histogram: Histogram {
            lo: min,
            hi: max,
            counts,
        },
        max_relative_drift: drift,
        alpha: opts.alpha,
        pass: opts.alpha.map(|a| min >= a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{build_medium, MediumConfig};

    fn medium(text: &str) -> Medium {
        build_medium(&MediumConfig::from_json(text).unwrap()).unwrap()
    }

    #[test]
    fn flat_space_is_a_straight_line() {
        let m = medium(
            r#"{"dimension":2,"G":{"type":"constant","value":1},"w":{"type":"constant","value":1},"a":{"type":"constant","value":1}}"#,
        );
        let z = PhasePoint::new(&[0.1, 0.2], &[0.3, -0.7]).unwrap();
        let tr = integrate_flow(&m, &z, 3.0, 0.1).unwrap();
        let e = tr.end();
        assert!((e.x[0] - 1.9).abs() < 1e-12);
        assert!((e.x[1] + 4.0).abs() < 1e-12);
        assert_eq!(e.xi, z.xi);
    }

    #[test]
    fn rejects_zero_momentum() {
        let m = medium(
            r#"{"dimension":1,"G":{"type":"constant","value":1},"w":{"type":"constant","value":1},"a":{"type":"constant","value":1}}"#,
        );
        let z = PhasePoint::new(&[0.0], &[0.0]).unwrap();
        assert!(matches!(
            integrate_flow(&m, &z, 1.0, 0.1),
            Err(Error::InvalidPhasePoint(_))
        ));
        assert!(PhasePoint::new(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn empty_ensemble() {
        let m = medium(
            r#"{"dimension":1,"G":{"type":"constant","value":1},"w":{"type":"constant","value":1},"a":{"type":"constant","value":1}}"#,
        );
        assert_eq!(gcc_audit(&m, 1.0, 0, 1).unwrap_err(), Error::EmptyEnsemble);
    }

    #[test]
    fn level_set_points_have_unit_energy() {
        let m = medium(
            r#"{"dimension":2,"G":{"type":"expression","expr":"1.5+0.5*cos(2*PI*x)"},"w":{"type":"expression","expr":"1+0.3*sin(2*PI*y)"},"a":{"type":"constant","value":1}}"#,
        );
        for z in draw(&m, 50, 3) {
            assert!((hamiltonian(&m, &z) - 1.0).abs() < 1e-14);
        }
    }
}
