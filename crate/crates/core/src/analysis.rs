//! Weighted norms, energies, power-law fits and wave/heat comparisons.
//!
//! Norms use `L^{2,δ} = L²(⟨x⟩^{2δ} dx)` with `x` measured from the torus
//! centre. The exponents below only concern rates; the constants of the
//! underlying estimates are never checked.
//!
//! Velocity norms use the stored `∂_t u` without the `i w` dressing of the
//! operator form. The two are equivalent norms since `w` is bounded above
//! and below.

use crate::error::{Error, Result};
use crate::evolve::{HeatComparator, StiffnessOperator, WaveState};
use crate::homogenize::HomogenizedData;
use crate::medium::{sample_on_grid, Medium, Sym2, TorusGrid};
use crate::reduce::pairwise_map;
use serde::{Deserialize, Serialize};

pub const DEFAULT_KAPPA: f64 = 1.5;
pub const MIN_FIT_POINTS: usize = 8;
pub const MIN_FIT_DECADES: f64 = 0.8;

/// Exponents `(s₁, s₂, s, κ, η)` of the decay estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub s1: f64,
    pub s2: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub eta: f64,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl WeightSpec {
    pub fn new(s1: f64, s2: f64) -> Self {
        WeightSpec {
            s1,
            s2,
            s: 0.0,
            kappa: DEFAULT_KAPPA,
            eta: 0.0,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let half = d as f64 / 2.0;
        if !(self.kappa > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "weights: kappa must exceed 1, got {}",
                self.kappa
            )));
        }
        for (name, v) in [("s1", self.s1), ("s2", self.s2)] {
            if !(0.0..=half).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "weights: {name} must lie in [0, {half}], got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.s) {
            return Err(Error::InvalidConfig(format!(
                "weights: s must lie in [0, 1], got {}",
                self.s
            )));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "weights: eta must be non-negative, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// `max(s₁, s₂) + η < min(d/2, ρ_G, ρ_a + 1)` for the perturbation of `m`.
    pub fn check_perturbation(&self, m: &Medium) -> Result<()> {
        self.validate(m.dim())?;
        let [g0, w0, a0] = m.perturbations();
        let rate = |f: Option<&crate::medium::DecayingField>| f.map_or(f64::INFINITY, |f| f.decay_rate);
        let rho_g = rate(g0);
        let rho_a = rate(w0).min(rate(a0));
        let lhs = self.s1.max(self.s2) + self.eta;
        let rhs = (m.dim() as f64 / 2.0).min(rho_g).min(rho_a + 1.0);
        if lhs < rhs {
            Ok(())
        } else {
            Err(Error::ConstraintViolation(format!(
                "max(s1, s2) + eta = {lhs} must be below min(d/2, rho_G, rho_a + 1) = {rhs}"
            )))
        }
    }

    /// Weight exponent `−κ s₁` of the local norms.
    pub fn local(&self) -> f64 {
        -self.kappa * self.s1
    }

    pub fn predicted(&self, kind: SeriesKind) -> f64 {
        let base = -(self.s1 + self.s2) / 2.0;
        match kind {
            SeriesKind::WaveU | SeriesKind::HeatU => base,
            SeriesKind::WaveDtU | SeriesKind::HeatDtU => base - 1.0,
            SeriesKind::WaveGrad | SeriesKind::HeatGrad => base - (1.0 + self.s) / 2.0,
            SeriesKind::DiffU => base - 0.5,
            SeriesKind::DiffDtU => base - 1.5,
            SeriesKind::DiffGradW => base - 1.0,
            SeriesKind::DiffGradId => base - (1.0 + self.s) / 2.0,
            SeriesKind::PerturbU => base - self.eta / 2.0,
            SeriesKind::PerturbDtU => base - 1.0 - self.eta / 2.0,
            SeriesKind::PerturbGrad => base - 0.5 - self.eta / 2.0,
        }
    }

    /// Weight exponent used for `kind`.
    pub fn delta(&self, kind: SeriesKind) -> f64 {
        match kind {
            SeriesKind::WaveGrad | SeriesKind::HeatGrad => self.local() - self.s,
            _ => self.local(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    WaveU,
    WaveDtU,
    WaveGrad,
    HeatU,
    HeatDtU,
    HeatGrad,
    DiffU,
    DiffDtU,
    DiffGradW,
    DiffGradId,
    PerturbU,
    PerturbDtU,
    PerturbGrad,
}

impl SeriesKind {
    pub fn name(&self) -> &'static str {
        match self {
            SeriesKind::WaveU => "wave-u",
            SeriesKind::WaveDtU => "wave-dtu",
            SeriesKind::WaveGrad => "wave-grad",
            SeriesKind::HeatU => "heat-u",
            SeriesKind::HeatDtU => "heat-dtu",
            SeriesKind::HeatGrad => "heat-grad",
            SeriesKind::DiffU => "diff-u",
            SeriesKind::DiffDtU => "diff-dtu",
            SeriesKind::DiffGradW => "diff-grad-w",
            SeriesKind::DiffGradId => "diff-grad-id",
            SeriesKind::PerturbU => "perturb-u",
            SeriesKind::PerturbDtU => "perturb-dtu",
            SeriesKind::PerturbGrad => "perturb-grad",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use SeriesKind::*;
        [
            WaveU,
            WaveDtU,
            WaveGrad,
            HeatU,
            HeatDtU,
            HeatGrad,
            DiffU,
            DiffDtU,
            DiffGradW,
            DiffGradId,
            PerturbU,
            PerturbDtU,
            PerturbGrad,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

fn weights(g: &TorusGrid, delta: f64) -> Vec<f64> {
    (0..g.len()).map(|i| g.bracket(i).powf(2.0 * delta)).collect()
}

/// `n` log-uniform times in `[lo, hi]` with exact endpoints.
pub fn log_uniform_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| match i {
                0 => lo,
                _ if i == n - 1 => hi,
                _ => (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp(),
            })
            .collect(),
    }
}

/// `(Σ ⟨x⟩^{2δ} |f(x)|² h^d)^{1/2}`.
pub fn weighted_norm(f: &[f64], g: &TorusGrid, delta: f64) -> f64 {
    let hd = g.cell_volume();
    let s = if delta == 0.0 {
        pairwise_map(f.len(), &|i| f[i] * f[i])
    } else {
        pairwise_map(f.len(), &|i| g.bracket(i).powf(2.0 * delta) * f[i] * f[i])
    };
    (s * hd).sqrt()
}

/// Weighted norm of a vector field given component-wise.
pub fn weighted_norm_vec(f: &[Vec<f64>], g: &TorusGrid, delta: f64) -> f64 {
    f.iter().map(|c| weighted_norm(c, g, delta).powi(2)).sum::<f64>().sqrt()
}

/// Energy densities on a fixed grid and medium.
pub struct EnergyMeter {
    grid: TorusGrid,
    op: StiffnessOperator,
    w: Vec<f64>,
    g: Vec<Sym2>,
}

impl EnergyMeter {
    pub fn new(m: &Medium, g: &TorusGrid) -> Result<Self> {
        let t = sample_on_grid(m, g)?;
        Ok(EnergyMeter {
            grid: *g,
            op: StiffnessOperator::new(*g, t.g.clone()),
            w: t.w,
            g: t.g,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// `∫ ⟨x⟩^{−2δ} (w |∂_t u|² + G∇u·∇u)`; `δ = None` is the plain energy.
    pub fn energy(&mut self, state: &WaveState, delta: Option<f64>) -> Result<f64> {
        if state.grid != self.grid {
            return Err(Error::GridMismatch("state and meter grids differ".into()));
        }
        let gu = self.gradient(&state.u);
        let hd = self.grid.cell_volume();
        let d = self.grid.d;
        let density = |i: usize| {
            let v = state.v[i];
            let grad = if d == 1 { [gu[0][i], 0.0] } else { [gu[0][i], gu[1][i]] };
            self.w[i] * v * v + self.g[i].quad(grad)
        };
        let s = match delta {
            None => pairwise_map(self.grid.len(), &density),
            Some(dl) => {
                let wt = weights(&self.grid, -dl);
                pairwise_map(self.grid.len(), &|i| wt[i] * density(i))
            }
        };
        Ok(s * hd)
    }

    pub fn gradient(&mut self, u: &[f64]) -> Vec<Vec<f64>> {
        self.op.gradient(u)
    }
}

/// Energy of `state` in the medium `m`.
pub fn energy(state: &WaveState, m: &Medium, delta: Option<f64>) -> Result<f64> {
    EnergyMeter::new(m, &state.grid)?.energy(state, delta)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub norm_values: Vec<f64>,
    pub fitted_exponent: f64,
    /// RMS residual of the log-log fit.
    pub fit_residual: f64,
    pub fit_window: (f64, f64),
    pub predicted_exponent: Option<f64>,
    /// Gap between fits over the first and last two thirds of the window.
    pub stationarity_gap: f64,
}

impl DecayReport {
    pub fn with_prediction(mut self, p: f64) -> Self {
        self.predicted_exponent = Some(p);
        self
    }

    pub fn is_stationary(&self, tol: f64) -> bool {
        self.stationarity_gap <= tol
    }
}

fn ls_slope(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - c - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, c, rms)
}

/// Least-squares slope of `log v` against `log t` over the window (all
/// times when `None`).
pub fn fit_decay_exponent(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<DecayReport> {
    if times.len() != values.len() {
        return Err(Error::GridMismatch(format!(
            "{} times for {} values",
            times.len(),
            values.len()
        )));
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo && t <= hi {
            if !(v > 0.0) || !(t > 0.0) {
                return Err(Error::NonPositiveValues { t, value: v });
            }
            ts.push(t);
            vs.push(v);
        }
    }
    let decades = match (ts.first(), ts.last()) {
        (Some(a), Some(b)) => (b / a).log10(),
        _ => 0.0,
    };
    if ts.len() < MIN_FIT_POINTS || decades < MIN_FIT_DECADES {
        return Err(Error::WindowTooShort {
            points: ts.len(),
            decades,
        });
    }
    let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (slope, _, rms) = ls_slope(&x, &y);
    let k = (2 * x.len()).div_ceil(3);
    let (s_early, _, _) = ls_slope(&x[..k], &y[..k]);
    let (s_late, _, _) = ls_slope(&x[x.len() - k..], &y[y.len() - k..]);
    Ok(DecayReport {
        fit_window: (ts[0], *ts.last().unwrap()),
        times: ts,
        norm_values: vs,
        fitted_exponent: slope,
        fit_residual: rms,
        predicted_exponent: None,
        stationarity_gap: (s_early - s_late).abs(),
    })
}

/// A named norm time series and its fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormSeries {
    pub kind: SeriesKind,
    pub delta: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: Option<DecayReport>,
    /// Fit failure, when there is no fit.
    pub fit_error: Option<String>,
}

impl NormSeries {
    pub fn new(kind: SeriesKind, delta: f64) -> Self {
        NormSeries {
            kind,
            delta,
            times: Vec::new(),
            values: Vec::new(),
            fit: None,
            fit_error: None,
        }
    }

    pub fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn fit(&mut self, window: Option<(f64, f64)>, predicted: f64) {
        match fit_decay_exponent(&self.times, &self.values, window) {
            Ok(r) => {
                self.fit = Some(r.with_prediction(predicted));
                self.fit_error = None;
            }
            Err(e) => {
                self.fit = None;
                self.fit_error = Some(e.to_string());
            }
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        self.fit.as_ref().map(|r| r.fitted_exponent)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub spec: WeightSpec,
    pub series: Vec<NormSeries>,
}

impl ComparisonReport {
    pub fn get(&self, kind: SeriesKind) -> Option<&NormSeries> {
        self.series.iter().find(|s| s.kind == kind)
    }

    pub fn exponent(&self, kind: SeriesKind) -> Option<f64> {
        self.get(kind).and_then(|s| s.exponent())
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn fit_all(series: &mut [NormSeries], spec: &WeightSpec, window: Option<(f64, f64)>) {
    for s in series {
        let p = spec.predicted(s.kind);
        s.fit(window, p);
    }
}

/// Local decay of `‖u‖`, `‖∂_t u‖` and `‖∇u‖` along a wave run.
pub fn wave_decay(states: &[WaveState], spec: &WeightSpec, window: Option<(f64, f64)>) -> Result<ComparisonReport> {
    let Some(first) = states.first() else {
        return Ok(ComparisonReport {
            spec: *spec,
            series: Vec::new(),
        });
    };
    let g = first.grid;
    let mut series = vec![
        NormSeries::new(SeriesKind::WaveU, spec.delta(SeriesKind::WaveU)),
        NormSeries::new(SeriesKind::WaveDtU, spec.delta(SeriesKind::WaveDtU)),
        NormSeries::new(SeriesKind::WaveGrad, spec.delta(SeriesKind::WaveGrad)),
    ];
    let dl: Vec<f64> = series.iter().map(|s| s.delta).collect();
    for st in states {
        if st.grid != g {
            return Err(Error::GridMismatch("snapshots live on different grids".into()));
        }
        let gu = crate::spectral::gradient(&st.u, g.d, g.side());
        series[0].push(st.t, weighted_norm(&st.u, &g, dl[0]));
        series[1].push(st.t, weighted_norm(&st.v, &g, dl[1]));
        series[2].push(st.t, weighted_norm_vec(&gu, &g, dl[2]));
    }
    fit_all(&mut series, spec, window);
    Ok(ComparisonReport { spec: *spec, series })
}

/// Differences between a wave run and the heat comparator, in the
/// `L^{2,−κ s₁}` weight, alongside the comparator baselines.
pub fn compare_wave_heat(
    states: &[WaveState],
    heat: &mut HeatComparator,
    hd: &HomogenizedData,
    spec: &WeightSpec,
    window: Option<(f64, f64)>,
) -> Result<ComparisonReport> {
    let g = *heat.grid();
    let w = hd.w_on_grid(&g)?;
    use SeriesKind::*;
    let mut series: Vec<NormSeries> = [DiffU, DiffDtU, DiffGradW, DiffGradId, HeatU, HeatDtU, HeatGrad]
        .into_iter()
        .map(|k| NormSeries::new(k, spec.delta(k)))
        .collect();
    let dl: Vec<f64> = series.iter().map(|s| s.delta).collect();
    for st in states {
        if st.grid != g {
            return Err(Error::GridMismatch(format!(
                "wave snapshot at t = {} is not on the comparator grid",
                st.t
            )));
        }
        let (uh, dth) = heat.at(st.t);
        let gh = heat.gradient_at(st.t);
        let gp = crate::spectral::gradient(&st.u, g.d, g.side());
        let d = g.d;
        let wgh: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                (0..g.len())
                    .map(|p| (0..d).map(|j| w[i * 2 + j][p] * gh[j][p]).sum())
                    .collect()
            })
            .collect();
        let dw: Vec<Vec<f64>> = (0..d).map(|i| diff(&gp[i], &wgh[i])).collect();
        let di: Vec<Vec<f64>> = (0..d).map(|i| diff(&gp[i], &gh[i])).collect();
        let t = st.t;
        series[0].push(t, weighted_norm(&diff(&st.u, &uh), &g, dl[0]));
        series[1].push(t, weighted_norm(&diff(&st.v, &dth), &g, dl[1]));
        series[2].push(t, weighted_norm_vec(&dw, &g, dl[2]));
        series[3].push(t, weighted_norm_vec(&di, &g, dl[3]));
        series[4].push(t, weighted_norm(&uh, &g, dl[4]));
        series[5].push(t, weighted_norm(&dth, &g, dl[5]));
        series[6].push(t, weighted_norm_vec(&gh, &g, dl[6]));
    }
    fit_all(&mut series, spec, window);
    Ok(ComparisonReport { spec: *spec, series })
}

/// Differences between perturbed and periodic runs with equal snapshot times.
pub fn compare_runs(
    perturbed: &[WaveState],
    periodic: &[WaveState],
    spec: &WeightSpec,
    window: Option<(f64, f64)>,
) -> Result<ComparisonReport> {
    if perturbed.len() != periodic.len() {
        return Err(Error::GridMismatch(format!(
            "{} perturbed snapshots against {} periodic",
            perturbed.len(),
            periodic.len()
        )));
    }
    use SeriesKind::*;
    let mut series: Vec<NormSeries> = [PerturbU, PerturbDtU, PerturbGrad, WaveU, WaveDtU]
        .into_iter()
        .map(|k| NormSeries::new(k, spec.local()))
        .collect();
    for (a, b) in perturbed.iter().zip(periodic) {
        if a.grid != b.grid || (a.t - b.t).abs() > 1e-12 * (1.0 + a.t) {
            return Err(Error::GridMismatch(format!(
                "snapshots at t = {} and t = {} do not pair up",
                a.t, b.t
            )));
        }
        let g = a.grid;
        let du = diff(&a.u, &b.u);
        let gd = crate::spectral::gradient(&du, g.d, g.side());
        let t = a.t;
        series[0].push(t, weighted_norm(&du, &g, spec.local()));
        series[1].push(t, weighted_norm(&diff(&a.v, &b.v), &g, spec.local()));
        series[2].push(t, weighted_norm_vec(&gd, &g, spec.local()));
        series[3].push(t, weighted_norm(&b.u, &g, spec.local()));
        series[4].push(t, weighted_norm(&b.v, &g, spec.local()));
    }
    fit_all(&mut series, spec, window);
    Ok(ComparisonReport { spec: *spec, series })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_power_law() {
        let t: Vec<f64> = (0..20).map(|i| 10f64.powf(1.0 + i as f64 * 0.1)).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-1.5)).collect();
        let r = fit_decay_exponent(&t, &v, None).unwrap();
        assert!((r.fitted_exponent + 1.5).abs() < 1e-12);
        assert!(r.fit_residual < 1e-12);
        assert!(r.stationarity_gap < 1e-12);
    }

    #[test]
    fn window_rules() {
        let t: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let v: Vec<f64> = t.iter().map(|t| 1.0 / t).collect();
        assert!(matches!(
            fit_decay_exponent(&t, &v, Some((1.0, 5.0))),
            Err(Error::WindowTooShort { points: 5, .. })
        ));
        assert!(matches!(
            fit_decay_exponent(&t, &v, Some((10.0, 20.0))),
            Err(Error::WindowTooShort { .. })
        ));
        let mut bad = v.clone();
        bad[3] = 0.0;
        assert!(matches!(
            fit_decay_exponent(&t, &bad, None),
            Err(Error::NonPositiveValues { .. })
        ));
    }

    #[test]
    fn weight_validation() {
        let mut w = WeightSpec::new(0.5, 0.5);
        assert!(w.validate(1).is_ok());
        w.kappa = 1.0;
        assert!(w.validate(1).unwrap_err().to_string().contains("kappa"));
        let w = WeightSpec::new(0.6, 0.0);
        assert!(w.validate(1).is_err());
        assert!(w.validate(2).is_ok());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [SeriesKind::WaveU, SeriesKind::DiffGradW, SeriesKind::PerturbGrad] {
            assert_eq!(SeriesKind::parse(k.name()), Some(k));
        }
    }
}
