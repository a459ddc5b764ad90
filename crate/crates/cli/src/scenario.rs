//! Scenario files.
//!
//! ```json
//! {
//!   "kind": "decay",
//!   "medium": "reference.json",
//!   "grid": {"n": 32, "periods": 1024},
//!   "initial": {"type": "gaussian", "width": 2.0},
//!   "weights": {"s1": 0.5, "s2": 0.5, "s": 1.0},
//!   "snapshots": {"count": 32}
//! }
//! ```
//!
//! `medium` is either a path (relative to the scenario file) or an inline
//! medium description. Every field except `kind` and `medium` has a default.

use crate::error::{CliError, Result};
use periodica_core::analysis::WeightSpec;
use periodica_core::evolve::{cfl_limit, wrap_time, InitialData};
use periodica_core::homogenize::DEFAULT_TOLERANCE;
use periodica_core::medium::{build_medium, Medium, MediumConfig, TorusGrid};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Decay,
    CompareHeat,
    Bands,
    Gcc,
    Perturbation,
}

impl ExperimentKind {
    pub fn needs_simulation(self) -> bool {
        matches!(
            self,
            ExperimentKind::Decay | ExperimentKind::CompareHeat | ExperimentKind::Perturbation
        )
    }
}

#[derive(Debug, Clone)]
pub enum MediumRef {
    Path(PathBuf),
    Inline(MediumConfig),
}

impl Serialize for MediumRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            MediumRef::Path(p) => p.serialize(s),
            MediumRef::Inline(c) => c.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for MediumRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = MediumRef;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a path to a medium file or an inline medium object")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<MediumRef, E> {
                Ok(MediumRef::Path(PathBuf::from(v)))
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<MediumRef, A::Error> {
                MediumConfig::deserialize(de::value::MapAccessDeserializer::new(map)).map(MediumRef::Inline)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Points per unit cell and axis (even).
    pub n: usize,
    /// Cells per axis of the computational torus.
    pub periods: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n: 32, periods: 1024 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Centred Gaussian; as displacement, or as velocity when `velocity`.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "two")]
        width: f64,
        #[serde(default)]
        velocity: bool,
    },
    /// `cos(2πk·x/L)` displacement.
    Mode { k: Vec<i64> },
    /// Raw little-endian `f64` arrays in grid order.
    File {
        u0: PathBuf,
        #[serde(default)]
        u1: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Gaussian {
            amplitude: 1.0,
            width: 2.0,
            velocity: false,
        }
    }
}

/// `dt = cfl_fraction · h · √(w_min/G_max)` unless `fixed` is given, in
/// which case `fixed` must respect that bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtPolicy {
    #[serde(default = "half")]
    pub cfl_fraction: f64,
    #[serde(default)]
    pub fixed: Option<f64>,
}

fn half() -> f64 {
    0.5
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy {
            cfl_fraction: 0.5,
            fixed: None,
        }
    }
}

/// Log-uniform snapshot times in `[start, horizon]`, plus `t = 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    /// Defaults to `horizon / 100`.
    #[serde(default)]
    pub start: Option<f64>,
    /// Write snapshot arrays to disk.
    #[serde(default = "yes")]
    pub write: bool,
}

fn default_count() -> usize {
    32
}
fn yes() -> bool {
    true
}

impl Default for SnapshotSpec {
    fn default() -> Self {
        SnapshotSpec {
            count: default_count(),
            start: None,
            write: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizationSpec {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_cg_tolerance")]
    pub tolerance: f64,
}

fn default_resolution() -> usize {
    128
}
fn default_cg_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for HomogenizationSpec {
    fn default() -> Self {
        HomogenizationSpec {
            resolution: default_resolution(),
            tolerance: default_cg_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    /// `ray:e1`, `ray:e2` or `ray:x,y`.
    #[serde(default = "default_path")]
    pub path: String,
    /// `lo:hi:count`, log-uniform.
    #[serde(default = "default_radii")]
    pub radii: String,
}

fn default_cutoff() -> usize {
    32
}
fn default_path() -> String {
    "ray:e1".into()
}
fn default_radii() -> String {
    "1e-3:1e-1:40".into()
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec {
            cutoff: default_cutoff(),
            path: default_path(),
            radii: default_radii(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GccSpec {
    #[serde(default = "default_gcc_horizon")]
    pub horizon: f64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "default_flow_dt")]
    pub dt: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_gcc_horizon() -> f64 {
    10.0
}
fn default_ensemble() -> usize {
    4096
}
fn default_flow_dt() -> f64 {
    0.01
}
fn default_bins() -> usize {
    20
}

impl Default for GccSpec {
    fn default() -> Self {
        GccSpec {
            horizon: default_gcc_horizon(),
            ensemble: default_ensemble(),
            dt: default_flow_dt(),
            bins: default_bins(),
            alpha: None,
        }
    }
}

/// Thresholds used by `--check`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed `|fitted − predicted|` for decay exponents.
    #[serde(default = "default_exponent_tol")]
    pub exponent: f64,
    /// Required exponent gain of the perturbation difference.
    #[serde(default = "default_exponent_tol")]
    pub gain_margin: f64,
    /// Minimum log–log slope of the dispersion residual.
    #[serde(default = "default_slope")]
    pub dispersion_slope: f64,
    /// Allowed `|∫W − Id|`.
    #[serde(default = "default_corrector_mean")]
    pub corrector_mean: f64,
}

fn default_exponent_tol() -> f64 {
    0.15
}
fn default_slope() -> f64 {
    2.8
}
fn default_corrector_mean() -> f64 {
    1e-12
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exponent: default_exponent_tol(),
            gain_margin: default_exponent_tol(),
            dispersion_slope: default_slope(),
            corrector_mean: default_corrector_mean(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ExperimentKind,
    pub medium: MediumRef,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    /// Final time; defaults to the wrap time of the torus.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub dt: DtPolicy,
    #[serde(default)]
    pub snapshots: SnapshotSpec,
    #[serde(default = "default_weights")]
    pub weights: WeightSpec,
    /// Defaults to `[t_wrap/10, horizon]`.
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default)]
    pub homogenization: HomogenizationSpec,
    #[serde(default)]
    pub bands: BandSpec,
    #[serde(default)]
    pub gcc: GccSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_weights() -> WeightSpec {
    WeightSpec::new(0.5, 0.5)
}

/// Parse JSON text into `T`, reporting the field path and position of
/// the first error.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de)?;
    Ok(value)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

/// Load a medium description with field diagnostics.
pub fn load_medium_config(path: &Path) -> Result<MediumConfig> {
    parse_json(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn medium_from_config(c: &MediumConfig) -> Result<Medium> {
    build_medium(c).map_err(|e| {
        if e.is_config() {
            CliError::config("medium", e.to_string())
        } else {
            CliError::Numerical(e)
        }
    })
}

/// Everything needed to start a simulation.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub grid: TorusGrid,
    pub init: InitialData,
    pub horizon: f64,
    pub dt: f64,
    pub wrap_time: f64,
    pub times: Vec<f64>,
    pub window: (f64, f64),
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = read_text(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::from_json(&text, &base).map_err(|e| e.in_file(path))
    }

    /// Parse a scenario; relative paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Scenario> {
        let mut s: Scenario = parse_json(text)?;
        s.base_dir = base_dir.to_path_buf();
        if let MediumRef::Path(p) = &s.medium {
            let full = s.base_dir.join(p);
            s.medium = MediumRef::Inline(load_medium_config(&full)?);
        }
        s.validate()?;
        Ok(s)
    }

    pub fn medium_config(&self) -> Result<&MediumConfig> {
        match &self.medium {
            MediumRef::Inline(c) => Ok(c),
            MediumRef::Path(p) => Err(CliError::config(
                "medium",
                format!("unresolved medium path {}", p.display()),
            )),
        }
    }

    pub fn build_medium(&self) -> Result<Medium> {
        medium_from_config(self.medium_config()?)
    }

    pub fn dimension(&self) -> Result<usize> {
        Ok(self.medium_config()?.dimension)
    }

    /// Static checks that do not need the medium to be built.
    pub fn validate(&self) -> Result<()> {
        let d = self.dimension()?;
        self.weights
            .validate(d)
            .map_err(|e| CliError::config("weights", core_message(&e)))?;
        let dt = &self.dt;
        if !(dt.cfl_fraction > 0.0 && dt.cfl_fraction <= 0.5) {
            return Err(CliError::config(
                "dt.cfl_fraction",
                "must lie in (0, 0.5] for the leapfrog stability contract",
            ));
        }
        if let Some(f) = dt.fixed {
            if !(f > 0.0) {
                return Err(CliError::config("dt.fixed", "must be positive"));
            }
        }
        if self.snapshots.count < 2 {
            return Err(CliError::config("snapshots.count", "need at least 2 snapshots"));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(CliError::config("horizon", "must be positive"));
            }
        }
        if let Some((lo, hi)) = self.fit_window {
            if !(lo > 0.0 && hi > lo) {
                return Err(CliError::config("fit_window", "need 0 < lo < hi"));
            }
        }
        if self.homogenization.resolution < 2 || self.homogenization.resolution % 2 != 0 {
            return Err(CliError::config(
                "homogenization.resolution",
                "must be an even number of at least 2",
            ));
        }
        if let InitialSpec::Mode { k } = &self.initial {
            if k.len() != d {
                return Err(CliError::config(
                    "initial.k",
                    format!("expected {d} components, found {}", k.len()),
                ));
            }
        }
        parse_path(&self.bands.path, d).map_err(|m| CliError::config("bands.path", m))?;
        parse_radii(&self.bands.radii).map_err(|m| CliError::config("bands.radii", m))?;
        if !(self.gcc.horizon > 0.0 && self.gcc.dt > 0.0) || self.gcc.bins == 0 {
            return Err(CliError::config("gcc", "horizon, dt and bins must be positive"));
        }
        Ok(())
    }

    pub fn torus(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dimension()?, self.grid.n, self.grid.periods)
            .map_err(|e| CliError::config("grid", core_message(&e)))
    }

    pub fn initial_data(&self, g: &TorusGrid) -> Result<InitialData> {
        let init = match &self.initial {
            InitialSpec::Gaussian {
                amplitude,
                width,
                velocity,
            } => {
                let mut init = InitialData::gaussian(g, *amplitude, *width);
                if *velocity {
                    std::mem::swap(&mut init.u0, &mut init.u1);
                }
                init
            }
            InitialSpec::Mode { k } => InitialData::mode(g, [k[0], k.get(1).copied().unwrap_or(0)]),
            InitialSpec::File { u0, u1 } => {
                let u0 = crate::artifacts::read_f64_file(&self.base_dir.join(u0))?;
                let u1 = match u1 {
                    Some(p) => crate::artifacts::read_f64_file(&self.base_dir.join(p))?,
                    None => vec![0.0; g.len()],
                };
                InitialData { u0, u1 }
            }
        };
        init.check(g)
            .map_err(|e| CliError::config("initial", core_message(&e)))?;
        Ok(init)
    }

    /// Resolve horizon, step, snapshot times and fit window against `m`.
    pub fn plan(&self, m: &Medium) -> Result<SimulationPlan> {
        let grid = self.torus()?;
        let tw = wrap_time(m, &grid);
        let horizon = self.horizon.unwrap_or(tw);
        if self.kind.needs_simulation() && horizon > tw * (1.0 + 1e-12) {
            return Err(CliError::config(
                "horizon",
                format!("{horizon} exceeds the wrap time {tw} of the torus"),
            ));
        }
        let limit = cfl_limit(m, &grid, self.dt.cfl_fraction);
        let dt = match self.dt.fixed {
            Some(f) if f > limit * (1.0 + 1e-12) => {
                return Err(CliError::config(
                    "dt.fixed",
                    format!("{f} exceeds the CFL limit {limit}"),
                ))
            }
            Some(f) => f,
            None => limit,
        };
        let start = self.snapshots.start.unwrap_or(horizon / 100.0);
        if !(start > 0.0 && start < horizon) {
            return Err(CliError::config(
                "snapshots.start",
                format!("must lie in (0, {horizon})"),
            ));
        }
        let mut times = periodica_core::analysis::log_uniform_times(start, horizon, self.snapshots.count);
        times.insert(0, 0.0);
        let window = self.fit_window.unwrap_or((tw / 10.0, horizon));
        if window.1 > horizon * (1.0 + 1e-12) {
            return Err(CliError::config("fit_window", "extends past the horizon"));
        }
        Ok(SimulationPlan {
            init: self.initial_data(&grid)?,
            grid,
            horizon,
            dt,
            wrap_time: tw,
            times,
            window,
        })
    }
}

fn core_message(e: &periodica_core::Error) -> String {
    match e {
        periodica_core::Error::InvalidConfig(m) | periodica_core::Error::InvalidGrid(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Direction of a band path: `ray:e1`, `ray:e2` or `ray:x,y`.
pub fn parse_path(s: &str, d: usize) -> std::result::Result<Vec<f64>, String> {
    let Some(rest) = s.strip_prefix("ray:") else {
        return Err(format!("unknown path `{s}`; expected ray:e1, ray:e2 or ray:x,y"));
    };
    let dir: Vec<f64> = match rest {
        "e1" => {
            let mut v = vec![0.0; d];
            v[0] = 1.0;
            v
        }
        "e2" if d == 2 => vec![0.0, 1.0],
        _ => rest
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad direction `{rest}`")))
            .collect::<std::result::Result<_, _>>()?,
    };
    if dir.len() != d {
        return Err(format!("direction has {} components, medium is {d}D", dir.len()));
    }
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err("direction must be nonzero".into());
    }
    Ok(dir.iter().map(|v| v / norm).collect())
}

/// `lo:hi:count` as log-uniform radii.
pub fn parse_radii(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:count, found `{s}`"));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| format!("bad lower radius `{}`", parts[0]))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| format!("bad upper radius `{}`", parts[1]))?;
    let n: usize = parts[2].parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err("need 0 < lo < hi and count >= 2".into());
    }
    Ok(periodica_core::analysis::log_uniform_times(lo, hi, n))
}

/// `lo:hi` as a closed interval.
pub fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, found `{s}`"))?;
    let lo: f64 = a.parse().map_err(|_| format!("bad bound `{a}`"))?;
    let hi: f64 = b.parse().map_err(|_| format!("bad bound `{b}`"))?;
    if !(lo > 0.0 && hi > lo) {
        return Err("need 0 < lo < hi".into());
    }
    Ok((lo, hi))
}
