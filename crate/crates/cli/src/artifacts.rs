//! On-disk artifacts: manifests, snapshots, norm tables and fit reports.

use crate::error::{CliError, Result};
use crate::scenario::Scenario;
use periodica_core::analysis::{ComparisonReport, NormSeries, SeriesKind, MIN_FIT_DECADES, MIN_FIT_POINTS};
use periodica_core::evolve::{WaveState, SIGMA_MATCH};
use periodica_core::medium::{MediumConfig, TorusGrid, WRAP_TOLERANCE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of a medium.
pub fn medium_hash(c: &MediumConfig) -> String {
    sha256_hex(serde_json::to_string(c).expect("medium serialises").as_bytes())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(p) = path.parent() {
        if !p.as_os_str().is_empty() {
            ensure_dir(p)?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serialises");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    crate::scenario::parse_json(&crate::scenario::read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn f64_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn read_f64_file(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Artifact(format!(
            "{}: length {} is not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// JSON sidecar of a snapshot; the array file holds `u` then `v`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub grid: TorusGrid,
    pub time: f64,
    pub medium_hash: String,
    pub fields: Vec<String>,
    pub len: usize,
    pub dissipated: f64,
    pub data: String,
}

pub fn write_snapshots(dir: &Path, states: &[WaveState], medium_hash: &str) -> Result<Vec<String>> {
    let sdir = dir.join("snapshots");
    ensure_dir(&sdir)?;
    let mut names = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        let stem = format!("snap_{i:04}");
        let mut bytes = f64_bytes(&s.u);
        bytes.extend(f64_bytes(&s.v));
        write_bytes(&sdir.join(format!("{stem}.bin")), &bytes)?;
        let meta = SnapshotMeta {
            grid: s.grid,
            time: s.t,
            medium_hash: medium_hash.to_string(),
            fields: vec!["u".into(), "v".into()],
            len: s.u.len(),
            dissipated: s.dissipated,
            data: format!("{stem}.bin"),
        };
        write_json(&sdir.join(format!("{stem}.json")), &meta)?;
        names.push(format!("snapshots/{stem}.json"));
    }
    Ok(names)
}

pub fn read_snapshot(sidecar: &Path) -> Result<(SnapshotMeta, WaveState)> {
    let meta: SnapshotMeta = read_json(sidecar)?;
    let data = sidecar.parent().unwrap_or(Path::new(".")).join(&meta.data);
    let mut values = read_f64_file(&data)?;
    if values.len() != 2 * meta.len || meta.len != meta.grid.len() {
        return Err(CliError::Artifact(format!(
            "{}: expected {} values for the grid",
            data.display(),
            2 * meta.grid.len()
        )));
    }
    let v = values.split_off(meta.len);
    let state = WaveState {
        grid: meta.grid,
        t: meta.time,
        u: values,
        v,
        dissipated: meta.dissipated,
    };
    Ok((meta, state))
}

/// Tolerances behind every number an artifact reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceRecord {
    pub configured: crate::scenario::Tolerances,
    pub homogenization_cg: f64,
    pub cfl_fraction: f64,
    pub fit_min_points: usize,
    pub fit_min_decades: f64,
    pub wrap_tolerance: f64,
    pub sigma_match: f64,
    pub near_singular_condition: f64,
    pub aliasing_tolerance: f64,
    pub dispersion_bound_margin: f64,
    pub flow_drift: f64,
}

impl ToleranceRecord {
    pub fn for_scenario(s: &Scenario) -> Self {
        ToleranceRecord {
            configured: s.tolerances,
            homogenization_cg: s.homogenization.tolerance,
            cfl_fraction: s.dt.cfl_fraction,
            fit_min_points: MIN_FIT_POINTS,
            fit_min_decades: MIN_FIT_DECADES,
            wrap_tolerance: WRAP_TOLERANCE,
            sigma_match: SIGMA_MATCH,
            near_singular_condition: periodica_core::bloch::NEAR_SINGULAR_CONDITION,
            aliasing_tolerance: periodica_core::bloch::ALIASING_TOLERANCE,
            dispersion_bound_margin: periodica_core::bloch::BOUND_MARGIN,
            flow_drift: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub medium_sha256: String,
    pub threads: usize,
    pub scenario: Scenario,
    pub tolerances: ToleranceRecord,
    #[serde(default)]
    pub snapshots: Vec<String>,
    #[serde(default)]
    pub artifacts: Vec<String>,
    #[serde(default)]
    pub checks: Vec<crate::experiments::Check>,
}

impl Manifest {
    pub fn new(command: &str, scenario: &Scenario) -> Result<Self> {
        let resolved = serde_json::to_string(scenario).expect("scenario serialises");
        Ok(Manifest {
            tool: "periodica".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: sha256_hex(resolved.as_bytes()),
            medium_sha256: medium_hash(scenario.medium_config()?),
            threads: rayon::current_num_threads(),
            scenario: scenario.clone(),
            tolerances: ToleranceRecord::for_scenario(scenario),
            snapshots: Vec::new(),
            artifacts: Vec::new(),
            checks: Vec::new(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        read_json(&dir.join(MANIFEST))
    }
}

/// One row of a norm table: `t, norm, weight_s1, weight_s2, kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub norm: f64,
    pub weight_s1: f64,
    pub weight_s2: f64,
    pub kind: String,
}

pub fn norm_rows(report: &ComparisonReport) -> Vec<NormRow> {
    let spec = report.spec;
    report
        .series
        .iter()
        .flat_map(|s| {
            s.times.iter().zip(&s.values).map(move |(t, v)| NormRow {
                t: *t,
                norm: *v,
                weight_s1: spec.s1,
                weight_s2: spec.s2,
                kind: s.kind.name().to_string(),
            })
        })
        .collect()
}

pub fn write_norm_csv(path: &Path, rows: &[NormRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Artifact(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Artifact(e.to_string()))?;
    write_bytes(path, &bytes)
}

pub fn read_norm_csv(path: &Path) -> Result<Vec<NormRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Artifact(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::Artifact(format!("{}: {e}", path.display()))))
        .collect()
}

/// `{exponent, predicted, residual, window}` for one series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitEntry {
    pub exponent: Option<f64>,
    pub predicted: f64,
    pub residual: Option<f64>,
    pub window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FitEntry {
    pub fn from_series(s: &NormSeries, predicted: f64) -> Self {
        FitEntry {
            exponent: s.fit.as_ref().map(|f| f.fitted_exponent),
            predicted,
            residual: s.fit.as_ref().map(|f| f.fit_residual),
            window: s.fit.as_ref().map(|f| f.fit_window),
            stationarity_gap: s.fit.as_ref().map(|f| f.stationarity_gap),
            error: s.fit_error.clone(),
        }
    }
}

pub fn fit_entries(report: &ComparisonReport) -> BTreeMap<String, FitEntry> {
    report
        .series
        .iter()
        .map(|s| {
            (
                s.kind.name().to_string(),
                FitEntry::from_series(s, report.spec.predicted(s.kind)),
            )
        })
        .collect()
}

/// Rows of one series in a norm table.
#[derive(Debug, Clone)]
pub struct TableSeries {
    pub kind: SeriesKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub s1: f64,
    pub s2: f64,
}

/// Group the rows of a norm table by series kind, in order of appearance.
pub fn group_rows(rows: &[NormRow]) -> Result<Vec<TableSeries>> {
    let mut out: Vec<TableSeries> = Vec::new();
    for r in rows {
        let kind = SeriesKind::parse(&r.kind)
            .ok_or_else(|| CliError::Artifact(format!("unknown series kind `{}`", r.kind)))?;
        let i = match out.iter().position(|s| s.kind == kind) {
            Some(i) => i,
            None => {
                out.push(TableSeries {
                    kind,
                    times: Vec::new(),
                    values: Vec::new(),
                    s1: r.weight_s1,
                    s2: r.weight_s2,
                });
                out.len() - 1
            }
        };
        out[i].times.push(r.t);
        out[i].values.push(r.norm);
    }
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

pub fn stdout_or_file(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("writing stdout", e)),
    }
}
