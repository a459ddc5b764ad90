//! Experiments behind the subcommands, usable as a library.

use crate::artifacts::{self, FitEntry, Manifest};
use crate::error::{CliError, Result};
use crate::scenario::{
    parse_path, parse_radii, BandSpec, ExperimentKind, GccSpec, HomogenizationSpec, Scenario, SimulationPlan,
};
use periodica_core::analysis::{compare_runs, compare_wave_heat, wave_decay, ComparisonReport, SeriesKind};
use periodica_core::bloch::{first_band, verify_dispersion, BandOptions, DispersionReport, SpectralGap};
use periodica_core::evolve::{run_damped_wave_with, HeatComparator, InitialData, WaveOptions, WaveState};
use periodica_core::flow::{gcc_audit_with, GccOptions, GccReport};
use periodica_core::homogenize::{HomogenizationChecks, HomogenizedData};
use periodica_core::medium::Medium;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// One `--check` verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Result of [`run_scenario`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub dir: PathBuf,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self, check: bool) -> i32 {
        if check && !self.passed() {
            4
        } else {
            0
        }
    }
}

pub fn simulate(sc: &Scenario, m: &Medium, plan: &SimulationPlan) -> Result<Vec<WaveState>> {
    let opts = WaveOptions {
        cfl_fraction: sc.dt.cfl_fraction,
        ..WaveOptions::default()
    };
    Ok(run_damped_wave_with(
        m,
        &plan.grid,
        &plan.init,
        plan.horizon,
        plan.dt,
        &plan.times,
        opts,
    )?)
}

/// A simulation together with its decay fits.
#[derive(Debug, Clone)]
pub struct DecayRun {
    pub plan: SimulationPlan,
    pub states: Vec<WaveState>,
    pub report: ComparisonReport,
}

pub fn decay_experiment(sc: &Scenario) -> Result<DecayRun> {
    let m = sc.build_medium()?;
    let plan = sc.plan(&m)?;
    let states = simulate(sc, &m, &plan)?;
    let report = wave_decay(&states, &sc.weights, Some(plan.window))?;
    Ok(DecayRun { plan, states, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogenizationReport {
    #[serde(flatten)]
    pub data: HomogenizedData,
    pub checks: HomogenizationChecks,
}

pub fn homogenize_medium(m: &Medium, spec: &HomogenizationSpec) -> Result<HomogenizationReport> {
    let data = HomogenizedData::compute(m, spec.resolution, spec.tolerance)?;
    let checks = data.checks(m);
    Ok(HomogenizationReport { data, checks })
}

pub fn homogenization_checks(c: &HomogenizationChecks, tol: f64) -> Vec<Check> {
    vec![
        Check::new(
            "corrector-mean",
            c.mean_w_error <= tol,
            format!("|mean W - Id| = {:.3e} (limit {tol:.1e})", c.mean_w_error),
        ),
        Check::new(
            "g_h-spd",
            c.positive_definite() && c.symmetry_error < 1e-10,
            format!("eigenvalues [{:.6}, {:.6}]", c.eig_min, c.eig_max),
        ),
        Check::new(
            "g_h-bounds",
            c.within_bounds(),
            format!(
                "[{:.6}, {:.6}] within [{:.6}, {:.6}]",
                c.eig_min, c.eig_max, c.g_min, c.g_max
            ),
        ),
    ]
}

/// Wave run compared with its homogenized heat flow.
#[derive(Debug, Clone)]
pub struct HeatRun {
    pub plan: SimulationPlan,
    pub states: Vec<WaveState>,
    pub homogenization: HomogenizationReport,
    pub report: ComparisonReport,
}

pub fn compare_heat_experiment(sc: &Scenario) -> Result<HeatRun> {
    let m = sc.build_medium()?;
    let plan = sc.plan(&m)?;
    let (homogenization, states) =
        rayon::join(|| homogenize_medium(&m, &sc.homogenization), || simulate(sc, &m, &plan));
    let homogenization = homogenization?;
    let states = states?;
    let report = heat_report(&m, &homogenization.data, &plan.init, &states, sc, plan.window)?;
    Ok(HeatRun {
        plan,
        states,
        homogenization,
        report,
    })
}

pub fn heat_report(
    m: &Medium,
    hd: &HomogenizedData,
    init: &InitialData,
    states: &[WaveState],
    sc: &Scenario,
    window: (f64, f64),
) -> Result<ComparisonReport> {
    let g = states
        .first()
        .map(|s| s.grid)
        .ok_or_else(|| CliError::Artifact("no snapshots to compare".into()))?;
    let mut heat = HeatComparator::new(m, hd, init, &g)?;
    Ok(compare_wave_heat(states, &mut heat, hd, &sc.weights, Some(window))?)
}

/// Paired perturbed/periodic runs and their comparison.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub comparison: ComparisonReport,
    /// `exponent(‖u_p‖) − exponent(‖u − u_p‖)`.
    pub gain: Option<f64>,
    pub predicted_gain: f64,
    pub margin: f64,
    pub identical: bool,
}

#[derive(Debug, Clone)]
pub struct PerturbationRun {
    pub plan: SimulationPlan,
    pub perturbed: Vec<WaveState>,
    pub periodic: Vec<WaveState>,
    pub report: PerturbationReport,
}

/// Run the same data through the medium and through its periodic part.
pub fn perturbation_experiment(sc: &Scenario) -> Result<PerturbationRun> {
    let m = sc.build_medium()?;
    sc.weights.check_perturbation(&m)?;
    let plan = sc.plan(&m)?;
    let identical = !m.is_perturbed();
    let (perturbed, periodic) = if identical {
        let s = simulate(sc, &m, &plan)?;
        (s.clone(), s)
    } else {
        let p = m.periodic_part();
        let (a, b) = rayon::join(|| simulate(sc, &m, &plan), || simulate(sc, &p, &plan));
        (a?, b?)
    };
    let comparison = compare_runs(&perturbed, &periodic, &sc.weights, Some(plan.window))?;
    let gain = match (
        comparison.exponent(SeriesKind::WaveU),
        comparison.exponent(SeriesKind::PerturbU),
    ) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    Ok(PerturbationRun {
        plan,
        perturbed,
        periodic,
        report: PerturbationReport {
            comparison,
            gain,
            predicted_gain: sc.weights.eta / 2.0,
            margin: sc.tolerances.gain_margin,
            identical,
        },
    })
}

/// One row of the band table.
#[derive(Debug, Clone, Serialize)]
pub struct BandRow {
    pub sigma: Vec<f64>,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub residual: f64,
    pub dispersion_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandTable {
    pub rows: Vec<BandRow>,
    pub dispersion: DispersionReport,
    pub gap: SpectralGap,
    pub g_h: [[f64; 2]; 2],
    pub b_h: f64,
}

pub fn band_table(m: &Medium, spec: &BandSpec, homog: &HomogenizationSpec) -> Result<BandTable> {
    let d = m.dim();
    let dir = parse_path(&spec.path, d).map_err(|e| CliError::config("bands.path", e))?;
    let radii = parse_radii(&spec.radii).map_err(|e| CliError::config("bands.radii", e))?;
    let sigmas: Vec<Vec<f64>> = radii.iter().map(|r| dir.iter().map(|c| c * r).collect()).collect();
    let resolution = homog.resolution.max(spec.cutoff);
    let (hd, band) = rayon::join(
        || HomogenizedData::compute(m, resolution, homog.tolerance),
        || first_band(m, spec.cutoff, &sigmas, BandOptions::default()),
    );
    let (hd, band) = (hd?, band?);
    let dispersion = verify_dispersion(&band, &hd)?;
    let rows = dispersion
        .samples
        .iter()
        .map(|s| {
            let sample = band.find(s.sigma, 1e-12);
            BandRow {
                sigma: s.sigma[..d].to_vec(),
                re_lambda: s.re_lambda,
                im_lambda: s.im_lambda,
                residual: sample.map(|b| b.residual).unwrap_or(f64::NAN),
                dispersion_residual: s.residual,
            }
        })
        .collect();
    Ok(BandTable {
        rows,
        dispersion,
        gap: band.gap,
        g_h: hd.g_h,
        b_h: hd.b_h,
    })
}

pub fn write_band_csv(path: &Path, table: &BandTable, d: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=d).map(|i| format!("sigma_{i}")).collect();
    header.extend(
        ["re_lambda", "im_lambda", "residual", "dispersion_residual"]
            .iter()
            .map(|s| s.to_string()),
    );
    let err = |e: csv::Error| CliError::Artifact(e.to_string());
    w.write_record(&header).map_err(err)?;
    for r in &table.rows {
        let mut rec: Vec<String> = r.sigma.iter().map(|v| v.to_string()).collect();
        rec.extend(
            [r.re_lambda, r.im_lambda, r.residual, r.dispersion_residual]
                .iter()
                .map(|v| v.to_string()),
        );
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Artifact(e.to_string()))?;
    artifacts::write_bytes(path, &bytes)
}

pub fn gcc_experiment(m: &Medium, spec: &GccSpec, seed: u64) -> Result<GccReport> {
    let opts = GccOptions {
        dt: spec.dt,
        bins: spec.bins,
        alpha: spec.alpha,
    };
    Ok(gcc_audit_with(m, spec.horizon, spec.ensemble, seed, &opts)?)
}

pub fn decay_checks(report: &ComparisonReport, tol: f64) -> Vec<Check> {
    report
        .series
        .iter()
        .map(|s| {
            let pred = report.spec.predicted(s.kind);
            match s.exponent() {
                Some(e) => Check::new(
                    format!("{}-exponent", s.kind.name()),
                    (e - pred).abs() <= tol,
                    format!("fitted {e:.4}, predicted {pred:.4} ± {tol}"),
                ),
                None => Check::new(
                    format!("{}-exponent", s.kind.name()),
                    false,
                    s.fit_error.clone().unwrap_or_else(|| "no fit".into()),
                ),
            }
        })
        .collect()
}

pub fn heat_checks(report: &ComparisonReport) -> Vec<Check> {
    use SeriesKind::*;
    let pairs = [
        (DiffU, HeatU),
        (DiffDtU, HeatDtU),
        (DiffGradW, HeatGrad),
        (DiffGradW, DiffGradId),
    ];
    pairs
        .iter()
        .map(|(a, b)| {
            let name = format!("{}-below-{}", a.name(), b.name());
            match (report.exponent(*a), report.exponent(*b)) {
                // W = Id on constant media, so a tie counts.
                (Some(x), Some(y)) if *b == DiffGradId => Check::new(name, x <= y + 1e-9, format!("{x:.4} vs {y:.4}")),
                (Some(x), Some(y)) => Check::new(name, x < y, format!("{x:.4} vs {y:.4}")),
                _ => Check::new(name, false, "missing fit"),
            }
        })
        .collect()
}

pub fn perturbation_checks(r: &PerturbationReport) -> Vec<Check> {
    if r.identical {
        let zero = r
            .comparison
            .get(SeriesKind::PerturbU)
            .map(|s| s.values.iter().all(|v| *v == 0.0))
            .unwrap_or(false);
        return vec![Check::new(
            "difference-vanishes",
            zero,
            "no perturbation: difference must be identically zero",
        )];
    }
    vec![match r.gain {
        Some(g) => Check::new(
            "perturbation-gain",
            g >= r.margin,
            format!("gain {g:.4} (required {}, predicted {})", r.margin, r.predicted_gain),
        ),
        None => Check::new("perturbation-gain", false, "missing fit"),
    }]
}

pub fn band_checks(t: &BandTable, slope: f64) -> Vec<Check> {
    vec![
        Check::new(
            "dispersion-slope",
            t.dispersion.slope >= slope,
            format!("slope {:.3} (required {slope})", t.dispersion.slope),
        ),
        Check::new(
            "dispersion-bounds",
            t.dispersion.bounds_hold,
            "Λ1|σ|² ≤ Re(−iλ) ≤ Λ2|σ|²",
        ),
    ]
}

pub fn gcc_checks(r: &GccReport) -> Vec<Check> {
    match (r.alpha, r.pass) {
        (Some(a), Some(p)) => vec![Check::new(
            "gcc",
            p,
            format!("min damping {:.6} against alpha {a}", r.min),
        )],
        _ => Vec::new(),
    }
}

/// Load a scenario file and run it into `out`.
pub fn run_scenario(path: &Path, out: &Path) -> Result<Outcome> {
    let sc = Scenario::load(path)?;
    run_loaded(&sc, out, "simulate")
}

/// Run a parsed scenario, writing artifacts and a manifest into `out`.
pub fn run_loaded(sc: &Scenario, out: &Path, command: &str) -> Result<Outcome> {
    artifacts::ensure_dir(out)?;
    let mut manifest = Manifest::new(command, sc)?;
    let tol = sc.tolerances;
    let checks = match sc.kind {
        ExperimentKind::Decay => {
            let run = decay_experiment(sc)?;
            if sc.snapshots.write {
                manifest.snapshots = artifacts::write_snapshots(out, &run.states, &manifest.medium_sha256)?;
            }
            write_series(out, "decay.csv", &run.report, &mut manifest)?;
            decay_checks(&run.report, tol.exponent)
        }
        ExperimentKind::CompareHeat => {
            let run = compare_heat_experiment(sc)?;
            if sc.snapshots.write {
                manifest.snapshots = artifacts::write_snapshots(out, &run.states, &manifest.medium_sha256)?;
            }
            artifacts::write_json(&out.join("homog.json"), &run.homogenization)?;
            manifest.artifacts.push("homog.json".into());
            write_series(out, "cmp.csv", &run.report, &mut manifest)?;
            let mut c = homogenization_checks(&run.homogenization.checks, tol.corrector_mean);
            c.extend(heat_checks(&run.report));
            c
        }
        ExperimentKind::Perturbation => {
            let run = perturbation_experiment(sc)?;
            write_series(out, "perturb.csv", &run.report.comparison, &mut manifest)?;
            artifacts::write_json(&out.join("perturb.json"), &run.report)?;
            manifest.artifacts.push("perturb.json".into());
            perturbation_checks(&run.report)
        }
        ExperimentKind::Bands => {
            let m = sc.build_medium()?;
            let t = band_table(&m, &sc.bands, &sc.homogenization)?;
            write_band_csv(&out.join("band.csv"), &t, m.dim())?;
            artifacts::write_json(&out.join("dispersion.json"), &t)?;
            manifest.artifacts.extend(["band.csv".into(), "dispersion.json".into()]);
            band_checks(&t, tol.dispersion_slope)
        }
        ExperimentKind::Gcc => {
            let m = sc.build_medium()?;
            let r = gcc_experiment(&m, &sc.gcc, sc.seed)?;
            artifacts::write_json(&out.join("gcc.json"), &r)?;
            manifest.artifacts.push("gcc.json".into());
            gcc_checks(&r)
        }
    };
    manifest.checks = checks.clone();
    manifest.write(out)?;
    Ok(Outcome {
        kind: sc.kind,
        dir: out.to_path_buf(),
        checks,
    })
}

fn write_series(out: &Path, csv_name: &str, report: &ComparisonReport, manifest: &mut Manifest) -> Result<()> {
    artifacts::write_norm_csv(&out.join(csv_name), &artifacts::norm_rows(report))?;
    let fits: BTreeMap<String, FitEntry> = artifacts::fit_entries(report);
    artifacts::write_json(&out.join("fit.json"), &fits)?;
    manifest.artifacts.extend([csv_name.to_string(), "fit.json".into()]);
    Ok(())
}
