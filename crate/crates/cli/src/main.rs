use clap::{Parser, Subcommand};
use periodica_cli::artifacts::{self, FitEntry, Manifest};
use periodica_cli::experiments::{
    band_checks, band_table, decay_checks, gcc_checks, gcc_experiment, heat_checks, heat_report, homogenization_checks,
    homogenize_medium, run_loaded, write_band_csv, Check,
};
use periodica_cli::scenario::{
    load_medium_config, medium_from_config, parse_window, BandSpec, ExperimentKind, GccSpec, HomogenizationSpec,
    Scenario,
};
use periodica_cli::{CliError, Result};
use periodica_core::analysis::{fit_decay_exponent, ComparisonReport, NormSeries, WeightSpec};
use periodica_core::evolve::{wrap_time, InitialData};
use periodica_core::homogenize::{HomogenizedData, DEFAULT_TOLERANCE};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "periodica", version, about = "Damped waves in periodic media")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized steps; overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Evaluate acceptance checks and exit with status 4 if any fails.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the cell problems and write G_h, b_h and the corrector matrix.
    Homogenize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Track the first Bloch band along a ray and compare with the
    /// homogenized dispersion.
    Bands {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 32)]
        cutoff: usize,
        #[arg(long, default_value = "ray:e1")]
        path: String,
        #[arg(long, default_value = "1e-3:1e-1:40")]
        radii: String,
        /// Cell resolution of the homogenization used for comparison.
        #[arg(long, default_value_t = 128)]
        resolution: usize,
    },
    /// Run a scenario file into an artifact directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare a stored run with the homogenized heat flow.
    CompareHeat {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        homog: PathBuf,
        /// Fit window `lo:hi`; defaults to `[t_wrap/10, last snapshot]`.
        #[arg(long)]
        window: Option<String>,
    },
    /// Audit the geometric control condition on a random ensemble.
    Gcc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 4096)]
        ensemble: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Fit decay exponents to a norm table.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// Restrict to one series kind.
        #[arg(long)]
        kind: Option<String>,
        /// Fit window `lo:hi`; defaults to the last decade of each series.
        #[arg(long)]
        window: Option<String>,
        /// Gradient weight shift used for the prediction.
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        /// Allowed |fitted - predicted| under --check.
        #[arg(long, default_value_t = 0.15)]
        tolerance: f64,
    },
    /// Run a scenario through the medium and its periodic part.
    Perturb {
        #[arg(long)]
        config: PathBuf,
    },
    /// Emit a plot script for a norm table.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "gnuplot")]
        emit: String,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            std::process::exit(2);
        }
    }
    let code = match run(&cli) {
        Ok(checks) => report_checks(&checks, cli.check),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn report_checks(checks: &[Check], enforce: bool) -> i32 {
    if !enforce {
        return 0;
    }
    for c in checks {
        eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.pass) {
        0
    } else {
        4
    }
}

fn run(cli: &Cli) -> Result<Vec<Check>> {
    let out = cli.out.as_ref();
    match &cli.command {
        Command::Homogenize {
            config,
            resolution,
            tolerance,
        } => {
            let m = medium_from_config(&load_medium_config(config)?)?;
            let spec = HomogenizationSpec {
                resolution: *resolution,
                tolerance: *tolerance,
            };
            let r = homogenize_medium(&m, &spec)?;
            let text = serde_json::to_string_pretty(&r).expect("report serialises") + "\n";
            artifacts::stdout_or_file(out, &text)?;
            eprintln!("G_h = {:?}, b_h = {}", &r.data.g_h[..m.dim()], r.data.b_h);
            Ok(homogenization_checks(&r.checks, 1e-12))
        }
        Command::Bands {
            config,
            cutoff,
            path,
            radii,
            resolution,
        } => {
            let m = medium_from_config(&load_medium_config(config)?)?;
            let spec = BandSpec {
                cutoff: *cutoff,
                path: path.clone(),
                radii: radii.clone(),
            };
            let homog = HomogenizationSpec {
                resolution: *resolution,
                tolerance: DEFAULT_TOLERANCE,
            };
            let t = band_table(&m, &spec, &homog)?;
            let target = out.cloned().unwrap_or_else(|| PathBuf::from("band.csv"));
            write_band_csv(&target, &t, m.dim())?;
            eprintln!(
                "{} samples, residual slope {:.3}, gap radius {:.3}",
                t.rows.len(),
                t.dispersion.slope,
                t.gap.r
            );
            Ok(band_checks(&t, 2.8))
        }
        Command::Simulate { config } => run_scenario_file(config, cli, None),
        Command::Perturb { config } => run_scenario_file(config, cli, Some(ExperimentKind::Perturbation)),
        Command::CompareHeat { run, homog, window } => compare_heat(run, homog, window, out),
        Command::Gcc {
            config,
            horizon,
            ensemble,
            dt,
            bins,
            alpha,
        } => {
            let m = medium_from_config(&load_medium_config(config)?)?;
            let spec = GccSpec {
                horizon: *horizon,
                ensemble: *ensemble,
                dt: *dt,
                bins: *bins,
                alpha: *alpha,
            };
            let r = gcc_experiment(&m, &spec, cli.seed.unwrap_or(0))?;
            let text = serde_json::to_string_pretty(&r).expect("report serialises") + "\n";
            artifacts::stdout_or_file(out, &text)?;
            eprintln!("min damping {:.6}, mean {:.6}, max {:.6}", r.min, r.mean, r.max);
            Ok(gcc_checks(&r))
        }
        Command::Fit {
            input,
            kind,
            window,
            s,
            eta,
            tolerance,
        } => fit(input, kind.as_deref(), window.as_deref(), *s, *eta, *tolerance, out),
        Command::Plot { input, emit } => {
            if emit != "gnuplot" {
                return Err(CliError::config("emit", format!("unsupported format `{emit}`")));
            }
            let rows = artifacts::read_norm_csv(input)?;
            let script = periodica_cli::plot::gnuplot_script(&input.to_string_lossy(), &rows);
            artifacts::stdout_or_file(out, &script)?;
            Ok(Vec::new())
        }
    }
}

fn run_scenario_file(config: &Path, cli: &Cli, force: Option<ExperimentKind>) -> Result<Vec<Check>> {
    let mut sc = Scenario::load(config)?;
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    let command = match force {
        Some(k) => {
            sc.kind = k;
            "perturb"
        }
        None => "simulate",
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("run"));
    let outcome = run_loaded(&sc, &dir, command)?;
    eprintln!("artifacts written to {}", outcome.dir.display());
    Ok(outcome.checks)
}

fn compare_heat(run: &Path, homog: &Path, window: &Option<String>, out: Option<&PathBuf>) -> Result<Vec<Check>> {
    let manifest = Manifest::read(run)?;
    let sc = manifest.scenario;
    let m = sc.build_medium()?;
    let hd: HomogenizedData = artifacts::read_json(homog)?;
    if manifest.snapshots.is_empty() {
        return Err(CliError::Artifact(format!("{} holds no snapshots", run.display())));
    }
    let mut states = Vec::with_capacity(manifest.snapshots.len());
    for name in &manifest.snapshots {
        let (meta, state) = artifacts::read_snapshot(&run.join(name))?;
        if meta.medium_hash != manifest.medium_sha256 {
            return Err(CliError::Artifact(format!(
                "{name} was produced for a different medium"
            )));
        }
        states.push(state);
    }
    if states[0].t != 0.0 {
        return Err(CliError::Artifact("first snapshot must be at t = 0".into()));
    }
    let init = InitialData {
        u0: states[0].u.clone(),
        u1: states[0].v.clone(),
    };
    let last = states.last().map(|s| s.t).unwrap_or(0.0);
    let range = match window {
        Some(w) => parse_window(w).map_err(|e| CliError::config("window", e))?,
        None => (wrap_time(&m, &states[0].grid) / 10.0, last),
    };
    let report = heat_report(&m, &hd, &init, &states, &sc, range)?;
    let target = out.cloned().unwrap_or_else(|| PathBuf::from("cmp.csv"));
    artifacts::write_norm_csv(&target, &artifacts::norm_rows(&report))?;
    summarize(&report);
    Ok(heat_checks(&report))
}

fn summarize(report: &ComparisonReport) {
    for s in &report.series {
        match s.exponent() {
            Some(e) => eprintln!(
                "{:>14}  exponent {e:+.4}  predicted {:+.4}",
                s.kind.name(),
                report.spec.predicted(s.kind)
            ),
            None => eprintln!("{:>14}  {}", s.kind.name(), s.fit_error.as_deref().unwrap_or("no fit")),
        }
    }
}

fn fit(
    input: &Path,
    kind: Option<&str>,
    window: Option<&str>,
    s: f64,
    eta: f64,
    tolerance: f64,
    out: Option<&PathBuf>,
) -> Result<Vec<Check>> {
    let rows = artifacts::read_norm_csv(input)?;
    let window = window
        .map(parse_window)
        .transpose()
        .map_err(|e| CliError::config("window", e))?;
    let mut groups = artifacts::group_rows(&rows)?;
    if let Some(k) = kind {
        groups.retain(|g| g.kind.name() == k);
        if groups.is_empty() {
            return Err(CliError::config("kind", format!("no rows of kind `{k}`")));
        }
    }
    let mut entries = BTreeMap::new();
    let mut checks = Vec::new();
    for g in &groups {
        let mut spec = WeightSpec::new(g.s1, g.s2);
        spec.s = s;
        spec.eta = eta;
        let predicted = spec.predicted(g.kind);
        let mut series = NormSeries::new(g.kind, spec.delta(g.kind));
        series.times = g.times.clone();
        series.values = g.values.clone();
        let last = g.times.iter().copied().fold(0.0, f64::max);
        let range = window.unwrap_or((last / 10.0, last));
        match fit_decay_exponent(&g.times, &g.values, Some(range)) {
            Ok(r) => series.fit = Some(r.with_prediction(predicted)),
            Err(e) => series.fit_error = Some(e.to_string()),
        }
        let entry = FitEntry::from_series(&series, predicted);
        let report = ComparisonReport {
            spec,
            series: vec![series],
        };
        checks.extend(decay_checks(&report, tolerance));
        entries.insert(g.kind.name().to_string(), entry);
    }
    let text = if entries.len() == 1 && kind.is_some() {
        serde_json::to_string_pretty(entries.values().next().expect("one entry"))
    } else {
        serde_json::to_string_pretty(&entries)
    }
    .expect("fit serialises")
        + "\n";
    artifacts::stdout_or_file(out, &text)?;
    Ok(checks)
}
