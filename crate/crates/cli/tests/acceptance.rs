//! Acceptance suite: one PASS/FAIL line per criterion.

use num_complex::Complex64 as C;
use periodica_cli::scenario::Scenario;
use periodica_cli::{compare_heat_experiment, perturbation_experiment};
use periodica_core::analysis::{wave_decay, ComparisonReport, EnergyMeter, SeriesKind};
use periodica_core::bloch::{
    assemble_fiber, estimate_gap, fiber_spectrum, first_band, mode_index, verify_dispersion, zero_mode_report,
    BandOptions, CellSpectra, Region,
};
use periodica_core::evolve::{
    cfl_limit, floquet_transform, inverse_floquet, operator_form, run_damped_wave, sigmas_in_ball, BandPropagator,
    InitialData, WaveState,
};
use periodica_core::flow::{gcc_audit, integrate_flow, level_set_point, PhasePoint};
use periodica_core::homogenize::{HomogenizedData, DEFAULT_TOLERANCE};
use periodica_core::medium::{build_medium, sample_on_grid, Medium, MediumConfig, TorusGrid};
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

const REFERENCE: &str = r#"{"dimension": 1,
    "G": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.5}]},
    "w": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "sin": 0.25}]},
    "a": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.9}]}}"#;

type Outcome = Result<(bool, String), String>;

fn medium(text: &str) -> Medium {
    build_medium(&MediumConfig::from_json(text).expect("medium parses")).expect("medium builds")
}

fn reference() -> Medium {
    medium(REFERENCE)
}

fn constant(d: usize, g: f64, w: f64, a: f64) -> Medium {
    medium(&format!(
        r#"{{"dimension": {d}, "G": {{"type": "constant", "value": {g}}},
            "w": {{"type": "constant", "value": {w}}}, "a": {{"type": "constant", "value": {a}}}}}"#
    ))
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn exponent(r: &ComparisonReport, k: SeriesKind) -> std::result::Result<f64, String> {
    r.exponent(k).ok_or_else(|| format!("no fit for {}", k.name()))
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, id: u32, name: &str, budget: f64, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match out {
            Ok((pass, detail)) => (pass && secs < budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            self.failures += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:2}] {name}: {detail}; {secs:.2} s (budget {budget} s)");
    }
}

fn homogenization_oracle() -> Outcome {
    let m = medium(
        r#"{"dimension": 1,
            "G": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.5}]},
            "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
    );
    let hd = HomogenizedData::compute(&m, 256, DEFAULT_TOLERANCE).map_err(err)?;
    let exact = 0.75f64.sqrt();
    let rel = (hd.g_h[0][0] - exact).abs() / exact;
    Ok((
        rel <= 1e-8,
        format!("G_h = {:.15}, relative error {rel:.2e} (tol 1e-8)", hd.g_h[0][0]),
    ))
}

fn corrector_structure() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    let cases = [
        ("d=1 reference", reference(), 256),
        (
            "d=2 anisotropic",
            medium(
                r#"{"dimension": 2,
                    "G": {"type": "matrix", "entries": [
                        [{"type": "expression", "expr": "1 + 0.3*cos(2*PI*x)*cos(2*PI*y)"},
                         {"type": "expression", "expr": "0.1*sin(2*PI*(x+y))"}],
                        [{"type": "expression", "expr": "0.1*sin(2*PI*(x+y))"},
                         {"type": "expression", "expr": "1.2 + 0.2*sin(2*PI*x)"}]]},
                    "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
            ),
            32,
        ),
    ];
    for (label, m, n) in cases {
        let hd = HomogenizedData::compute(&m, n, DEFAULT_TOLERANCE).map_err(err)?;
        let c = hd.checks(&m);
        let ok = c.mean_w_error <= 1e-12 && c.symmetry_error <= 1e-12 && c.positive_definite() && c.within_bounds();
        pass &= ok;
        detail.push(format!(
            "{label}: |mean W - Id| {:.1e}, eig [{:.6}, {:.6}] in [{:.3}, {:.3}]",
            c.mean_w_error, c.eig_min, c.eig_max, c.g_min, c.g_max
        ));
    }
    Ok((pass, detail.join("; ")))
}

fn dispersion_expansion() -> Outcome {
    let m = reference();
    let hd = HomogenizedData::compute(&m, 128, DEFAULT_TOLERANCE).map_err(err)?;
    let path: Vec<Vec<f64>> = logspace(1e-3, 1e-1, 16).into_iter().map(|s| vec![s]).collect();
    let band = first_band(&m, 32, &path, BandOptions::default()).map_err(err)?;
    let rep = verify_dispersion(&band, &hd).map_err(err)?;
    let diff = hd.g_h[0][0] / hd.b_h;
    let (l1, l2) = (0.8 * diff, 1.2 * diff);
    let bounds = rep.samples.iter().all(|s| {
        let decay = -s.im_lambda;
        let r2 = s.radius * s.radius;
        l1 * r2 <= decay && decay <= l2 * r2
    });
    Ok((
        rep.slope >= 2.8 && bounds,
        format!(
            "residual slope {:.3} (min 2.8), bounds with G_h/b_h = {diff:.6} +/- 20%: {bounds}",
            rep.slope
        ),
    ))
}

fn spectral_location() -> Outcome {
    let m = reference();
    let n = 32;
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for j in 0..50 {
        let s = -PI + 2.0 * PI * (j as f64 + 0.5) / 50.0;
        let f = assemble_fiber(&m, &[s], n).map_err(err)?;
        for e in fiber_spectrum(&f, Region::new((-3.0, 3.0), (-1e8, 1e8))).map_err(err)? {
            worst = worst.max(e.lambda.im);
            count += 1;
        }
    }
    let f0 = assemble_fiber(&m, &[0.0], n).map_err(err)?;
    let simple = zero_mode_report(&f0).map_err(err)?.is_simple();
    let band = first_band(&m, n, &[vec![0.0]], BandOptions::default()).map_err(err)?;
    let s = &band.samples[0];
    let b = CellSpectra::new(&m, n).map_err(err)?.b_column();
    let zero = mode_index([0, 0], n, 1).ok_or("zero mode missing")?;
    let b_h = b[zero].re;
    let modes = b.len();
    let mut psi_err: f64 = 0.0;
    for i in 0..modes {
        let second = if i == zero {
            C::new(0.0, 1.0 / b_h)
        } else {
            C::new(0.0, 0.0)
        };
        psi_err = psi_err.max((s.psi[i] - b[i] / b_h).norm());
        psi_err = psi_err.max((s.psi[modes + i] - second).norm());
    }
    Ok((
        worst <= 1e-10 && simple && s.lambda.norm() < 1e-10 && psi_err <= 1e-8,
        format!(
            "max Im over {count} eigenvalues {worst:.2e} (tol 1e-10), zero simple: {simple}, \
             |lambda_0| {:.1e}, left vector error {psi_err:.1e} (tol 1e-8)",
            s.lambda.norm()
        ),
    ))
}

fn floquet_exactness() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut inv: f64 = 0.0;
    let mut planch: f64 = 0.0;
    for g in [
        TorusGrid::new(1, 8, 64).map_err(err)?,
        TorusGrid::new(1, 6, 10).map_err(err)?,
        TorusGrid::new(2, 4, 8).map_err(err)?,
    ] {
        for _ in 0..4 {
            let u: Vec<C> = (0..g.len())
                .map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let ft = floquet_transform(&u, &g).map_err(err)?;
            let back = inverse_floquet(&ft).map_err(err)?;
            let scale = u.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (a, b) in u.iter().zip(&back) {
                inv = inv.max((a - b).norm() / scale);
            }
            let lhs: f64 = u.iter().map(|c| c.norm_sqr()).sum();
            let rhs: f64 = ft
                .slices
                .iter()
                .map(|s| s.values.iter().map(|c| c.norm_sqr()).sum::<f64>())
                .sum::<f64>()
                / ft.slices.len() as f64;
            planch = planch.max((lhs - rhs).abs() / lhs);
        }
    }
    Ok((
        inv <= 1e-12 && planch <= 1e-12,
        format!("inversion error {inv:.1e}, Plancherel error {planch:.1e} (tol 1e-12)"),
    ))
}

fn energy_bookkeeping() -> Outcome {
    let m = reference().undamped();
    let g = TorusGrid::new(1, 16, 16).map_err(err)?;
    let pulse = InitialData::gaussian(&g, 1.0, 1.5);
    let init = InitialData {
        u0: vec![0.0; g.len()],
        u1: pulse.u0,
    };
    let dt = cfl_limit(&m, &g, 0.5) / 8.0;
    let times: Vec<f64> = (0..=20).map(|i| 5.0 * i as f64).collect();
    let states = run_damped_wave(&m, &g, &init, 100.0, dt, &times).map_err(err)?;
    let mut meter = EnergyMeter::new(&m, &g).map_err(err)?;
    let e0 = meter.energy(&states[0], None).map_err(err)?;
    let mut drift: f64 = 0.0;
    for st in &states {
        drift = drift.max(((meter.energy(st, None).map_err(err)? - e0) / e0).abs());
    }

    let m = reference();
    let g = TorusGrid::new(1, 16, 8).map_err(err)?;
    let init = InitialData::gaussian(&g, 1.0, 1.0);
    let base = cfl_limit(&m, &g, 0.5);
    let mut meter = EnergyMeter::new(&m, &g).map_err(err)?;
    let mut res = Vec::new();
    for k in [1.0, 2.0, 4.0] {
        let st = run_damped_wave(&m, &g, &init, 4.0, base / k, &[0.0, 4.0]).map_err(err)?;
        let e0 = meter.energy(&st[0], None).map_err(err)?;
        let e1 = meter.energy(&st[1], None).map_err(err)?;
        res.push(((e1 - e0 + st[1].dissipated) / e0).abs());
    }
    let order = (res[0] / res[2]).log2() / 2.0;
    Ok((
        drift <= 1e-6 && order >= 1.8,
        format!(
            "undamped drift {drift:.1e} over T=100 (tol 1e-6), damped identity residuals \
             {:.1e}/{:.1e}/{:.1e}, observed order {order:.2} (min 1.8)",
            res[0], res[1], res[2]
        ),
    ))
}

/// The shared d=1 reference run behind criteria 7, 8 and 9.
struct ReferenceRun {
    states: Vec<WaveState>,
    init: InitialData,
    tw: f64,
    decay: ComparisonReport,
    heat: ComparisonReport,
}

fn reference_run() -> std::result::Result<ReferenceRun, String> {
    let text = format!(
        r#"{{"kind": "compare-heat", "medium": {REFERENCE},
            "grid": {{"n": 32, "periods": 1024}},
            "initial": {{"type": "gaussian", "width": 2.0}},
            "snapshots": {{"count": 24, "start": 10.0, "write": false}},
            "weights": {{"s1": 0.5, "s2": 0.5, "s": 1.0}}}}"#
    );
    let mut sc = Scenario::from_json(&text, Path::new(".")).map_err(err)?;
    let m = sc.build_medium().map_err(err)?;
    let tw = sc.plan(&m).map_err(err)?.wrap_time;
    sc.fit_window = Some((50.0, tw));
    let run = compare_heat_experiment(&sc).map_err(err)?;
    let decay = wave_decay(&run.states, &sc.weights, Some((50.0, tw))).map_err(err)?;
    Ok(ReferenceRun {
        init: run.plan.init,
        states: run.states,
        tw,
        decay,
        heat: run.report,
    })
}

fn periodic_decay(r: &ReferenceRun) -> Outcome {
    let u = exponent(&r.decay, SeriesKind::WaveU)?;
    let dt = exponent(&r.decay, SeriesKind::WaveDtU)?;
    let gr = exponent(&r.decay, SeriesKind::WaveGrad)?;
    Ok((
        within(u, -0.5, 0.15) && within(dt, -1.5, 0.2) && within(gr, -1.5, 0.2),
        format!(
            "over [50, {:.1}]: u {u:.3} (-0.5 +/- 0.15), dt u {dt:.3} (-1.5 +/- 0.2), grad u {gr:.3} (-1.5 +/- 0.2)",
            r.tw
        ),
    ))
}

fn diffusion_comparison(r: &ReferenceRun) -> Outcome {
    use SeriesKind::*;
    let du = exponent(&r.heat, DiffU)?;
    let hu = exponent(&r.heat, HeatU)?;
    let ddt = exponent(&r.heat, DiffDtU)?;
    let gw = exponent(&r.heat, DiffGradW)?;
    let gi = exponent(&r.heat, DiffGradId)?;
    Ok((
        du <= -0.85 && within(hu, -0.5, 0.1) && ddt <= -1.7 && gi - gw >= 0.2,
        format!(
            "u - u_h {du:.3} (max -0.85), u_h {hu:.3} (-0.5 +/- 0.1), dt(u - u_h) {ddt:.3} (max -1.7), \
             grad with W {gw:.3} vs Id {gi:.3} (gap min 0.2)"
        ),
    ))
}

fn band_consistency(r: &ReferenceRun) -> Outcome {
    let m = reference();
    let g = r.states[0].grid;
    let cutoff = 16;
    let gap = estimate_gap(&m, cutoff, &[1.0], 1.0, 50).map_err(err)?;
    let radius = gap.r.min(0.5);
    let sig: Vec<Vec<f64>> = sigmas_in_ball(&g, 0.5).into_iter().map(|s| s[..1].to_vec()).collect();
    let band = first_band(&m, cutoff, &sig, BandOptions::default()).map_err(err)?;
    let w = sample_on_grid(&m, &g).map_err(err)?.w;
    let (f1, f2) = operator_form(&r.init.u0, &r.init.u1, &w);
    let prop = BandPropagator::new(&band, (&f1, &f2), &g, radius).map_err(err)?;
    let ball: Vec<usize> = (0..g.len())
        .filter(|&i| {
            let x = g.centered_coords(i);
            x[0].hypot(x[1]) <= 128.0
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for st in r.states.iter().filter(|s| s.t >= 50.0 && s.t <= r.tw * (1.0 + 1e-12)) {
        let z = prop.displacement(st.t).map_err(err)?;
        let num: f64 = ball.iter().map(|&i| (st.u[i] - z[i].re).powi(2)).sum();
        let den: f64 = ball.iter().map(|&i| st.u[i] * st.u[i]).sum();
        worst = worst.max((num / den).sqrt());
        checked += 1;
    }
    Ok((
        checked > 0 && worst <= 0.1,
        format!(
            "{} slices within radius {radius:.3}, worst relative error {worst:.2e} over {checked} times \
             in [50, {:.1}] on |x| <= 128 (tol 0.1)",
            prop.active_slices(),
            r.tw
        ),
    ))
}

fn perturbation_gain() -> Outcome {
    let text = r#"{"kind": "perturbation",
        "medium": {"dimension": 2,
            "G": {"type": "expression", "expr": "1 + 0.25*cos(2*PI*x) + 0.25*cos(2*PI*y)"},
            "w": {"type": "expression", "expr": "1 + 0.2*sin(2*PI*x)*sin(2*PI*y)"},
            "a": {"type": "expression", "expr": "1 + 0.5*cos(2*PI*x)"},
            "perturbation": {"G": {"decay_constant": 0.3,
                                   "profile": {"type": "bump", "amplitude": 0.3, "radius": 3.0}}}},
        "grid": {"n": 8, "periods": 64},
        "initial": {"type": "gaussian", "width": 2.0},
        "snapshots": {"count": 20, "write": false},
        "weights": {"s1": 0.4, "s2": 0.4, "eta": 0.2}}"#;
    let mut sc = Scenario::from_json(text, Path::new(".")).map_err(err)?;
    let m = sc.build_medium().map_err(err)?;
    let tw = sc.plan(&m).map_err(err)?.wrap_time;
    sc.snapshots.start = Some(tw / 10.0);
    let run = perturbation_experiment(&sc).map_err(err)?;
    let c = &run.report.comparison;
    let pu = exponent(c, SeriesKind::PerturbU)?;
    let wu = exponent(c, SeriesKind::WaveU)?;
    let gain = wu - pu;
    Ok((
        gain >= 0.15,
        format!(
            "d=2, window [{:.2}, {:.2}]: |u - u_p| {pu:.3}, |u_p| {wu:.3}, gain {gain:.3} (min 0.15)",
            run.plan.window.0, run.plan.window.1
        ),
    ))
}

fn flow_module() -> Outcome {
    let m = constant(2, 2.0, 0.5, 1.0);
    let z = PhasePoint::new(&[0.1, 0.2], &[0.3, -0.4]).map_err(err)?;
    let end = integrate_flow(&m, &z, 3.0, 0.01).map_err(err)?.end().clone();
    let line = (end.x[0] - (0.1 + 8.0 * 0.3 * 3.0))
        .abs()
        .max((end.x[1] - (0.2 - 8.0 * 0.4 * 3.0)).abs())
        .max((end.xi[0] - 0.3).abs())
        .max((end.xi[1] + 0.4).abs());

    let m = reference();
    let mut drift: f64 = 0.0;
    for x in [0.0, 0.13, 0.5, 0.77] {
        let z = level_set_point(&m, [x, 0.0], [1.0, 0.0]);
        drift = drift.max(integrate_flow(&m, &z, 10.0, 0.01).map_err(err)?.max_drift());
    }

    let t = 2.5;
    let r = gcc_audit(&constant(2, 1.0, 1.0, 1.0), t, 256, 3).map_err(err)?;
    let gcc = (r.min - t).abs();
    Ok((
        line <= 1e-12 && drift <= 1e-6 && gcc <= 1e-10,
        format!("straight-line error {line:.1e}, p drift {drift:.1e} (tol 1e-6), GCC |min - T| {gcc:.1e} (tol 1e-10)"),
    ))
}

fn main() {
    let mut suite = Suite { failures: 0 };
    suite.run(1, "homogenization oracle", 1.0, homogenization_oracle);
    suite.run(2, "corrector structure", 1.0, corrector_structure);
    suite.run(3, "dispersion expansion", 30.0, dispersion_expansion);
    suite.run(4, "spectral location", 60.0, spectral_location);
    suite.run(5, "Floquet-Bloch exactness", 5.0, floquet_exactness);
    suite.run(6, "energy bookkeeping", 60.0, energy_bookkeeping);

    let start = Instant::now();
    let shared = reference_run();
    let shared_secs = start.elapsed().as_secs_f64();
    println!("     shared reference run (n=32, L=1024): {shared_secs:.1} s");
    match &shared {
        Ok(r) => {
            suite.run(7, "periodic decay rates", 600.0, || periodic_decay(r));
            suite.run(8, "diffusion comparison", 600.0, || diffusion_comparison(r));
            suite.run(9, "band propagator consistency", 600.0, || band_consistency(r));
        }
        Err(e) => {
            for (id, name) in [
                (7, "periodic decay rates"),
                (8, "diffusion comparison"),
                (9, "band propagator consistency"),
            ] {
                suite.run(id, name, 600.0, || Err(e.clone()));
            }
        }
    }
    suite.run(10, "perturbation gain", 600.0, perturbation_gain);
    suite.run(11, "flow module", 30.0, flow_module);

    if suite.failures > 0 {
        println!("{} criteria failed", suite.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
