mod common;

use nalgebra::DVector;
use num_complex::Complex64 as C;
use periodica_core::bloch::*;
use periodica_core::homogenize::HomogenizedData;
use periodica_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn small_root(g: f64, w: f64, a: f64, sigma2: f64) -> C {
    // w λ² + i w a λ − g σ² = 0, root closest to the origin.
    let disc = C::new(-(w * a).powi(2) + 4.0 * w * g * sigma2, 0.0).sqrt();
    let r1 = (C::new(0.0, -w * a) + disc) / (2.0 * w);
    let r2 = (C::new(0.0, -w * a) - disc) / (2.0 * w);
    if r1.norm() < r2.norm() {
        r1
    } else {
        r2
    }
}

fn hermitian_error(m: &nalgebra::DMatrix<C>) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1e-300)
}

#[test]
fn flat_fiber_is_the_fourier_symbol() {
    let m = common::constant_1d(1.0, 1.0, 1.0);
    let f = assemble_fiber(&m, &[0.3], 8).unwrap();
    for i in 0..8 {
        let k = mode_k(i, 8, 1)[0] as f64;
        let s = 2.0 * PI * k + 0.3;
        for j in 0..8 {
            let expect = if i == j { s * s } else { 0.0 };
            assert!((f.p[(i, j)] - expect).norm() < 1e-12);
        }
    }
    let f0 = assemble_fiber(&m, &[0.0], 8).unwrap();
    let zero = mode_index([0, 0], 8, 1).unwrap();
    assert!(f0.p.column(zero).norm() < 1e-15);
}

#[test]
fn fiber_matrices_are_hermitian() {
    let m = common::oscillating_2d();
    let f = assemble_fiber(&m, &[0.4, -1.1], 8).unwrap();
    assert!(hermitian_error(&f.p) < 1e-13);
    assert!(hermitian_error(&f.b) < 1e-13);
    assert!(hermitian_error(&f.w) < 1e-13);
    let ev = f.w.clone().symmetric_eigenvalues();
    assert!(ev.iter().all(|v| *v > 0.0));
    let evp = f.p.clone().symmetric_eigenvalues();
    assert!(evp.iter().all(|v| *v > 0.0));
}

#[test]
fn under_resolved_medium_is_rejected() {
    let m = common::medium(
        r#"{"dimension": 1,
            "G": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [20], "cos": 0.3}]},
            "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
    );
    assert!(matches!(
        assemble_fiber(&m, &[0.1], 8),
        Err(Error::AliasingError { .. })
    ));
    assert!(assemble_fiber(&m, &[0.1], 64).is_ok());
    assert!(matches!(
        assemble_fiber(&m, &[0.1, 0.2], 64),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn constant_medium_closed_form_root() {
    let m = common::constant_1d(1.0, 1.0, 2.0);
    let f = assemble_fiber(&m, &[0.1], 16).unwrap();
    let sp = fiber_spectrum(&f, Region::new((-3.0, 3.0), (-10.0, 1.0))).unwrap();
    let exact = C::new(0.0, -(1.0 - (1.0f64 - 0.01).sqrt()));
    assert!((exact.im + 0.00501256289338).abs() < 1e-13);
    let nearest = sp
        .iter()
        .min_by(|a, b| (a.lambda - exact).norm().total_cmp(&(b.lambda - exact).norm()))
        .unwrap();
    assert!((nearest.lambda - exact).norm() < 1e-12);
    assert!(nearest.residual < 1e-10);
}

#[test]
fn spectrum_lies_in_the_closed_lower_half_plane() {
    let m = common::reference_1d();
    for j in 0..50 {
        let s = -PI + 2.0 * PI * (j as f64 + 0.5) / 50.0;
        let f = assemble_fiber(&m, &[s], 16).unwrap();
        for e in fiber_spectrum(&f, Region::new((-3.0, 3.0), (-1e8, 1e8))).unwrap() {
            assert!(e.lambda.im <= 1e-10, "sigma {s}: {}", e.lambda);
        }
    }
}

#[test]
fn zero_is_a_simple_eigenvalue_at_the_origin() {
    for m in [common::reference_1d(), common::oscillating_2d()] {
        let f = assemble_fiber(&m, &vec![0.0; m.dim()], 8).unwrap();
        let r = zero_mode_report(&f).unwrap();
        assert!(r.is_simple(), "{r:?}");
    }
}

#[test]
fn resolvent_of_a_flat_fiber_is_diagonal() {
    let (g, a) = (1.5, 0.7);
    let m = common::constant_1d(g, 1.0, a);
    let f = assemble_fiber(&m, &[0.2], 8).unwrap();
    let z = C::new(0.4, 0.3);
    let i = mode_index([2, 0], 8, 1).unwrap();
    let mut rhs = DVector::<C>::zeros(8);
    rhs[i] = C::new(1.0, -0.5);
    let u = fiber_resolvent_solve(&f, z, &rhs).unwrap();
    let s = 2.0 * PI * 2.0 + 0.2;
    let symbol = g * s * s - C::new(0.0, 1.0) * z * a - z * z;
    assert!((u[i] - rhs[i] / symbol).norm() < 1e-14);
    let back = f.pencil(z) * &u;
    assert!((back - rhs).norm() < 1e-10);
}

#[test]
fn resolvent_refuses_eigenvalues() {
    let m = common::constant_1d(1.0, 1.0, 2.0);
    let f = assemble_fiber(&m, &[0.1], 8).unwrap();
    let lam = C::new(0.0, -(1.0 - (1.0f64 - 0.01).sqrt()));
    let rhs = DVector::from_element(8, C::new(1.0, 0.0));
    assert!(matches!(
        fiber_resolvent_solve(&f, lam, &rhs),
        Err(Error::NearSingular { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn upper_half_plane_is_resolvent_set(re in -2.0f64..2.0, im in 0.05f64..2.0, s in -3.0f64..3.0) {
        let m = common::reference_1d();
        let f = assemble_fiber(&m, &[s], 8).unwrap();
        let rhs = DVector::from_fn(8, |i, _| C::new(1.0 / (1.0 + i as f64), 0.5));
        let u = fiber_resolvent_solve(&f, C::new(re, im), &rhs).unwrap();
        let back = f.pencil(C::new(re, im)) * &u;
        prop_assert!((back - &rhs).norm() < 1e-10 * rhs.norm());
    }

    #[test]
    fn first_band_is_even_in_sigma(s in 0.01f64..0.4) {
        let m = common::reference_1d();
        let path: Vec<Vec<f64>> = (1..=12)
            .flat_map(|j| [vec![s * j as f64 / 12.0], vec![-s * j as f64 / 12.0]])
            .collect();
        let band = first_band(&m, 16, &path, BandOptions::default()).unwrap();
        let a = band.find([s, 0.0], 1e-12).unwrap().lambda;
        let b = band.find([-s, 0.0], 1e-12).unwrap().lambda;
        prop_assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
    }
}

#[test]
fn left_vector_at_the_origin() {
    let m = common::reference_1d();
    let band = first_band(&m, 16, &[vec![0.0]], BandOptions::default()).unwrap();
    let s = &band.samples[0];
    assert!(s.lambda.norm() < 1e-10);
    let spectra = CellSpectra::new(&m, 16).unwrap();
    let b = spectra.b_column();
    let modes = b.len();
    let b_h = b[mode_index([0, 0], 16, 1).unwrap()].re;
    let zero = mode_index([0, 0], 16, 1).unwrap();
    for i in 0..modes {
        assert!((s.psi[i] - b[i] / b_h).norm() < 1e-8);
        let expect = if i == zero {
            C::new(0.0, 1.0 / b_h)
        } else {
            C::new(0.0, 0.0)
        };
        assert!((s.psi[modes + i] - expect).norm() < 1e-8);
        let phi = if i == zero { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
        assert!((s.phi[i] - phi).norm() < 1e-8);
        assert!(s.phi[modes + i].norm() < 1e-8);
    }
}

#[test]
fn constant_medium_band_matches_quadratic_formula() {
    let (g, w, a) = (1.3, 0.8, 1.7);
    let m = common::constant_1d(g, w, a);
    let path: Vec<Vec<f64>> = common::logspace(1e-3, 0.5, 40).into_iter().map(|s| vec![s]).collect();
    let band = first_band(&m, 8, &path, BandOptions::default()).unwrap();
    for s in &band.samples {
        let exact = small_root(g, w, a, s.sigma[0] * s.sigma[0]);
        assert!(
            (s.lambda - exact).norm() < 1e-12 * (1.0 + exact.norm()),
            "{} vs {}",
            s.lambda,
            exact
        );
        assert!(s.biorthogonality_error() < 1e-10);
    }
}

#[test]
fn band_projection_is_idempotent() {
    let m = common::oscillating_2d();
    let band = first_band(&m, 8, &[vec![0.05, -0.1], vec![0.2, 0.1]], BandOptions::default()).unwrap();
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    for s in &band.samples {
        assert!(s.biorthogonality_error() < 1e-10);
        for _ in 0..10 {
            let f = DVector::from_fn(s.phi.len(), |_, _| {
                C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let p1 = s.project(&f);
            let p2 = s.project(&p1);
            assert!((&p1 - &p2).norm() < 1e-10 * (1.0 + p1.norm()));
        }
    }
}

#[test]
fn shift_invert_agrees_with_dense() {
    let m = common::oscillating_2d();
    let path = vec![vec![0.02, 0.01], vec![0.1, 0.05], vec![0.2, 0.1]];
    let dense = first_band(&m, 8, &path, BandOptions { dense: Some(true) }).unwrap();
    let sparse = first_band(&m, 8, &path, BandOptions { dense: Some(false) }).unwrap();
    for (a, b) in dense.samples.iter().zip(&sparse.samples) {
        assert!((a.lambda - b.lambda).norm() < 1e-10);
    }
}

#[test]
fn dispersion_of_a_flat_medium_is_quartic() {
    let m = common::constant_1d(1.0, 1.0, 2.0);
    let hd = HomogenizedData::compute(&m, 16, 1e-12).unwrap();
    let path: Vec<Vec<f64>> = common::logspace(1e-3, 1e-1, 12).into_iter().map(|s| vec![s]).collect();
    let band = first_band(&m, 8, &path, BandOptions::default()).unwrap();
    let rep = verify_dispersion(&band, &hd).unwrap();
    assert!(rep.slope >= 3.0, "slope {}", rep.slope);
    assert!(rep.bounds_hold);
}

#[test]
fn dispersion_on_the_reference_medium() {
    let m = common::reference_1d();
    let hd = HomogenizedData::compute(&m, 128, 1e-12).unwrap();
    let path: Vec<Vec<f64>> = common::logspace(1e-3, 1e-1, 16).into_iter().map(|s| vec![s]).collect();
    let band = first_band(&m, 32, &path, BandOptions::default()).unwrap();
    let rep = verify_dispersion(&band, &hd).unwrap();
    assert!(rep.slope >= 2.8);
    assert!(rep.bounds_hold);
    for s in &rep.samples {
        assert!((s.diffusivity - hd.g_h[0][0] / hd.b_h).abs() < 0.01);
    }
    let short: Vec<Vec<f64>> = vec![vec![0.01], vec![0.02], vec![0.03], vec![0.04]];
    let band = first_band(&m, 16, &short, BandOptions::default()).unwrap();
    assert!(matches!(
        verify_dispersion(&band, &hd),
        Err(Error::InsufficientSamples(_))
    ));
}

#[test]
fn gap_estimate_is_positive() {
    let m = common::reference_1d();
    let gap = estimate_gap(&m, 16, &[1.0], 1.0, 50).unwrap();
    assert!(gap.gamma2 > 0.0);
    assert!(gap.r > 0.0 && gap.r < 1.0);
}
