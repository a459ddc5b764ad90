use super::band::FirstBand;
use super::fiber::mode_k;
use crate::error::{Error, Result};
use crate::homogenize::HomogenizedData;
use crate::spectral::{cell_coefficients, index_of};
use num_complex::Complex64 as C;
use serde::Serialize;

/// Relative margin on the diffusive bounds `Λ₁|σ|² ≤ Re(iλ_σ) ≤ Λ₂|σ|²`.
pub const BOUND_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct DispersionSample {
    pub sigma: [f64; 2],
    pub radius: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    /// `|λ_σ + (i/b_h)⟨G_hσ,σ⟩|`.
    pub residual: f64,
    /// `‖φ_σ − 1 − iψ_σ‖` after removing cell means.
    pub corrector_error: f64,
    /// `Re(iλ_σ) / |σ|²`.
    pub diffusivity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionReport {
    pub samples: Vec<DispersionSample>,
    /// `max |λ_σ + (i/b_h)⟨G_hσ,σ⟩| / |σ|³`.
    pub max_scaled_residual: f64,
    /// Log–log slope of the residual against `|σ|`.
    pub slope: f64,
    /// `max ‖φ_σ − 1 − iψ_σ‖ / |σ|²`.
    pub max_corrector_ratio: f64,
    pub corrector_slope: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub bounds_hold: bool,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Compare the tracked band with the homogenized expansion
/// `λ_σ = −(i/b_h)⟨G_hσ,σ⟩ + O(|σ|³)` and `φ_σ = 1 + iψ_σ + O(|σ|²)`.
pub fn verify_dispersion(band: &FirstBand, hd: &HomogenizedData) -> Result<DispersionReport> {
    if band.d != hd.d {
        return Err(Error::DimensionMismatch {
            expected: hd.d,
            found: band.d,
        });
    }
    let d = band.d;
    let n = band.cutoff;
    let m = n.pow(d as u32);
    let nh = hd.cell_resolution;
    if nh < n {
        return Err(Error::ResolutionMismatch(format!(
            "homogenization resolution {nh} below band cutoff {n}"
        )));
    }
    let psi_hat: Vec<Vec<C>> = hd
        .correctors
        .iter()
        .map(|c| {
            let full = cell_coefficients(&c.values, d);
            (0..m)
                .map(|i| {
                    let k = mode_k(i, n, d);
                    if d == 1 {
                        full[index_of(k[0], nh)]
                    } else {
                        full[index_of(k[0], nh) * nh + index_of(k[1], nh)]
                    }
                })
                .collect()
        })
        .collect();
    let zero = super::fiber::mode_index([0, 0], n, d).expect("constant mode");

    let (e_lo, e_hi) = hd.g_h_sym().eig_range(d);
    let lambda_1 = e_lo / hd.b_h * (1.0 - BOUND_MARGIN);
    let lambda_2 = e_hi / hd.b_h * (1.0 + BOUND_MARGIN);

    let mut samples = Vec::new();
    for s in band.samples.iter().filter(|s| s.radius() > 0.0) {
        let r = s.radius();
        let pred = C::new(0.0, -hd.quad(s.sigma) / hd.b_h);
        let residual = (s.lambda - pred).norm();
        let phi = s.phi_cell();
        let mut err2 = 0.0;
        for i in 0..m {
            if i == zero {
                continue;
            }
            let psi_s: C = (0..d).map(|j| psi_hat[j][i] * s.sigma[j]).sum();
            err2 += (phi[i] - C::new(0.0, 1.0) * psi_s).norm_sqr();
        }
        samples.push(DispersionSample {
            sigma: s.sigma,
            radius: r,
            re_lambda: s.lambda.re,
            im_lambda: s.lambda.im,
            residual,
            corrector_error: err2.sqrt(),
            diffusivity: -s.lambda.im / (r * r),
        });
    }
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples(format!(
            "{} nonzero samples, need at least 4",
            samples.len()
        )));
    }
    let rmin = samples.iter().map(|s| s.radius).fold(f64::INFINITY, f64::min);
    let rmax = samples.iter().map(|s| s.radius).fold(0.0, f64::max);
    if rmax / rmin < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientSamples(format!(
            "radii span {:.2} decades, need 2",
            (rmax / rmin).log10()
        )));
    }
    let lx: Vec<f64> = samples.iter().map(|s| s.radius.ln()).collect();
    let floor = f64::MIN_POSITIVE;
    let ly: Vec<f64> = samples.iter().map(|s| s.residual.max(floor).ln()).collect();
    let lc: Vec<f64> = samples.iter().map(|s| s.corrector_error.max(floor).ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    let (corrector_slope, _) = linear_fit(&lx, &lc);
    let max_scaled_residual = samples
        .iter()
        .map(|s| s.residual / s.radius.powi(3))
        .fold(0.0, f64::max);
    let max_corrector_ratio = samples
        .iter()
        .map(|s| s.corrector_error / s.radius.powi(2))
        .fold(0.0, f64::max);
    let bounds_hold = samples
        .iter()
        .all(|s| s.diffusivity >= lambda_1 && s.diffusivity <= lambda_2);
    Ok(DispersionReport {
        samples,
        max_scaled_residual,
        slope,
        max_corrector_ratio,
        corrector_slope,
        lambda_1,
        lambda_2,
        bounds_hold,
    })
}
