use super::eigen::{companion_eigenvalues, refine_pencil, Refined};
use super::fiber::{mode_index, sigma_array, BlochFiber, CellSpectra};
use crate::error::{Error, Result};
use crate::medium::Medium;
use nalgebra::DVector;
use num_complex::Complex64 as C;
use serde::Serialize;

const I: C = C { re: 0.0, im: 1.0 };

/// Largest modes-per-axis handled by the dense companion solver.
pub fn dense_cutoff_limit(d: usize) -> usize {
    if d == 1 {
        64
    } else {
        24
    }
}

/// Empirical spectral-gap data `(γ₁, γ₂, r)`: inside `B(r)` the first band
/// satisfies `|λ_σ| ≤ γ₁ < γ₂` while the rest of the low spectrum keeps
/// `Im λ < −γ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralGap {
    pub gamma1: f64,
    pub gamma2: f64,
    pub r: f64,
    /// Whether the second eigenvalue was actually monitored (dense solver).
    pub monitored: bool,
}

#[derive(Debug, Clone)]
pub struct BandSample {
    pub sigma: [f64; 2],
    pub lambda: C,
    /// Pair `Φ_σ = (φ_σ, λ_σ W φ_σ)` with cell mean of `φ_σ` equal to 1.
    pub phi: DVector<C>,
    /// Left companion eigenvector with `⟨Φ_σ, Ψ_σ⟩ = 1`.
    pub psi: DVector<C>,
    pub residual: f64,
    /// Largest `Im` among the other eigenvalues with `|Re| ≤ 3`.
    pub second_im: Option<f64>,
}

impl BandSample {
    pub fn radius(&self) -> f64 {
        self.sigma[0].hypot(self.sigma[1])
    }

    /// Cell function `φ_σ` (first half of `Φ_σ`).
    pub fn phi_cell(&self) -> DVector<C> {
        let m = self.phi.len() / 2;
        self.phi.rows(0, m).into_owned()
    }

    /// `⟨F, Ψ_σ⟩` with the `L² × L²` inner product (linear in `F`).
    pub fn coefficient(&self, f: &DVector<C>) -> C {
        self.psi.dotc(f)
    }

    /// `Π_σ F = ⟨F, Ψ_σ⟩ Φ_σ`.
    pub fn project(&self, f: &DVector<C>) -> DVector<C> {
        &self.phi * self.coefficient(f)
    }

    pub fn biorthogonality_error(&self) -> f64 {
        (self.coefficient(&self.phi) - 1.0).norm()
    }
}

#[derive(Debug, Clone)]
pub struct FirstBand {
    pub d: usize,
    pub cutoff: usize,
    /// Samples in the order they were supplied.
    pub samples: Vec<BandSample>,
    pub gap: SpectralGap,
}

impl FirstBand {
    pub fn find(&self, sigma: [f64; 2], tol: f64) -> Option<&BandSample> {
        self.samples
            .iter()
            .find(|s| (s.sigma[0] - sigma[0]).abs() <= tol && (s.sigma[1] - sigma[1]).abs() <= tol)
    }
}

struct Tracked {
    refined: Refined,
    second_im: Option<f64>,
    second_dist: f64,
}

fn low_region_other(ev: &[C], chosen: C) -> (Option<f64>, f64) {
    let mut second_im: Option<f64> = None;
    let mut dist = f64::INFINITY;
    let mut skipped = false;
    for &z in ev {
        if !skipped && (z - chosen).norm() == 0.0 {
            skipped = true;
            continue;
        }
        dist = dist.min((z - chosen).norm());
        if z.re.abs() <= 3.0 {
            second_im = Some(second_im.map_or(z.im, |s: f64| s.max(z.im)));
        }
    }
    (second_im, dist)
}

fn track(f: &BlochFiber, target: C, dense: bool, start: Option<(&DVector<C>, &DVector<C>)>) -> Result<Tracked> {
    if dense {
        let ev = companion_eigenvalues(f)?;
        let chosen = *ev
            .iter()
            .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
            .ok_or_else(|| Error::EigensolverFailure("empty spectrum".into()))?;
        let (second_im, second_dist) = low_region_other(&ev, chosen);
        let refined = refine_pencil(f, chosen, 3, None)?;
        Ok(Tracked {
            refined,
            second_im,
            second_dist,
        })
    } else {
        let refined = refine_pencil(f, target, 40, start)?;
        if refined.iterations >= 40 {
            return Err(Error::BandCrossing {
                sigma: f.sigma[..f.d].to_vec(),
                distance: f64::NAN,
            });
        }
        Ok(Tracked {
            refined,
            second_im: None,
            second_dist: f64::INFINITY,
        })
    }
}

fn finish_sample(f: &BlochFiber, t: &Tracked, zero: usize) -> Result<BandSample> {
    let r = &t.refined;
    let lam = r.lambda;
    let mean = r.u[zero];
    if mean.norm() < 1e-8 * r.u.norm() {
        return Err(Error::LostTracking {
            sigma: f.sigma[..f.d].to_vec(),
            reason: "eigenvector has no cell-mean component".into(),
        });
    }
    let u = &r.u / mean;
    let m = u.len();
    let wu = &f.w * &u;
    let mut phi = DVector::<C>::zeros(2 * m);
    phi.rows_mut(0, m).copy_from(&u);
    phi.rows_mut(m, m).copy_from(&(wu * lam));
    let y = &r.y;
    let top = &f.w * y * lam.conj() - &f.b * y * I;
    let mut psi = DVector::<C>::zeros(2 * m);
    psi.rows_mut(0, m).copy_from(&top);
    psi.rows_mut(m, m).copy_from(y);
    let c = psi.dotc(&phi);
    if c.norm() < 1e-300 {
        return Err(Error::LostTracking {
            sigma: f.sigma[..f.d].to_vec(),
            reason: "left and right eigenvectors orthogonal".into(),
        });
    }
    let psi = psi / c.conj();
    Ok(BandSample {
        sigma: f.sigma,
        lambda: lam,
        phi,
        psi,
        residual: r.residual,
        second_im: t.second_im,
    })
}

fn sigma0_gap(ev: &[C]) -> (C, f64) {
    let lam0 = *ev
        .iter()
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("nonempty spectrum");
    let (second_im, _) = low_region_other(ev, lam0);
    let gap = match second_im {
        Some(s) => -s,
        None => ev
            .iter()
            .filter(|z| **z != lam0)
            .map(|z| z.im.abs())
            .fold(f64::INFINITY, f64::min),
    };
    (lam0, gap)
}

/// Options for [`first_band`].
#[derive(Debug, Clone, Copy)]
pub struct BandOptions {
    /// Force the dense (`Some(true)`) or shift-invert (`Some(false)`) path.
    pub dense: Option<bool>,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions { dense: None }
    }
}

/// Track the first Bloch eigenvalue by continuation from `σ = 0`.
pub fn first_band(m: &Medium, cutoff: usize, sigmas: &[Vec<f64>], opts: BandOptions) -> Result<FirstBand> {
    let d = m.dim();
    let spectra = CellSpectra::new(m, cutoff)?;
    let dense = opts.dense.unwrap_or(cutoff <= dense_cutoff_limit(d));
    let zero = mode_index([0, 0], cutoff, d).expect("constant mode");
    let f0 = spectra.assemble([0.0, 0.0]);
    let ev0 = companion_eigenvalues(&f0)?;
    let (lam0, gap0) = sigma0_gap(&ev0);
    if lam0.norm() > 1e-8 {
        return Err(Error::LostTracking {
            sigma: vec![0.0; d],
            reason: format!("smallest eigenvalue at sigma = 0 is {lam0}"),
        });
    }
    let gamma2 = 0.5 * gap0;
    let base = refine_pencil(&f0, C::new(0.0, 0.0), 3, None)?;
    let mut done: Vec<([f64; 2], C, DVector<C>, DVector<C>)> =
        vec![([0.0, 0.0], base.lambda, base.u.clone(), base.y.clone())];

    let sig: Vec<[f64; 2]> = sigmas.iter().map(|s| sigma_array(s, d)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..sig.len()).collect();
    order.sort_by(|&a, &b| sig[a][0].hypot(sig[a][1]).total_cmp(&sig[b][0].hypot(sig[b][1])));

    let mut samples: Vec<Option<BandSample>> = vec![None; sig.len()];
    for &i in &order {
        let s = sig[i];
        let (_, target, u0, y0) = done
            .iter()
            .min_by(|a, b| {
                let da = (a.0[0] - s[0]).hypot(a.0[1] - s[1]);
                let db = (b.0[0] - s[0]).hypot(b.0[1] - s[1]);
                da.total_cmp(&db)
            })
            .cloned()
            .expect("seeded with sigma = 0");
        let f = spectra.assemble(s);
        let t = track(&f, target, dense, Some((&u0, &y0)))?;
        let lam = t.refined.lambda;
        let step = (lam - target).norm();
        if step > 0.5 * gamma2 {
            return Err(Error::LostTracking {
                sigma: s[..d].to_vec(),
                reason: format!("jump {step:.3e} exceeds half the gap {gamma2:.3e}"),
            });
        }
        if t.second_dist < 10.0 * step {
            return Err(Error::BandCrossing {
                sigma: s[..d].to_vec(),
                distance: t.second_dist,
            });
        }
        let sample = finish_sample(&f, &t, zero)?;
        done.push((s, lam, t.refined.u.clone(), t.refined.y.clone()));
        samples[i] = Some(sample);
    }
    let samples: Vec<BandSample> = samples.into_iter().map(|s| s.expect("all processed")).collect();

    let mut r = 0.0;
    let mut gamma1 = lam0.norm();
    for &i in &order {
        let s = &samples[i];
        let ok = s.lambda.norm() < gamma2 && s.second_im.is_none_or(|v| v < -gamma2);
        if !(ok || !dense) {
            break;
        }
        r = s.radius();
        gamma1 = gamma1.max(s.lambda.norm());
    }
    Ok(FirstBand {
        d,
        cutoff,
        samples,
        gap: SpectralGap {
            gamma1,
            gamma2,
            r,
            monitored: dense,
        },
    })
}

/// Estimate `(γ₁, γ₂, r)` along the ray `t·direction`, `t ∈ (0, r_max]`,
/// stopping at the first radius where the separation fails.
pub fn estimate_gap(m: &Medium, cutoff: usize, direction: &[f64], r_max: f64, steps: usize) -> Result<SpectralGap> {
    let d = m.dim();
    let dir = sigma_array(direction, d)?;
    let norm = dir[0].hypot(dir[1]);
    if !(norm > 0.0) || steps == 0 {
        return Err(Error::InsufficientSamples(
            "ray needs a nonzero direction and steps".into(),
        ));
    }
    let spectra = CellSpectra::new(m, cutoff)?;
    let ev0 = companion_eigenvalues(&spectra.assemble([0.0, 0.0]))?;
    let (lam0, gap0) = sigma0_gap(&ev0);
    let gamma2 = 0.5 * gap0;
    let mut target = lam0;
    let mut r = 0.0;
    let mut gamma1 = lam0.norm();
    for k in 1..=steps {
        let t = r_max * k as f64 / steps as f64;
        let s = [t * dir[0] / norm, t * dir[1] / norm];
        let ev = companion_eigenvalues(&spectra.assemble(s))?;
        let chosen = *ev
            .iter()
            .min_by(|a, b| (*a - target).norm().total_cmp(&(*b - target).norm()))
            .expect("nonempty spectrum");
        let (second_im, second_dist) = low_region_other(&ev, chosen);
        let ok = chosen.norm() < gamma2
            && second_im.is_none_or(|v| v < -gamma2)
            && second_dist >= 10.0 * (chosen - target).norm();
        if !ok {
            break;
        }
        r = t;
        gamma1 = gamma1.max(chosen.norm());
        target = chosen;
    }
    Ok(SpectralGap {
        gamma1,
        gamma2,
        r,
        monitored: true,
    })
}
