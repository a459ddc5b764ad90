use super::floquet::{floquet_transform, inverse_floquet, sigma_grid, FloquetSlice, FloquetTransform};
use crate::bloch::{mode_k, BandSample, FirstBand};
use crate::error::{Error, Result};
use crate::medium::TorusGrid;
use crate::spectral::{index_of, GridFft};
use nalgebra::DVector;
use num_complex::Complex64 as C;

/// Tolerance used to match dual lattice points against band samples.
pub const SIGMA_MATCH: f64 = 1e-9;

/// Dual lattice points of `g` inside the closed ball of radius `r`.
pub fn sigmas_in_ball(g: &TorusGrid, r: f64) -> Vec<[f64; 2]> {
    sigma_grid(g).into_iter().filter(|s| s[0].hypot(s[1]) <= r).collect()
}

struct Active {
    slot: usize,
    lambda: C,
    coefficient: C,
    phi: Vec<C>,
    lwphi: Vec<C>,
}

/// Low-frequency first-band propagator
/// `F ↦ L^{−d} Σ_{|σ|≤r} e^{ix·σ} e^{−itλ_σ} ⟨F_#^σ, Ψ_σ⟩ Φ_σ`.
pub struct BandPropagator {
    grid: TorusGrid,
    radius: f64,
    active: Vec<Active>,
}

fn to_modes(values: &[C], n: usize, d: usize, cutoff: usize, fft: &mut GridFft) -> DVector<C> {
    let mut z = values.to_vec();
    fft.forward(&mut z);
    let s = 1.0 / z.len() as f64;
    let modes = cutoff.pow(d as u32);
    DVector::from_iterator(
        modes,
        (0..modes).map(|i| {
            let k = mode_k(i, cutoff, d);
            let j = if d == 1 {
                index_of(k[0], n)
            } else {
                index_of(k[0], n) * n + index_of(k[1], n)
            };
            z[j] * s
        }),
    )
}

fn to_cell(coeffs: &[C], n: usize, d: usize, cutoff: usize, fft: &mut GridFft) -> Vec<C> {
    let len = n.pow(d as u32);
    let mut z = vec![C::new(0.0, 0.0); len];
    for (i, c) in coeffs.iter().enumerate() {
        let k = mode_k(i, cutoff, d);
        let j = if d == 1 {
            index_of(k[0], n)
        } else {
            index_of(k[0], n) * n + index_of(k[1], n)
        };
        z[j] += *c;
    }
    fft.inverse(&mut z);
    z.iter_mut().for_each(|c| *c *= len as f64);
    z
}

impl BandPropagator {
    /// Projects the operator-form data `F = (f_1, f_2)` onto the first band
    /// for every dual lattice point with `|σ| ≤ radius`.
    pub fn new(band: &FirstBand, f: (&[C], &[C]), g: &TorusGrid, radius: f64) -> Result<Self> {
        if band.d != g.d {
            return Err(Error::GridIncompatibility(format!(
                "band computed in dimension {}, grid has {}",
                band.d, g.d
            )));
        }
        if band.cutoff > g.n {
            return Err(Error::GridIncompatibility(format!(
                "band cutoff {} exceeds the {} grid points per cell",
                band.cutoff, g.n
            )));
        }
        let f1 = floquet_transform(f.0, g)?;
        let f2 = floquet_transform(f.1, g)?;
        let mut fft = GridFft::new(g.d, g.n);
        let m = band.cutoff.pow(g.d as u32);
        let mut active = Vec::new();
        for (slot, (s1, s2)) in f1.slices.iter().zip(&f2.slices).enumerate() {
            if s1.sigma[0].hypot(s1.sigma[1]) > radius {
                continue;
            }
            let sample: &BandSample = band.find(s1.sigma, SIGMA_MATCH).ok_or(Error::BandUnavailable {
                sigma: s1.sigma[..g.d].to_vec(),
            })?;
            let a = to_modes(&s1.values, g.n, g.d, band.cutoff, &mut fft);
            let b = to_modes(&s2.values, g.n, g.d, band.cutoff, &mut fft);
            let big = DVector::from_iterator(2 * m, a.iter().chain(b.iter()).copied());
            let coefficient = sample.coefficient(&big);
            let phi_c: Vec<C> = sample.phi.rows(0, m).iter().copied().collect();
            let lw_c: Vec<C> = sample.phi.rows(m, m).iter().copied().collect();
            active.push(Active {
                slot,
                lambda: sample.lambda,
                coefficient,
                phi: to_cell(&phi_c, g.n, g.d, band.cutoff, &mut fft),
                lwphi: to_cell(&lw_c, g.n, g.d, band.cutoff, &mut fft),
            });
        }
        Ok(BandPropagator {
            grid: *g,
            radius,
            active,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of dual lattice points carried by the propagator.
    pub fn active_slices(&self) -> usize {
        self.active.len()
    }

    /// `(λ_σ, ⟨F_#^σ, Ψ_σ⟩)` for every carried slice.
    pub fn spectral_data(&self) -> Vec<([f64; 2], C, C)> {
        let sig = sigma_grid(&self.grid);
        self.active
            .iter()
            .map(|a| (sig[a.slot], a.lambda, a.coefficient))
            .collect()
    }

    fn synth(&self, t: f64, second: bool) -> Result<Vec<C>> {
        let nl = self.grid.n.pow(self.grid.d as u32);
        let mut slices: Vec<FloquetSlice> = sigma_grid(&self.grid)
            .into_iter()
            .map(|s| FloquetSlice {
                sigma: s,
                values: vec![C::new(0.0, 0.0); nl],
            })
            .collect();
        for a in &self.active {
            let e = (C::new(0.0, -t) * a.lambda).exp() * a.coefficient;
            let src = if second { &a.lwphi } else { &a.phi };
            for (o, v) in slices[a.slot].values.iter_mut().zip(src) {
                *o = e * v;
            }
        }
        inverse_floquet(&FloquetTransform {
            grid: self.grid,
            slices,
        })
    }

    /// Both components of `Ĩ(t)F`, approximating `(u, i w ∂_t u)`.
    pub fn at(&self, t: f64) -> Result<(Vec<C>, Vec<C>)> {
        Ok((self.synth(t, false)?, self.synth(t, true)?))
    }

    /// First component only.
    pub fn displacement(&self, t: f64) -> Result<Vec<C>> {
        self.synth(t, false)
    }
}

/// `Ĩ(t)F` over the ball `|σ| ≤ r` with `r` taken from the band's gap data.
pub fn first_band_propagate(band: &FirstBand, f: (&[C], &[C]), g: &TorusGrid, t: f64) -> Result<(Vec<C>, Vec<C>)> {
    BandPropagator::new(band, f, g, band.gap.r)?.at(t)
}

/// Operator-form data `(u_0, i w u_1)` for the band propagator.
pub fn operator_form(u0: &[f64], u1: &[f64], w: &[f64]) -> (Vec<C>, Vec<C>) {
    (
        u0.iter().map(|&x| C::new(x, 0.0)).collect(),
        u1.iter().zip(w).map(|(&v, &w)| C::new(0.0, w * v)).collect(),
    )
}
