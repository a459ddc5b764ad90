//! FFT plumbing on square periodic grids (`m` points per axis, `d` ∈ {1, 2}).
//!
//! Data layout is row-major with axis 0 slowest: index `i0 * m + i1`.
//! `forward` is unnormalised, `inverse` divides by the number of points.

use num_complex::Complex64 as C;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub struct GridFft {
    d: usize,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C>,
    tbuf: Vec<C>,
}

impl GridFft {
    pub fn new(d: usize, m: usize) -> Self {
        assert!(d == 1 || d == 2, "dimension must be 1 or 2");
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        GridFft {
            d,
            m,
            fwd,
            inv,
            scratch: vec![C::new(0.0, 0.0); scratch_len],
            tbuf: if d == 2 {
                vec![C::new(0.0, 0.0); m * m]
            } else {
                Vec::new()
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn forward(&mut self, data: &mut [C]) {
        self.apply(data, true);
    }

    pub fn inverse(&mut self, data: &mut [C]) {
        self.apply(data, false);
        let s = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    fn apply(&mut self, data: &mut [C], forward: bool) {
        assert_eq!(data.len(), self.len());
        let plan = if forward { &self.fwd } else { &self.inv };
        plan.process_with_scratch(data, &mut self.scratch);
        if self.d == 2 {
            transpose(data, &mut self.tbuf, self.m);
            plan.process_with_scratch(&mut self.tbuf, &mut self.scratch);
            transpose(&self.tbuf, data, self.m);
        }
    }
}

fn transpose(src: &[C], dst: &mut [C], m: usize) {
    const B: usize = 32;
    for ib in (0..m).step_by(B) {
        for jb in (0..m).step_by(B) {
            for i in ib..(ib + B).min(m) {
                for j in jb..(jb + B).min(m) {
                    dst[j * m + i] = src[i * m + j];
                }
            }
        }
    }
}

/// Signed integer frequency of FFT index `j` on `m` points; the Nyquist
/// index `m/2` maps to `-m/2`.
pub fn frequency(j: usize, m: usize) -> i64 {
    if j < m.div_ceil(2) {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// FFT index of signed frequency `k`.
pub fn index_of(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Angular wavenumbers `2πk/length` in FFT order.
pub fn wavenumbers(m: usize, length: f64) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * frequency(j, m) as f64 / length).collect()
}

/// Wavenumbers for odd derivatives: like [`wavenumbers`] but with the
/// Nyquist mode zeroed so real fields stay real.
pub fn derivative_wavenumbers(m: usize, length: f64) -> Vec<f64> {
    let mut k = wavenumbers(m, length);
    if m % 2 == 0 {
        k[m / 2] = 0.0;
    }
    k
}

pub fn to_complex(x: &[f64]) -> Vec<C> {
    x.iter().map(|&v| C::new(v, 0.0)).collect()
}

/// Fourier coefficients `f̂_k = m^{-d} Σ_y f(y) e^{-2πik·y}` of a
/// cell-periodic function sampled on `m^d` points, in FFT order.
pub fn cell_coefficients(values: &[f64], d: usize) -> Vec<C> {
    let m = side(values.len(), d);
    let mut z = to_complex(values);
    let mut fft = GridFft::new(d, m);
    fft.forward(&mut z);
    let s = 1.0 / z.len() as f64;
    z.iter_mut().for_each(|c| *c *= s);
    z
}

/// Points per axis for a square grid of `len` points in dimension `d`.
pub fn side(len: usize, d: usize) -> usize {
    let m = if d == 1 {
        len
    } else {
        (len as f64).sqrt().round() as usize
    };
    assert_eq!(m.pow(d as u32), len, "grid is not square");
    m
}

/// Spectral interpolation of a real periodic function from `m_from` to
/// `m_to` points per axis. Modes that do not exist on the target grid are
/// dropped; a Nyquist mode is split symmetrically when refining.
pub fn resample(values: &[f64], d: usize, m_to: usize) -> Vec<f64> {
    let m_from = side(values.len(), d);
    if m_from == m_to {
        return values.to_vec();
    }
    let coef = cell_coefficients(values, d);
    let mut out = vec![C::new(0.0, 0.0); m_to.pow(d as u32)];
    let half_from = m_from as i64 / 2;
    let weight = |k: i64| -> f64 {
        if m_from % 2 == 0 && k.abs() == half_from {
            0.5
        } else {
            1.0
        }
    };
    let fits = |k: i64| -> bool {
        let lim = m_to as i64 / 2;
        if m_to % 2 == 0 {
            k.abs() < lim
        } else {
            k.abs() <= lim
        }
    };
    let map_modes = |k: i64| -> Vec<(i64, f64)> {
        if m_from % 2 == 0 && k == -half_from {
            vec![(k, 0.5), (-k, 0.5)]
        } else {
            vec![(k, weight(k))]
        }
    };
    if d == 1 {
        for (j, c) in coef.iter().enumerate() {
            for (k, wgt) in map_modes(frequency(j, m_from)) {
                if fits(k) {
                    out[index_of(k, m_to)] += c * wgt;
                }
            }
        }
    } else {
        for j0 in 0..m_from {
            for j1 in 0..m_from {
                let c = coef[j0 * m_from + j1];
                for (k0, w0) in map_modes(frequency(j0, m_from)) {
                    for (k1, w1) in map_modes(frequency(j1, m_from)) {
                        if fits(k0) && fits(k1) {
                            out[index_of(k0, m_to) * m_to + index_of(k1, m_to)] += c * (w0 * w1);
                        }
                    }
                }
            }
        }
    }
    let n = out.len() as f64;
    let mut fft = GridFft::new(d, m_to);
    out.iter_mut().for_each(|c| *c *= n);
    fft.inverse(&mut out);
    out.iter().map(|c| c.re).collect()
}

/// Spectral gradient of a real periodic function on a square grid of side
/// `length`. Returns one array per axis.
pub fn gradient(values: &[f64], d: usize, length: f64) -> Vec<Vec<f64>> {
    let m = side(values.len(), d);
    let mut fft = GridFft::new(d, m);
    let mut hat = to_complex(values);
    fft.forward(&mut hat);
    let k = derivative_wavenumbers(m, length);
    (0..d)
        .map(|axis| {
            let mut z: Vec<C> = hat
                .iter()
                .enumerate()
                .map(|(idx, &c)| {
                    let j = if d == 1 {
                        idx
                    } else if axis == 0 {
                        idx / m
                    } else {
                        idx % m
                    };
                    c * C::new(0.0, k[j])
                })
                .collect();
            fft.inverse(&mut z);
            z.iter().map(|c| c.re).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_roundtrip_2d() {
        let m = 12;
        let mut fft = GridFft::new(2, m);
        let orig: Vec<C> = (0..m * m)
            .map(|i| C::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut z = orig.clone();
        fft.forward(&mut z);
        fft.inverse(&mut z);
        for (a, b) in z.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let m = 8;
        let vals: Vec<f64> = (0..m * m)
            .map(|idx| {
                let (i0, i1) = (idx / m, idx % m);
                (2.0 * PI * (2.0 * i0 as f64 - 1.0 * i1 as f64) / m as f64).cos()
            })
            .collect();
        let c = cell_coefficients(&vals, 2);
        assert!((c[index_of(2, m) * m + index_of(-1, m)].re - 0.5).abs() < 1e-14);
        assert!((c[index_of(-2, m) * m + index_of(1, m)].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn resample_trig_polynomial_is_exact() {
        let f = |x: f64| 1.0 + 0.3 * (2.0 * PI * x).cos() - 0.2 * (6.0 * PI * x).sin();
        let coarse: Vec<f64> = (0..16).map(|i| f(i as f64 / 16.0)).collect();
        let fine = resample(&coarse, 1, 64);
        for (i, v) in fine.iter().enumerate() {
            assert!((v - f(i as f64 / 64.0)).abs() < 1e-13);
        }
        let back = resample(&fine, 1, 16);
        for (a, b) in back.iter().zip(&coarse) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_of_cosine() {
        let m = 32;
        let vals: Vec<f64> = (0..m).map(|i| (2.0 * PI * i as f64 / m as f64).cos()).collect();
        let g = gradient(&vals, 1, 1.0);
        for (i, v) in g[0].iter().enumerate() {
            let x = i as f64 / m as f64;
            assert!((v + 2.0 * PI * (2.0 * PI * x).sin()).abs() < 1e-12);
        }
    }
}
