use super::wave::InitialData;
use crate::error::{Error, Result};
use crate::homogenize::HomogenizedData;
use crate::medium::{sample_on_grid, Medium, TorusGrid};
use crate::spectral::{derivative_wavenumbers, to_complex, wavenumbers, GridFft};
use num_complex::Complex64 as C;

/// Exact Fourier propagator of `b_h ∂_t u_h − div(G_h∇u_h) = 0` with
/// `u_h(0) = (b_p u_0 + w_p u_1)/b_h`.
pub struct HeatComparator {
    grid: TorusGrid,
    fft: GridFft,
    hat0: Vec<C>,
    rate: Vec<f64>,
    kd: Vec<f64>,
    v0: Vec<f64>,
}

impl HeatComparator {
    pub fn new(m: &Medium, hd: &HomogenizedData, init: &InitialData, g: &TorusGrid) -> Result<Self> {
        if hd.d != g.d || m.dim() != g.d {
            return Err(Error::GridMismatch(format!(
                "dimensions differ: medium {}, homogenized {}, grid {}",
                m.dim(),
                hd.d,
                g.d
            )));
        }
        init.check(g)?;
        let t = sample_on_grid(&m.periodic_part(), g)?;
        let v0: Vec<f64> = (0..g.len())
            .map(|i| (t.b[i] * init.u0[i] + t.w[i] * init.u1[i]) / hd.b_h)
            .collect();
        Ok(Self::from_initial(hd, v0, g))
    }

    /// Heat flow started from an arbitrary field.
    pub fn from_initial(hd: &HomogenizedData, v0: Vec<f64>, g: &TorusGrid) -> Self {
        let mpa = g.points_per_axis();
        let mut fft = GridFft::new(g.d, mpa);
        let mut hat0 = to_complex(&v0);
        fft.forward(&mut hat0);
        let k = wavenumbers(mpa, g.side());
        let rate = (0..g.len())
            .map(|i| {
                let xi = if g.d == 1 {
                    [k[i], 0.0]
                } else {
                    [k[i / mpa], k[i % mpa]]
                };
                hd.quad(xi) / hd.b_h
            })
            .collect();
        HeatComparator {
            grid: *g,
            fft,
            hat0,
            rate,
            kd: derivative_wavenumbers(mpa, g.side()),
            v0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn initial(&self) -> &[f64] {
        &self.v0
    }

    fn synth(&mut self, t: f64, factor: impl Fn(usize, f64) -> C) -> Vec<C> {
        let mut z: Vec<C> = self
            .hat0
            .iter()
            .zip(&self.rate)
            .enumerate()
            .map(|(i, (c, r))| c * ((-t * r).exp()) * factor(i, *r))
            .collect();
        self.fft.inverse(&mut z);
        z
    }

    /// `(u_h(t), ∂_t u_h(t))`.
    pub fn at(&mut self, t: f64) -> (Vec<f64>, Vec<f64>) {
        if t == 0.0 {
            let dt = self.synth(0.0, |_, r| C::new(-r, 0.0));
            return (self.v0.clone(), dt.iter().map(|c| c.re).collect());
        }
        let u = self.synth(t, |_, _| C::new(1.0, 0.0));
        let dt = self.synth(t, |_, r| C::new(-r, 0.0));
        (u.iter().map(|c| c.re).collect(), dt.iter().map(|c| c.re).collect())
    }

    /// `∇u_h(t)`, one array per axis.
    pub fn gradient_at(&mut self, t: f64) -> Vec<Vec<f64>> {
        let mpa = self.grid.points_per_axis();
        let d = self.grid.d;
        let kd = self.kd.clone();
        (0..d)
            .map(|axis| {
                let z = self.synth(t, |i, _| {
                    let k = if d == 1 {
                        kd[i]
                    } else if axis == 0 {
                        kd[i / mpa]
                    } else {
                        kd[i % mpa]
                    };
                    C::new(0.0, k)
                });
                z.iter().map(|c| c.re).collect()
            })
            .collect()
    }
}

/// `(u_h(t), ∂_t u_h(t))` for one time.
pub fn heat_comparator(
    m: &Medium,
    hd: &HomogenizedData,
    init: &InitialData,
    g: &TorusGrid,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(HeatComparator::new(m, hd, init, g)?.at(t))
}
