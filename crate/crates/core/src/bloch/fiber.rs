use crate::error::{Error, Result};
use crate::medium::{Medium, TorusGrid};
use crate::spectral::{self, index_of};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

/// Fourier index `k ∈ {-N/2..N/2-1}^d` of basis position `idx`.
pub fn mode_k(idx: usize, cutoff: usize, d: usize) -> [i64; 2] {
    let h = cutoff as i64 / 2;
    if d == 1 {
        [idx as i64 - h, 0]
    } else {
        [(idx / cutoff) as i64 - h, (idx % cutoff) as i64 - h]
    }
}

/// Basis position of mode `k`, if it lies in the truncated basis.
pub fn mode_index(k: [i64; 2], cutoff: usize, d: usize) -> Option<usize> {
    let h = cutoff as i64 / 2;
    let inside = |v: i64| (-h..h).contains(&v);
    if !inside(k[0]) || (d == 2 && !inside(k[1])) {
        return None;
    }
    Some(if d == 1 {
        (k[0] + h) as usize
    } else {
        (k[0] + h) as usize * cutoff + (k[1] + h) as usize
    })
}

/// Fourier coefficients of the periodic coefficients, sampled at four
/// times the cutoff so that every difference `k' − k` is available.
#[derive(Debug, Clone)]
pub struct CellSpectra {
    pub d: usize,
    pub cutoff: usize,
    ns: usize,
    g: [Vec<C>; 3],
    w: Vec<C>,
    b: Vec<C>,
}

/// Relative ℓ¹ mass allowed in coefficient modes that the truncated basis
/// cannot represent.
pub const ALIASING_TOLERANCE: f64 = 1e-10;

impl CellSpectra {
    pub fn new(m: &Medium, cutoff: usize) -> Result<Self> {
        if cutoff < 2 || cutoff % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "Fourier cutoff must be even and at least 2, got {cutoff}"
            )));
        }
        let d = m.dim();
        let ns = 4 * cutoff;
        let cell = TorusGrid::unit_cell(d, ns)?;
        let pts: Vec<[f64; 2]> = (0..cell.len()).map(|c| cell.lattice_coords(c)).collect();
        let gs: Vec<_> = pts.iter().map(|x| m.g_p(x)).collect();
        let g11: Vec<f64> = gs.iter().map(|g| g.m11).collect();
        let g12: Vec<f64> = gs.iter().map(|g| g.m12).collect();
        let g22: Vec<f64> = gs.iter().map(|g| g.m22).collect();
        let w: Vec<f64> = pts.iter().map(|x| m.w_p(x)).collect();
        let b: Vec<f64> = pts.iter().map(|x| m.b_p(x)).collect();
        let s = CellSpectra {
            d,
            cutoff,
            ns,
            g: [
                spectral::cell_coefficients(&g11, d),
                spectral::cell_coefficients(&g12, d),
                spectral::cell_coefficients(&g22, d),
            ],
            w: spectral::cell_coefficients(&w, d),
            b: spectral::cell_coefficients(&b, d),
        };
        let tail = s.tail_fraction();
        if tail > ALIASING_TOLERANCE {
            return Err(Error::AliasingError { cutoff, tail });
        }
        Ok(s)
    }

    fn tail_fraction(&self) -> f64 {
        let lim = self.cutoff as i64;
        let mut worst = 0.0f64;
        let fields: [&Vec<C>; 5] = [&self.g[0], &self.g[1], &self.g[2], &self.w, &self.b];
        for f in fields {
            let mut total = 0.0;
            let mut tail = 0.0;
            for (j, c) in f.iter().enumerate() {
                let k = if self.d == 1 {
                    [spectral::frequency(j, self.ns), 0]
                } else {
                    [
                        spectral::frequency(j / self.ns, self.ns),
                        spectral::frequency(j % self.ns, self.ns),
                    ]
                };
                total += c.norm();
                if k[0].abs() >= lim || k[1].abs() >= lim {
                    tail += c.norm();
                }
            }
            if total > 0.0 {
                worst = worst.max(tail / total);
            }
        }
        worst
    }

    fn lookup(&self, f: &[C], q: [i64; 2]) -> C {
        if self.d == 1 {
            f[index_of(q[0], self.ns)]
        } else {
            f[index_of(q[0], self.ns) * self.ns + index_of(q[1], self.ns)]
        }
    }

    pub fn modes(&self) -> usize {
        self.cutoff.pow(self.d as u32)
    }

    /// Assemble the fiber at quasi-momentum `σ`.
    pub fn assemble(&self, sigma: [f64; 2]) -> BlochFiber {
        let d = self.d;
        let mm = self.modes();
        let mut p = DMatrix::<C>::zeros(mm, mm);
        let mut b = DMatrix::<C>::zeros(mm, mm);
        let mut w = DMatrix::<C>::zeros(mm, mm);
        let shifted = |k: [i64; 2]| [2.0 * PI * k[0] as f64 + sigma[0], 2.0 * PI * k[1] as f64 + sigma[1]];
        for row in 0..mm {
            let kr = mode_k(row, self.cutoff, d);
            let vr = shifted(kr);
            for col in 0..mm {
                let kc = mode_k(col, self.cutoff, d);
                let vc = shifted(kc);
                let q = [kr[0] - kc[0], kr[1] - kc[1]];
                let val = if d == 1 {
                    self.lookup(&self.g[0], q) * (vr[0] * vc[0])
                } else {
                    self.lookup(&self.g[0], q) * (vr[0] * vc[0])
                        + self.lookup(&self.g[1], q) * (vr[0] * vc[1] + vr[1] * vc[0])
                        + self.lookup(&self.g[2], q) * (vr[1] * vc[1])
                };
                p[(row, col)] = val;
                b[(row, col)] = self.lookup(&self.b, q);
                w[(row, col)] = self.lookup(&self.w, q);
            }
        }
        BlochFiber {
            d,
            sigma,
            cutoff: self.cutoff,
            p,
            b,
            w,
        }
    }

    /// Coefficient vector of `b_p` in the truncated basis (column of the
    /// multiplication matrix against the constant mode).
    pub fn b_column(&self) -> Vec<C> {
        (0..self.modes())
            .map(|i| self.lookup(&self.b, mode_k(i, self.cutoff, self.d)))
            .collect()
    }
}

/// Fiber operators on the truncated Fourier basis of the cell: `P_p^σ`,
/// multiplication by `b_p` and by `w_p`.
#[derive(Debug, Clone)]
pub struct BlochFiber {
    pub d: usize,
    pub sigma: [f64; 2],
    pub cutoff: usize,
    pub p: DMatrix<C>,
    pub b: DMatrix<C>,
    pub w: DMatrix<C>,
}

pub fn sigma_array(sigma: &[f64], d: usize) -> Result<[f64; 2]> {
    if sigma.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: sigma.len(),
        });
    }
    Ok([sigma[0], if d == 2 { sigma[1] } else { 0.0 }])
}

pub fn assemble_fiber(m: &Medium, sigma: &[f64], cutoff: usize) -> Result<BlochFiber> {
    let s = sigma_array(sigma, m.dim())?;
    Ok(CellSpectra::new(m, cutoff)?.assemble(s))
}

impl BlochFiber {
    pub fn modes(&self) -> usize {
        self.p.nrows()
    }

    /// `Q(λ) = P − iλB − λ²W`.
    pub fn pencil(&self, lambda: C) -> DMatrix<C> {
        let il = C::new(0.0, 1.0) * lambda;
        let l2 = lambda * lambda;
        let mut q = self.p.clone();
        q.zip_zip_apply(&self.b, &self.w, |q, b, w| *q -= il * b + l2 * w);
        q
    }

    /// Companion matrix `[[0, W⁻¹], [P, −iBW⁻¹]]` acting on `(u, λWu)`.
    pub fn companion(&self) -> Result<DMatrix<C>> {
        let mm = self.modes();
        let winv = self
            .w
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::EigensolverFailure("w_p multiplication matrix is singular".into()))?;
        let bw = &self.b * &winv * C::new(0.0, -1.0);
        let mut a = DMatrix::<C>::zeros(2 * mm, 2 * mm);
        a.view_mut((0, mm), (mm, mm)).copy_from(&winv);
        a.view_mut((mm, 0), (mm, mm)).copy_from(&self.p);
        a.view_mut((mm, mm), (mm, mm)).copy_from(&bw);
        Ok(a)
    }

    /// Scale for backward errors of the pencil at `λ`.
    pub fn pencil_scale(&self, lambda: C) -> f64 {
        let l = lambda.norm();
        self.p.norm() + l * self.b.norm() + l * l * self.w.norm()
    }
}
