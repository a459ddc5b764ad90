//! Periodic cell problem `−div G_p(ξ + ∇ψ_ξ) = 0`, corrector matrix
//! `W = Id + ∇ψ`, homogenized matrix `G_h = ⟨WᵀG_pW⟩` and mean damping
//! `b_h = ⟨w_p a_p⟩`.
//!
//! The cell problem is discretised pseudospectrally and solved by
//! preconditioned conjugate gradients on the modes that are not in the
//! kernel of the discrete gradient (the mean, and checkerboard modes built
//! from Nyquist indices).

use crate::error::{Error, Result};
use crate::medium::{Medium, Sym2, TorusGrid};
use crate::reduce::{mean, pairwise_map, pairwise_sum};
use crate::spectral::{self, derivative_wavenumbers, GridFft};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectorField {
    /// Index `j` of the basis direction `e_j`.
    pub direction: usize,
    pub d: usize,
    pub n: usize,
    /// `ψ_{e_j}` at the lattice points `y = c/n` of the unit cell.
    pub values: Vec<f64>,
    /// `‖div G_p(e_j + ∇ψ)‖_{H^{-1}} / ‖G_p e_j‖_{L²}`.
    pub residual_norm: f64,
    pub iterations: usize,
}

/// `W(x)` on the cell grid; `entries[c][i][j] = δ_ij + ∂_i ψ_{e_j}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectorMatrix {
    pub d: usize,
    pub n: usize,
    pub entries: Vec<[[f64; 2]; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomogenizedData {
    pub d: usize,
    pub cell_resolution: usize,
    pub g_h: [[f64; 2]; 2],
    pub b_h: f64,
    pub correctors: Vec<CorrectorField>,
    pub w: CorrectorMatrix,
}

struct CellOperator {
    d: usize,
    n: usize,
    g: Vec<Sym2>,
    k: Vec<f64>,
    fft: GridFft,
    g_ref: f64,
}

impl CellOperator {
    fn new(m: &Medium, n: usize) -> Self {
        let d = m.dim();
        let cell = TorusGrid::unit_cell(d, n).expect("valid cell");
        let g: Vec<Sym2> = (0..cell.len()).map(|c| m.g_p(&cell.lattice_coords(c))).collect();
        let g_ref = mean(
            &g.iter()
                .map(|s| if d == 1 { s.m11 } else { 0.5 * (s.m11 + s.m22) })
                .collect::<Vec<_>>(),
        );
        CellOperator {
            d,
            n,
            g,
            k: derivative_wavenumbers(n, 1.0),
            fft: GridFft::new(d, n),
            g_ref,
        }
    }

    fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    fn axis_k(&self, idx: usize, axis: usize) -> f64 {
        if self.d == 1 {
            self.k[idx]
        } else if axis == 0 {
            self.k[idx / self.n]
        } else {
            self.k[idx % self.n]
        }
    }

    fn k2(&self, idx: usize) -> f64 {
        (0..self.d).map(|a| self.axis_k(idx, a).powi(2)).sum()
    }

    fn gradient(&mut self, u: &[f64]) -> Vec<Vec<f64>> {
        let mut hat = spectral::to_complex(u);
        self.fft.forward(&mut hat);
        (0..self.d)
            .map(|a| {
                let mut z: Vec<C> = hat
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * C::new(0.0, self.axis_k(i, a)))
                    .collect();
                self.fft.inverse(&mut z);
                z.iter().map(|c| c.re).collect()
            })
            .collect()
    }

    fn divergence(&mut self, f: &[Vec<f64>]) -> Vec<f64> {
        let len = self.len();
        let mut acc = vec![C::new(0.0, 0.0); len];
        for (a, fa) in f.iter().enumerate() {
            let mut z = spectral::to_complex(fa);
            self.fft.forward(&mut z);
            for (i, c) in z.iter().enumerate() {
                acc[i] += c * C::new(0.0, self.axis_k(i, a));
            }
        }
        self.fft.inverse(&mut acc);
        acc.iter().map(|c| c.re).collect()
    }

    fn flux(&self, grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if self.d == 1 {
            return vec![grad[0].iter().zip(&self.g).map(|(u, g)| g.m11 * u).collect()];
        }
        let mut f0 = Vec::with_capacity(self.len());
        let mut f1 = Vec::with_capacity(self.len());
        for (i, g) in self.g.iter().enumerate() {
            let v = g.apply([grad[0][i], grad[1][i]]);
            f0.push(v[0]);
            f1.push(v[1]);
        }
        vec![f0, f1]
    }

    /// `−div(G∇u)`.
    fn apply(&mut self, u: &[f64]) -> Vec<f64> {
        let grad = self.gradient(u);
        let f = self.flux(&grad);
        self.divergence(&f).iter().map(|v| -v).collect()
    }

    /// Inverse of `−ḡΔ` on non-kernel modes; also returns the squared
    /// `H^{-1}` norm `Σ |r̂_k|²/|k|²`.
    fn precondition(&mut self, r: &[f64]) -> (Vec<f64>, f64) {
        let mut z = spectral::to_complex(r);
        self.fft.forward(&mut z);
        let len = self.len() as f64;
        let mut dual = Vec::with_capacity(z.len());
        for (i, c) in z.iter_mut().enumerate() {
            let k2 = self.k2(i);
            if k2 == 0.0 {
                *c = C::new(0.0, 0.0);
                dual.push(0.0);
            } else {
                dual.push((*c / len).norm_sqr() / k2);
                *c /= self.g_ref * k2;
            }
        }
        self.fft.inverse(&mut z);
        (z.iter().map(|c| c.re).collect(), pairwise_sum(&dual))
    }

    /// Remove components in the kernel of the discrete gradient.
    fn project(&mut self, u: &mut [f64]) {
        let mut z = spectral::to_complex(u);
        self.fft.forward(&mut z);
        for (i, c) in z.iter_mut().enumerate() {
            if self.k2(i) == 0.0 {
                *c = C::new(0.0, 0.0);
            }
        }
        self.fft.inverse(&mut z);
        for (v, c) in u.iter_mut().zip(&z) {
            *v = c.re;
        }
    }

    fn h_minus_one(&mut self, r: &[f64]) -> f64 {
        self.precondition(r).1.sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_map(a.len(), &|i| a[i] * b[i])
}

/// Solve the cell problem for `ξ = e_direction` at resolution `n`.
pub fn solve_cell_problem(m: &Medium, direction: usize, n: usize, tol: f64) -> Result<CorrectorField> {
    let d = m.dim();
    if n == 0 || n % 2 != 0 {
        return Err(Error::ResolutionMismatch(format!(
            "cell resolution must be even, got {n}"
        )));
    }
    if direction >= d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: direction + 1,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let mut op = CellOperator::new(m, n);
    let len = op.len();
    let column: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            op.g.iter()
                .map(|g| match (a, direction) {
                    (0, 0) => g.m11,
                    (1, 1) => g.m22,
                    _ => g.m12,
                })
                .collect()
        })
        .collect();
    let scale = {
        let s: f64 = column.iter().map(|c| dot(c, c)).sum::<f64>() / len as f64;
        s.sqrt()
    };
    if !(scale > 0.0) {
        return Err(Error::SingularOperator);
    }
    let mut rhs = op.divergence(&column);
    op.project(&mut rhs);

    let mut x = vec![0.0; len];
    let max_iter = 20 * len.max(100);
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    for _restart in 0..4 {
        let ax = op.apply(&x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        op.project(&mut r);
        let (mut z, dual) = op.precondition(&r);
        residual = dual.sqrt() / scale;
        if residual <= tol {
            break;
        }
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            iterations += 1;
            let ap = op.apply(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                if rz.abs() < 1e-300 {
                    break;
                }
                return Err(Error::SingularOperator);
            }
            let alpha = rz / pap;
            for i in 0..len {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let (zn, dual) = op.precondition(&r);
            z = zn;
            residual = dual.sqrt() / scale;
            if residual <= 0.1 * tol {
                break;
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..len {
                p[i] = z[i] + beta * p[i];
            }
        }
        let ax = op.apply(&x);
        let r_true: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        residual = op.h_minus_one(&r_true) / scale;
        if residual <= tol || iterations >= max_iter {
            break;
        }
    }
    if !(residual <= tol) {
        return Err(Error::NoConvergence { iterations, residual });
    }
    op.project(&mut x);
    let mu = mean(&x);
    x.iter_mut().for_each(|v| *v -= mu);
    Ok(CorrectorField {
        direction,
        d,
        n,
        values: x,
        residual_norm: residual,
        iterations,
    })
}

impl CorrectorField {
    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// `L²(T)` norm on the cell.
    pub fn norm(&self) -> f64 {
        (dot(&self.values, &self.values) / self.values.len() as f64).sqrt()
    }

    /// Values resampled spectrally to `n_to` points per axis.
    pub fn resampled(&self, n_to: usize) -> Vec<f64> {
        spectral::resample(&self.values, self.d, n_to)
    }
}

/// Column `j` of `W` is `e_j + ∇ψ_{e_j}`.
pub fn corrector_matrix(correctors: &[CorrectorField], n: usize) -> Result<CorrectorMatrix> {
    let d = correctors
        .first()
        .map(|c| c.d)
        .ok_or_else(|| Error::ResolutionMismatch("no correctors supplied".into()))?;
    if correctors.len() != d {
        return Err(Error::ResolutionMismatch(format!(
            "expected {d} correctors, got {}",
            correctors.len()
        )));
    }
    for (j, c) in correctors.iter().enumerate() {
        if c.n != n || c.d != d || c.values.len() != n.pow(d as u32) {
            return Err(Error::ResolutionMismatch(format!(
                "corrector {j} has resolution {} but {n} was requested",
                c.n
            )));
        }
        if c.direction != j {
            return Err(Error::ResolutionMismatch(format!(
                "corrector {j} is for direction {}",
                c.direction
            )));
        }
    }
    let len = n.pow(d as u32);
    let mut entries = vec![[[1.0, 0.0], [0.0, 1.0]]; len];
    for (j, c) in correctors.iter().enumerate() {
        let grad = spectral::gradient(&c.values, d, 1.0);
        for (i, gi) in grad.iter().enumerate() {
            for (e, v) in entries.iter_mut().zip(gi) {
                e[i][j] += v;
            }
        }
    }
    if d == 1 {
        for e in entries.iter_mut() {
            e[1] = [0.0, 0.0];
        }
    }
    Ok(CorrectorMatrix { d, n, entries })
}

/// `G_h = ∫_T WᵀG_pW`, trapezoidal rule, symmetrised.
pub fn homogenized_matrix(m: &Medium, w: &CorrectorMatrix, n: usize) -> Result<[[f64; 2]; 2]> {
    if w.n != n || w.d != m.dim() {
        return Err(Error::ResolutionMismatch(format!(
            "W tabulated at resolution {} but {n} was requested",
            w.n
        )));
    }
    let d = w.d;
    let cell = TorusGrid::unit_cell(d, n)?;
    let g: Vec<Sym2> = (0..cell.len()).map(|c| m.g_p(&cell.lattice_coords(c))).collect();
    let mut gh = [[0.0; 2]; 2];
    for i in 0..d {
        for j in 0..d {
            let f = |c: usize| {
                let wm = &w.entries[c];
                let gm = &g[c];
                let ga = [[gm.m11, gm.m12], [gm.m12, gm.m22]];
                let mut s = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        s += wm[a][i] * ga[a][b] * wm[b][j];
                    }
                }
                s
            };
            gh[i][j] = pairwise_map(cell.len(), &f) / cell.len() as f64;
        }
    }
    if d == 2 {
        let off = 0.5 * (gh[0][1] + gh[1][0]);
        gh[0][1] = off;
        gh[1][0] = off;
    }
    Ok(gh)
}

/// `b_h = ∫_T w_p a_p`.
pub fn mean_damping(m: &Medium, n: usize) -> Result<f64> {
    let cell = TorusGrid::unit_cell(m.dim(), n)?;
    let b: Vec<f64> = (0..cell.len()).map(|c| m.b_p(&cell.lattice_coords(c))).collect();
    let bh = mean(&b);
    if bh <= 1e-14 {
        return Err(Error::ZeroDamping { max: bh });
    }
    Ok(bh)
}

/// Sanity checks on a computed [`HomogenizedData`].
#[derive(Debug, Clone, Serialize)]
pub struct HomogenizationChecks {
    /// `max_ij |∫W_ij − δ_ij|`.
    pub mean_w_error: f64,
    pub symmetry_error: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    pub g_min: f64,
    pub g_max: f64,
    /// `max_x |W(x)|` over the cell grid.
    pub w_sup: f64,
    pub max_residual: f64,
}

impl HomogenizationChecks {
    pub fn positive_definite(&self) -> bool {
        self.eig_min > 0.0
    }

    pub fn within_bounds(&self) -> bool {
        let slack = 1e-10 * self.g_max;
        self.eig_min >= self.g_min - slack && self.eig_max <= self.g_max + slack
    }
}

impl HomogenizedData {
    pub fn compute(m: &Medium, n: usize, tol: f64) -> Result<HomogenizedData> {
        let correctors = (0..m.dim())
            .map(|j| solve_cell_problem(m, j, n, tol))
            .collect::<Result<Vec<_>>>()?;
        let w = corrector_matrix(&correctors, n)?;
        let g_h = homogenized_matrix(m, &w, n)?;
        let b_h = mean_damping(m, n)?;
        Ok(HomogenizedData {
            d: m.dim(),
            cell_resolution: n,
            g_h,
            b_h,
            correctors,
            w,
        })
    }

    /// `⟨G_h ξ, ξ⟩`.
    pub fn quad(&self, xi: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                s += self.g_h[i][j] * xi[i] * xi[j];
            }
        }
        s
    }

    pub fn g_h_sym(&self) -> Sym2 {
        Sym2 {
            m11: self.g_h[0][0],
            m12: self.g_h[0][1],
            m22: self.g_h[1][1],
        }
    }

    pub fn checks(&self, m: &Medium) -> HomogenizationChecks {
        let d = self.d;
        let len = self.w.entries.len() as f64;
        let mut mean_w_error = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let vals: Vec<f64> = self.w.entries.iter().map(|e| e[i][j]).collect();
                let target = if i == j { 1.0 } else { 0.0 };
                mean_w_error = mean_w_error.max((pairwise_sum(&vals) / len - target).abs());
            }
        }
        let (eig_min, eig_max) = self.g_h_sym().eig_range(d);
        let w_sup = self
            .w
            .entries
            .iter()
            .map(|e| {
                let mut s = 0.0;
                for row in e.iter().take(d) {
                    for v in row.iter().take(d) {
                        s += v * v;
                    }
                }
                s.sqrt()
            })
            .fold(0.0, f64::max);
        let pb = m.periodic_bounds();
        HomogenizationChecks {
            mean_w_error,
            symmetry_error: (self.g_h[0][1] - self.g_h[1][0]).abs(),
            eig_min,
            eig_max,
            g_min: pb.g_min,
            g_max: pb.g_max,
            w_sup,
            max_residual: self.correctors.iter().map(|c| c.residual_norm).fold(0.0, f64::max),
        }
    }

    /// `W` on every node of `grid`, by spectral resampling of the cell table
    /// and periodic replication. Entry `[i][j]` is stored at
    /// `out[i * 2 + j][idx]`.
    pub fn w_on_grid(&self, grid: &TorusGrid) -> Result<Vec<Vec<f64>>> {
        if grid.d != self.d {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} but homogenized data in dimension {}",
                grid.d, self.d
            )));
        }
        let n = grid.n;
        let mpa = grid.points_per_axis();
        let mut out = vec![Vec::new(); 4];
        for i in 0..self.d {
            for j in 0..self.d {
                let cell: Vec<f64> = self.w.entries.iter().map(|e| e[i][j]).collect();
                let fine = spectral::resample(&cell, self.d, n);
                out[i * 2 + j] = (0..grid.len())
                    .map(|idx| {
                        if self.d == 1 {
                            fine[idx % n]
                        } else {
                            fine[((idx / mpa) % n) * n + (idx % mpa) % n]
                        }
                    })
                    .collect();
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{build_medium, MediumConfig};

    fn medium(text: &str) -> Medium {
        build_medium(&MediumConfig::from_json(text).unwrap()).unwrap()
    }

    fn cosine_1d() -> Medium {
        medium(
            r#"{"dimension": 1,
                "G": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.5}]},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
        )
    }

    #[test]
    fn constant_conductivity_has_zero_corrector() {
        let m = medium(
            r#"{"dimension": 2, "G": {"type": "constant", "value": 3.0},
                "w": {"type": "constant", "value": 1.0}, "a": {"type": "constant", "value": 1.0}}"#,
        );
        let hd = HomogenizedData::compute(&m, 16, 1e-12).unwrap();
        for c in &hd.correctors {
            assert!(c.values.iter().all(|v| v.abs() < 1e-14));
        }
        assert!((hd.g_h[0][0] - 3.0).abs() < 1e-14 && hd.g_h[0][1].abs() < 1e-14);
        for e in &hd.w.entries {
            assert_eq!(e[0][0], 1.0);
            assert_eq!(e[1][1], 1.0);
        }
    }

    #[test]
    fn one_dimensional_flux_is_constant() {
        let m = cosine_1d();
        let n = 64;
        let c = solve_cell_problem(&m, 0, n, 1e-12).unwrap();
        let w = corrector_matrix(std::slice::from_ref(&c), n).unwrap();
        let flux: Vec<f64> = (0..n)
            .map(|i| m.g_p(&[i as f64 / n as f64, 0.0]).m11 * w.entries[i][0][0])
            .collect();
        let f0 = flux[0];
        assert!(flux.iter().all(|f| (f - f0).abs() < 1e-10));
    }

    #[test]
    fn mean_damping_examples() {
        let m = medium(
            r#"{"dimension": 1, "G": {"type": "constant", "value": 1.0},
                "w": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.5}]},
                "a": {"type": "cosine-series", "mean": 1.0, "terms": [{"k": [1], "cos": 0.5}]}}"#,
        );
        assert!((mean_damping(&m, 32).unwrap() - 1.125).abs() < 1e-14);
    }

    #[test]
    fn resolution_mismatch_detected() {
        let m = cosine_1d();
        let c = solve_cell_problem(&m, 0, 32, 1e-12).unwrap();
        assert!(matches!(corrector_matrix(&[c], 64), Err(Error::ResolutionMismatch(_))));
    }

    #[test]
    fn constant_shift_of_corrector_leaves_g_h() {
        let m = cosine_1d();
        let mut c = solve_cell_problem(&m, 0, 64, 1e-12).unwrap();
        let w0 = corrector_matrix(std::slice::from_ref(&c), 64).unwrap();
        let g0 = homogenized_matrix(&m, &w0, 64).unwrap();
        c.values.iter_mut().for_each(|v| *v += 0.37);
        let w1 = corrector_matrix(std::slice::from_ref(&c), 64).unwrap();
        let g1 = homogenized_matrix(&m, &w1, 64).unwrap();
        assert!((g0[0][0] - g1[0][0]).abs() < 1e-14);
    }

    #[test]
    fn w_replicates_on_torus() {
        let m = cosine_1d();
        let hd = HomogenizedData::compute(&m, 128, 1e-12).unwrap();
        let g = TorusGrid::new(1, 64, 4).unwrap();
        let w = hd.w_on_grid(&g).unwrap();
        let c = (0.75f64).sqrt();
        for idx in 0..g.len() {
            let x = g.lattice_coords(idx);
            assert!((w[0][idx] - c / m.g_p(&x).m11).abs() < 1e-9);
        }
    }
}
