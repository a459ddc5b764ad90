use crate::error::{Error, Result};
use crate::medium::TorusGrid;
use crate::spectral::GridFft;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

/// `u_#^σ(y) = Σ_c u(y + c) e^{−i(y+c)·σ}` on the lattice points of one cell.
#[derive(Debug, Clone)]
pub struct FloquetSlice {
    pub sigma: [f64; 2],
    pub values: Vec<C>,
}

#[derive(Debug, Clone)]
pub struct FloquetTransform {
    pub grid: TorusGrid,
    /// One slice per dual-lattice point, in DFT order over the cell index.
    pub slices: Vec<FloquetSlice>,
}

fn dual(q: usize, l: usize) -> f64 {
    let q = q as i64;
    let l = l as i64;
    let s = if q <= l / 2 { q } else { q - l };
    2.0 * PI * s as f64 / l as f64
}

/// Dual lattice `{2πq/L} ∩ 2π(−1/2, 1/2]^d` in DFT order.
pub fn sigma_grid(g: &TorusGrid) -> Vec<[f64; 2]> {
    let l = g.periods;
    if g.d == 1 {
        (0..l).map(|q| [dual(q, l), 0.0]).collect()
    } else {
        (0..l * l).map(|q| [dual(q / l, l), dual(q % l, l)]).collect()
    }
}

fn cell_count(g: &TorusGrid) -> usize {
    g.periods.pow(g.d as u32)
}

fn cell_len(g: &TorusGrid) -> usize {
    g.n.pow(g.d as u32)
}

/// Grid index of local point `j` in cell `c`.
fn global(g: &TorusGrid, c: usize, j: usize) -> usize {
    if g.d == 1 {
        c * g.n + j
    } else {
        let (l, n) = (g.periods, g.n);
        let (c0, c1) = (c / l, c % l);
        let (j0, j1) = (j / n, j % n);
        (c0 * n + j0) * (l * n) + c1 * n + j1
    }
}

fn local_coords(g: &TorusGrid, j: usize) -> [f64; 2] {
    let h = g.spacing();
    if g.d == 1 {
        [j as f64 * h, 0.0]
    } else {
        [(j / g.n) as f64 * h, (j % g.n) as f64 * h]
    }
}

pub fn floquet_transform(u: &[C], g: &TorusGrid) -> Result<FloquetTransform> {
    if u.len() != g.len() {
        return Err(Error::GridIncompatibility(format!(
            "field has {} values for a grid of {}",
            u.len(),
            g.len()
        )));
    }
    warn_if_seam(u, g);
    let sig = sigma_grid(g);
    let nc = cell_count(g);
    let nl = cell_len(g);
    let mut slices: Vec<FloquetSlice> = sig
        .iter()
        .map(|&s| FloquetSlice {
            sigma: s,
            values: vec![C::new(0.0, 0.0); nl],
        })
        .collect();
    let mut fft = GridFft::new(g.d, g.periods);
    let mut buf = vec![C::new(0.0, 0.0); nc];
    for j in 0..nl {
        for (c, b) in buf.iter_mut().enumerate() {
            *b = u[global(g, c, j)];
        }
        fft.forward(&mut buf);
        let y = local_coords(g, j);
        for (q, s) in slices.iter_mut().enumerate() {
            let ph = -(y[0] * s.sigma[0] + y[1] * s.sigma[1]);
            s.values[j] = buf[q] * C::from_polar(1.0, ph);
        }
    }
    Ok(FloquetTransform { grid: *g, slices })
}

/// `u(y + c) = L^{−d} Σ_σ e^{i(y+c)·σ} u_#^σ(y)`.
pub fn inverse_floquet(ft: &FloquetTransform) -> Result<Vec<C>> {
    let g = &ft.grid;
    let nc = cell_count(g);
    let nl = cell_len(g);
    let sig = sigma_grid(g);
    if ft.slices.len() != nc || ft.slices.iter().any(|s| s.values.len() != nl) {
        return Err(Error::GridIncompatibility(
            "slice layout does not match the grid".into(),
        ));
    }
    for (s, e) in ft.slices.iter().zip(&sig) {
        if (s.sigma[0] - e[0]).abs() > 1e-12 || (s.sigma[1] - e[1]).abs() > 1e-12 {
            return Err(Error::GridIncompatibility(format!(
                "slice at sigma {:?} but dual lattice point {:?} expected",
                s.sigma, e
            )));
        }
    }
    let mut out = vec![C::new(0.0, 0.0); g.len()];
    let mut fft = GridFft::new(g.d, g.periods);
    let mut buf = vec![C::new(0.0, 0.0); nc];
    for j in 0..nl {
        let y = local_coords(g, j);
        for (q, s) in ft.slices.iter().enumerate() {
            let ph = y[0] * s.sigma[0] + y[1] * s.sigma[1];
            buf[q] = s.values[j] * C::from_polar(1.0, ph);
        }
        fft.inverse(&mut buf);
        for (c, b) in buf.iter().enumerate() {
            out[global(g, c, j)] = *b;
        }
    }
    Ok(out)
}

fn warn_if_seam(u: &[C], g: &TorusGrid) {
    let peak = u.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    let mut seam = 0.0f64;
    for (idx, c) in u.iter().enumerate() {
        let x = g.lattice_coords(idx);
        let near = |v: f64| v < 1.0 || v >= g.side() - 1.0;
        if near(x[0]) || (g.d == 2 && near(x[1])) {
            seam = seam.max(c.norm());
        }
    }
    if seam > 1e-8 * peak {
        log::warn!("field reaches {:.2e} of its peak at the torus seam", seam / peak);
    }
}
