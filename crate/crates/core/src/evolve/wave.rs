use crate::error::{Error, Result};
use crate::medium::{sample_on_grid, CoefficientTables, Medium, Sym2, TorusGrid};
use crate::reduce::pairwise_map;
use crate::spectral::{derivative_wavenumbers, GridFft};
use num_complex::Complex64 as C;

/// Discrete `(u, ∂_t u)` at time `t`, with the accumulated dissipation
/// `2∫₀ᵗ∫ b|∂_t u|²`.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub grid: TorusGrid,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub dissipated: f64,
}

/// Initial data `(u_0, u_1)` on the grid.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
}

impl InitialData {
    /// `A exp(−|x|²/(2s²))` centred on the torus, zero velocity.
    pub fn gaussian(g: &TorusGrid, amplitude: f64, width: f64) -> Self {
        let u0 = (0..g.len())
            .map(|i| {
                let x = g.centered_coords(i);
                amplitude * (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * width * width)).exp()
            })
            .collect();
        InitialData {
            u0,
            u1: vec![0.0; g.len()],
        }
    }

    /// `cos(2πk·x/L)` on the torus, zero velocity.
    pub fn mode(g: &TorusGrid, k: [i64; 2]) -> Self {
        let l = g.side();
        let u0 = (0..g.len())
            .map(|i| {
                let x = g.lattice_coords(i);
                (2.0 * std::f64::consts::PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]) / l).cos()
            })
            .collect();
        InitialData {
            u0,
            u1: vec![0.0; g.len()],
        }
    }

    pub fn check(&self, g: &TorusGrid) -> Result<()> {
        if self.u0.len() != g.len() || self.u1.len() != g.len() {
            return Err(Error::GridIncompatibility(format!(
                "initial data has {} / {} values for a grid of {}",
                self.u0.len(),
                self.u1.len(),
                g.len()
            )));
        }
        Ok(())
    }
}

/// Pseudospectral `P_G = −div(G∇·)` on the torus. Real fields are packed
/// in pairs so that each application costs four complex FFTs.
pub struct StiffnessOperator {
    grid: TorusGrid,
    fft: GridFft,
    k: Vec<f64>,
    g: Vec<Sym2>,
    buf: Vec<C>,
    hat: Vec<C>,
}

impl StiffnessOperator {
    pub fn new(grid: TorusGrid, g: Vec<Sym2>) -> Self {
        let m = grid.points_per_axis();
        StiffnessOperator {
            grid,
            fft: GridFft::new(grid.d, m),
            k: derivative_wavenumbers(m, grid.side()),
            g,
            buf: vec![C::new(0.0, 0.0); grid.len()],
            hat: vec![C::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn kk(&self, idx: usize) -> (f64, f64) {
        let m = self.grid.points_per_axis();
        if self.grid.d == 1 {
            (self.k[idx], 0.0)
        } else {
            (self.k[idx / m], self.k[idx % m])
        }
    }

    fn neg_index(&self, idx: usize) -> usize {
        let m = self.grid.points_per_axis();
        if self.grid.d == 1 {
            (m - idx) % m
        } else {
            let (i0, i1) = (idx / m, idx % m);
            ((m - i0) % m) * m + (m - i1) % m
        }
    }

    /// Spectral gradient; one array per axis.
    pub fn gradient(&mut self, u: &[f64]) -> Vec<Vec<f64>> {
        let len = self.grid.len();
        for (b, &x) in self.buf.iter_mut().zip(u) {
            *b = C::new(x, 0.0);
        }
        self.fft.forward(&mut self.buf);
        for i in 0..len {
            let (k0, k1) = self.kk(i);
            let c = self.buf[i];
            self.buf[i] = C::new(0.0, k0) * c + C::new(0.0, 1.0) * (C::new(0.0, k1) * c);
        }
        self.fft.inverse(&mut self.buf);
        let g0 = self.buf.iter().map(|c| c.re).collect();
        if self.grid.d == 1 {
            vec![g0]
        } else {
            vec![g0, self.buf.iter().map(|c| c.im).collect()]
        }
    }

    /// `out = P_G u`.
    pub fn apply(&mut self, u: &[f64], out: &mut [f64]) {
        let len = self.grid.len();
        let d = self.grid.d;
        for (b, &x) in self.buf.iter_mut().zip(u) {
            *b = C::new(x, 0.0);
        }
        self.fft.forward(&mut self.buf);
        for i in 0..len {
            let (k0, k1) = self.kk(i);
            let c = self.buf[i];
            self.buf[i] = if d == 1 {
                C::new(0.0, k0) * c
            } else {
                C::new(0.0, k0) * c + C::new(0.0, 1.0) * (C::new(0.0, k1) * c)
            };
        }
        self.fft.inverse(&mut self.buf);
        for (b, g) in self.buf.iter_mut().zip(&self.g) {
            if d == 1 {
                *b = C::new(g.m11 * b.re, 0.0);
            } else {
                let f = g.apply([b.re, b.im]);
                *b = C::new(f[0], f[1]);
            }
        }
        self.fft.forward(&mut self.buf);
        if d == 1 {
            for i in 0..len {
                let (k0, _) = self.kk(i);
                self.hat[i] = -(C::new(0.0, k0) * self.buf[i]);
            }
        } else {
            for i in 0..len {
                let j = self.neg_index(i);
                let z = self.buf[i];
                let zc = self.buf[j].conj();
                let f0 = (z + zc) * 0.5;
                let f1 = (z - zc) * C::new(0.0, -0.5);
                let (k0, k1) = self.kk(i);
                self.hat[i] = -(C::new(0.0, k0) * f0 + C::new(0.0, k1) * f1);
            }
        }
        self.fft.inverse(&mut self.hat);
        for (o, c) in out.iter_mut().zip(&self.hat) {
            *o = c.re;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WaveOptions {
    /// `c_cfl` in `dt ≤ c_cfl · h · √(w_min/G_max)`.
    pub cfl_fraction: f64,
    /// Steps between blow-up checks.
    pub check_every: usize,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions {
            cfl_fraction: 0.5,
            check_every: 256,
        }
    }
}

/// `c_cfl · h · √(w_min/G_max)` for the sampled bounds of `m`.
pub fn cfl_limit(m: &Medium, g: &TorusGrid, cfl_fraction: f64) -> f64 {
    let b = m.bounds();
    cfl_fraction * g.spacing() * (b.w_min / b.g_max).sqrt()
}

/// `(L/2)·√(w_min/G_max)`: time before waves launched at the centre can
/// reach the seam.
pub fn wrap_time(m: &Medium, g: &TorusGrid) -> f64 {
    let b = m.bounds();
    0.5 * g.side() * (b.w_min / b.g_max).sqrt()
}

/// Damped Störmer–Verlet stepper; the damping term is treated by the
/// trapezoidal rule inside each half kick.
pub struct WaveSolver {
    op: StiffnessOperator,
    inv_w: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    vol: f64,
    pu: Vec<f64>,
    vh: Vec<f64>,
    pub state: WaveState,
}

impl WaveSolver {
    pub fn new(tables: CoefficientTables, init: &InitialData) -> Result<Self> {
        let grid = tables.grid;
        init.check(&grid)?;
        let mut op = StiffnessOperator::new(grid, tables.g);
        let mut pu = vec![0.0; grid.len()];
        op.apply(&init.u0, &mut pu);
        Ok(WaveSolver {
            op,
            inv_w: tables.w.iter().map(|w| 1.0 / w).collect(),
            a: tables.a,
            b: tables.b,
            vol: grid.cell_volume(),
            pu,
            vh: vec![0.0; grid.len()],
            state: WaveState {
                grid,
                t: 0.0,
                u: init.u0.clone(),
                v: init.u1.clone(),
                dissipated: 0.0,
            },
        })
    }

    fn dissipation_rate(&self) -> f64 {
        let v = &self.state.v;
        2.0 * self.vol * pairwise_map(v.len(), &|i| self.b[i] * v[i] * v[i])
    }

    pub fn step(&mut self, tau: f64) {
        let d0 = self.dissipation_rate();
        let h = 0.5 * tau;
        let s = &mut self.state;
        for i in 0..s.u.len() {
            let ah = h * self.a[i];
            self.vh[i] = (s.v[i] - h * self.inv_w[i] * self.pu[i]) / (1.0 + ah);
            s.u[i] += tau * self.vh[i];
        }
        self.op.apply(&s.u, &mut self.pu);
        for i in 0..s.u.len() {
            let ah = h * self.a[i];
            s.v[i] = self.vh[i] * (1.0 - ah) - h * self.inv_w[i] * self.pu[i];
        }
        s.t += tau;
        let d1 = self.dissipation_rate();
        self.state.dissipated += h * (d0 + d1);
    }

    fn finite(&self) -> bool {
        let s = &self.state;
        pairwise_map(s.u.len(), &|i| s.u[i] * s.u[i] + s.v[i] * s.v[i]).is_finite()
    }

    /// Step to exactly `t_target`, shortening the final step if needed.
    pub fn advance_to(&mut self, t_target: f64, dt: f64, check_every: usize) -> Result<()> {
        let mut count = 0usize;
        while self.state.t < t_target - 1e-12 * dt {
            let tau = dt.min(t_target - self.state.t);
            self.step(tau);
            count += 1;
            if count % check_every.max(1) == 0 && !self.finite() {
                return Err(Error::NonFiniteState { t: self.state.t });
            }
        }
        self.state.t = self.state.t.max(t_target);
        if !self.finite() {
            return Err(Error::NonFiniteState { t: self.state.t });
        }
        Ok(())
    }
}

/// Integrate `w∂_t²u + P_G u + b∂_t u = 0` and return the states at the
/// requested snapshot times (sorted, within `[0, t_end]`).
pub fn run_damped_wave(
    m: &Medium,
    g: &TorusGrid,
    init: &InitialData,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<Vec<WaveState>> {
    run_damped_wave_with(m, g, init, t_end, dt, snapshot_times, WaveOptions::default())
}

pub fn run_damped_wave_with(
    m: &Medium,
    g: &TorusGrid,
    init: &InitialData,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
    opts: WaveOptions,
) -> Result<Vec<WaveState>> {
    let limit = cfl_limit(m, g, opts.cfl_fraction);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    let mut times: Vec<f64> = snapshot_times.to_vec();
    times.sort_by(f64::total_cmp);
    let slack = 1e-12 * t_end.abs().max(1.0);
    if times.first().is_some_and(|t| *t < 0.0) || times.last().is_some_and(|t| *t > t_end + slack) {
        return Err(Error::GridIncompatibility(format!(
            "snapshot times must lie in [0, {t_end}]"
        )));
    }
    let tables = sample_on_grid(m, g)?;
    let mut solver = WaveSolver::new(tables, init)?;
    let mut out = Vec::with_capacity(times.len());
    for t in times {
        solver.advance_to(t.min(t_end), dt, opts.check_every)?;
        out.push(solver.state.clone());
    }
    Ok(out)
}
