use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform grid on the torus of `periods` unit cells per axis, `n` points per
/// cell. Lattice coordinates run over `[0, L)`; centred coordinates subtract
/// `L/2` so that the torus centre sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub d: usize,
    pub n: usize,
    pub periods: usize,
}

impl TorusGrid {
    pub fn new(d: usize, n: usize, periods: usize) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::InvalidGrid(format!("dimension {d} not supported")));
        }
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "cells_per_period must be even and positive, got {n}"
            )));
        }
        if periods == 0 {
            return Err(Error::InvalidGrid("periods must be positive".into()));
        }
        Ok(TorusGrid { d, n, periods })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn side(&self) -> f64 {
        self.periods as f64
    }

    pub fn points_per_axis(&self) -> usize {
        self.n * self.periods
    }

    pub fn len(&self) -> usize {
        self.points_per_axis().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        let m = self.points_per_axis();
        if self.d == 1 {
            [idx, 0]
        } else {
            [idx / m, idx % m]
        }
    }

    pub fn lattice_coords(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let [i0, i1] = self.axis_indices(idx);
        [i0 as f64 * h, i1 as f64 * h]
    }

    pub fn centered_coords(&self, idx: usize) -> [f64; 2] {
        let half = 0.5 * self.side();
        let [x0, x1] = self.lattice_coords(idx);
        if self.d == 1 {
            [x0 - half, 0.0]
        } else {
            [x0 - half, x1 - half]
        }
    }

    /// Japanese bracket `⟨x⟩ = (1 + |x|²)^{1/2}` of the centred coordinate.
    pub fn bracket(&self, idx: usize) -> f64 {
        let x = self.centered_coords(idx);
        (1.0 + x[0] * x[0] + x[1] * x[1]).sqrt()
    }

    /// The same torus seen as a single unit cell at the given resolution.
    pub fn unit_cell(d: usize, n: usize) -> Result<Self> {
        TorusGrid::new(d, n, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_resolution() {
        assert!(TorusGrid::new(1, 7, 4).is_err());
        assert!(TorusGrid::new(3, 8, 4).is_err());
    }

    #[test]
    fn coordinates_are_centred() {
        let g = TorusGrid::new(2, 4, 8).unwrap();
        assert_eq!(g.points_per_axis(), 32);
        assert_eq!(g.len(), 1024);
        assert_eq!(g.centered_coords(0), [-4.0, -4.0]);
        assert_eq!(g.centered_coords(16 * 32 + 16), [0.0, 0.0]);
        assert_eq!(g.lattice_coords(33), [0.25, 0.25]);
    }
}
