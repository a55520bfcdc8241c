//! Uniform periodic grids on `[-L, L)^dim` and their dual frequency lattices.
//!
//! Samples are stored row-major with `x1` varying fastest: the flat index of
//! `(i1, i2, i3)` is `i1 + n * (i2 + n * i3)`. Frequencies are in cycles per
//! unit length, matching the transform convention `(Ff)(k) = ∫ e^{-2πik·x} f(x) dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    #[serde(rename = "L")]
    extent: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {extent}")));
        }
        Ok(Self { dim, n, extent })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-width `L` of the domain.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of sample `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Spacing of the dual lattice, `1 / (2L)`.
    pub fn frequency_spacing(&self) -> f64 {
        0.5 / self.extent
    }

    /// Frequency of centered index `m`, i.e. `(m - n/2) / (2L)`.
    pub fn centered_frequency(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.frequency_spacing()
    }

    /// Frequency of FFT-ordered bin `m` (non-negative bins first).
    pub fn fft_frequency(&self, m: usize) -> f64 {
        let n = self.n as isize;
        let m = m as isize;
        let signed = if m < n / 2 { m } else { m - n };
        signed as f64 * self.frequency_spacing()
    }

    pub fn fft_frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.fft_frequency(m)).collect()
    }

    /// Splits a flat index into per-axis indices (unused axes are zero).
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            2 => [idx % n, idx / n, 0],
            _ => [idx % n, (idx / n) % n, idx / (n * n)],
        }
    }

    pub fn ravel(&self, i: [usize; 3]) -> usize {
        i[0] + self.n * (i[1] + self.n * i[2])
    }

    /// Position of flat index `idx` (third component zero in 2D).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let i = self.unravel(idx);
        let z = if self.dim == 3 { self.coord(i[2]) } else { 0.0 };
        [self.coord(i[0]), self.coord(i[1]), z]
    }

    /// Whether the flat index lies in the boundary shell used by the resolution guard.
    pub fn in_boundary_shell(&self, idx: usize) -> bool {
        let w = self.shell_width();
        let i = self.unravel(idx);
        i[..self.dim].iter().any(|&k| k < w || k >= self.n - w)
    }

    /// Thickness (in cells) of the boundary shell: `n / 32`, at least two cells.
    pub fn shell_width(&self) -> usize {
        (self.n / 32).max(2)
    }

    /// The frequency lattice viewed as a grid: extent `n/(4L)`, spacing `1/(2L)`,
    /// so coordinate `m` is exactly `centered_frequency(m)`.
    pub fn dual(&self) -> Grid {
        Grid { dim: self.dim, n: self.n, extent: self.n as f64 / (4.0 * self.extent) }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && (self.extent - other.extent).abs() <= 1e-12 * self.extent
    }
}

pub fn make_grid(dim: usize, n: usize, extent: f64) -> Result<Grid> {
    Grid::new(dim, n, extent)
}
