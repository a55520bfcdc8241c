//! Band-limited rotation of the (x₁, x₂) plane by three Fourier shears.
//!
//! `R(−θ) = X(a)·Y(b)·X(a)` with `X = [[1, a], [0, 1]]`, `Y = [[1, 0], [b, 1]]`,
//! `a = tan(θ/2)`, `b = −sin θ`. Each shear translates every row (or column) by
//! a row-dependent amount through a phase ramp on its 1D spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::grid::Grid;
use crate::transform::{for_each_line, Spectral};

/// Precomputed phase ramps for one rotation angle on one grid.
#[derive(Debug, Clone)]
pub struct Rotation {
    angle: f64,
    /// `x_shear[i][m] = e^{2πi k_m a x(i)} / n` for the shears along axis 0.
    x_shear: Vec<Vec<Complex64>>,
    /// Same for the shear along axis 1 with slope `b`.
    y_shear: Vec<Vec<Complex64>>,
}

fn ramps(grid: &Grid, slope: f64) -> Vec<Vec<Complex64>> {
    let n = grid.n();
    let inv_n = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let s = slope * grid.coord(i);
            (0..n)
                .map(|m| Complex64::from_polar(inv_n, 2.0 * PI * grid.fft_frequency(m) * s))
                .collect()
        })
        .collect()
}

impl Rotation {
    pub fn new(grid: &Grid, angle: f64) -> Self {
        Self {
            angle,
            x_shear: ramps(grid, (0.5 * angle).tan()),
            y_shear: ramps(grid, -angle.sin()),
        }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// In place `f(x) ← f(R(−θ)x)` on every `x₃` plane, i.e. the field is turned by `+θ`.
    pub fn apply(&self, sp: &Spectral, data: &mut [Complex64]) {
        if self.angle == 0.0 {
            return;
        }
        self.shear(sp, data, 0, &self.x_shear);
        self.shear(sp, data, 1, &self.y_shear);
        self.shear(sp, data, 0, &self.x_shear);
    }

    fn shear(&self, sp: &Spectral, data: &mut [Complex64], axis: usize, table: &[Vec<Complex64>]) {
        let fwd = sp.forward_plan();
        let inv = sp.inverse_plan();
        let other = 1 - axis;
        for_each_line(sp.grid(), data, axis, |idx, line| {
            fwd.process(line);
            for (z, w) in line.iter_mut().zip(&table[idx[other]]) {
                *z *= w;
            }
            inv.process(line);
        });
    }
}

/// Rotates a copy of `values` by `angle` (see [`Rotation::apply`]).
pub fn rotate(grid: &Grid, values: &[Complex64], angle: f64) -> Vec<Complex64> {
    let sp = Spectral::new(grid);
    let mut out = values.to_vec();
    Rotation::new(grid, angle).apply(&sp, &mut out);
    out
}
