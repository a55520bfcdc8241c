//! Discrete Fourier transforms, inner products and L^q norms on grid fields.
//!
//! [`forward_transform`] approximates `(Ff)(k) = ∫ e^{-2πik·x} f(x) dx` on the
//! centered frequency lattice. Everything else in the crate works with the raw
//! FFT ordering through [`Spectral`], where momentum `p = -i∇` acts as the
//! multiplier `2πk`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpinorField};
use crate::grid::Grid;

/// Anything made of one or more complex components on a shared grid.
pub trait Field {
    fn grid(&self) -> &Grid;
    fn components(&self) -> Vec<&[Complex64]>;
}

impl Field for ScalarField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn components(&self) -> Vec<&[Complex64]> {
        vec![&self.values]
    }
}

impl Field for SpinorField {
    fn grid(&self) -> &Grid {
        &self.grid
    }
    fn components(&self) -> Vec<&[Complex64]> {
        vec![&self.up, &self.down]
    }
}

/// Cached FFT plans for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            fwd: planner.plan_fft_forward(grid.n()),
            inv: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Unnormalized 1D transform along `axis` (0-based), in place.
    pub fn fft_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        for_each_line(&self.grid, data, axis, |_, line| plan.process(line));
    }

    pub fn fft_axes(&self, data: &mut [Complex64], axes: &[usize], inverse: bool) {
        for &a in axes {
            self.fft_axis(data, a, inverse);
        }
    }

    pub fn forward_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.fwd
    }

    pub fn inverse_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.inv
    }

    pub fn all_axes(&self) -> Vec<usize> {
        (0..self.grid.dim()).collect()
    }

    /// Multiplies the spectrum over `axes` by `Π_a table[a][m_a]` (tables in FFT order).
    pub fn apply_separable(&self, data: &mut [Complex64], axes: &[usize], tables: &[Vec<Complex64>]) {
        debug_assert_eq!(axes.len(), tables.len());
        self.fft_axes(data, axes, false);
        let n = self.grid.n();
        let norm = 1.0 / (n as f64).powi(axes.len() as i32);
        let grid = self.grid;
        data.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
            let base = grid.unravel(row * n);
            for (i0, z) in chunk.iter_mut().enumerate() {
                let idx = [i0, base[1], base[2]];
                let mut w = Complex64::new(norm, 0.0);
                for (a, t) in axes.iter().zip(tables) {
                    w *= t[idx[*a]];
                }
                *z *= w;
            }
        });
        self.fft_axes(data, axes, true);
    }

    /// Angular wavenumbers `2πk` in FFT order, with the Nyquist bin zeroed.
    pub fn momentum_table(&self) -> Vec<f64> {
        let n = self.grid.n();
        (0..n)
            .map(|m| if m == n / 2 { 0.0 } else { 2.0 * PI * self.grid.fft_frequency(m) })
            .collect()
    }

    /// `p_j ψ` for a single axis `j`.
    pub fn momentum_axis(&self, values: &[Complex64], axis: usize) -> Vec<Complex64> {
        let mut d = values.to_vec();
        self.fft_axis(&mut d, axis, false);
        let kt = self.momentum_table();
        let n = self.grid.n();
        let norm = 1.0 / n as f64;
        let grid = self.grid;
        d.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
            let base = grid.unravel(row * n);
            for (i0, z) in chunk.iter_mut().enumerate() {
                let m = [i0, base[1], base[2]][axis];
                *z *= kt[m] * norm;
            }
        });
        self.fft_axis(&mut d, axis, true);
        d
    }

    /// `p_j ψ = -i ∂_j ψ` for every axis `j`.
    pub fn momentum(&self, values: &[Complex64]) -> Vec<Vec<Complex64>> {
        let mut spec = values.to_vec();
        let all = self.all_axes();
        self.fft_axes(&mut spec, &all, false);
        let kt = self.momentum_table();
        let n = self.grid.n();
        let norm = 1.0 / self.grid.len() as f64;
        (0..self.grid.dim())
            .map(|axis| {
                let mut d = spec.clone();
                let grid = self.grid;
                d.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
                    let base = grid.unravel(row * n);
                    for (i0, z) in chunk.iter_mut().enumerate() {
                        let m = [i0, base[1], base[2]][axis];
                        *z *= kt[m] * norm;
                    }
                });
                self.fft_axes(&mut d, &all, true);
                d
            })
            .collect()
    }
}

/// Runs `f` on every 1D line along `axis`; `f` receives the multi-index of the
/// line start (axis component zero) and the line as a contiguous buffer.
pub fn for_each_line<F>(grid: &Grid, data: &mut [Complex64], axis: usize, f: F)
where
    F: Fn([usize; 3], &mut [Complex64]) + Sync,
{
    let n = grid.n();
    let dim = grid.dim();
    assert!(axis < dim, "axis {axis} out of range for dimension {dim}");
    if axis == 0 {
        data.par_chunks_mut(n).enumerate().for_each(|(row, line)| f(grid.unravel(row * n), line));
        return;
    }
    let stride = n.pow(axis as u32);
    let block = stride * n;
    // Gather strided lines into contiguous rows, process, scatter back.
    let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
    {
        let src: &[Complex64] = data;
        buf.par_chunks_mut(n).enumerate().for_each(|(line, out)| {
            let start = (line / stride) * block + line % stride;
            for (k, z) in out.iter_mut().enumerate() {
                *z = src[start + k * stride];
            }
            f(grid.unravel(start), out);
        });
    }
    data.par_chunks_mut(stride).enumerate().for_each(|(c, out)| {
        let b = c / n;
        let k = c % n;
        for (o, z) in out.iter_mut().enumerate() {
            *z = buf[(b * stride + o) * n + k];
        }
    });
}

fn check_same(a: &Grid, b: &Grid) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn sign(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn checkerboard(grid: &Grid, values: &mut [Complex64], scale: f64) {
    let n = grid.n();
    let grid = *grid;
    values.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
        let base = grid.unravel(row * n);
        let s = sign(base[1] + base[2]) * scale;
        for (i0, z) in chunk.iter_mut().enumerate() {
            *z *= sign(i0) * s;
        }
    });
}

/// Samples of `Ff` at `k = (m - n/2)/(2L)`, stored with the same layout as the
/// input on the dual grid (see [`Grid::dual`]), so norms use the frequency measure.
pub fn forward_transform(f: &ScalarField) -> ScalarField {
    let grid = f.grid;
    let sp = Spectral::new(&grid);
    let mut v = f.values.clone();
    checkerboard(&grid, &mut v, 1.0);
    sp.fft_axes(&mut v, &sp.all_axes(), false);
    checkerboard(&grid, &mut v, grid.cell_volume());
    ScalarField { grid: grid.dual(), values: v }
}

/// Inverse of [`forward_transform`].
pub fn inverse_transform(fhat: &ScalarField) -> ScalarField {
    let grid = fhat.grid.dual();
    let sp = Spectral::new(&grid);
    let mut v = fhat.values.clone();
    checkerboard(&grid, &mut v, 1.0);
    sp.fft_axes(&mut v, &sp.all_axes(), true);
    let scale = fhat.grid.cell_volume();
    checkerboard(&grid, &mut v, scale);
    ScalarField { grid, values: v }
}

/// `h^dim Σ conj(f)·g`, summed over components.
pub fn inner_product<F: Field>(f: &F, g: &F) -> Result<Complex64> {
    check_same(f.grid(), g.grid())?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, b) in f.components().into_iter().zip(g.components()) {
        acc += dot(a, b);
    }
    Ok(acc * f.grid().cell_volume())
}

/// `Σ conj(a)·b` without the volume element.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `(h^dim Σ |f|^q)^{1/q}`, with `|f|` the pointwise (spinor) modulus; `q = ∞` gives the max.
pub fn lq_norm<F: Field>(f: &F, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^q norm needs q >= 1, got {q}")));
    }
    let comps = f.components();
    let len = comps[0].len();
    let modsq = |i: usize| comps.iter().map(|c| c[i].norm_sqr()).sum::<f64>();
    if q.is_infinite() {
        return Ok((0..len).map(|i| modsq(i).sqrt()).fold(0.0, f64::max));
    }
    let s: f64 = (0..len).map(|i| modsq(i).powf(q / 2.0)).sum();
    Ok((s * f.grid().cell_volume()).powf(1.0 / q))
}

/// `h^dim Σ |f|^q` without the final root.
pub fn lq_power(components: &[&[Complex64]], grid: &Grid, q: f64) -> f64 {
    let len = components[0].len();
    let s: f64 = (0..len)
        .map(|i| components.iter().map(|c| c[i].norm_sqr()).sum::<f64>().powf(q / 2.0))
        .sum();
    s * grid.cell_volume()
}

pub fn mass<F: Field>(f: &F) -> f64 {
    lq_power(&f.components(), f.grid(), 2.0)
}
