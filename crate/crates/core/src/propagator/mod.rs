//! Exact linear evolution in a uniform field `B e₃`, symmetric gauge.
//!
//! Two equivalent routes are provided for `e^{−it(p+A)²}` on the transverse plane:
//!
//! * the Mehler route ([`apply_mehler_dense`], [`apply_mehler_fast`]): chirp,
//!   scaled Fourier sum, rotation, chirp. Its chirps oscillate at rate `~1/t`, so
//!   it is only usable when `B t` is of order one;
//! * the split route used by [`apply_us`]: `(p+A)² = −Δ⊥ + B L₃ + B²ρ²/4`, where
//!   `L₃` generates rotations and the oscillator part factors exactly as
//!   `e^{−iaρ²} e^{ibΔ⊥} e^{−iaρ²}` with `a = (B/4) tan(Bt/2)`, `b = sin(Bt)/B`.
//!   It stays well conditioned for arbitrarily small steps.

mod chirpz;
mod kernel;
mod rotation;

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;

pub use chirpz::ChirpZ;
pub use kernel::{apply_mehler_dense, mehler_kernel_value, printed_mehler_kernel, SINGULAR_TOL};
pub use rotation::{rotate, Rotation};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpinorField};
use crate::grid::Grid;
use crate::transform::Spectral;

/// Largest `|B Δt|` a single plan may cover.
pub const MAX_ANGLE: f64 = FRAC_PI_4;

#[derive(Debug, Clone)]
struct Chirps {
    input: Vec<Complex64>,
    output: Vec<Complex64>,
    scaled: ChirpZ,
}

/// Tables for one linear substep of duration `t` at field `B` on one grid.
#[derive(Debug, Clone)]
pub struct PropagatorPlan {
    b: f64,
    t: f64,
    grid: Grid,
    spectral: Spectral,
    /// `e^{−iaρ²}` on the transverse plane (`n²` entries).
    kick: Vec<Complex64>,
    /// `e^{−ib(2πk)²}` in FFT order.
    drift: Vec<Complex64>,
    /// `e^{−it(2πk)²}` in FFT order, for the axial factor in 3D.
    axial: Vec<Complex64>,
    rotation: Rotation,
    chirps: Option<Chirps>,
}

fn plane_radius2(grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    (0..n * n)
        .map(|i| grid.coord(i % n).powi(2) + grid.coord(i / n).powi(2))
        .collect()
}

/// `e^{−it(2πk)²}` in FFT order.
pub fn free_phase_table(grid: &Grid, t: f64) -> Vec<Complex64> {
    grid.fft_frequencies()
        .iter()
        .map(|k| Complex64::from_polar(1.0, -t * (2.0 * PI * k).powi(2)))
        .collect()
}

impl PropagatorPlan {
    pub fn new(grid: &Grid, b: f64, t: f64) -> Result<Self> {
        if !(b.is_finite() && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite B = {b} or t = {t}")));
        }
        let theta = b * t;
        if theta.abs() > MAX_ANGLE * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "|B t| = {} exceeds the substep limit π/4",
                theta.abs()
            )));
        }
        let (a, bb) = if b == 0.0 { (0.0, t) } else { (0.25 * b * (0.5 * theta).tan(), theta.sin() / b) };
        let r2 = plane_radius2(grid);
        let kick = r2.iter().map(|&r| Complex64::from_polar(1.0, -a * r)).collect();
        let chirps = if b != 0.0 && theta.sin().abs() > SINGULAR_TOL {
            let cot = 0.25 * b / theta.tan();
            let input: Vec<Complex64> = r2.iter().map(|&r| Complex64::from_polar(1.0, cot * r)).collect();
            let pref = Complex64::new(0.0, -b / (4.0 * PI * theta.sin()));
            let output = input.iter().map(|z| z * pref).collect();
            let scaled = ChirpZ::new(grid, b / (2.0 * theta.sin()));
            Some(Chirps { input, output, scaled })
        } else {
            None
        };
        Ok(Self {
            b,
            t,
            grid: *grid,
            spectral: Spectral::new(grid),
            kick,
            drift: free_phase_table(grid, bb),
            axial: free_phase_table(grid, t),
            rotation: Rotation::new(grid, theta),
            chirps,
        })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn multiply_plane(&self, data: &mut [Complex64], table: &[Complex64]) {
        let plane = table.len();
        data.par_chunks_mut(plane).for_each(|chunk| {
            for (z, w) in chunk.iter_mut().zip(table) {
                *z *= w;
            }
        });
    }

    /// One exact substep of `e^{−it(p+A)²}` (including the axial factor in 3D), in place.
    pub fn step(&self, data: &mut [Complex64]) {
        self.step_transverse(data);
        if self.grid.dim() == 3 {
            self.step_axial(data);
        }
    }

    /// Transverse factor only: `e^{−iaρ²} e^{ibΔ⊥} e^{−iaρ²}` followed by the rotation by `Bt`.
    pub fn step_transverse(&self, data: &mut [Complex64]) {
        self.multiply_plane(data, &self.kick);
        self.spectral.apply_separable(data, &[0, 1], &[self.drift.clone(), self.drift.clone()]);
        self.multiply_plane(data, &self.kick);
        self.rotation.apply(&self.spectral, data);
    }

    /// Axial factor `e^{it∂₃²}` (3D only).
    pub fn step_axial(&self, data: &mut [Complex64]) {
        self.spectral.apply_separable(data, &[2], &[self.axial.clone()]);
    }

    /// Transverse Mehler operator through chirps, a scaled transform and a rotation.
    fn mehler_transverse(&self, data: &mut [Complex64]) -> Result<()> {
        let ch = self.chirps.as_ref().ok_or(Error::SingularTime { b: self.b, t: self.t })?;
        self.multiply_plane(data, &ch.input);
        ch.scaled.apply_plane(&self.grid, data);
        self.rotation.apply(&self.spectral, data);
        self.multiply_plane(data, &ch.output);
        Ok(())
    }
}

/// Fast Mehler operator `M(t)` for the plan's `(B, t)`. On 3D grids it acts on
/// every `x₃` plane (the axial factor is not applied).
pub fn apply_mehler_fast(f: &ScalarField, plan: &PropagatorPlan) -> Result<ScalarField> {
    plan.check_grid(&f.grid)?;
    let mut v = f.values.clone();
    plan.mehler_transverse(&mut v)?;
    Ok(ScalarField { grid: f.grid, values: v })
}

/// `e^{itΔ}` restricted to `axes` (0-based): multiplies the spectrum by `e^{−it(2πk_a)²}`.
pub fn free_propagator(f: &ScalarField, t: f64, axes: &[usize]) -> Result<ScalarField> {
    if let Some(a) = axes.iter().find(|&&a| a >= f.grid.dim()) {
        return Err(Error::InvalidArgument(format!("axis {a} out of range")));
    }
    let mut v = f.values.clone();
    if t != 0.0 && !axes.is_empty() {
        let sp = Spectral::new(&f.grid);
        let table = free_phase_table(&f.grid, t);
        sp.apply_separable(&mut v, axes, &vec![table; axes.len()]);
    }
    Ok(ScalarField { grid: f.grid, values: v })
}

/// Number of equal substeps needed so that each has `|B Δt| ≤ π/4`.
pub fn substeps_for(b: f64, t: f64) -> usize {
    ((b * t).abs() / MAX_ANGLE).ceil().max(1.0) as usize
}

/// Linear evolution over an arbitrary duration: a plan plus a substep count.
#[derive(Debug, Clone)]
pub struct LinearStepper {
    plan: PropagatorPlan,
    substeps: usize,
}

impl LinearStepper {
    pub fn new(grid: &Grid, b: f64, t: f64) -> Result<Self> {
        let substeps = substeps_for(b, t);
        Ok(Self { plan: PropagatorPlan::new(grid, b, t / substeps as f64)?, substeps })
    }

    pub fn plan(&self) -> &PropagatorPlan {
        &self.plan
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn duration(&self) -> f64 {
        self.plan.t * self.substeps as f64
    }

    pub fn apply_in_place(&self, data: &mut [Complex64]) {
        for _ in 0..self.substeps {
            self.plan.step(data);
        }
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.plan.check_grid(&f.grid)?;
        let mut v = f.values.clone();
        self.apply_in_place(&mut v);
        Ok(ScalarField { grid: f.grid, values: v })
    }

    pub fn apply_spinor(&self, f: &SpinorField) -> Result<SpinorField> {
        self.plan.check_grid(&f.grid)?;
        let (mut up, mut down) = (f.up.clone(), f.down.clone());
        self.apply_in_place(&mut up);
        self.apply_in_place(&mut down);
        zeeman(&mut up, &mut down, self.plan.b, self.duration());
        Ok(SpinorField { grid: f.grid, up, down })
    }
}

/// `U_S(t) = e^{−it(p+A)²}` (with `e^{it∂₃²}` in 3D), split into substeps of `|B Δt| ≤ π/4`.
pub fn apply_us(f: &ScalarField, t: f64, b: f64) -> Result<ScalarField> {
    LinearStepper::new(&f.grid, b, t)?.apply(f)
}

/// `U_P(t) = e^{−iBtσ₃} U_S(t)` on a spinor.
pub fn apply_up(f: &SpinorField, t: f64, b: f64) -> Result<SpinorField> {
    LinearStepper::new(&f.grid, b, t)?.apply_spinor(f)
}

pub(crate) fn zeeman(up: &mut [Complex64], down: &mut [Complex64], b: f64, t: f64) {
    let ph = Complex64::from_polar(1.0, -b * t);
    up.par_iter_mut().for_each(|z| *z *= ph);
    let ph = ph.conj();
    down.par_iter_mut().for_each(|z| *z *= ph);
}
