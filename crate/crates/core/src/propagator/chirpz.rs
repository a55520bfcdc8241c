//! Chirp-z (Bluestein) evaluation of `H_M = h Σ_J g_J e^{−iα h² J M}` along one axis,
//! for centered indices `J, M ∈ [−n/2, n/2)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;
use crate::transform::for_each_line;

#[derive(Clone)]
pub struct ChirpZ {
    n: usize,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChirpZ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChirpZ").field("n", &self.n).finish()
    }
}

impl ChirpZ {
    /// Tables for scale `alpha` on `grid` (`JM = (J² + M² − (M−J)²)/2`).
    pub fn new(grid: &Grid, alpha: f64) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let beta = alpha * h * h;
        let half = (n / 2) as f64;
        let w = |e: f64| Complex64::from_polar(1.0, -0.5 * beta * e);
        let pre: Vec<Complex64> = (0..n).map(|j| w((j as f64 - half).powi(2))).collect();
        let post: Vec<Complex64> = pre.iter().map(|z| z * h / (2 * n) as f64).collect();
        let p = 2 * n;
        let mut kernel = vec![Complex64::new(0.0, 0.0); p];
        for d in 0..n {
            let v = w(-((d * d) as f64));
            kernel[d] = v;
            if d > 0 {
                kernel[p - d] = v;
            }
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(p);
        let inv = planner.plan_fft_inverse(p);
        fwd.process(&mut kernel);
        Self { n, pre, post, kernel_hat: kernel, fwd, inv }
    }

    fn line(&self, line: &mut [Complex64]) {
        let p = 2 * self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        for j in 0..self.n {
            buf[j] = line[j] * self.pre[j];
        }
        self.fwd.process(&mut buf);
        for (z, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *z *= k;
        }
        self.inv.process(&mut buf);
        for m in 0..self.n {
            line[m] = buf[m] * self.post[m];
        }
    }

    /// Applies the transform along axis 0 and then axis 1 (every `x₃` plane).
    pub fn apply_plane(&self, grid: &Grid, data: &mut [Complex64]) {
        for axis in 0..2 {
            for_each_line(grid, data, axis, |_, line| self.line(line));
        }
    }
}
