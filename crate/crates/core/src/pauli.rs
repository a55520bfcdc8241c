//! Spinor evolution `i∂ₜψ = [σ·(p+A)]²ψ + μ|ψ|^{p-1}ψ` and its variance oracles.
//!
//! The linear flow is `e^{−iBtσ₃}U_S(t)`; the nonlinear phase uses the spinor
//! modulus `|ψ|² = |ψ₁|² + |ψ₂|²`, so it commutes with `σ₃`.

use num_complex::Complex64;

use crate::dynamics::{initial_components, run, RunOutput, SimConfig};
use crate::error::Result;
use crate::field::SpinorField;
use crate::observables::{rho_norm_sq, virial_coefficient};
use crate::transform::lq_power;
use crate::theory::{blowup_sufficient, exact_variance, first_zero, VarianceParams, Verdict};

/// Pauli run from the configured initial spinor; snapshots carry two components.
pub fn evolve_pauli(config: &SimConfig) -> Result<RunOutput> {
    config.validate()?;
    let comps = initial_components(config, true)?;
    evolve_spinor(config, comps)
}

/// Pauli run from explicit components `[up, down]`.
pub fn evolve_spinor(config: &SimConfig, comps: Vec<Vec<Complex64>>) -> Result<RunOutput> {
    let mut snapshots = Vec::new();
    let mut out = run(config, comps, &mut |s| {
        snapshots.push(s);
        Ok(())
    })?;
    out.snapshots = snapshots;
    Ok(out)
}

/// `2F_P0 + μd((p−1−4/d)/(p+1))‖ψ‖_{p+1}^{p+1} − B²‖ρψ‖²` with spinor moduli.
pub fn virial_rhs_p(f: &SpinorField, mu: f64, p: f64, b: f64, f_p0: f64) -> f64 {
    let (up, down) = (f.up_field(), f.down_field());
    let nl = lq_power(&[&f.up, &f.down], &f.grid, p + 1.0);
    let d = f.grid.dim();
    2.0 * f_p0 + virial_coefficient(mu, p, d) * nl - b * b * (rho_norm_sq(&up) + rho_norm_sq(&down))
}

/// Closed-form variance with `F_P` in place of `F_S` (d = 2, p = 3).
pub fn exact_variance_pauli(f_p0: f64, b: f64, g0: f64, gdot0: f64, t: f64) -> Result<f64> {
    exact_variance(&VarianceParams { f0: f_p0, b, g0, gdot0 }, t)
}

/// First zero of the Pauli variance, if any.
pub fn first_zero_pauli(f_p0: f64, b: f64, g0: f64, gdot0: f64) -> Option<f64> {
    first_zero(&VarianceParams { f0: f_p0, b, g0, gdot0 })
}

/// Sufficient blow-up test with `F_P`.
pub fn blowup_sufficient_pauli(f_p0: f64, gdot0: f64, mu: f64, p: f64, d: usize) -> Verdict {
    blowup_sufficient(f_p0, gdot0, mu, p, d)
}
