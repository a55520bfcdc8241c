//! Space-time norms of the magnetic and free evolutions in 2D.
//!
//! The time integral over `(0, π/B)` is a Gauss–Legendre sum, so the singular
//! endpoints `sin(Bt) = 0` are never evaluated.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::propagator::{apply_us, free_propagator};
use crate::quadrature::{gauss_legendre, AdaptiveQuadrature};
use crate::theory::admissible;
use crate::transform::lq_norm;

pub const DEFAULT_NODES: usize = 64;
/// Boundary mass allowed at any quadrature node.
pub const NODE_BOUNDARY_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evolver {
    /// `U_S(t) = e^{−it(p+A)²}`.
    Magnetic { b: f64 },
    /// `e^{itΔ}`.
    Free,
}

impl Evolver {
    pub fn evolve(&self, f: &ScalarField, t: f64) -> Result<ScalarField> {
        match *self {
            Evolver::Magnetic { b } => apply_us(f, t, b),
            Evolver::Free => free_propagator(f, t, &[0, 1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeDiagnostic {
    pub t: f64,
    pub weight: f64,
    pub norm: f64,
    pub boundary_mass: f64,
}

/// Quadrature value plus per-node data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeNorm {
    pub value: f64,
    pub nodes: Vec<NodeDiagnostic>,
}

fn check_pair(q: f64, r: f64, dim: usize) -> Result<()> {
    if dim != 2 {
        return Err(Error::InvalidArgument("space-time norms are implemented in 2D only".into()));
    }
    if !admissible(q, r, dim) {
        return Err(Error::InvalidArgument(format!("(q, r) = ({q}, {r}) is not admissible")));
    }
    Ok(())
}

/// `(∫ ‖ψ(t)‖_r^q dt)^{1/q}` over `interval` with `nodes` Gauss–Legendre points;
/// for `q = ∞` the supremum over the nodes.
pub fn spacetime_norm(
    evolver: Evolver,
    psi0: &ScalarField,
    q: f64,
    r: f64,
    interval: (f64, f64),
    nodes: usize,
) -> Result<SpacetimeNorm> {
    check_pair(q, r, psi0.grid.dim())?;
    let rule = gauss_legendre(nodes, interval.0, interval.1);
    let diag: Vec<NodeDiagnostic> = rule
        .par_iter()
        .map(|&(t, weight)| {
            let u = evolver.evolve(psi0, t)?;
            let bm = u.boundary_mass();
            if bm > NODE_BOUNDARY_MASS {
                return Err(Error::Unresolved { boundary_mass: bm, threshold: NODE_BOUNDARY_MASS });
            }
            Ok(NodeDiagnostic { t, weight, norm: lq_norm(&u, r)?, boundary_mass: bm })
        })
        .collect::<Result<_>>()?;
    let value = if q.is_infinite() {
        diag.iter().map(|d| d.norm).fold(0.0, f64::max)
    } else {
        diag.iter().map(|d| d.weight * d.norm.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    Ok(SpacetimeNorm { value, nodes: diag })
}

/// `A ((y₁ ± iy₂)/σ)^{|m|} e^{−|y|²/(2σ²)} e^{ik·y}`, `y = x − c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub center: [f64; 2],
    pub width: f64,
    #[serde(default)]
    pub momentum: [f64; 2],
    #[serde(default)]
    pub charge: i32,
    pub amplitude: f64,
}

impl GaussianParams {
    pub fn new(width: f64) -> Self {
        Self { center: [0.0; 2], width, momentum: [0.0; 2], charge: 0, amplitude: 1.0 }
    }

    fn value(&self, x: [f64; 3], t: f64) -> Complex64 {
        let s2 = self.width * self.width;
        let a = Complex64::new(1.0, 2.0 * t / s2);
        let k = self.momentum;
        let y = [x[0] - self.center[0], x[1] - self.center[1]];
        let z = [y[0] - 2.0 * k[0] * t, y[1] - 2.0 * k[1] * t];
        let m = self.charge.unsigned_abs() as i32;
        let sign = if self.charge < 0 { -1.0 } else { 1.0 };
        let vortex = Complex64::new(z[0], sign * z[1]) / self.width;
        let envelope = (-(z[0] * z[0] + z[1] * z[1]) / (2.0 * s2) / a).exp() / a.powi(1 + m);
        let boost = Complex64::from_polar(1.0, k[0] * y[0] + k[1] * y[1] - (k[0] * k[0] + k[1] * k[1]) * t);
        self.amplitude * vortex.powi(m) * envelope * boost
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value(x, 0.0))
    }

    /// `‖ψ₀‖_r^r` from a radial quadrature of the modulus.
    pub fn lr_power(&self, r: f64) -> f64 {
        let m = self.charge.unsigned_abs() as i32;
        let s = self.width;
        let f = |rho: f64| (self.amplitude * (rho / s).powi(m) * (-rho * rho / (2.0 * s * s)).exp()).powf(r);
        AdaptiveQuadrature::default().radial(f, s * (12.0 + 2.0 * m as f64))
    }

    /// Closed-form `‖e^{itΔ}ψ₀‖_r`: the modulus is a dilation by `√(1+τ²)`, `τ = 2t/σ²`.
    pub fn free_lr_norm(&self, t: f64, r: f64) -> f64 {
        if r.is_infinite() {
            return f64::NAN;
        }
        let tau = 2.0 * t / (self.width * self.width);
        (self.lr_power(r) * (1.0 + tau * tau).powf(1.0 - r / 2.0)).powf(1.0 / r)
    }

    /// Closed-form `‖e^{itΔ}ψ₀‖_{L^q_t L^r_x(ℝ×ℝ²)}` for an admissible pair. The time
    /// factor is `∫(1+τ²)^{-1} dt = πσ²/2`.
    pub fn free_spacetime_norm(&self, q: f64, r: f64) -> Result<f64> {
        check_pair(q, r, 2)?;
        let c = self.lr_power(r);
        if q.is_infinite() {
            return Ok(c.powf(1.0 / r));
        }
        Ok((c.powf(q / r) * PI * self.width * self.width / 2.0).powf(1.0 / q))
    }

    /// Exact q-th power of the free norm restricted to `|t| > T`.
    pub fn free_tail_power(&self, q: f64, r: f64, t_max: f64) -> Result<f64> {
        check_pair(q, r, 2)?;
        if q.is_infinite() {
            return Err(Error::InvalidArgument("tail of an L^∞ norm".into()));
        }
        let s2 = self.width * self.width;
        Ok(self.lr_power(r).powf(q / r) * s2 * (PI / 2.0 - (2.0 * t_max / s2).atan()))
    }
}

/// Closed-form `e^{itΔ}` of a Gaussian (with optional vortex charge) sampled on the grid.
pub fn free_gaussian_evolution(params: &GaussianParams, grid: &Grid, t: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| params.value(x, t))
}

/// How the free side is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FreeReference {
    /// Closed form for the Gaussian family.
    Gaussian(GaussianParams),
    /// Grid propagator on `[−t_max, t_max]` plus the dispersive tail bound.
    Truncated { t_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzReport {
    pub q: f64,
    pub r: f64,
    pub b: f64,
    pub nodes: usize,
    /// `‖U_S(t)ψ₀‖_{L^q_t L^r_x((0,π/B)×ℝ²)}`.
    pub lhs: f64,
    /// Relative change of `lhs` when the node count doubles.
    pub lhs_self_convergence: f64,
    /// `‖e^{itΔ}ψ₀‖_{L^q_t L^r_x(ℝ×ℝ²)}`.
    pub free: f64,
    /// Upper bound on the part of the free integral outside the truncation window (q-th power).
    pub free_tail_bound: f64,
    pub printed_prefactor: f64,
    /// `(4π)^{1−4/q}·free`.
    pub rhs_printed: f64,
    pub relative_gap_printed: f64,
    /// `|lhs − free| / free`.
    pub relative_gap: f64,
    pub node_diagnostics: Vec<NodeDiagnostic>,
}

/// `(4π)^{1−4/q}`.
pub fn printed_prefactor(q: f64) -> f64 {
    (4.0 * PI).powf(1.0 - 4.0 / q)
}

/// Compares the magnetic space-time norm over one Larmor period with the free one.
pub fn verify_identity(psi0: &ScalarField, b: f64, q: f64, r: f64, nodes: usize, free: FreeReference) -> Result<StrichartzReport> {
    check_pair(q, r, psi0.grid.dim())?;
    if b == 0.0 {
        return Err(Error::InvalidArgument("B must be nonzero".into()));
    }
    let period = PI / b.abs();
    let ev = Evolver::Magnetic { b };
    let lhs = spacetime_norm(ev, psi0, q, r, (0.0, period), nodes)?;
    let fine = spacetime_norm(ev, psi0, q, r, (0.0, period), 2 * nodes)?;
    let (free_value, tail) = match free {
        FreeReference::Gaussian(g) => (g.free_spacetime_norm(q, r)?, 0.0),
        FreeReference::Truncated { t_max } => free_truncated(psi0, q, r, t_max, nodes)?,
    };
    let pre = printed_prefactor(q);
    let rhs_printed = pre * free_value;
    Ok(StrichartzReport {
        q,
        r,
        b,
        nodes,
        lhs: lhs.value,
        lhs_self_convergence: (fine.value - lhs.value).abs() / fine.value,
        free: free_value,
        free_tail_bound: tail,
        printed_prefactor: pre,
        rhs_printed,
        relative_gap_printed: (lhs.value - rhs_printed).abs() / rhs_printed,
        relative_gap: (lhs.value - free_value).abs() / free_value,
        node_diagnostics: lhs.nodes,
    })
}

/// Free norm over `[−T, T]` on the grid. The tail bound uses
/// `‖e^{itΔ}ψ₀‖_r ≤ (4π|t|)^{−(1−2/r)}‖ψ₀‖_{r'}`, whose q-th power integrates to
/// `2‖ψ₀‖_{r'}^q / ((4π)²T)` over `|t| > T`.
fn free_truncated(psi0: &ScalarField, q: f64, r: f64, t_max: f64, nodes: usize) -> Result<(f64, f64)> {
    if q.is_infinite() {
        return Ok((lq_norm(psi0, 2.0)?, 0.0));
    }
    let left = spacetime_norm(Evolver::Free, psi0, q, r, (-t_max, 0.0), nodes)?.value.powf(q);
    let right = spacetime_norm(Evolver::Free, psi0, q, r, (0.0, t_max), nodes)?.value.powf(q);
    let r_dual = r / (r - 1.0);
    let tail = 2.0 * lq_norm(psi0, r_dual)?.powf(q) / ((4.0 * PI).powi(2) * t_max);
    Ok(((left + right).powf(1.0 / q), tail))
}
