//! Energies, angular momentum, blow-up functionals, variance and virial terms.
//!
//! Conventions: `π = p + A`, `p = −i∇`, `A = (B/2)(−x₂, x₁, 0)`, `L₃ = x₁p₂ − x₂p₁`,
//! `ρ² = x₁² + x₂²`. Functionals that have two algebraically independent forms
//! are evaluated both ways and compared with [`check_pair`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpinorField};
use crate::grid::Grid;
use crate::transform::{dot, lq_power, Spectral};

/// Relative tolerance for dual-form agreement.
pub const DUAL_FORM_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Fails with [`Error::InternalConsistency`] unless `|a − b| ≤ tol · scale`.
pub fn check_pair(quantity: &'static str, a: f64, b: f64, scale: f64, tol: f64) -> Result<()> {
    let scale = scale.abs().max(a.abs()).max(b.abs()).max(f64::MIN_POSITIVE);
    if (a - b).abs() <= tol * scale {
        Ok(())
    } else {
        Err(Error::InternalConsistency { quantity, first: a, second: b })
    }
}

/// Vector potential `A(x)` of the symmetric gauge.
pub fn vector_potential(b: f64, x: [f64; 3]) -> [f64; 3] {
    [-0.5 * b * x[1], 0.5 * b * x[0], 0.0]
}

fn weighted(grid: &Grid, values: &[Complex64], w: impl Fn([f64; 3]) -> f64) -> f64 {
    values.iter().enumerate().map(|(i, z)| w(grid.point(i)) * z.norm_sqr()).sum::<f64>() * grid.cell_volume()
}

/// Per-component building blocks shared by the scalar and Pauli functionals.
#[derive(Debug, Clone)]
struct Parts {
    /// `p_j ψ` for each axis.
    momentum: Vec<Vec<Complex64>>,
    /// `π_j ψ` for each axis.
    covariant: Vec<Vec<Complex64>>,
}

fn parts(sp: &Spectral, values: &[Complex64], b: f64) -> Parts {
    let grid = sp.grid();
    let (xs, n) = (grid.coords(), grid.n());
    let momentum = sp.momentum(values);
    let covariant = momentum
        .iter()
        .enumerate()
        .map(|(j, pj)| {
            pj.par_iter()
                .enumerate()
                .map(|(i, z)| {
                    let a = match j {
                        0 => -0.5 * b * xs[(i / n) % n],
                        1 => 0.5 * b * xs[i % n],
                        _ => 0.0,
                    };
                    z + values[i] * a
                })
                .collect()
        })
        .collect();
    Parts { momentum, covariant }
}

fn norm2(grid: &Grid, comps: &[Vec<Complex64>]) -> f64 {
    comps.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() * grid.cell_volume()
}

/// `Re⟨x⊥ψ, Vψ⟩ = Re Σ_j ⟨x⊥_j ψ, V_j ψ⟩`.
fn perp_cross(grid: &Grid, values: &[Complex64], v: &[Vec<Complex64>]) -> f64 {
    let mut acc = 0.0;
    for (i, z) in values.iter().enumerate() {
        let x = grid.point(i);
        acc += (z.conj() * (v[0][i] * (-x[1]) + v[1][i] * x[0])).re;
    }
    acc * grid.cell_volume()
}

/// `Re⟨xψ, Vψ⟩ = Re Σ_j ⟨x_j ψ, V_j ψ⟩`.
fn radial_cross(grid: &Grid, values: &[Complex64], v: &[Vec<Complex64>]) -> f64 {
    let mut acc = 0.0;
    for (i, z) in values.iter().enumerate() {
        let x = grid.point(i);
        let mut s = ZERO;
        for (j, vj) in v.iter().enumerate() {
            s += vj[i] * x[j];
        }
        acc += (z.conj() * s).re;
    }
    acc * grid.cell_volume()
}

/// `⟨ψ, ((x·p + p·x)/2 + x·A) ψ⟩`, the dilation form of `ġ`.
fn dilation_form(sp: &Spectral, values: &[Complex64], momentum: &[Vec<Complex64>], b: f64) -> f64 {
    let grid = sp.grid();
    let mut sym = vec![ZERO; values.len()];
    for j in 0..grid.dim() {
        let xj: Vec<Complex64> = values.iter().enumerate().map(|(i, z)| z * grid.point(i)[j]).collect();
        let pxj = &sp.momentum_axis(&xj, j);
        for i in 0..values.len() {
            let x = grid.point(i);
            sym[i] += (momentum[j][i] * x[j] + pxj[i]) * 0.5 + values[i] * (x[j] * vector_potential(b, x)[j]);
        }
    }
    dot(values, &sym).re * grid.cell_volume()
}

/// `Σ_j π_j ψ` components, `π_j = −i∂_j + A_j`.
pub fn covariant_gradient(f: &ScalarField, b: f64) -> Vec<Vec<Complex64>> {
    parts(&Spectral::new(&f.grid), &f.values, b).covariant
}

/// `T_S = ‖(p + A)ψ‖²`.
pub fn kinetic_s(f: &ScalarField, b: f64) -> f64 {
    norm2(&f.grid, &covariant_gradient(f, b))
}

/// `‖ψ‖_{p+1}^{p+1}`.
pub fn lp1(f: &ScalarField, p: f64) -> f64 {
    lq_power(&[&f.values], &f.grid, p + 1.0)
}

/// `E_S = T_S + (2μ/(p+1))‖ψ‖_{p+1}^{p+1}`.
pub fn energy_s(f: &ScalarField, mu: f64, p: f64, b: f64) -> f64 {
    kinetic_s(f, b) + 2.0 * mu / (p + 1.0) * lp1(f, p)
}

/// `F_S` from its definition, after checking it against `E₀ + (B²/4)‖ρψ‖²`.
pub fn f_s(f: &ScalarField, mu: f64, p: f64, b: f64) -> Result<f64> {
    let o = Observer::new(&f.grid).scalar(&f.values, mu, p, b)?;
    Ok(o.f_s)
}

/// `⟨ψ, L₃ψ⟩`.
pub fn l3(f: &ScalarField) -> f64 {
    let sp = Spectral::new(&f.grid);
    l3_from(&f.grid, &f.values, &sp.momentum(&f.values))
}

fn l3_from(grid: &Grid, values: &[Complex64], mom: &[Vec<Complex64>]) -> f64 {
    let mut acc = 0.0;
    for (i, z) in values.iter().enumerate() {
        let x = grid.point(i);
        acc += (z.conj() * (mom[1][i] * x[0] - mom[0][i] * x[1])).re;
    }
    acc * grid.cell_volume()
}

/// `‖ρψ‖²` (transverse radius only).
pub fn rho_norm_sq(f: &ScalarField) -> f64 {
    weighted(&f.grid, &f.values, |x| x[0] * x[0] + x[1] * x[1])
}

/// `g = ¼‖xψ‖²`.
pub fn variance_g(f: &ScalarField) -> f64 {
    0.25 * weighted(&f.grid, &f.values, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
}

/// `ġ = Re⟨xψ, (p + A)ψ⟩`.
pub fn gdot(f: &ScalarField, b: f64) -> f64 {
    radial_cross(&f.grid, &f.values, &covariant_gradient(f, b))
}

/// Coefficient `μ d (p − (1 + 4/d)) / (p + 1)` of the nonlinear virial term.
pub fn virial_coefficient(mu: f64, p: f64, d: usize) -> f64 {
    let d = d as f64;
    mu * d * (p - (1.0 + 4.0 / d)) / (p + 1.0)
}

/// `g̈ = 2F₀ + μd((p − (1+4/d))/(p+1))‖ψ‖_{p+1}^{p+1} − B²‖ρψ‖²`.
pub fn virial_rhs_s(f: &ScalarField, mu: f64, p: f64, b: f64, f0: f64) -> f64 {
    2.0 * f0 + virial_coefficient(mu, p, f.grid.dim()) * lp1(f, p) - b * b * rho_norm_sq(f)
}

/// All scalar functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarObservables {
    pub mass: f64,
    /// `‖∇ψ‖²`.
    pub grad_sq: f64,
    pub kinetic: f64,
    pub energy: f64,
    /// `E_S` at `B = 0`, i.e. `‖∇ψ‖² + (2μ/(p+1))‖ψ‖_{p+1}^{p+1}`.
    pub energy_free: f64,
    pub f_s: f64,
    pub f_s_expanded: f64,
    pub l3: f64,
    pub rho_sq: f64,
    pub g: f64,
    pub gdot: f64,
    /// `ġ` from the dilation form; agrees with `gdot` only while the field is resolved.
    pub gdot_dilation: f64,
    pub lp1: f64,
}

/// All Pauli functionals of one spinor state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliObservables {
    pub mass: f64,
    pub kinetic: f64,
    pub kinetic_direct: f64,
    pub energy: f64,
    pub f_p: f64,
    pub f_p_expanded: f64,
    pub spin_z: f64,
    pub rho_sq: f64,
    pub g: f64,
    pub gdot: f64,
    pub lp1: f64,
    /// `Re⟨σ·x⊥ψ, σ·(p+A)ψ⟩`.
    pub spin_cross: f64,
    /// Sum of the scalar `L₃` expectations of both components.
    pub l3: f64,
    /// Sum of the scalar `T_S` of both components.
    pub kinetic_s_sum: f64,
    /// Sum of the scalar `F_S`-kinetic parts `‖∇ψ_c‖² + (B²/4)‖ρψ_c‖²`.
    pub energy_s_sum: f64,
}

/// Evaluates functionals on one grid, reusing transform plans.
#[derive(Debug, Clone)]
pub struct Observer {
    sp: Spectral,
    tol: f64,
}

impl Observer {
    pub fn new(grid: &Grid) -> Self {
        Self { sp: Spectral::new(grid), tol: DUAL_FORM_TOL }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.sp.grid()
    }

    /// `Σ_c ‖(p + A)ψ_c‖²` alone.
    pub fn kinetic(&self, comps: &[Vec<Complex64>], b: f64) -> f64 {
        comps.iter().map(|c| norm2(self.grid(), &parts(&self.sp, c, b).covariant)).sum()
    }

    /// Scalar functionals; fails when a dual form disagrees.
    pub fn scalar(&self, values: &[Complex64], mu: f64, p: f64, b: f64) -> Result<ScalarObservables> {
        let grid = *self.grid();
        let pr = parts(&self.sp, values, b);
        let mass = lq_power(&[values], &grid, 2.0);
        let grad_sq = norm2(&grid, &pr.momentum);
        let kinetic = norm2(&grid, &pr.covariant);
        let lp1 = lq_power(&[values], &grid, p + 1.0);
        let nl = 2.0 * mu / (p + 1.0) * lp1;
        let energy = kinetic + nl;
        let energy_free = grad_sq + nl;
        let rho_sq = weighted(&grid, values, |x| x[0] * x[0] + x[1] * x[1]);
        let cross = perp_cross(&grid, values, &pr.covariant);
        let f_s = energy - b * cross + 0.5 * b * b * rho_sq;
        let f_s_expanded = energy_free + 0.25 * b * b * rho_sq;
        let scale = kinetic.abs() + nl.abs() + (b * cross).abs() + (b * b * rho_sq).abs();
        check_pair("F_S", f_s, f_s_expanded, scale, self.tol)?;
        let l3 = l3_from(&grid, values, &pr.momentum);
        check_pair("E_S - F_S = B<L3>", energy - f_s, b * l3, scale, self.tol)?;
        let g = 0.25 * weighted(&grid, values, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        let gdot = radial_cross(&grid, values, &pr.covariant);
        let gdot_dilation = dilation_form(&self.sp, values, &pr.momentum, b);
        Ok(ScalarObservables {
            mass,
            grad_sq,
            kinetic,
            energy,
            energy_free,
            f_s,
            f_s_expanded,
            l3,
            rho_sq,
            g,
            gdot,
            gdot_dilation,
            lp1,
        })
    }

    /// Pauli functionals; fails when a dual form disagrees.
    pub fn pauli(&self, up: &[Complex64], down: &[Complex64], mu: f64, p: f64, b: f64) -> Result<PauliObservables> {
        let grid = *self.grid();
        let dim = grid.dim();
        let h = grid.cell_volume();
        let pu = parts(&self.sp, up, b);
        let pd = parts(&self.sp, down, b);
        let m_up = lq_power(&[up], &grid, 2.0);
        let m_down = lq_power(&[down], &grid, 2.0);
        let spin_z = m_up - m_down;
        let t_up = norm2(&grid, &pu.covariant);
        let t_down = norm2(&grid, &pd.covariant);
        let kinetic = t_up + t_down + b * spin_z;

        // σ·V applied to (ψ₁, ψ₂) with V given per component and axis.
        let sigma = |v_up: &dyn Fn(usize, usize) -> Complex64, v_dn: &dyn Fn(usize, usize) -> Complex64| {
            let i_unit = Complex64::new(0.0, 1.0);
            let n = up.len();
            let mut s_up = vec![ZERO; n];
            let mut s_dn = vec![ZERO; n];
            for i in 0..n {
                s_up[i] = v_dn(0, i) - i_unit * v_dn(1, i);
                s_dn[i] = v_up(0, i) + i_unit * v_up(1, i);
                if dim == 3 {
                    s_up[i] += v_up(2, i);
                    s_dn[i] -= v_dn(2, i);
                }
            }
            (s_up, s_dn)
        };
        let (spi_up, spi_dn) = sigma(&|j, i| pu.covariant[j][i], &|j, i| pd.covariant[j][i]);
        let kinetic_direct = norm2(&grid, &[spi_up.clone(), spi_dn.clone()]);
        let xperp = |j: usize, i: usize| -> f64 {
            let x = grid.point(i);
            [-x[1], x[0], 0.0][j]
        };
        let (sx_up, sx_dn) = sigma(&|j, i| up[i] * xperp(j, i), &|j, i| down[i] * xperp(j, i));
        let spin_cross = (dot(&sx_up, &spi_up) + dot(&sx_dn, &spi_dn)).re * h;

        let lp1 = lq_power(&[up, down], &grid, p + 1.0);
        let nl = 2.0 * mu / (p + 1.0) * lp1;
        let rho_up = weighted(&grid, up, |x| x[0] * x[0] + x[1] * x[1]);
        let rho_dn = weighted(&grid, down, |x| x[0] * x[0] + x[1] * x[1]);
        let rho_sq = rho_up + rho_dn;
        let energy = kinetic_direct + nl;
        let f_p = energy - b * spin_cross + 0.5 * b * b * rho_sq;
        let grad_up = norm2(&grid, &pu.momentum);
        let grad_dn = norm2(&grid, &pd.momentum);
        let energy_s_sum = grad_up + grad_dn + 0.25 * b * b * rho_sq;
        let f_p_expanded = energy_s_sum + nl;
        let scale = t_up + t_down + (b * spin_z).abs() + nl.abs() + (b * spin_cross).abs() + b * b * rho_sq;
        check_pair("T_P", kinetic, kinetic_direct, scale, self.tol)?;
        check_pair("F_P", f_p, f_p_expanded, scale, self.tol)?;
        let g = 0.25
            * (weighted(&grid, up, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
                + weighted(&grid, down, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
        let gdot = radial_cross(&grid, up, &pu.covariant) + radial_cross(&grid, down, &pd.covariant);
        let l3 = l3_from(&grid, up, &pu.momentum) + l3_from(&grid, down, &pd.momentum);
        Ok(PauliObservables {
            mass: m_up + m_down,
            kinetic,
            kinetic_direct,
            energy,
            f_p,
            f_p_expanded,
            spin_z,
            rho_sq,
            g,
            gdot,
            lp1,
            spin_cross,
            l3,
            kinetic_s_sum: t_up + t_down,
            energy_s_sum,
        })
    }

    /// Largest excess `|∇|ψ|| − |(p+A)ψ|` over interior points, using centered
    /// differences for `∇|ψ|`. Interior means outside the boundary shell.
    pub fn diamagnetic_excess(&self, values: &[Complex64], b: f64) -> f64 {
        let grid = *self.grid();
        let h = grid.spacing();
        let pr = parts(&self.sp, values, b);
        let modulus: Vec<f64> = values.iter().map(|z| z.norm()).collect();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..values.len() {
            if grid.in_boundary_shell(i) {
                continue;
            }
            let idx = grid.unravel(i);
            let mut grad2 = 0.0;
            for j in 0..grid.dim() {
                let mut fwd = idx;
                let mut bwd = idx;
                fwd[j] += 1;
                bwd[j] -= 1;
                let d = (modulus[grid.ravel(fwd)] - modulus[grid.ravel(bwd)]) / (2.0 * h);
                grad2 += d * d;
            }
            let pi: f64 = pr.covariant.iter().map(|c| c[i].norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(grad2.sqrt() - pi);
        }
        worst
    }
}

/// `T_P = ‖σ·(p+A)ψ‖²` (checked against `T_S[ψ₁] + T_S[ψ₂] + B(‖ψ₁‖² − ‖ψ₂‖²)`).
pub fn kinetic_p(f: &SpinorField, b: f64) -> Result<f64> {
    Ok(Observer::new(&f.grid).pauli(&f.up, &f.down, 0.0, 3.0, b)?.kinetic_direct)
}

/// `E_P = T_P + (2μ/(p+1))‖ψ‖_{p+1}^{p+1}` with the spinor modulus.
pub fn energy_p(f: &SpinorField, mu: f64, p: f64, b: f64) -> Result<f64> {
    Ok(Observer::new(&f.grid).pauli(&f.up, &f.down, mu, p, b)?.energy)
}

/// `F_P = E_P − B Re⟨σ·x⊥ψ, σ·(p+A)ψ⟩ + (B²/2)‖ρψ‖²`, dual-form checked.
pub fn f_p(f: &SpinorField, mu: f64, p: f64, b: f64) -> Result<f64> {
    Ok(Observer::new(&f.grid).pauli(&f.up, &f.down, mu, p, b)?.f_p)
}

/// `⟨σ₃⟩ = ‖ψ₁‖² − ‖ψ₂‖²`.
pub fn spin_z(f: &SpinorField) -> f64 {
    lq_power(&[&f.up], &f.grid, 2.0) - lq_power(&[&f.down], &f.grid, 2.0)
}
