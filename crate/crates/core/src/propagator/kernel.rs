//! Pointwise Mehler kernel and the dense reference propagator.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// `|sin(Bt)|` below this counts as a singular time.
pub const SINGULAR_TOL: f64 = 1e-8;

pub(crate) fn check_regular(b: f64, t: f64) -> Result<()> {
    if b == 0.0 || !(b * t).sin().abs().gt(&SINGULAR_TOL) {
        return Err(Error::SingularTime { b, t });
    }
    Ok(())
}

fn wedge(x: [f64; 2], y: [f64; 2]) -> f64 {
    x[0] * y[1] - x[1] * y[0]
}

fn dist2(x: [f64; 2], y: [f64; 2]) -> f64 {
    (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)
}

/// Kernel of `e^{-it(p+A)²}` in the symmetric gauge:
///
/// `K(x, y, t) = B/(4πi sin Bt) · exp{(iB/4)(cot(Bt)|x−y|² + 2 x∧y)}`, `x∧y = x₁y₂ − x₂y₁`.
///
/// It satisfies `K(y, x, t) = conj(K(x, y, −t))`, reproduces the free kernel as
/// `B → 0`, and gives the lowest Landau level `e^{−Bρ²/4}` the phase `e^{−iBt}`.
pub fn mehler_kernel_value(x: [f64; 2], y: [f64; 2], t: f64, b: f64) -> Result<Complex64> {
    check_regular(b, t)?;
    Ok(kernel_unchecked(x, y, t, b))
}

#[inline]
fn kernel_unchecked(x: [f64; 2], y: [f64; 2], t: f64, b: f64) -> Complex64 {
    let th = b * t;
    let pref = Complex64::new(0.0, -b / (4.0 * PI * th.sin()));
    let phase = 0.25 * b * (dist2(x, y) / th.tan() + 2.0 * wedge(x, y));
    pref * Complex64::from_polar(1.0, phase)
}

/// The closed form as commonly printed,
/// `B/(4π sin Bt) · exp{(B/(4i))(cot(Bt)|x−y|² − 2 x∧y)}`.
///
/// Equals `−i · conj(mehler_kernel_value(y, x, t, b))`: it propagates backwards in
/// time and carries an extra factor `i`, so it is kept for comparison only.
pub fn printed_mehler_kernel(x: [f64; 2], y: [f64; 2], t: f64, b: f64) -> Result<Complex64> {
    check_regular(b, t)?;
    let th = b * t;
    let pref = b / (4.0 * PI * th.sin());
    let phase = -0.25 * b * (dist2(x, y) / th.tan() - 2.0 * wedge(x, y));
    Ok(Complex64::from_polar(pref, phase))
}

/// `(Mf)(x) = h² Σ_y K(x, y, t) f(y)` by direct summation over all pairs.
pub fn apply_mehler_dense(f: &ScalarField, t: f64, b: f64) -> Result<ScalarField> {
    let grid = f.grid;
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("dense Mehler oracle is 2D only".into()));
    }
    check_regular(b, t)?;
    let pts: Vec<[f64; 2]> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            [p[0], p[1]]
        })
        .collect();
    let src: Vec<(usize, Complex64)> =
        f.values.iter().copied().enumerate().filter(|(_, v)| *v != Complex64::new(0.0, 0.0)).collect();
    let h2 = grid.cell_volume();
    let values = pts
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(j, v) in &src {
                acc += kernel_unchecked(x, pts[j], t, b) * v;
            }
            acc * h2
        })
        .collect();
    Ok(ScalarField { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn origin_value() {
        let (b, t) = (1.3, 0.4);
        let k = mehler_kernel_value([0.0, 0.0], [0.0, 0.0], t, b).unwrap();
        assert!(close(k, Complex64::new(0.0, -b / (4.0 * PI * (b * t).sin())), 1e-15));
        let p = printed_mehler_kernel([0.0, 0.0], [0.0, 0.0], t, b).unwrap();
        assert!(close(p, Complex64::new(b / (4.0 * PI * (b * t).sin()), 0.0), 1e-15));
    }

    #[test]
    fn quarter_period_hand_value() {
        let p = printed_mehler_kernel([1.0, 0.0], [0.0, 1.0], PI / 2.0, 1.0).unwrap();
        assert!(close(p, Complex64::from_polar(1.0 / (4.0 * PI), 0.5), 1e-14));
        let k = mehler_kernel_value([1.0, 0.0], [0.0, 1.0], PI / 2.0, 1.0).unwrap();
        assert!(close(k, Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0 / (4.0 * PI), 0.5), 1e-14));
    }

    #[test]
    fn swap_and_reversal_symmetry() {
        let (x, y) = ([0.3, -1.2], [2.1, 0.7]);
        for &(b, t) in &[(1.0, 0.3), (-2.0, 0.2), (0.7, -0.9)] {
            let kxy = mehler_kernel_value(x, y, t, b).unwrap();
            let kyx_rev = mehler_kernel_value(y, x, -t, b).unwrap();
            assert!(close(kxy, kyx_rev.conj(), 1e-14));
            let printed = printed_mehler_kernel(x, y, t, b).unwrap();
            let k_swapped = mehler_kernel_value(y, x, t, b).unwrap();
            assert!(close(printed, -Complex64::i() * k_swapped.conj(), 1e-13));
        }
    }

    #[test]
    fn singular_times_rejected() {
        assert!(matches!(mehler_kernel_value([0.0; 2], [0.0; 2], PI, 1.0), Err(Error::SingularTime { .. })));
        assert!(mehler_kernel_value([0.0; 2], [0.0; 2], 0.0, 1.0).is_err());
        assert!(mehler_kernel_value([0.0; 2], [0.0; 2], 1.0, 0.0).is_err());
    }

    #[test]
    fn small_field_limit_is_free_kernel() {
        // Free kernel of e^{itΔ}: (4πit)^{-1} e^{i|x−y|²/(4t)}.
        let (x, y, t) = ([0.4, -0.1], [-0.3, 0.5], 0.7);
        let free = Complex64::new(0.0, 4.0 * PI * t).inv() * Complex64::from_polar(1.0, dist2(x, y) / (4.0 * t));
        let k = mehler_kernel_value(x, y, t, 1e-6).unwrap();
        assert!(close(k, free, 1e-5));
    }
}
