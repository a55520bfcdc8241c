use std::f64::consts::PI;

use magnls_core::observables::*;
use magnls_core::theory::paper_example_state;
use magnls_core::transform::mass;
use magnls_core::*;
use num_complex::Complex64;

fn gaussian(grid: &Grid, c: [f64; 3], w: f64, k: [f64; 3]) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let r2 = (0..3).map(|j| (x[j] - c[j]).powi(2)).sum::<f64>();
        let ph = (0..3).map(|j| k[j] * x[j]).sum::<f64>();
        Complex64::from_polar((-r2 / (2.0 * w * w)).exp(), ph)
    })
}

fn landau(grid: &Grid, b: f64, m: i32) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let rho = x[0].hypot(x[1]);
        let amp = rho.powi(m.abs()) * (-b.abs() * rho * rho / 4.0).exp();
        Complex64::from_polar(amp, m as f64 * x[1].atan2(x[0]))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn lowest_landau_kinetic_energy() {
    let grid = make_grid(2, 128, 8.0).unwrap();
    let b = 2.0;
    let f = landau(&grid, b, 0);
    assert!(rel(kinetic_s(&f, b), b * mass(&f)) < 1e-6);
    // m = -1 stays in the lowest level; m = +1 sits two levels up.
    let f = landau(&grid, b, -1);
    assert!(rel(kinetic_s(&f, b), b * mass(&f)) < 1e-6);
    let f = landau(&grid, b, 1);
    assert!(rel(kinetic_s(&f, b), 3.0 * b * mass(&f)) < 1e-6);
}

#[test]
fn plane_wave_momentum_is_exact() {
    let grid = make_grid(2, 32, 2.0).unwrap();
    let k = [3.0 / 4.0, -1.0 / 2.0];
    let f = ScalarField::from_fn(&grid, |x| Complex64::from_polar(1.0, 2.0 * PI * (k[0] * x[0] + k[1] * x[1])));
    let pi = covariant_gradient(&f, 0.0);
    for (j, kj) in k.iter().enumerate() {
        for (z, v) in pi[j].iter().zip(&f.values) {
            assert!((z - v * (2.0 * PI * kj)).norm() < 1e-12);
        }
    }
}

#[test]
fn gaussian_kinetic_closed_form() {
    for (dim, n, l) in [(2, 128, 8.0), (3, 64, 8.0)] {
        let grid = make_grid(dim, n, l).unwrap();
        let w = 1.1;
        let f = gaussian(&grid, [0.0; 3], w, [0.0; 3]);
        let m = (PI * w * w).powf(dim as f64 / 2.0);
        let expect = dim as f64 / (2.0 * w * w) * m;
        assert!(rel(kinetic_s(&f, 0.0), expect) < 1e-8);
        assert!(gdot(&f, 0.0).abs() < 1e-12);
        assert!(gdot(&f, 3.0).abs() < 1e-12);
    }
}

#[test]
fn defocusing_energy_ordering() {
    let grid = make_grid(2, 64, 8.0).unwrap();
    let f = gaussian(&grid, [0.4, -0.2, 0.0], 1.0, [0.3, 0.0, 0.0]);
    let t = kinetic_s(&f, 1.5);
    assert!(energy_s(&f, 1.0, 3.0, 1.5) >= t && t >= 0.0);
}

#[test]
fn example_state_functionals() {
    let grid = make_grid(2, 256, 0.5).unwrap();
    let (f, cert) = paper_example_state(&grid).unwrap();
    assert!((mass(&f) - 1.0).abs() < 1e-8);
    let e0_closed = 1600.0 * (1.0 - 800.0 / (81.0 * PI * PI));
    assert!(rel(energy_s(&f, -1.0, 5.0, 0.0), e0_closed) < 1e-6);
    assert!((l3(&f) + mass(&f)).abs() < 1e-8);
    assert!(rel(variance_g(&f), 1.0 / 1600.0) < 1e-8);
    assert!(rel(lq_norm(&f, 6.0).unwrap().powi(6), cert.lp6) < 1e-6);
    let b = 3.0;
    let obs = Observer::new(&grid).scalar(&f.values, -1.0, 5.0, b).unwrap();
    assert!(rel(obs.f_s, cert.e0 + 2.25 * cert.rho_norm_sq) < 1e-6);
    assert!(rel(obs.energy - obs.f_s, -b * obs.mass) < 1e-8);
    assert!((f_s(&f, -1.0, 5.0, 0.0).unwrap() - obs.energy_free).abs() < 1e-9 * 1600.0);
}

#[test]
fn dual_forms_agree_on_generic_state() {
    let grid = make_grid(2, 128, 8.0).unwrap();
    let mut f = gaussian(&grid, [0.7, -0.3, 0.0], 1.2, [0.8, -1.1, 0.0]);
    let g = landau(&grid, 1.5, 2);
    for (a, b) in f.values.iter_mut().zip(&g.values) {
        *a += b * Complex64::new(0.2, 0.3);
    }
    for b in [-2.0, 0.0, 0.5, 3.0] {
        let o = Observer::new(&grid).scalar(&f.values, -1.0, 3.0, b).unwrap();
        assert!(rel(o.energy - o.f_s, b * o.l3 + 1e-300) < 1e-9 || b == 0.0);
        assert!((o.gdot - o.gdot_dilation).abs() < 1e-9 * o.kinetic);
    }
}

#[test]
fn consistency_guard_reports_disagreement() {
    let err = check_pair("F_S", 1.0, 1.0 + 1e-6, 1.0, DUAL_FORM_TOL).unwrap_err();
    assert!(matches!(err, Error::InternalConsistency { .. }));
    assert!(check_pair("F_S", 1.0, 1.0 + 1e-12, 1.0, DUAL_FORM_TOL).is_ok());
}

#[test]
fn variance_scales_under_dilation() {
    let grid = make_grid(2, 128, 8.0).unwrap();
    let lambda = 1.5;
    let f = gaussian(&grid, [0.5, 0.2, 0.0], 1.0, [0.0; 3]);
    let fl = ScalarField::from_fn(&grid, |x| {
        let y = [lambda * x[0], lambda * x[1]];
        let r2 = (y[0] - 0.5).powi(2) + (y[1] - 0.2).powi(2);
        Complex64::new(lambda * (-r2 / 2.0).exp(), 0.0)
    });
    assert!(rel(variance_g(&fl), variance_g(&f) / (lambda * lambda)) < 1e-10);
}

#[test]
fn virial_right_hand_side() {
    let grid = make_grid(2, 128, 8.0).unwrap();
    let f = gaussian(&grid, [0.0; 3], 1.0, [0.0; 3]);
    assert_eq!(virial_coefficient(-1.0, 3.0, 2), 0.0);
    assert!(virial_coefficient(-1.0, 7.0 / 3.0, 3).abs() < 1e-15);
    let e0 = kinetic_s(&f, 0.0);
    assert!(rel(virial_rhs_s(&f, 0.0, 3.0, 0.0, e0), 2.0 * e0) < 1e-14);
    let b = 2.0;
    let rhs = virial_rhs_s(&f, -1.0, 3.0, b, 1.0);
    assert!((rhs - (2.0 - b * b * rho_norm_sq(&f))).abs() < 1e-12);
}

#[test]
fn pauli_functionals() {
    let grid = make_grid(2, 128, 8.0).unwrap();
    let b = 2.0;
    let psi = gaussian(&grid, [0.3, 0.1, 0.0], 1.0, [0.5, 0.0, 0.0]);
    let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
    let up = SpinorField::new(&grid, psi.values.clone(), zero.clone()).unwrap();
    let tp = kinetic_p(&up, b).unwrap();
    assert!(rel(tp, kinetic_s(&psi, b) + b * mass(&psi)) < 1e-10);
    // Polarized data: the spinor functional coincides with the scalar one.
    assert!(rel(f_p(&up, -1.0, 3.0, b).unwrap(), f_s(&psi, -1.0, 3.0, b).unwrap()) < 1e-10);
    let down = SpinorField::new(&grid, zero.clone(), psi.values.clone()).unwrap();
    assert!(rel(kinetic_p(&down, b).unwrap(), kinetic_s(&psi, b) - b * mass(&psi)) < 1e-10);

    let lll = landau(&grid, b, 0);
    let s = SpinorField::new(&grid, lll.values.clone(), zero).unwrap();
    assert!(rel(kinetic_p(&s, b).unwrap(), 2.0 * b * mass(&lll)) < 1e-6);

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let half: Vec<Complex64> = psi.values.iter().map(|z| z * h).collect();
    let eq = SpinorField::new(&grid, half.clone(), half).unwrap();
    assert!(spin_z(&eq).abs() < 1e-14);

    let mixed = SpinorField::new(
        &grid,
        psi.values.clone(),
        landau(&grid, 1.0, 1).values.iter().map(|z| z * Complex64::new(0.0, 0.5)).collect(),
    )
    .unwrap();
    let o = Observer::new(&grid).pauli(&mixed.up, &mixed.down, -1.0, 3.0, b).unwrap();
    assert!(rel(o.kinetic, o.kinetic_direct) < 1e-10);
    assert!(rel(o.f_p, o.f_p_expanded) < 1e-10);
    assert!(rel(energy_p(&mixed, -1.0, 3.0, b).unwrap(), o.energy) < 1e-14);
}

#[test]
fn pauli_dual_forms_in_three_dimensions() {
    let grid = make_grid(3, 64, 7.0).unwrap();
    let a = gaussian(&grid, [0.3, 0.1, -0.2], 1.0, [0.5, 0.0, 0.7]);
    let c = gaussian(&grid, [-0.2, 0.4, 0.1], 1.1, [0.0, -0.6, 0.3]);
    let o = Observer::new(&grid).pauli(&a.values, &c.values, -1.0, 2.0, 1.3).unwrap();
    assert!(rel(o.kinetic, o.kinetic_direct) < 1e-10);
    assert!(rel(o.f_p, o.f_p_expanded) < 1e-10);
    let s = Observer::new(&grid).scalar(&a.values, -1.0, 2.0, 1.3).unwrap();
    assert!(rel(s.f_s, s.f_s_expanded) < 1e-10);
}

#[test]
fn diamagnetic_inequality_on_grid() {
    let grid = make_grid(2, 128, 8.0).unwrap();
    let mut f = gaussian(&grid, [0.5, 0.0, 0.0], 1.0, [1.0, 0.5, 0.0]);
    let g = landau(&grid, 1.0, 2);
    for (a, b) in f.values.iter_mut().zip(&g.values) {
        *a += b;
    }
    let h = grid.spacing();
    for b in [0.0, 1.0, 4.0] {
        let excess = Observer::new(&grid).diamagnetic_excess(&f.values, b);
        assert!(excess <= 10.0 * h * h, "B = {b}: excess {excess}");
    }
}
