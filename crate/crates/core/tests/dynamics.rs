use magnls_core::dynamics::*;
use magnls_core::propagator::LinearStepper;
use magnls_core::transform::mass;
use magnls_core::*;
use num_complex::Complex64;

fn base_config() -> SimConfig {
    SimConfig::from_json(
        r#"{"dim": 2, "p": 3.0, "mu": -1.0, "B": 2.0, "n": 64, "L": 8.0, "dt": 1e-3, "t_end": 0.2,
            "observable_stride": 10, "mass": 4.0,
            "initial": {"kind": "gaussian", "width": 1.0, "center": [0.6, -0.2, 0.0], "momentum": [0.4, 0.3, 0.0]}}"#,
    )
    .unwrap()
}

fn gaussian(grid: &Grid) -> ScalarField {
    let cfg = base_config();
    let mut f = sample_initial(&cfg.initial, grid, cfg.b, cfg.p, 0).unwrap();
    let s = (4.0 / mass(&f)).sqrt();
    f.scale(s);
    f
}

fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    let d: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum();
    let n: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
    (d / n).sqrt()
}

#[test]
fn nonlinear_phase_is_pure_phase() {
    let grid = make_grid(2, 64, 8.0).unwrap();
    let f = gaussian(&grid);
    assert_eq!(nonlinear_phase_step(&f, 0.0, 3.0, 0.1).values, f.values);
    let g = nonlinear_phase_step(&f, -1.3, 3.0, 0.1);
    for (a, b) in f.values.iter().zip(&g.values) {
        assert!((a.norm() - b.norm()).abs() <= 1e-15 * a.norm().max(1e-300));
    }
    assert!((mass(&g) - mass(&f)).abs() < 1e-15 * mass(&f));
    let c = Complex64::new(0.6, -0.8) * 2.0;
    let k = ScalarField::from_fn(&grid, |_| c);
    let out = nonlinear_phase_step(&k, 0.7, 5.0, 0.3);
    let expect = c * Complex64::from_polar(1.0, -0.7 * 2f64.powi(4) * 0.3);
    assert!(out.values.iter().all(|z| (z - expect).norm() < 1e-15));
    // 0^{p-1} is taken as zero even for p < 2.
    let z = nonlinear_phase_step(&ScalarField::zeros(&grid), 1.0, 1.5, 1.0);
    assert!(z.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
}

#[test]
fn linear_strang_step_is_the_propagator() {
    let grid = make_grid(2, 64, 8.0).unwrap();
    let f = gaussian(&grid);
    let stepper = LinearStepper::new(&grid, 2.0, 0.05).unwrap();
    let a = strang_step(&f, 0.0, 3.0, &stepper).unwrap();
    let b = apply_us(&f, 0.05, 2.0).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn zero_field_matches_free_split_step() {
    let grid = make_grid(2, 64, 8.0).unwrap();
    let f = gaussian(&grid);
    let dt = 0.01;
    let stepper = LinearStepper::new(&grid, 0.0, dt).unwrap();
    let mut a = f.clone();
    let mut b = f.clone();
    for _ in 0..20 {
        a = strang_step(&a, -1.0, 3.0, &stepper).unwrap();
        b = nonlinear_phase_step(&b, -1.0, 3.0, 0.5 * dt);
        b = free_propagator(&b, dt, &[0, 1]).unwrap();
        b = nonlinear_phase_step(&b, -1.0, 3.0, 0.5 * dt);
    }
    assert!(rel_l2(&a, &b) < 1e-12);
}

#[test]
fn strang_is_second_order() {
    let grid = make_grid(2, 64, 8.0).unwrap();
    let f = gaussian(&grid);
    let t = 0.4;
    let solve = |steps: usize| {
        let stepper = LinearStepper::new(&grid, 2.0, t / steps as f64).unwrap();
        let mut u = f.clone();
        for _ in 0..steps {
            u = strang_step(&u, -1.0, 3.0, &stepper).unwrap();
        }
        u
    };
    let (u1, u2, u4) = (solve(20), solve(40), solve(80));
    let e1 = rel_l2(&u1, &u2);
    let e2 = rel_l2(&u2, &u4);
    let ratio = e1 / e2;
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

#[test]
fn linear_run_returns_after_larmor_period() {
    let mut cfg = base_config();
    cfg.mu = 0.0;
    cfg.n = 128;
    cfg.dt = larmor_period(cfg.b) / 40.0;
    cfg.t_end = larmor_period(cfg.b);
    cfg.snapshot_stride = 40;
    let out = evolve(&cfg).unwrap();
    let first = &out.snapshots.first().unwrap().components[0];
    let last = out.snapshots.last().unwrap();
    assert_eq!(last.step, 40);
    assert!((last.t - cfg.t_end).abs() < 1e-15);
    let scale = first.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    for (a, b) in first.iter().zip(&last.components[0]) {
        assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-8 * scale);
    }
    let r0 = out.series.rows[0];
    for r in &out.series.rows {
        for (a, b) in [(r.mass, r0.mass), (r.t_s, r0.t_s), (r.e_s, r0.e_s), (r.f_s, r0.f_s), (r.l3, r0.l3)] {
            assert!((a - b).abs() < 1e-8 * r0.t_s, "{a} vs {b}");
        }
    }
    assert!(!out.report.detected);
}

#[test]
fn defocusing_kinetic_bound() {
    let mut cfg = base_config();
    cfg.mu = 2.0;
    cfg.t_end = 0.5;
    let out = evolve(&cfg).unwrap();
    let e0 = out.series.rows[0].e_s;
    assert!(out.series.rows.iter().all(|r| r.t_s <= e0 * (1.0 + 1e-9)));
}

#[test]
fn mass_is_conserved_per_step() {
    let mut cfg = base_config();
    cfg.observable_stride = 1;
    cfg.t_end = 0.05;
    let out = evolve(&cfg).unwrap();
    for w in out.series.rows.windows(2) {
        assert!((w[1].mass.sqrt() - w[0].mass.sqrt()).abs() < 1e-10);
    }
}

#[test]
fn detection_policy() {
    let row = ObservableRow {
        t: 1.0,
        mass: 1.0,
        t_s: 2.0,
        e_s: 1.0,
        f_s: 1.0,
        l3: 0.0,
        g: 1.0,
        gdot: 0.0,
        rho_sq: 4.0,
        lp1: 1.0,
        boundary_mass: 0.0,
        pauli: None,
    };
    let th = Thresholds::default();
    assert_eq!(detect_blowup(&row, 2.0, 1.0, &th), None);
    assert_eq!(detect_blowup(&ObservableRow { t_s: 2e7, ..row }, 2.0, 1.0, &th), Some(Trigger::KineticGrowth));
    assert_eq!(detect_blowup(&ObservableRow { g: 1e-5, ..row }, 2.0, 1.0, &th), Some(Trigger::VarianceFloor));
    assert_eq!(detect_blowup(&ObservableRow { mass: f64::NAN, ..row }, 2.0, 1.0, &th), Some(Trigger::Nonfinite));
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = base_config();
    cfg.initial = InitialState::Gaussian {
        center: [0.3, 0.0, 0.0],
        width: 1.0,
        momentum: [0.0; 3],
        charge: 1,
        amplitude: 1.0,
        noise: 0.05,
    };
    cfg.seed = 7;
    let a = evolve(&cfg).unwrap().series.to_csv();
    let b = evolve(&cfg).unwrap().series.to_csv();
    assert_eq!(a, b);
    cfg.seed = 8;
    assert_ne!(evolve(&cfg).unwrap().series.to_csv(), a);
}

#[test]
fn csv_layout() {
    let cfg = base_config();
    let out = evolve(&cfg).unwrap();
    let csv = out.series.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,mass,T_S,E_S,F_S,L3,g,gdot,rho_sq,Lp1,boundary_mass");
    let cells: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cells[1], out.series.rows[0].mass);
    assert_eq!(cells[2], out.series.rows[0].t_s);
    assert_eq!(csv.lines().count(), out.series.rows.len() + 1);
    let times = out.series.times();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*times.last().unwrap(), cfg.t_end);
}

#[test]
fn config_errors() {
    let err = SimConfig::from_json(r#"{"dim": 2, "p": 3.0, "bogus_key": 1}"#).unwrap_err();
    assert!(err.to_string().contains("bogus_key"));
    let cfg = base_config();
    let o = cfg.with_overrides(&["B=4.5".into(), "initial.width=0.8".into()]).unwrap();
    assert_eq!(o.b, 4.5);
    assert!(matches!(o.initial, InitialState::Gaussian { width, .. } if width == 0.8));
    assert!(matches!(cfg.with_overrides(&["nope=1".into()]), Err(Error::Config(_))));
    let mut bad = cfg.clone();
    bad.dim = 3;
    bad.p = 6.0;
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let mut wide = cfg.clone();
    wide.extent = 3.0;
    assert!(matches!(evolve(&wide), Err(Error::Unresolved { .. })));
}

#[test]
fn adaptive_step_halves_on_growth() {
    let mut cfg = base_config();
    cfg.n = 128;
    cfg.mass = Some(40.0);
    cfg.b = 2.0;
    cfg.adaptive = true;
    cfg.kinetic_ratio = 20.0;
    cfg.t_end = 1.0;
    cfg.observable_stride = 1;
    cfg.initial = InitialState::Gaussian { center: [0.0; 3], width: 1.0, momentum: [0.0; 3], charge: 0, amplitude: 1.0, noise: 0.0 };
    let out = evolve(&cfg).unwrap();
    assert!(out.report.detected);
    assert_eq!(out.report.trigger, Some(Trigger::KineticGrowth));
    assert!(out.final_dt <= cfg.dt / 8.0);
    assert!(out.report.t_detect.unwrap() < cfg.t_end);
}

fn virial_gaps(mut cfg: SimConfig) -> (f64, f64) {
    cfg.snapshot_stride = 0;
    let out = evolve(&cfg).unwrap();
    let coarse = virial_residual(&out.series, cfg.mu, cfg.p, cfg.b, cfg.dim, 2).unwrap();
    let fine = virial_residual(&out.series, cfg.mu, cfg.p, cfg.b, cfg.dim, 1).unwrap();
    (coarse.max_gap, fine.max_gap)
}

#[test]
fn virial_residual_two_dimensions() {
    let mut cfg = base_config();
    cfg.dt = 1e-3;
    cfg.t_end = 0.5;
    cfg.observable_stride = 10;
    let (coarse, fine) = virial_gaps(cfg);
    assert!(fine <= 1e-3 && coarse / fine >= 3.5, "{coarse} {fine}");
}

#[test]
fn virial_residual_three_dimensions() {
    let mut cfg = base_config();
    cfg.dim = 3;
    cfg.n = 64;
    cfg.p = 2.0;
    cfg.b = 1.5;
    cfg.dt = 2e-3;
    cfg.t_end = 0.4;
    cfg.observable_stride = 5;
    cfg.initial = InitialState::Gaussian { center: [0.4, -0.2, 0.3], width: 1.0, momentum: [0.3, 0.0, -0.2], charge: 1, amplitude: 1.0, noise: 0.0 };
    let (coarse, fine) = virial_gaps(cfg);
    assert!(fine <= 1e-3 && coarse / fine >= 3.5, "{coarse} {fine}");
}

#[test]
fn virial_residual_rejects_uneven_rows() {
    let mut cfg = base_config();
    cfg.adaptive = false;
    let mut out = evolve(&cfg).unwrap();
    out.series.rows[3].t += 1e-4;
    assert!(virial_residual(&out.series, cfg.mu, cfg.p, cfg.b, 2, 1).is_err());
}
