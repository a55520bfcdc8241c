//! Strang splitting between the exact magnetic propagator and the exact
//! nonlinear phase, with observable recording and blow-up detection.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{boundary_mass, check_resolved, read_snapshot, ScalarField, SpinorField, RESOLVED_BOUNDARY_MASS};
use crate::grid::Grid;
use crate::ground_state::GroundState;
use crate::observables::Observer;
use crate::propagator::{zeeman, LinearStepper};
use crate::theory::paper_example_state;

fn default_stride() -> usize {
    1
}
fn default_kinetic_ratio() -> f64 {
    1e6
}
fn default_variance_floor() -> f64 {
    1e-4
}
fn default_one() -> f64 {
    1.0
}

/// Spin weights `(c₁, c₂)` given as `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinWeights {
    pub up: [f64; 2],
    pub down: [f64; 2],
}

/// Initial data menu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    /// `A((x₁ ± ix₂)/w)^{|m|} e^{−|x−c|²/(2w²)} e^{ik·x}`, coordinates relative to `center`.
    Gaussian {
        #[serde(default)]
        center: [f64; 3],
        width: f64,
        #[serde(default)]
        momentum: [f64; 3],
        #[serde(default)]
        charge: i32,
        #[serde(default = "default_one")]
        amplitude: f64,
        /// Relative amplitude of seeded complex noise under the same envelope.
        #[serde(default)]
        noise: f64,
    },
    /// `ρ^{|m|} e^{imθ} e^{−|B|ρ²/4}` (times a unit axial Gaussian in 3D).
    LowestLandau {
        #[serde(default)]
        m: i32,
        #[serde(default = "default_one")]
        amplitude: f64,
    },
    /// `u(ρ)e^{−iθ}` with `u(ρ) = (800ρ/√π)e^{−400ρ²}`.
    PaperExample,
    /// `a λ^{2/(p−1)} Q(λ|x−c|) e^{−(λ|x−c|/R)⁸}` with `Q` the radial ground state of
    /// `−ΔQ + Q = Q^p`; the taper is omitted when `taper` is absent.
    Townes {
        #[serde(default = "default_one")]
        scale: f64,
        #[serde(default = "default_one")]
        amplitude: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        taper: Option<f64>,
    },
    /// Snapshot file (one component, or the first of two).
    File { path: PathBuf },
}

/// Simulation parameters. The JSON config uses the same field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dim: usize,
    pub p: f64,
    pub mu: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub n: usize,
    #[serde(rename = "L")]
    pub extent: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between snapshots; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default = "default_stride")]
    pub observable_stride: usize,
    #[serde(default = "default_kinetic_ratio")]
    pub kinetic_ratio: f64,
    #[serde(default = "default_variance_floor")]
    pub variance_floor: f64,
    /// Halve `dt` whenever `T_S` doubles.
    #[serde(default)]
    pub adaptive: bool,
    /// Rescale the initial state to this mass.
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub initial: InitialState,
    /// Second spinor component for Pauli runs (defaults to the same profile as `initial`).
    #[serde(default)]
    pub initial_down: Option<InitialState>,
    #[serde(default)]
    pub spin: Option<SpinWeights>,
    /// Field strengths for scan runs.
    #[serde(default)]
    pub b_list: Vec<f64>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies `key=value` overrides; the value is parsed as JSON, falling back to a string.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            let mut slot = &mut doc;
            for part in key.split('.') {
                slot = slot
                    .as_object_mut()
                    .ok_or_else(|| Error::Config(format!("override key `{key}` does not name a field")))?
                    .entry(part)
                    .or_insert(serde_json::Value::Null);
            }
            *slot = value;
        }
        serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if !(self.p > 1.0) || (self.dim == 3 && !(self.p < 5.0)) {
            return bad(format!("p = {} outside the subcritical range for dim {}", self.p, self.dim));
        }
        for (name, v) in [("mu", self.mu), ("B", self.b)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.observable_stride == 0 {
            return bad("observable_stride must be at least 1".into());
        }
        if !(self.kinetic_ratio > 1.0) {
            return bad(format!("kinetic_ratio must exceed 1, got {}", self.kinetic_ratio));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor < 1.0) {
            return bad(format!("variance_floor must lie in (0, 1), got {}", self.variance_floor));
        }
        if let Some(m) = self.mass {
            if !(m > 0.0) {
                return bad(format!("mass must be positive, got {m}"));
            }
        }
        self.grid().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.extent)
    }
}

fn normalize(grid: &Grid, comps: &mut [Vec<Complex64>], target: f64) -> Result<()> {
    let m: f64 = comps.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell_volume();
    if !(m > 0.0) {
        return Err(Error::Config("initial state has zero mass".into()));
    }
    let s = (target / m).sqrt();
    comps.iter_mut().flatten().for_each(|z| *z *= s);
    Ok(())
}

/// Samples one initial-state descriptor on the grid.
pub fn sample_initial(state: &InitialState, grid: &Grid, b: f64, p: f64, seed: u64) -> Result<ScalarField> {
    match state {
        InitialState::Gaussian { center, width, momentum, charge, amplitude, noise } => {
            if !(*width > 0.0) {
                return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
            }
            let w = *width;
            let mut f = ScalarField::from_fn(grid, |x| {
                let y = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                let r2 = y.iter().map(|v| v * v).sum::<f64>();
                let ph = momentum[0] * x[0] + momentum[1] * x[1] + momentum[2] * x[2];
                let sign = if *charge < 0 { -1.0 } else { 1.0 };
                let vortex = Complex64::new(y[0] / w, sign * y[1] / w).powi(charge.abs());
                vortex * Complex64::from_polar(amplitude * (-r2 / (2.0 * w * w)).exp(), ph)
            });
            if *noise != 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for (i, z) in f.values.iter_mut().enumerate() {
                    let x = grid.point(i);
                    let r2 = (0..3).map(|j| (x[j] - center[j]).powi(2)).sum::<f64>();
                    let env = amplitude * (-r2 / (2.0 * w * w)).exp();
                    let (a, c): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    *z += Complex64::new(a, c) * (noise * env);
                }
            }
            Ok(f)
        }
        InitialState::LowestLandau { m, amplitude } => {
            if b == 0.0 {
                return Err(Error::Config("lowest-landau initial state needs B != 0".into()));
            }
            Ok(ScalarField::from_fn(grid, |x| {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                let sign = if *m < 0 { -1.0 } else { 1.0 };
                let ang = Complex64::new(x[0], sign * x[1]).powi(m.abs());
                ang * (amplitude * (-b.abs() * rho2 / 4.0 - x[2] * x[2] / 2.0).exp())
            }))
        }
        InitialState::PaperExample => Ok(paper_example_state(grid)?.0),
        InitialState::Townes { scale, amplitude, center, taper } => {
            if !(*scale > 0.0) || taper.is_some_and(|r| !(r > 0.0)) {
                return Err(Error::Config("townes scale and taper must be positive".into()));
            }
            let q = GroundState::solve(grid.dim(), p)?;
            let a = amplitude * scale.powf(2.0 / (p - 1.0));
            Ok(ScalarField::from_fn(grid, |x| {
                let r = scale * (0..grid.dim()).map(|j| (x[j] - center[j]).powi(2)).sum::<f64>().sqrt();
                let cut = taper.map_or(1.0, |t| (-(r / t).powi(8)).exp());
                Complex64::new(a * q.value(r) * cut, 0.0)
            }))
        }
        InitialState::File { path } => {
            let (g, comps) = read_snapshot(path)?;
            if !g.same_as(grid) {
                return Err(Error::Config(format!("snapshot {} does not match the configured grid", path.display())));
            }
            Ok(ScalarField { grid: g, values: comps.into_iter().next().unwrap() })
        }
    }
}

/// `ψ ← e^{−iμ|ψ|^{p−1}dt} ψ` pointwise (`|ψ|` the spinor modulus when several components are given).
pub fn nonlinear_phase_components(comps: &mut [Vec<Complex64>], mu: f64, p: f64, dt: f64) {
    if mu == 0.0 || dt == 0.0 {
        return;
    }
    let len = comps[0].len();
    let phases: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map(|i| {
            let m2: f64 = comps.iter().map(|c| c[i].norm_sqr()).sum();
            let amp = match p {
                _ if m2 == 0.0 => 0.0,
                3.0 => m2,
                5.0 => m2 * m2,
                _ => m2.powf(0.5 * (p - 1.0)),
            };
            Complex64::from_polar(1.0, -mu * amp * dt)
        })
        .collect();
    for c in comps.iter_mut() {
        c.par_iter_mut().zip(&phases).for_each(|(z, w)| *z *= w);
    }
}

pub fn nonlinear_phase_step(f: &ScalarField, mu: f64, p: f64, dt: f64) -> ScalarField {
    let mut comps = vec![f.values.clone()];
    nonlinear_phase_components(&mut comps, mu, p, dt);
    ScalarField { grid: f.grid, values: comps.pop().unwrap() }
}

fn linear_components(comps: &mut [Vec<Complex64>], stepper: &LinearStepper) {
    for c in comps.iter_mut() {
        stepper.apply_in_place(c);
    }
    if let [up, down] = comps {
        zeeman(up, down, stepper.plan().b(), stepper.duration());
    }
}

fn strang_components(comps: &mut [Vec<Complex64>], mu: f64, p: f64, stepper: &LinearStepper) {
    let dt = stepper.duration();
    nonlinear_phase_components(comps, mu, p, 0.5 * dt);
    linear_components(comps, stepper);
    nonlinear_phase_components(comps, mu, p, 0.5 * dt);
}

/// Half nonlinear phase, exact linear step over `stepper.duration()`, half nonlinear phase.
pub fn strang_step(f: &ScalarField, mu: f64, p: f64, stepper: &LinearStepper) -> Result<ScalarField> {
    if !stepper.plan().grid().same_as(&f.grid) {
        return Err(Error::GridMismatch);
    }
    let mut comps = vec![f.values.clone()];
    strang_components(&mut comps, mu, p, stepper);
    Ok(ScalarField { grid: f.grid, values: comps.pop().unwrap() })
}

/// Spinor version of [`strang_step`]; the linear part includes the Zeeman phase.
pub fn strang_step_spinor(f: &SpinorField, mu: f64, p: f64, stepper: &LinearStepper) -> Result<SpinorField> {
    if !stepper.plan().grid().same_as(&f.grid) {
        return Err(Error::GridMismatch);
    }
    let mut comps = vec![f.up.clone(), f.down.clone()];
    strang_components(&mut comps, mu, p, stepper);
    let down = comps.pop().unwrap();
    let up = comps.pop().unwrap();
    Ok(SpinorField { grid: f.grid, up, down })
}

/// Pauli columns of a row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliColumns {
    pub t_p: f64,
    pub e_p: f64,
    pub f_p: f64,
    pub spin_z: f64,
}

/// One recorded time. For spinors the scalar columns are summed over components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub t: f64,
    pub mass: f64,
    pub t_s: f64,
    pub e_s: f64,
    pub f_s: f64,
    pub l3: f64,
    pub g: f64,
    pub gdot: f64,
    /// `‖ρψ‖²`, `ρ² = x₁² + x₂²`.
    pub rho_sq: f64,
    pub lp1: f64,
    pub boundary_mass: f64,
    pub pauli: Option<PauliColumns>,
}

impl ObservableRow {
    fn values(&self) -> Vec<f64> {
        let mut v = vec![
            self.t,
            self.mass,
            self.t_s,
            self.e_s,
            self.f_s,
            self.l3,
            self.g,
            self.gdot,
            self.rho_sq,
            self.lp1,
            self.boundary_mass,
        ];
        if let Some(p) = self.pauli {
            v.extend([p.t_p, p.e_p, p.f_p, p.spin_z]);
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

pub const SCALAR_COLUMNS: [&str; 11] = ["t", "mass", "T_S", "E_S", "F_S", "L3", "g", "gdot", "rho_sq", "Lp1", "boundary_mass"];
pub const PAULI_COLUMNS: [&str; 4] = ["T_P", "E_P", "F_P", "spin_z"];

/// Time-ordered observables of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub pauli: bool,
    pub rows: Vec<ObservableRow>,
}

impl ObservableSeries {
    pub fn header(&self) -> String {
        let mut cols: Vec<&str> = SCALAR_COLUMNS.to_vec();
        if self.pauli {
            cols.extend(PAULI_COLUMNS);
        }
        cols.join(",")
    }

    /// CSV text with round-trip (17 significant digit) floats.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.values().iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// What ended a run early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    KineticGrowth,
    VarianceFloor,
    Nonfinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub kinetic_ratio: f64,
    pub variance_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { kinetic_ratio: default_kinetic_ratio(), variance_floor: default_variance_floor() }
    }
}

/// Applies the detection policy to a row, given the initial `T_S` and `g`.
pub fn detect_blowup(row: &ObservableRow, t0: f64, g0: f64, th: &Thresholds) -> Option<Trigger> {
    if !row.is_finite() {
        Some(Trigger::Nonfinite)
    } else if row.t_s > th.kinetic_ratio * t0 {
        Some(Trigger::KineticGrowth)
    } else if row.g < th.variance_floor * g0 {
        Some(Trigger::VarianceFloor)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    pub t_detect: Option<f64>,
    pub trigger: Option<Trigger>,
    pub kinetic_ratio: Option<f64>,
    /// Last row with finite entries.
    pub last_valid: Option<ObservableRow>,
}

/// Field state handed to the snapshot sink.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub grid: Grid,
    pub components: Vec<Vec<Complex64>>,
}

impl Snapshot {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let refs: Vec<&[Complex64]> = self.components.iter().map(|c| c.as_slice()).collect();
        crate::field::write_snapshot(path, &self.grid, &refs)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: ObservableSeries,
    /// Filled by [`evolve`]; [`run`] hands snapshots to its sink instead.
    pub snapshots: Vec<Snapshot>,
    pub report: BlowupReport,
    /// Step size in effect at the end of the run.
    pub final_dt: f64,
}

/// Initial components for a scalar (`pauli = false`) or spinor run.
pub fn initial_components(config: &SimConfig, pauli: bool) -> Result<Vec<Vec<Complex64>>> {
    let grid = config.grid()?;
    let first = sample_initial(&config.initial, &grid, config.b, config.p, config.seed)?.values;
    let mut comps = if pauli {
        let second = match &config.initial_down {
            Some(s) => sample_initial(s, &grid, config.b, config.p, config.seed.wrapping_add(1))?.values,
            None => first.clone(),
        };
        let w = config.spin.unwrap_or(SpinWeights { up: [1.0, 0.0], down: [0.0, 0.0] });
        let (cu, cd) = (Complex64::new(w.up[0], w.up[1]), Complex64::new(w.down[0], w.down[1]));
        vec![first.iter().map(|z| z * cu).collect(), second.iter().map(|z| z * cd).collect()]
    } else {
        vec![first]
    };
    if let Some(m) = config.mass {
        normalize(&grid, &mut comps, m)?;
    }
    Ok(comps)
}

fn measure(obs: &Observer, comps: &[Vec<Complex64>], t: f64, cfg: &SimConfig) -> Result<ObservableRow> {
    let grid = obs.grid();
    let refs: Vec<&[Complex64]> = comps.iter().map(|c| c.as_slice()).collect();
    let bm = boundary_mass(grid, &refs);
    if comps.len() == 1 {
        let o = obs.scalar(&comps[0], cfg.mu, cfg.p, cfg.b)?;
        Ok(ObservableRow {
            t,
            mass: o.mass,
            t_s: o.kinetic,
            e_s: o.energy,
            f_s: o.f_s,
            l3: o.l3,
            g: o.g,
            gdot: o.gdot,
            rho_sq: o.rho_sq,
            lp1: o.lp1,
            boundary_mass: bm,
            pauli: None,
        })
    } else {
        let o = obs.pauli(&comps[0], &comps[1], cfg.mu, cfg.p, cfg.b)?;
        let nl = 2.0 * cfg.mu / (cfg.p + 1.0) * o.lp1;
        Ok(ObservableRow {
            t,
            mass: o.mass,
            t_s: o.kinetic_s_sum,
            e_s: o.kinetic_s_sum + nl,
            f_s: o.energy_s_sum + nl,
            l3: o.l3,
            g: o.g,
            gdot: o.gdot,
            rho_sq: o.rho_sq,
            lp1: o.lp1,
            boundary_mass: bm,
            pauli: Some(PauliColumns { t_p: o.kinetic, e_p: o.energy, f_p: o.f_p, spin_z: o.spin_z }),
        })
    }
}

fn finite(comps: &[Vec<Complex64>]) -> bool {
    comps.iter().all(|c| c.par_iter().all(|z| z.re.is_finite() && z.im.is_finite()))
}

/// Runs the splitting loop on the given components. One component evolves the
/// scalar equation, two the Pauli equation.
pub fn run(config: &SimConfig, mut comps: Vec<Vec<Complex64>>, sink: &mut dyn FnMut(Snapshot) -> Result<()>) -> Result<RunOutput> {
    config.validate()?;
    let grid = config.grid()?;
    if comps.is_empty() || comps.len() > 2 || comps.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::GridMismatch);
    }
    {
        let refs: Vec<&[Complex64]> = comps.iter().map(|c| c.as_slice()).collect();
        check_resolved(&grid, &refs, RESOLVED_BOUNDARY_MASS)?;
    }
    let obs = Observer::new(&grid);
    let th = Thresholds { kinetic_ratio: config.kinetic_ratio, variance_floor: config.variance_floor };
    let pauli = comps.len() == 2;
    let mut series = ObservableSeries { pauli, rows: Vec::new() };
    let row0 = measure(&obs, &comps, 0.0, config)?;
    let (t0, g0) = (row0.t_s, row0.g);
    series.rows.push(row0);
    let snap = |step: usize, t: f64, comps: &Vec<Vec<Complex64>>| Snapshot { step, t, grid, components: comps.clone() };
    if config.snapshot_stride > 0 {
        sink(snap(0, 0.0, &comps))?;
    }

    let mut dt = config.dt;
    let mut stepper = LinearStepper::new(&grid, config.b, dt)?;
    let mut stepper_dt = dt;
    let mut kinetic_ref = t0;
    let mut t = 0.0;
    let mut step = 0usize;
    // Time is k·dt within a run of constant step to avoid accumulated rounding.
    let mut segment_start = 0.0;
    let mut segment_steps = 0usize;
    let mut report = BlowupReport { detected: false, t_detect: None, trigger: None, kinetic_ratio: None, last_valid: None };
    let eps = 1e-12 * config.t_end;

    while t < config.t_end - eps {
        let remaining = config.t_end - t;
        let (this_dt, last) = if dt >= remaining - eps { (remaining, true) } else { (dt, false) };
        if this_dt != stepper_dt {
            stepper = LinearStepper::new(&grid, config.b, this_dt)?;
            stepper_dt = this_dt;
        }
        strang_components(&mut comps, config.mu, config.p, &stepper);
        step += 1;
        segment_steps += 1;
        t = if last { config.t_end } else { segment_start + segment_steps as f64 * dt };

        if !finite(&comps) {
            report.detected = true;
            report.t_detect = Some(t);
            report.trigger = Some(Trigger::Nonfinite);
            break;
        }
        let record = step % config.observable_stride == 0 || last;
        let mut row = if record { Some(measure(&obs, &comps, t, config)?) } else { None };
        if config.adaptive {
            let ts = match row {
                Some(r) => r.t_s,
                None => obs.kinetic(&comps, config.b),
            };
            if ts.is_finite() && ts > 2.0 * kinetic_ref {
                while ts > 2.0 * kinetic_ref {
                    kinetic_ref *= 2.0;
                    dt *= 0.5;
                }
                stepper = LinearStepper::new(&grid, config.b, dt)?;
                stepper_dt = dt;
                segment_start = t;
                segment_steps = 0;
            }
            // Record the crossing step itself rather than the next stride.
            if row.is_none() && !(ts <= th.kinetic_ratio * t0) {
                row = Some(measure(&obs, &comps, t, config)?);
            }
        }
        if let Some(r) = row {
            series.rows.push(r);
            if let Some(trig) = detect_blowup(&r, t0, g0, &th) {
                report.detected = true;
                report.t_detect = Some(t);
                report.trigger = Some(trig);
                report.kinetic_ratio = Some(r.t_s / t0);
                break;
            }
        }
        if config.snapshot_stride > 0 && step % config.snapshot_stride == 0 {
            sink(snap(step, t, &comps))?;
        }
    }
    report.last_valid = series.rows.iter().rev().find(|r| r.is_finite()).copied();
    if report.kinetic_ratio.is_none() {
        report.kinetic_ratio = report.last_valid.map(|r| r.t_s / t0);
    }
    Ok(RunOutput { series, snapshots: Vec::new(), report, final_dt: dt })
}

/// Scalar evolution from the configured initial state.
pub fn evolve(config: &SimConfig) -> Result<RunOutput> {
    config.validate()?;
    let comps = initial_components(config, false)?;
    let mut snapshots = Vec::new();
    let mut out = run(config, comps, &mut |s| {
        snapshots.push(s);
        Ok(())
    })?;
    out.snapshots = snapshots;
    Ok(out)
}

/// Larmor period `π/|B|`.
pub fn larmor_period(b: f64) -> f64 {
    PI / b.abs()
}

/// Centered second difference of `g` against the virial right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialPoint {
    pub t: f64,
    pub gdd: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialResidual {
    /// Spacing of the difference stencil.
    pub spacing: f64,
    pub max_gap: f64,
    pub points: Vec<VirialPoint>,
}

/// Finite-difference `g̈` against `2F₀ + μd((p−1−4/d)/(p+1))‖ψ‖_{p+1}^{p+1} − B²‖ρψ‖²`
/// with `F₀ = F_S` (scalar) or `F_P` (spinor) of the first row. Uses every
/// `every`-th row; rows must be equally spaced (a clamped last row is dropped).
pub fn virial_residual(series: &ObservableSeries, mu: f64, p: f64, b: f64, dim: usize, every: usize) -> Result<VirialResidual> {
    let rows: Vec<&ObservableRow> = series.rows.iter().step_by(every.max(1)).collect();
    if rows.len() < 3 {
        return Err(Error::InvalidArgument("virial residual needs at least three rows".into()));
    }
    let spacing = rows[1].t - rows[0].t;
    let uniform = |a: &ObservableRow, c: &ObservableRow| ((c.t - a.t) - spacing).abs() <= 1e-9 * spacing;
    let mut end = rows.len();
    if !uniform(rows[end - 2], rows[end - 1]) {
        end -= 1;
    }
    if rows[..end].windows(2).any(|w| !uniform(w[0], w[1])) {
        return Err(Error::InvalidArgument("rows are not equally spaced".into()));
    }
    let f0 = match rows[0].pauli {
        Some(pc) => pc.f_p,
        None => rows[0].f_s,
    };
    let coeff = crate::observables::virial_coefficient(mu, p, dim);
    let points: Vec<VirialPoint> = rows[..end]
        .windows(3)
        .map(|w| VirialPoint {
            t: w[1].t,
            gdd: (w[2].g - 2.0 * w[1].g + w[0].g) / (spacing * spacing),
            rhs: 2.0 * f0 + coeff * w[1].lp1 - b * b * w[1].rho_sq,
        })
        .collect();
    if points.is_empty() {
        return Err(Error::InvalidArgument("virial residual needs at least three equally spaced rows".into()));
    }
    let max_gap = points.iter().map(|q| (q.gdd - q.rhs).abs()).fold(0.0, f64::max);
    Ok(VirialResidual { spacing, max_gap, points })
}

/// One field strength of a blow-up scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "B")]
    pub b: f64,
    pub f_s0: f64,
    pub g0: f64,
    pub gdot0: f64,
    /// Closed-form first zero of `g` (p = 3, d = 2 only).
    pub predicted: Option<f64>,
    pub detected: Option<f64>,
    pub trigger: Option<Trigger>,
    /// `detected − predicted`.
    pub signed_gap: Option<f64>,
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Detected times strictly decrease along the B list (every row detected).
    pub strictly_decreasing: bool,
    /// Largest `|relative_gap|` over rows that have one.
    pub max_relative_gap: Option<f64>,
}

impl ScanReport {
    pub const CSV_HEADER: &'static str = "B,F_S0,g0,gdot0,predicted,detected,trigger,signed_gap,relative_gap";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let trig = match r.trigger {
                Some(Trigger::KineticGrowth) => "kinetic-growth",
                Some(Trigger::VarianceFloor) => "variance-floor",
                Some(Trigger::Nonfinite) => "nonfinite",
                None => "",
            };
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{}",
                r.b,
                r.f_s0,
                r.g0,
                r.gdot0,
                opt(r.predicted),
                opt(r.detected),
                trig,
                opt(r.signed_gap),
                opt(r.relative_gap)
            );
        }
        out
    }
}

/// Runs the scalar evolution once per entry of `config.b_list`.
pub fn blowup_scan(config: &SimConfig) -> Result<ScanReport> {
    if config.b_list.is_empty() {
        return Err(Error::Config("blow-up scan needs a non-empty b_list".into()));
    }
    let mut rows = Vec::with_capacity(config.b_list.len());
    for &b in &config.b_list {
        let cfg = SimConfig { b, snapshot_stride: 0, ..config.clone() };
        let out = evolve(&cfg)?;
        let r0 = out.series.rows[0];
        let predicted = if cfg.dim == 2 && cfg.p == 3.0 && b != 0.0 {
            crate::theory::first_zero(&crate::theory::VarianceParams { f0: r0.f_s, b, g0: r0.g, gdot0: r0.gdot })
        } else {
            None
        };
        let detected = out.report.t_detect;
        let signed_gap = predicted.zip(detected).map(|(p, d)| d - p);
        rows.push(ScanRow {
            b,
            f_s0: r0.f_s,
            g0: r0.g,
            gdot0: r0.gdot,
            predicted,
            detected,
            trigger: out.report.trigger,
            signed_gap,
            relative_gap: signed_gap.zip(predicted).map(|(g, p)| g / p),
        });
    }
    let strictly_decreasing = rows.iter().all(|r| r.detected.is_some())
        && rows.windows(2).all(|w| w[1].detected.unwrap() < w[0].detected.unwrap());
    let max_relative_gap = rows.iter().filter_map(|r| r.relative_gap.map(f64::abs)).reduce(f64::max);
    Ok(ScanReport { rows, strictly_decreasing, max_relative_gap })
}
