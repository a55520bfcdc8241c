use std::path::Path;

use magnls_core::dynamics::{
    blowup_scan, initial_components, run, virial_residual, BlowupReport, InitialState, RunOutput, SimConfig,
    VirialResidual,
};
use magnls_core::strichartz::{verify_identity, FreeReference, GaussianParams, StrichartzReport, DEFAULT_NODES};
use magnls_core::theory::{certify_on_grid, Certificate, ExampleComparison, GridCertificate};
use magnls_core::{Error, Result};
use serde::Serialize;

use crate::Mode;

pub fn dispatch(mode: Mode, cfg: &SimConfig, out: &Path) -> Result<()> {
    match mode {
        Mode::Evolve => evolve(cfg, out, false).map(|_| ()),
        Mode::EvolvePauli => evolve(cfg, out, true).map(|_| ()),
        Mode::VirialCheck => virial_check(cfg, out),
        Mode::StrichartzCheck => strichartz_check(cfg, out),
        Mode::BlowupScan => scan(cfg, out),
        Mode::CertifyExample => certify(cfg, out),
    }
}

fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    mode: &'static str,
    config: &'a SimConfig,
    report: &'a BlowupReport,
    final_dt: f64,
    steps_recorded: usize,
    snapshots: Vec<String>,
}

/// Streams snapshots to `out/snapshots/` and writes `observables.csv` plus `run.json`.
fn evolve(cfg: &SimConfig, out: &Path, pauli: bool) -> Result<RunOutput> {
    cfg.validate()?;
    let comps = initial_components(cfg, pauli)?;
    let snap_dir = out.join("snapshots");
    if cfg.snapshot_stride > 0 {
        std::fs::create_dir_all(&snap_dir)?;
    }
    let mut names = Vec::new();
    let result = run(cfg, comps, &mut |s| {
        let name = format!("step_{:08}.snap", s.step);
        s.write(snap_dir.join(&name))?;
        names.push(format!("snapshots/{name}"));
        Ok(())
    })?;
    result.series.write_csv(out.join("observables.csv"))?;
    write_json(
        out.join("run.json"),
        &RunSummary {
            mode: if pauli { "evolve-pauli" } else { "evolve" },
            config: cfg,
            report: &result.report,
            final_dt: result.final_dt,
            steps_recorded: result.series.rows.len(),
            snapshots: names,
        },
    )?;
    Ok(result)
}

#[derive(Serialize)]
struct VirialSummary {
    pauli: bool,
    fine: Stencil,
    coarse: Stencil,
    /// `coarse.max_gap / fine.max_gap`; about 4 for a second-order residual.
    shrink_ratio: f64,
}

#[derive(Serialize)]
struct Stencil {
    spacing: f64,
    max_gap: f64,
}

impl From<&VirialResidual> for Stencil {
    fn from(v: &VirialResidual) -> Self {
        Self { spacing: v.spacing, max_gap: v.max_gap }
    }
}

/// Spinor runs are selected by `spin` or `initial_down` in the config.
fn virial_check(cfg: &SimConfig, out: &Path) -> Result<()> {
    let pauli = cfg.spin.is_some() || cfg.initial_down.is_some();
    let result = evolve(cfg, out, pauli)?;
    if result.report.detected {
        return Err(Error::InvalidArgument(format!(
            "run ended early at t = {:?}; the virial check needs a full run",
            result.report.t_detect
        )));
    }
    let fine = virial_residual(&result.series, cfg.mu, cfg.p, cfg.b, cfg.dim, 1)?;
    let coarse = virial_residual(&result.series, cfg.mu, cfg.p, cfg.b, cfg.dim, 2)?;
    let mut csv = String::from("t,gdd,rhs,gap\n");
    for q in &fine.points {
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", q.t, q.gdd, q.rhs, q.gdd - q.rhs));
    }
    std::fs::write(out.join("virial.csv"), csv)?;
    write_json(
        out.join("virial.json"),
        &VirialSummary { pauli, shrink_ratio: coarse.max_gap / fine.max_gap, fine: (&fine).into(), coarse: (&coarse).into() },
    )
}

#[derive(Serialize)]
struct StrichartzSummary {
    state: GaussianParams,
    /// `‖e^{itΔ}ψ₀‖_{L⁴L⁴} / ‖ψ₀‖₂`.
    free_ratio_4_4: f64,
    reports: Vec<StrichartzReport>,
}

pub const STRICHARTZ_PAIRS: [(f64, f64); 3] = [(4.0, 4.0), (f64::INFINITY, 2.0), (8.0, 8.0 / 3.0)];

fn gaussian_params(cfg: &SimConfig) -> Result<GaussianParams> {
    let InitialState::Gaussian { center, width, momentum, charge, amplitude, noise } = cfg.initial else {
        return Err(Error::Config("strichartz-check needs a gaussian initial state".into()));
    };
    if noise != 0.0 {
        return Err(Error::Config("strichartz-check needs noise = 0".into()));
    }
    let mut p = GaussianParams { center: [center[0], center[1]], width, momentum: [momentum[0], momentum[1]], charge, amplitude };
    if let Some(m) = cfg.mass {
        p.amplitude *= (m / p.lr_power(2.0)).sqrt();
    }
    Ok(p)
}

fn strichartz_check(cfg: &SimConfig, out: &Path) -> Result<()> {
    if cfg.dim != 2 {
        return Err(Error::Config("strichartz-check is two-dimensional".into()));
    }
    let grid = cfg.grid()?;
    let params = gaussian_params(cfg)?;
    let psi = params.sample(&grid);
    let fields = if cfg.b_list.is_empty() { vec![cfg.b] } else { cfg.b_list.clone() };
    let mut reports = Vec::new();
    for &b in &fields {
        for (q, r) in STRICHARTZ_PAIRS {
            reports.push(verify_identity(&psi, b, q, r, DEFAULT_NODES, FreeReference::Gaussian(params))?);
        }
    }
    let free_ratio_4_4 = params.free_spacetime_norm(4.0, 4.0)? / params.lr_power(2.0).sqrt();
    write_json(out.join("strichartz.json"), &StrichartzSummary { state: params, free_ratio_4_4, reports })
}

fn scan(cfg: &SimConfig, out: &Path) -> Result<()> {
    let report = blowup_scan(cfg)?;
    std::fs::write(out.join("scan.csv"), report.to_csv())?;
    write_json(out.join("scan.json"), &report)
}

#[derive(Serialize)]
struct CertificateSummary {
    radial: Certificate,
    grid: GridCertificate,
    comparison: ExampleComparison,
}

fn certify(cfg: &SimConfig, out: &Path) -> Result<()> {
    if cfg.dim != 2 {
        return Err(Error::Config("certify-example is two-dimensional".into()));
    }
    let (radial, grid) = certify_on_grid(&cfg.grid()?)?;
    let comparison = radial.comparison();
    write_json(out.join("certificate.json"), &CertificateSummary { radial, grid, comparison })
}
