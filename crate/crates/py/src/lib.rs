//! Python module `magnls`: grids, fields, propagators, observables and batch runs.

use magnls_core::dynamics::{self, InitialState, SimConfig};
use magnls_core::ground_state::GroundState;
use magnls_core::observables as obs;
use magnls_core::pauli::evolve_pauli;
use magnls_core::strichartz::{verify_identity, FreeReference, GaussianParams, DEFAULT_NODES};
use magnls_core::theory::{self, Certificate, VarianceParams};
use magnls_core::transform::mass;
use magnls_core::{
    apply_mehler_dense, apply_mehler_fast, apply_us, free_propagator, lq_norm, Error, Grid, PropagatorPlan, ScalarField,
};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidGrid(_) | Error::SingularTime { .. } | Error::GridMismatch => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Periodic grid `[-L, L)^dim` with `n` points per axis.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(Grid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dim: usize, n: usize, extent: f64) -> PyResult<Self> {
        Grid::new(dim, n, extent).map(Self).map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn extent(&self) -> f64 {
        self.0.extent()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    /// Axis coordinates `-L + i h`.
    fn coords(&self) -> Vec<f64> {
        self.0.coords()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid(dim={}, n={}, L={})", self.0.dim(), self.0.n(), self.0.extent())
    }
}

/// Complex scalar field on a grid, flat with the first axis fastest.
#[pyclass(name = "Field", skip_from_py_object)]
#[derive(Clone)]
struct PyField(ScalarField);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<Complex64>) -> PyResult<Self> {
        ScalarField::from_values(&grid.0, values).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, width, center = [0.0; 3], momentum = [0.0; 3], charge = 0, amplitude = 1.0))]
    fn gaussian(grid: &PyGrid, width: f64, center: [f64; 3], momentum: [f64; 3], charge: i32, amplitude: f64) -> PyResult<Self> {
        let state = InitialState::Gaussian { center, width, momentum, charge, amplitude, noise: 0.0 };
        dynamics::sample_initial(&state, &grid.0, 0.0, 3.0, 0).map(Self).map_err(py_err)
    }

    /// Scaled ground state `a λ^{2/(p−1)} Q(λx)`.
    #[staticmethod]
    #[pyo3(signature = (grid, p = 3.0, scale = 1.0, amplitude = 1.0))]
    fn ground_state(grid: &PyGrid, p: f64, scale: f64, amplitude: f64) -> PyResult<Self> {
        let state = InitialState::Townes { scale, amplitude, center: [0.0; 3], taper: None };
        dynamics::sample_initial(&state, &grid.0, 0.0, p, 0).map(Self).map_err(py_err)
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.0.values.clone()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid)
    }

    fn mass(&self) -> f64 {
        mass(&self.0)
    }

    fn lq_norm(&self, q: f64) -> PyResult<f64> {
        lq_norm(&self.0, q).map_err(py_err)
    }

    fn boundary_mass(&self) -> f64 {
        self.0.boundary_mass()
    }

    /// `e^{−it(p+A)²}` by the split route (any `t`).
    fn apply_us(&self, t: f64, b: f64) -> PyResult<Self> {
        apply_us(&self.0, t, b).map(Self).map_err(py_err)
    }

    /// Chirp / scaled-transform / rotation route (`|Bt| ≤ π/4`, `t ≠ 0`).
    fn apply_mehler(&self, t: f64, b: f64) -> PyResult<Self> {
        let plan = PropagatorPlan::new(&self.0.grid, b, t).map_err(py_err)?;
        apply_mehler_fast(&self.0, &plan).map(Self).map_err(py_err)
    }

    /// Direct kernel summation, O(N²) per output point; small 2D grids only.
    fn apply_mehler_dense(&self, t: f64, b: f64) -> PyResult<Self> {
        apply_mehler_dense(&self.0, t, b).map(Self).map_err(py_err)
    }

    fn free(&self, t: f64) -> PyResult<Self> {
        let axes: Vec<usize> = (0..self.0.grid.dim()).collect();
        free_propagator(&self.0, t, &axes).map(Self).map_err(py_err)
    }

    fn kinetic(&self, b: f64) -> f64 {
        obs::kinetic_s(&self.0, b)
    }

    fn energy(&self, mu: f64, p: f64, b: f64) -> f64 {
        obs::energy_s(&self.0, mu, p, b)
    }

    fn f_s(&self, mu: f64, p: f64, b: f64) -> PyResult<f64> {
        obs::f_s(&self.0, mu, p, b).map_err(py_err)
    }

    fn l3(&self) -> f64 {
        obs::l3(&self.0)
    }

    fn variance(&self) -> f64 {
        obs::variance_g(&self.0)
    }

    fn gdot(&self, b: f64) -> f64 {
        obs::gdot(&self.0, b)
    }

    fn rho_norm_sq(&self) -> f64 {
        obs::rho_norm_sq(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Field(n={}, dim={}, mass={:.6})", self.0.grid.n(), self.0.grid.dim(), mass(&self.0))
    }
}

fn parse(config_json: &str) -> PyResult<SimConfig> {
    SimConfig::from_json(config_json).map_err(py_err)
}

/// Runs a config; returns `(observables_csv, report_json)`.
#[pyfunction]
#[pyo3(signature = (config_json, pauli = false))]
fn evolve(config_json: &str, pauli: bool) -> PyResult<(String, String)> {
    let cfg = parse(config_json)?;
    let out = if pauli { evolve_pauli(&cfg) } else { dynamics::evolve(&cfg) }.map_err(py_err)?;
    Ok((out.series.to_csv(), json(&out.report)?))
}

/// Blow-up scan over `b_list`; returns the report as JSON.
#[pyfunction]
fn blowup_scan(config_json: &str) -> PyResult<String> {
    json(&dynamics::blowup_scan(&parse(config_json)?).map_err(py_err)?)
}

#[pyfunction]
fn exact_variance(f0: f64, b: f64, g0: f64, gdot0: f64, t: f64) -> PyResult<f64> {
    theory::exact_variance(&VarianceParams { f0, b, g0, gdot0 }, t).map_err(py_err)
}

#[pyfunction]
fn first_zero(f0: f64, b: f64, g0: f64, gdot0: f64) -> Option<f64> {
    theory::first_zero(&VarianceParams { f0, b, g0, gdot0 })
}

/// Radial certificate and paper-style comparison of the example state, as JSON.
#[pyfunction]
fn certify_example() -> PyResult<String> {
    let c = Certificate::compute();
    let cmp = c.comparison();
    json(&serde_json::json!({ "radial": c, "comparison": cmp }))
}

/// `Q(0)` of the radial ground state of `−ΔQ + Q = Q^p`.
#[pyfunction]
fn ground_state_peak(dim: usize, p: f64) -> PyResult<f64> {
    GroundState::solve(dim, p).map(|q| q.q0).map_err(py_err)
}

/// Strichartz identity report for a centred Gaussian of the given width, as JSON.
#[pyfunction]
#[pyo3(signature = (grid, width, b, q = 4.0, r = 4.0))]
fn strichartz_gaussian(grid: &PyGrid, width: f64, b: f64, q: f64, r: f64) -> PyResult<String> {
    let p = GaussianParams::new(width);
    let report = verify_identity(&p.sample(&grid.0), b, q, r, DEFAULT_NODES, FreeReference::Gaussian(p)).map_err(py_err)?;
    json(&report)
}

#[pymodule]
fn magnls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(blowup_scan, m)?)?;
    m.add_function(wrap_pyfunction!(exact_variance, m)?)?;
    m.add_function(wrap_pyfunction!(first_zero, m)?)?;
    m.add_function(wrap_pyfunction!(certify_example, m)?)?;
    m.add_function(wrap_pyfunction!(ground_state_peak, m)?)?;
    m.add_function(wrap_pyfunction!(strichartz_gaussian, m)?)?;
    Ok(())
}
