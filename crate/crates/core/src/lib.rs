//! Spectral simulator for the nonlinear Schrödinger equation in a uniform
//! magnetic field, with its Pauli spinor extension.
//!
//! Units: `i∂ₜψ = (p + A)²ψ + μ|ψ|^{p-1}ψ`, `p = -i∇`, symmetric gauge
//! `A = B x⊥ / 2` with `x⊥ = (-x₂, x₁, 0)`.

pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod observables;
pub mod pauli;
pub mod propagator;
pub mod quadrature;
pub mod strichartz;
pub mod theory;
pub mod transform;

pub use error::{Error, Result};
pub use field::{ScalarField, SpinorField};
pub use grid::{make_grid, Grid};
pub use transform::{forward_transform, inner_product, inverse_transform, lq_norm, Field, Spectral};
pub use propagator::{
    apply_mehler_dense, apply_mehler_fast, apply_up, apply_us, free_propagator, mehler_kernel_value,
    LinearStepper, PropagatorPlan,
};
