//! Immersed boundary finite element fluid-structure interaction in two
//! dimensions, with both the conventional formulation and a sharp-interface
//! pressure-splitting formulation `p = pi + phi`.
//!
//! The crate is organised bottom-up:
//!
//! * [`mac_grid`]: staggered Cartesian grid fields and discrete operators.
//! * [`fluid_solver`]: incompressible Navier-Stokes time stepping.
//! * [`solid_fem`]: Q1 finite elements, constitutive models and force densities.
//! * [`coupling`]: regularized delta spreading and interpolation.
//! * [`pressure_split`]: the solid-supported pressure field `phi`.
//! * [`oracles`]: closed-form reference solutions and jump verifiers.
//! * [`metrics`]: error norms, rate fits and diagnostics.
//! * [`app`]: scenarios, the coupled time step, and output management.

pub mod app;
pub mod coupling;
pub mod error;
pub mod fluid_solver;
pub mod io;
pub mod linalg;
pub mod mac_grid;
pub mod metrics;
pub mod oracles;
pub mod pressure_split;
pub mod solid_fem;

pub use error::{Error, Result};

/// 2x2 matrices and 2-vectors used throughout the solid mechanics code.
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;
