//! Numerics for the steady Prandtl boundary-layer expansion of a 2D
//! Navier–Stokes flow over a moving plate.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs: grids, stencils and quadrature, the Blasius base flow, the
//! linearized Euler and Prandtl correctors, the degree functional and kernel
//! of the parallel operator, the boundary-trace solver, and the composite
//! residual measurement.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
extern crate alloc;

pub mod blasius;
pub mod error;
pub mod euler;
pub mod expansion;
pub mod fit;
pub mod grid;
pub mod interp;
pub mod kernel;
pub mod linalg;
pub mod prandtl;
pub mod quad;
pub mod stencil;
pub mod u0;

pub use error::{Error, Result};
pub use grid::{bracket, Grid1D, Grid2D, GridKind, WeightSpec};
