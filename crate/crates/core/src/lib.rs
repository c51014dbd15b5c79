//! Galerkin B-spline finite element solvers for classical Boussinesq
//! systems over variable bottoms.

pub mod analysis;
pub mod assembly;
pub mod bathymetry;
pub mod config;
pub mod error;
pub mod experiments;
pub mod models;
pub mod solitary;
pub mod spline;
pub mod timestep;

pub use error::{FemError, Result};
