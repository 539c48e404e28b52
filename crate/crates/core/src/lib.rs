//! Numerical tools for the relaxed Dirichlet energy of n-axially symmetric
//! sphere-valued maps.

pub mod connection;
pub mod dipole;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod quadrature;
pub mod variational;

pub use error::{Error, Result};
