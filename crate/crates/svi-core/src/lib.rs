//! Numerical core for stochastic variational inequalities with jumps, delays,
//! and path-dependent coefficients: convex potentials with resolvent and
//! Moreau-Yosida access, reproducible Wiener/Poisson drivers, cadlag path
//! storage with segment views, proximal and penalized time-stepping schemes,
//! a spectral reduction of the reaction-diffusion case, and a coupled
//! time-averaging laboratory.

pub mod averaging;
pub mod catalog;
pub mod convex;
pub mod drivers;
pub mod error;
pub mod galerkin;
pub mod integrator;
pub mod linalg;
pub mod paths;
pub mod report;

pub use error::{Result, SviError};
