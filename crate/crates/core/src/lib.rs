//! Simulation laboratory for central limit theorems of the L² and L³ moduli
//! of continuity of Brownian local time.
//!
//! The crate is organised bottom-up: [`path`] draws reproducible Brownian
//! paths, [`local_time`] turns them into occupation densities, [`numerics`]
//! holds special functions and statistical tests, [`functionals`] evaluates
//! the path functionals and their stochastic-integral representations, and
//! [`harness`] runs ensembles and builds distributional reports.

pub mod error;
pub mod functionals;
pub mod harness;
pub mod local_time;
pub mod numerics;
pub mod path;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
