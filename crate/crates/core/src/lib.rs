//! Entropy solutions of genuinely nonlinear scalar conservation laws and the
//! diagnostics that probe their regularity.

pub mod characteristics;
pub mod decay;
pub mod degiorgi;
pub mod error;
pub mod flux;
pub mod grid;
pub mod harness;
pub mod io;
pub mod kinetic;
pub mod scaling;
pub mod structure;
pub mod solver;

pub use error::{Error, Result};
pub use flux::FluxSpec;
pub use grid::{Geometry, ScalarField};
