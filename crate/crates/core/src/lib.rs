//! Construction and verification of compatible flat metric pencils.
//!
//! The crate samples metrics on uniform grids, evaluates Levi-Civita
//! connections and curvature by finite differences, checks the linear
//! compatibility conditions of metric pencils, evaluates the Lamé system for
//! diagonal metrics and generates solutions of it with the dressing method.

pub mod dressing;
pub mod error;
pub mod expr;
pub mod functions;
pub mod geometry;
pub mod grid;
pub mod lame;
pub mod pencil;
pub mod report;
pub mod two_component;

pub use error::{Error, Result};
