//! Finite-element laboratory for slow viscous flow over a periodic porous bed.
//!
//! The crate resolves the microscopic Stokes problem on perforated domains with
//! Taylor-Hood (Q2/Q1) elements on curved quadrilateral meshes, computes the
//! boundary-layer constants of the Beavers-Joseph slip law and the pressure-jump
//! interface law, the permeability tensor of the unit cell, and compares the
//! microscopic solutions with the closed-form effective flow.
//!
//! Module map:
//! - [`meshkit`]: coarse templates, quadtree forests, refinement, hanging faces.
//! - [`fem`]: degrees of freedom, constraints, saddle-point assembly and solve.
//! - [`problems`]: boundary-layer, cell and microscopic drivers; effective closures.
//! - [`adaptivity`]: dual-weighted-residual estimation and adaptive loops.
//! - [`verify`]: norms, interface averages, order fits and table output.

pub mod adaptivity;
pub mod error;
pub mod fem;
pub mod manifest;
pub mod meshkit;
pub mod problems;
pub mod verify;

pub use error::{Error, Result};
