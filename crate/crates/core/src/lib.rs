//! Numerical workbench for transonic shocks attached to slender perturbed cones.
//!
//! The crate is organised bottom-up:
//!
//! * [`gas`]: Bernoulli closure and scaling.
//! * [`polar`]: straight-shock algebra and the transonic polar root.
//! * [`background`]: the self-similar conical profile between shock and cone.
//! * [`weighted`]: log-polar strip grids and weighted Sobolev/Hoelder norms.
//! * [`sector`]: the singular elliptic solver on a plane sector.
//! * [`shock`]: the free-boundary fixed-point iteration.
//! * [`workbench`]: case files, artifacts and subcommands.

pub mod background;
pub mod error;
pub mod gas;
pub mod polar;
pub mod sector;
pub mod shock;
pub mod table;
pub mod weighted;
pub mod workbench;

pub use error::{Error, Result};
