//! Simulation of transverse-mode entanglement in optical fibers whose core
//! cross-section is a Robnik (limaçon) billiard.
//!
//! The crate covers the wave picture (split-step propagation of the paraxial
//! equation, Dirichlet eigenmodes of the core), the radial–angular entanglement
//! of the resulting fields, and the ray limit (billiard map and Poincaré
//! sections).

pub mod classical;
pub mod cli;
pub mod eigenmodes;
pub mod entanglement;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod linalg;
pub mod output;
pub mod propagator;
pub mod states;

pub use error::{Error, Result};
