//! Facilitated exclusion (FEP) and facilitated zero-range (FZRP) lattice gases.
//!
//! The crate bundles four layers that are meant to be used together:
//!
//! * [`lattice`], [`measures`] and [`dynamics`]: configurations, initial
//!   laws and an exact rejection-free kinetic Monte Carlo engine for both
//!   processes (plus the basic coupling of two zero-range copies).
//! * [`mapping`]: the exclusion to zero-range transformation, exact on
//!   configurations and trajectories, numerical on density fields.
//! * [`pde`]: flux functions, explicit monotone solvers for the parabolic
//!   and hyperbolic Stefan problems, their regularizations, an exact
//!   Riemann solver and weak/entropy residuals.
//! * [`harness`]: reductions that compare simulations with PDE solutions.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod mapping;
pub mod measures;
pub mod pde;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use lattice::{ExclusionConfig, LatticeGeometry, Phase, ZeroRangeConfig};
