//! Macroscopic equations: fluxes, fields and finite-volume solvers.

pub mod field;
pub mod flux;
pub mod hyperbolic;
pub mod parabolic;
pub mod residual;
pub mod riemann;
pub mod smoothing;

pub use field::{DensityField, FieldGeometry, Trajectory};
pub use flux::{build_smoothed_flux, Flux, FluxKind};
pub use hyperbolic::{solve_hyperbolic, HyperbolicOptions, Viscosity};
pub use parabolic::{solve_parabolic, ParabolicOptions};
pub use residual::{entropy_residual, weak_residual, TestFunction};
pub use riemann::{riemann_exact, RiemannSolution, Wave};
pub use smoothing::{smoothing_convergence_study, viscous_convergence_study};
