//! Reference quantum evolution on a grid and the hydrodynamic fields
//! derived from it.

mod hydro;
mod propagate;
mod wavefunction;

pub use hydro::{
    autocorrelation, continuity_residual, current_density, polar_decompose, polar_decompose_with, qhj_residual,
    quantum_potential, PolarField, Residual, DEFAULT_NODE_EPS,
};
pub use propagate::{max_stable_dt, propagate_exact, ExactConfig, WellEigenbasis};
pub use wavefunction::Wavefunction;
