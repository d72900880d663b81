//! One-dimensional quantum dynamics by four routes: exact grid evolution,
//! the semiclassical (Van Vleck) sum over classical paths, de Broglie–Bohm
//! trajectories, and solitonic bumps that ride a single classical branch of
//! the semiclassical wave while their amplitude tracks the full field.

pub mod classical;
pub mod doublesolution;
pub mod error;
pub mod exactqm;
pub mod grid;
pub mod io;
pub mod pilotwave;
pub mod potentials;
pub mod scenario;
pub mod semiclassical;

mod interp;
mod spectral;

pub use classical::{ClassicalTrajectory, PhasePoint};
pub use doublesolution::{SolitonBump, WField};
pub use error::{Error, Result};
pub use exactqm::{PolarField, Wavefunction};
pub use grid::{Boundary, Grid};
pub use pilotwave::{BohmTrajectory, TrajectoryEnsemble};
pub use potentials::{PotentialKind, PotentialModel};
pub use semiclassical::{Branch, SemiclassicalState};
