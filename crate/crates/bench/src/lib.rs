//! Shared fixtures for the engine benchmarks.

use dualwave::classical::BvpConfig;
use dualwave::exactqm::{propagate_exact, ExactConfig};
use dualwave::{Grid, PotentialModel, Wavefunction};

/// Free Gaussian with σ = 1, p = 2 at ħ = m = 1 on `[-20, 20]`.
pub fn free_gaussian(n: usize) -> (PotentialModel, Wavefunction) {
    let model = PotentialModel::free(1.0, 1.0).expect("valid model");
    let grid = Grid::periodic(-20.0, 20.0, n).expect("valid grid");
    let psi = Wavefunction::gaussian(grid, &model, 0.0, 1.0, 2.0).expect("valid state");
    (model, psi)
}

/// Frames every 0.01 up to `duration`.
pub fn exact_frames(psi: &Wavefunction, model: &PotentialModel, duration: f64) -> Vec<Wavefunction> {
    let dt = 1e-3;
    propagate_exact(psi, model, &ExactConfig::new(duration, dt, 10)).expect("propagation succeeds")
}

pub fn bvp() -> BvpConfig {
    BvpConfig::new(-60.0, 60.0, 256)
}
