//! Classical mechanics: Hamiltonian flow with action and Jacobi fields,
//! boundary-value path search and periodic orbits.

mod flow;
mod integrator;
mod orbits;
mod paths;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use flow::{flow_endpoint, FlowEnd};
pub use integrator::{integrate_hamilton, ClassicalTrajectory, TrajectorySample, ENERGY_TOLERANCE};
pub use orbits::{find_periodic_orbits, PeriodicOrbit};
pub use paths::{find_paths, image_roots, shoot_paths, BvpConfig, PathSet, ShootingRoot, ShootingTable};

pub(crate) use integrator::hermite;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }
}

/// Relative size below which a final tangent value is treated as a zero
/// reached exactly at the endpoint.
const ENDPOINT_ZERO: f64 = 1e-9;

/// Counts zeros of a sampled scalar field along a path, start excluded.
/// A field that ends (numerically) on zero counts that zero once.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct ZeroCounter {
    count: u32,
    sign: f64,
    scale: f64,
    current: Option<f64>,
}

impl ZeroCounter {
    pub fn push(&mut self, v: f64) {
        if let Some(prev) = self.current.replace(v) {
            self.commit(prev);
        }
        self.scale = self.scale.max(v.abs());
    }

    fn commit(&mut self, v: f64) {
        if v == 0.0 {
            return;
        }
        let s = v.signum();
        if self.sign != 0.0 && s != self.sign {
            self.count += 1;
        }
        self.sign = s;
    }

    pub fn finish(mut self) -> u32 {
        if let Some(last) = self.current.take() {
            let on_zero = last.abs() <= ENDPOINT_ZERO * self.scale;
            if on_zero && (last == 0.0 || last.signum() == self.sign) {
                self.count += 1;
            } else {
                self.commit(last);
            }
        }
        self.count
    }
}

pub(crate) fn count_zeros(values: impl IntoIterator<Item = f64>) -> u32 {
    let mut counter = ZeroCounter::default();
    values.into_iter().for_each(|v| counter.push(v));
    counter.finish()
}

/// Number of conjugate points (zeros of `J`) passed along the trajectory.
pub fn maslov_count(trajectory: &ClassicalTrajectory) -> u32 {
    count_zeros(trajectory.samples.iter().skip(1).map(|s| s.unfolded_monodromy()[0][1]))
}

/// Default relative caustic threshold: `|J| < eps * t/m` counts as singular.
pub const CAUSTIC_EPS: f64 = 1e-6;

/// Van Vleck weight `|J(t)|^(-1/2)`; fails near a caustic.
pub fn jacobi_determinant_factor(trajectory: &ClassicalTrajectory, t: f64) -> Result<f64> {
    jacobi_factor_with(trajectory, t, CAUSTIC_EPS)
}

pub fn jacobi_factor_with(trajectory: &ClassicalTrajectory, t: f64, eps: f64) -> Result<f64> {
    let j = trajectory.jacobi_at(t);
    let bound = eps * t.abs() / trajectory.mass;
    if j.abs() < bound {
        return Err(Error::Caustic { jacobi: j.abs(), eps: bound, t });
    }
    Ok(j.abs().powf(-0.5))
}
