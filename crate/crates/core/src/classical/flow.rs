//! Endpoint of the classical flow with its tangent matrix, without storing
//! the path. Closed forms are used where the motion is known analytically
//! (free particle, oscillator, hard-wall well); other potentials are
//! integrated numerically.

use serde::{Deserialize, Serialize};

use super::integrator::{check_start, energy_drift, step_plan, Stepper, ENERGY_TOLERANCE};
use super::{PhasePoint, ZeroCounter};
use crate::error::{Error, Result};
use crate::potentials::{PotentialKind, PotentialModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEnd {
    pub end: PhasePoint,
    /// Principal action `∫ L dt` along the path.
    pub action: f64,
    /// `∂(x, p)/∂(x0, p0)` at the endpoint, physical coordinates.
    pub monodromy: [[f64; 2]; 2],
    pub reflections: u32,
    /// Zeros of `J = ∂x/∂p0` in `(0, t]`.
    pub jacobi_zeros: u32,
    /// Zeros in `(0, t]` of the tangent `x`-component seeded by `seed`.
    pub seed_zeros: u32,
}

impl FlowEnd {
    pub fn jacobi(&self) -> f64 {
        self.monodromy[0][1]
    }

    /// `∂x/∂x0` along a family whose initial momenta vary as `dp0/dx0 = slope`.
    pub fn stretch(&self, slope: f64) -> f64 {
        self.monodromy[0][0] + self.monodromy[0][1] * slope
    }
}

fn linear_zero(a: f64, b: f64, mass: f64, t: f64) -> u32 {
    // x-displacement a + b τ / m vanishes once, at τ = -a m / b.
    if b == 0.0 {
        return 0;
    }
    let tau = -a * mass / b;
    let tol = 1e-12 * t.abs().max(1.0);
    u32::from(tau > tol && tau <= t + tol)
}

fn oscillator_zeros(a: f64, b: f64, mass: f64, omega: f64, t: f64) -> u32 {
    // a cos ωτ + (b / mω) sin ωτ = R cos(ωτ - φ)
    let bb = b / (mass * omega);
    if a == 0.0 && bb == 0.0 {
        return 0;
    }
    let phi = bb.atan2(a);
    let pi = std::f64::consts::PI;
    let tol = 1e-9 * (omega * t).abs().max(1.0);
    let mut first = (phi + 0.5 * pi).rem_euclid(pi);
    if first <= tol {
        first += pi;
    }
    let span = omega * t + tol;
    if first > span {
        0
    } else {
        ((span - first) / pi).floor() as u32 + 1
    }
}

/// Endpoint after `duration`. `seed = (dx0, dp0)` selects an extra tangent
/// whose zeros are counted (for Lagrangian-manifold families); `dt` is only
/// used by numerically integrated potentials.
pub fn flow_endpoint(model: &PotentialModel, start: PhasePoint, duration: f64, seed: [f64; 2], dt: f64) -> Result<FlowEnd> {
    check_start(model, start)?;
    let m = model.mass;
    let (x0, p0, t) = (start.x, start.p, duration);
    match model.kind {
        PotentialKind::FreeParticle => Ok(FlowEnd {
            end: PhasePoint::new(x0 + p0 * t / m, p0),
            action: p0 * p0 * t / (2.0 * m),
            monodromy: [[1.0, t / m], [0.0, 1.0]],
            reflections: 0,
            jacobi_zeros: linear_zero(0.0, 1.0, m, t),
            seed_zeros: linear_zero(seed[0], seed[1], m, t),
        }),
        PotentialKind::InfiniteWell { length } => {
            let unfolded = x0 + p0 * t / m;
            let k = (unfolded / length).floor();
            let y = unfolded.rem_euclid(2.0 * length);
            let x = if y <= length { y } else { 2.0 * length - y };
            let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            Ok(FlowEnd {
                end: PhasePoint::new(x, sign * p0),
                action: p0 * p0 * t / (2.0 * m),
                monodromy: [[sign, sign * t / m], [0.0, sign]],
                reflections: k.abs() as u32,
                jacobi_zeros: 0,
                seed_zeros: linear_zero(seed[0], seed[1], m, t),
            })
        }
        PotentialKind::HarmonicOscillator { omega } => {
            let (s, c) = (omega * t).sin_cos();
            let x = x0 * c + p0 * s / (m * omega);
            let p = -m * omega * x0 * s + p0 * c;
            Ok(FlowEnd {
                end: PhasePoint::new(x, p),
                action: 0.5 * (p * x - p0 * x0),
                monodromy: [[c, s / (m * omega)], [-m * omega * s, c]],
                reflections: 0,
                jacobi_zeros: oscillator_zeros(0.0, 1.0, m, omega, t),
                seed_zeros: oscillator_zeros(seed[0], seed[1], m, omega, t),
            })
        }
        PotentialKind::PolynomialWell { .. } => numeric_endpoint(model, start, duration, seed, dt),
    }
}

fn numeric_endpoint(model: &PotentialModel, start: PhasePoint, duration: f64, seed: [f64; 2], dt: f64) -> Result<FlowEnd> {
    let (steps, h) = step_plan(duration, dt)?;
    let mut stepper = Stepper::new(model, start);
    let mut jacobi = ZeroCounter::default();
    let mut seeded = ZeroCounter::default();
    for _ in 0..steps {
        stepper.step(h, &mut |_| {});
        stepper.check_finite()?;
        let mm = stepper.m;
        jacobi.push(mm[0][1]);
        seeded.push(mm[0][0] * seed[0] + mm[0][1] * seed[1]);
    }
    let h0 = model.hamiltonian(start.x, start.p);
    let drift = energy_drift(h0, model.hamiltonian(stepper.x, stepper.p));
    if drift > ENERGY_TOLERANCE {
        return Err(Error::EnergyDrift { drift, bound: ENERGY_TOLERANCE });
    }
    Ok(FlowEnd {
        end: PhasePoint::new(stepper.x, stepper.p),
        action: stepper.action,
        monodromy: stepper.m,
        reflections: 0,
        jacobi_zeros: jacobi.finish(),
        seed_zeros: seeded.finish(),
    })
}
