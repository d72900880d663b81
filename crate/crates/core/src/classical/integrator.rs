use serde::{Deserialize, Serialize};

use super::{count_zeros, PhasePoint};
use crate::error::{ensure, Error, Result};
use crate::potentials::PotentialModel;

/// Relative energy drift tolerated over a full integration.
pub const ENERGY_TOLERANCE: f64 = 1e-6;

// Position-extended Forest–Ruth-like (PEFRL) coefficients.
const XI: f64 = 0.178_617_895_844_809_1;
const LAMBDA: f64 = -0.212_341_831_062_605_4;
const CHI: f64 = -0.066_264_582_669_818_5;
const KICK_OUTER: f64 = 0.5 * (1.0 - 2.0 * LAMBDA);
const DRIFT_MIDDLE: f64 = 1.0 - 2.0 * (CHI + XI);

/// One recorded point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    /// Accumulated action `∫ (p²/2m - V) dt`.
    pub action: f64,
    /// Tangent matrix `∂(x, p)/∂(x0, p0)` in physical (folded) coordinates.
    pub monodromy: [[f64; 2]; 2],
    pub reflections: u32,
}

impl TrajectorySample {
    /// Jacobi field `J = ∂x/∂p0`.
    pub fn jacobi(&self) -> f64 {
        self.monodromy[0][1]
    }

    /// Tangent fields with the wall sign flips undone, so zeros mark genuine
    /// conjugate points rather than bounces.
    pub fn unfolded_monodromy(&self) -> [[f64; 2]; 2] {
        let s = if self.reflections.is_multiple_of(2) { 1.0 } else { -1.0 };
        self.monodromy.map(|row| row.map(|v| v * s))
    }
}

/// Phase-space path with action, Jacobi field and index bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTrajectory {
    pub start: PhasePoint,
    /// Time-ordered samples; wall hits are inserted as extra samples.
    pub samples: Vec<TrajectorySample>,
    pub action: f64,
    pub maslov_index: u32,
    pub reflection_count: u32,
    pub energy: f64,
    pub mass: f64,
}

impl ClassicalTrajectory {
    pub fn end(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn duration(&self) -> f64 {
        self.end().t - self.samples[0].t
    }

    pub fn jacobi_field(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.jacobi())).collect()
    }

    /// Zeros along the path of the unfolded tangent `x`-component for the
    /// initial displacement `seed = (dx0, dp0)`.
    pub fn seed_zeros(&self, seed: [f64; 2]) -> u32 {
        count_zeros(self.samples.iter().skip(1).map(|s| {
            let m = s.unfolded_monodromy();
            m[0][0] * seed[0] + m[0][1] * seed[1]
        }))
    }

    /// Position at time `t` by piecewise-cubic Hermite interpolation between
    /// samples (using `dx/dt = p/m`); exact for free segments.
    pub fn position_at(&self, t: f64) -> f64 {
        let mass = self.mass;
        self.interpolate(t, |s| (s.x, s.p / mass))
    }

    /// Jacobi field at `t`, Hermite-interpolated with `dJ/dt = (∂p/∂p0)/m`.
    pub fn jacobi_at(&self, t: f64) -> f64 {
        let mass = self.mass;
        self.interpolate(t, |s| (s.monodromy[0][1], s.monodromy[1][1] / mass))
    }

    fn interpolate(&self, t: f64, f: impl Fn(&TrajectorySample) -> (f64, f64)) -> f64 {
        let s = &self.samples;
        if t <= s[0].t {
            return f(&s[0]).0;
        }
        let i = s.partition_point(|q| q.t < t);
        if i >= s.len() {
            return f(s.last().unwrap()).0;
        }
        if s[i].t == t {
            return f(&s[i]).0;
        }
        let (a, b) = (&s[i - 1], &s[i]);
        let (ya, da) = f(a);
        if a.reflections != b.reflections {
            // `b` is a wall hit reached by straight flight from `a`.
            return ya + da * (t - a.t);
        }
        let (yb, db) = f(b);
        hermite(a.t, ya, da, b.t, yb, db, t)
    }

    /// Sum of `|Δx|` over samples; exact for billiards since wall hits are samples.
    pub fn path_length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].x - w[0].x).abs()).sum()
    }
}

pub(crate) fn hermite(ta: f64, ya: f64, da: f64, tb: f64, yb: f64, db: f64, t: f64) -> f64 {
    let h = tb - ta;
    let s = (t - ta) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * ya + h10 * h * da + h01 * yb + h11 * h * db
}

/// Integration state: position, momentum, action, and the tangent matrix.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stepper<'a> {
    model: &'a PotentialModel,
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub action: f64,
    pub m: [[f64; 2]; 2],
    pub reflections: u32,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a PotentialModel, start: PhasePoint) -> Self {
        Self { model, t: 0.0, x: start.x, p: start.p, action: 0.0, m: [[1.0, 0.0], [0.0, 1.0]], reflections: 0 }
    }

    pub fn sample(&self) -> TrajectorySample {
        TrajectorySample {
            t: self.t,
            x: self.x,
            p: self.p,
            action: self.action,
            monodromy: self.m,
            reflections: self.reflections,
        }
    }

    fn drift(&mut self, h: f64) {
        let mass = self.model.mass;
        self.action += self.p * self.p / (2.0 * mass) * h;
        self.m[0][0] += self.m[1][0] * h / mass;
        self.m[0][1] += self.m[1][1] * h / mass;
        self.x += self.p / mass * h;
    }

    /// Exact free flight inside a hard-wall box. Every wall hit is reported
    /// through `on_wall` with the state right after the bounce.
    fn billiard(&mut self, h: f64, length: f64, on_wall: &mut impl FnMut(TrajectorySample)) {
        let mass = self.model.mass;
        let end = self.t + h;
        self.action += self.p * self.p / (2.0 * mass) * h;
        let mut remaining = h;
        loop {
            let v = self.p / mass;
            let target = self.x + v * remaining;
            if v == 0.0 || (target > 0.0 && target < length) {
                self.x = target;
                break;
            }
            let wall = if v < 0.0 { 0.0 } else { length };
            let tau = ((wall - self.x) / v).clamp(0.0, remaining);
            self.m[0][0] += self.m[1][0] * tau / mass;
            self.m[0][1] += self.m[1][1] * tau / mass;
            remaining -= tau;
            self.t += tau;
            self.x = wall;
            self.p = -self.p;
            self.m = self.m.map(|row| row.map(|e| -e));
            self.reflections += 1;
            on_wall(self.sample());
            if remaining <= 0.0 {
                break;
            }
        }
        self.m[0][0] += self.m[1][0] * remaining / mass;
        self.m[0][1] += self.m[1][1] * remaining / mass;
        self.t = end;
    }

    fn kick(&mut self, h: f64) {
        let force = -self.model.gradient_unchecked(self.x);
        let curvature = self.model.curvature_unchecked(self.x);
        self.action -= self.model.evaluate_unchecked(self.x) * h;
        self.p += force * h;
        self.m[1][0] -= curvature * self.m[0][0] * h;
        self.m[1][1] -= curvature * self.m[0][1] * h;
    }

    /// Advances by `h`: one PEFRL step for smooth potentials, exact flight
    /// for the hard-wall well (where every kick vanishes).
    pub fn step(&mut self, h: f64, on_wall: &mut impl FnMut(TrajectorySample)) {
        if let Some(length) = self.model.well_length() {
            self.billiard(h, length, on_wall);
            return;
        }
        self.drift(XI * h);
        self.kick(KICK_OUTER * h);
        self.drift(CHI * h);
        self.kick(LAMBDA * h);
        self.drift(DRIFT_MIDDLE * h);
        self.kick(LAMBDA * h);
        self.drift(CHI * h);
        self.kick(KICK_OUTER * h);
        self.drift(XI * h);
        self.t += h;
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.x.is_finite() && self.p.is_finite() && self.x.abs() < 1e150 {
            Ok(())
        } else {
            Err(Error::DomainEscape { t: self.t })
        }
    }
}

pub(crate) fn check_start(model: &PotentialModel, start: PhasePoint) -> Result<()> {
    ensure(start.x.is_finite() && start.p.is_finite(), "start", || "must be finite".into())?;
    if let Some(length) = model.well_length() {
        if !(start.x > 0.0 && start.x < length) {
            return Err(Error::WallEvaluation { x: start.x, length });
        }
    }
    Ok(())
}

pub(crate) fn step_plan(duration: f64, dt: f64) -> Result<(usize, f64)> {
    ensure(duration > 0.0, "duration", || format!("must be positive, got {duration}"))?;
    ensure(dt > 0.0, "dt", || format!("must be positive, got {dt}"))?;
    let n = (duration / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, duration / n as f64))
}

pub(crate) fn energy_drift(h0: f64, h: f64) -> f64 {
    if h0.abs() > 1e-300 {
        ((h - h0) / h0).abs()
    } else {
        (h - h0).abs()
    }
}

/// Integrates Hamilton's equations together with the action and the tangent
/// (variational) flow. Steps are shortened so the run ends exactly at
/// `duration`.
pub fn integrate_hamilton(model: &PotentialModel, start: PhasePoint, duration: f64, dt: f64) -> Result<ClassicalTrajectory> {
    check_start(model, start)?;
    let (steps, h) = step_plan(duration, dt)?;
    let energy = model.hamiltonian(start.x, start.p);
    let mut stepper = Stepper::new(model, start);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(stepper.sample());
    for _ in 0..steps {
        let mut events = Vec::new();
        stepper.step(h, &mut |e| events.push(e));
        stepper.check_finite()?;
        samples.extend(events);
        samples.push(stepper.sample());
    }
    let end = stepper.sample();
    let drift = energy_drift(energy, model.hamiltonian(end.x, end.p));
    if drift > ENERGY_TOLERANCE {
        return Err(Error::EnergyDrift { drift, bound: ENERGY_TOLERANCE });
    }
    let maslov_index = count_zeros(samples.iter().skip(1).map(|s| s.unfolded_monodromy()[0][1]));
    Ok(ClassicalTrajectory {
        start,
        action: end.action,
        maslov_index,
        reflection_count: end.reflections,
        energy,
        mass: model.mass,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // Closed-form oscillator: x, p, J = sin(ωt)/(mω) and the two-point
        // action mω((x0² + x²)cos ωt - 2 x0 x)/(2 sin ωt).
        #[test]
        fn oscillator_matches_closed_form(x0 in -3.0..3.0f64, p0 in -3.0..3.0f64, omega in 0.5..2.0f64, m in 0.5..2.0f64) {
            prop_assume!(x0.abs() + p0.abs() > 0.1);
            let model = PotentialModel::harmonic(omega, m, 1.0).unwrap();
            let t = 1.0;
            let traj = integrate_hamilton(&model, PhasePoint::new(x0, p0), t, 1e-3).unwrap();
            let (c, s) = ((omega * t).cos(), (omega * t).sin());
            let end = traj.end();
            let x = x0 * c + p0 / (m * omega) * s;
            prop_assert!((end.x - x).abs() < 1e-9);
            prop_assert!((end.p - (p0 * c - m * omega * x0 * s)).abs() < 1e-9);
            prop_assert!((end.jacobi() - s / (m * omega)).abs() < 1e-9);
            let action = m * omega * ((x0 * x0 + x * x) * c - 2.0 * x0 * x) / (2.0 * s);
            prop_assert!((traj.action - action).abs() < 1e-8 * (1.0 + action.abs()));
        }

        #[test]
        fn tangent_flow_is_symplectic(x0 in -1.5..1.5f64, p0 in -2.0..2.0f64) {
            let model = PotentialModel::polynomial(vec![0.0, 0.3, -1.0, 0.0, 0.5], 1.0, 1.0).unwrap();
            let traj = integrate_hamilton(&model, PhasePoint::new(x0, p0), 5.0, 1e-3).unwrap();
            for s in &traj.samples {
                let m = s.monodromy;
                prop_assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs() < 1e-9);
            }
        }

        // Unfolding the billiard gives free flight on the line.
        #[test]
        fn billiard_is_folded_free_flight(x0 in 0.01..0.99f64, p0 in 0.5..20.0f64, t in 0.1..2.0f64) {
            let model = PotentialModel::infinite_well(1.0, 1.0, 1.0).unwrap();
            let traj = integrate_hamilton(&model, PhasePoint::new(x0, p0), t, 1e-3).unwrap();
            let unfolded = x0 + p0 * t;
            let cell = unfolded.floor();
            let folded = if cell as i64 % 2 == 0 { unfolded - cell } else { cell + 1.0 - unfolded };
            prop_assert!((traj.end().x - folded).abs() < 1e-9);
            prop_assert_eq!(traj.reflection_count, cell as u32);
            prop_assert!((traj.path_length() - p0 * t).abs() < 1e-9);
            prop_assert!((traj.action - 0.5 * p0 * p0 * t).abs() < 1e-9 * p0 * p0);
            prop_assert_eq!(traj.maslov_index, 0);
        }
    }

    #[test]
    fn starting_on_a_wall_is_rejected() {
        let model = PotentialModel::infinite_well(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(integrate_hamilton(&model, PhasePoint::new(1.0, 1.0), 1.0, 1e-3), Err(Error::WallEvaluation { .. })));
    }

    #[test]
    fn coarse_steps_in_a_stiff_well_trip_the_energy_check() {
        let model = PotentialModel::polynomial(vec![0.0, 0.0, 0.0, 0.0, 50.0], 1.0, 1.0).unwrap();
        assert!(matches!(
            integrate_hamilton(&model, PhasePoint::new(1.0, 0.0), 10.0, 0.2),
            Err(Error::EnergyDrift { .. } | Error::DomainEscape { .. })
        ));
    }
}
