use serde::{Deserialize, Serialize};

use super::hermite;
use super::{integrate_hamilton, jacobi_factor_with, ClassicalTrajectory, PhasePoint, CAUSTIC_EPS};
use crate::error::{ensure, Error, Result};
use crate::potentials::PotentialModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    /// The orbit traversed `repetitions` times, starting at `x0` moving right.
    pub trajectory: ClassicalTrajectory,
    /// Primitive period.
    pub period: f64,
    pub repetitions: u32,
    /// `|J(rT)|^(-1/2)`; `None` when the return is focal (e.g. every
    /// oscillator orbit).
    pub amplitude: Option<f64>,
    /// Reduced action `∮ p dx` over all repetitions.
    pub action: f64,
    /// Principal action `∫ L dt` over all repetitions.
    pub principal_action: f64,
    pub maslov_index: u32,
    pub reflections: u32,
}

/// Periodic orbits through `x0` at `energy` whose total period `r T` lies in
/// `period_window`, for `r = 1..=max_repetitions`.
///
/// In one dimension every bound orbit of fixed energy is periodic, so the
/// energy picks the member of the family; an unbounded motion yields none.
pub fn find_periodic_orbits(
    model: &PotentialModel,
    x0: f64,
    energy: f64,
    period_window: (f64, f64),
    max_repetitions: u32,
    dt: f64,
) -> Result<Vec<PeriodicOrbit>> {
    let (t_lo, t_hi) = period_window;
    ensure(t_hi > t_lo && t_lo >= 0.0, "period_window", || format!("invalid window ({t_lo}, {t_hi})"))?;
    ensure(max_repetitions >= 1, "max_repetitions", || "must be >= 1".into())?;
    let kinetic = energy - model.evaluate(x0)?;
    ensure(kinetic > 0.0, "energy", || format!("{energy} is below the potential at x0"))?;
    let p0 = (2.0 * model.mass * kinetic).sqrt();
    let start = PhasePoint::new(x0, p0);

    let Some(period) = first_return(model, start, t_hi, dt)? else {
        return Ok(Vec::new());
    };
    let mut orbits = Vec::new();
    for r in 1..=max_repetitions {
        let total = r as f64 * period;
        if total > t_hi {
            break;
        }
        if total < t_lo {
            continue;
        }
        let steps = (total / dt).ceil().max(1.0);
        let trajectory = integrate_hamilton(model, start, total, total / steps)?;
        let amplitude = jacobi_factor_with(&trajectory, total, CAUSTIC_EPS).ok();
        orbits.push(PeriodicOrbit {
            period,
            repetitions: r,
            amplitude,
            action: trajectory.action + energy * total,
            principal_action: trajectory.action,
            maslov_index: trajectory.maslov_index,
            reflections: trajectory.reflection_count,
            trajectory,
        });
    }
    Ok(orbits)
}

/// Time of the first rightward passage back through the start point.
fn first_return(model: &PotentialModel, start: PhasePoint, horizon: f64, dt: f64) -> Result<Option<f64>> {
    let traj = integrate_hamilton(model, start, horizon + dt, dt)?;
    let m = model.mass;
    let s = &traj.samples;
    // Skip the departure: wait until the path has moved off x0.
    let mut left = false;
    for w in s.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !left {
            left = b.x != start.x && a.t > 0.0;
            if !left {
                continue;
            }
        }
        let crosses = a.x < start.x && b.x >= start.x && a.p > 0.0;
        if !crosses {
            continue;
        }
        // Locate the crossing on the cubic through (x, p/m) at both ends.
        let f = |t: f64| {
            let x = if a.reflections != b.reflections {
                a.x + a.p / m * (t - a.t)
            } else {
                hermite(a.t, a.x, a.p / m, b.t, b.x, b.p / m, t)
            };
            x - start.x
        };
        let (mut lo, mut hi) = (a.t, b.t);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        if (b.p - start.p).abs() > 1e-3 * start.p.abs().max(1.0) {
            return Err(Error::BranchTerminated { t, reason: "return momentum does not close the orbit".into() });
        }
        return Ok(Some(t));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn oscillator_orbits_share_one_period() {
        let model = PotentialModel::harmonic(2.0, 1.0, 1.0).unwrap();
        for energy in [0.5, 2.0, 7.0] {
            let orbits = find_periodic_orbits(&model, 0.1, energy, (0.0, 7.0), 3, 1e-3).unwrap();
            assert_eq!(orbits.len(), 2);
            assert!((orbits[0].period - PI).abs() < 1e-8, "{}", orbits[0].period);
            assert!(orbits[0].amplitude.is_none());
            // Reduced action 2πE/ω per traversal.
            assert!((orbits[0].action - PI * energy).abs() < 1e-6 * energy);
            assert_eq!(orbits[0].maslov_index, 2);
        }
    }

    #[test]
    fn billiard_period_and_bounces() {
        let model = PotentialModel::infinite_well(1.0, 1.0, 1.0).unwrap();
        let energy = 8.0; // p = 4, T = 2L m / p = 0.5
        let orbits = find_periodic_orbits(&model, 0.3, energy, (0.4, 1.6), 5, 1e-3).unwrap();
        assert_eq!(orbits.iter().map(|o| o.repetitions).collect::<Vec<_>>(), vec![1, 2, 3]);
        for o in &orbits {
            assert!((o.period - 0.5).abs() < 1e-10);
            assert_eq!(o.reflections, 2 * o.repetitions);
            assert!((o.trajectory.path_length() - 2.0 * o.repetitions as f64).abs() < 1e-9);
            assert!((o.action - 8.0 * o.repetitions as f64).abs() < 1e-9);
            let t = o.repetitions as f64 * 0.5;
            assert!((o.amplitude.unwrap() - t.powf(-0.5)).abs() < 1e-9);
        }
    }

    #[test]
    fn free_motion_has_no_orbits() {
        let model = PotentialModel::free(1.0, 1.0).unwrap();
        assert!(find_periodic_orbits(&model, 0.0, 1.0, (0.0, 5.0), 3, 1e-2).unwrap().is_empty());
    }
}
