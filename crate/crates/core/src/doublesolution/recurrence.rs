use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::PeriodicOrbit;
use crate::error::{ensure, Error, Result};
use crate::exactqm::{autocorrelation, max_stable_dt, propagate_exact, ExactConfig, WellEigenbasis, Wavefunction};
use crate::grid::Grid;
use crate::potentials::PotentialModel;
use crate::semiclassical::recurrence_strength;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCheck {
    /// Common total period `r T`.
    pub period: f64,
    /// Difference of the effective actions `R - ħ(π·reflections + μπ/2)`.
    pub delta_action: f64,
    pub weights: [f64; 2],
    /// Single-packet return `|<g1|g1(T)>|²`.
    pub reference: f64,
    pub predicted: f64,
    pub measured: f64,
    pub relative_error: f64,
}

fn effective_action(orbit: &PeriodicOrbit, hbar: f64) -> f64 {
    orbit.principal_action - hbar * (PI * orbit.reflections as f64 + 0.5 * PI * orbit.maslov_index as f64)
}

fn evolve(psi0: &Wavefunction, model: &PotentialModel, duration: f64) -> Result<Wavefunction> {
    if model.is_hard_wall() {
        return Ok(WellEigenbasis::new(psi0, model).at(duration));
    }
    let steps = (duration / (0.5 * max_stable_dt(psi0, model))).ceil().max(1000.0);
    let frames = propagate_exact(psi0, model, &ExactConfig::new(duration, duration / steps, steps as usize))?;
    Ok(frames.last().cloned().expect("propagation yields frames"))
}

/// Compares the two-orbit recurrence strength with the exact return
/// probability of a state launched along both orbits.
///
/// Each orbit carries a Gaussian of width `sigma` centred on its start
/// point with its start momentum; the state is `√A1 g1 + √A2 g2`,
/// normalized. With well-separated momenta the packets are orthogonal and
/// `C(T) = C_ref |A1 e^{iS1/ħ} + A2 e^{iS2/ħ}|² / (A1 + A2)²`, where
/// `C_ref` is the return probability of one packet alone.
pub fn recurrence_consistency(
    model: &PotentialModel,
    grid: Grid,
    orbits: [&PeriodicOrbit; 2],
    weights: [f64; 2],
    sigma: f64,
) -> Result<RecurrenceCheck> {
    ensure(weights.iter().all(|w| *w > 0.0), "weights", || "must be positive".into())?;
    let [o1, o2] = orbits;
    let (t1, t2) = (o1.period * o1.repetitions as f64, o2.period * o2.repetitions as f64);
    if (t1 - t2).abs() > 1e-9 * t1.max(t2) {
        return Err(Error::NoCommonPeriod(t1, t2));
    }
    let period = 0.5 * (t1 + t2);
    let hbar = model.hbar;
    let packet = |o: &PeriodicOrbit| Wavefunction::gaussian(grid, model, o.trajectory.start.x, sigma, o.trajectory.start.p);
    let g1 = packet(o1)?;
    let reference = autocorrelation(&g1, &evolve(&g1, model, period)?)?;

    let same = o1.trajectory.start == o2.trajectory.start;
    let psi0 = if same {
        g1
    } else {
        let g2 = packet(o2)?;
        let (a1, a2) = (Complex64::new(weights[0].sqrt(), 0.0), Complex64::new(weights[1].sqrt(), 0.0));
        Wavefunction::superpose(&[(a1, &g1), (a2, &g2)])?.normalized()?
    };
    let measured = autocorrelation(&psi0, &evolve(&psi0, model, period)?)?;

    let (s1, s2) = (effective_action(o1, hbar), effective_action(o2, hbar));
    let sum = weights[0] + weights[1];
    let predicted = reference * recurrence_strength(weights[0], s1, weights[1], s2, hbar) / (sum * sum);
    Ok(RecurrenceCheck {
        period,
        delta_action: s1 - s2,
        weights,
        reference,
        predicted,
        measured,
        relative_error: (measured - predicted).abs() / predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::find_periodic_orbits;

    fn well_orbits(hbar: f64, p1: f64) -> (PotentialModel, PeriodicOrbit, PeriodicOrbit) {
        let model = PotentialModel::infinite_well(1.0, 1.0, hbar).unwrap();
        let period = 2.0 / p1;
        let window = (0.99 * period, 1.01 * period);
        let slow = find_periodic_orbits(&model, 0.5, 0.5 * p1 * p1, window, 1, 1e-3).unwrap().remove(0);
        let fast = find_periodic_orbits(&model, 0.5, 2.0 * p1 * p1, window, 2, 1e-3).unwrap().remove(0);
        assert_eq!(fast.repetitions, 2);
        (model, slow, fast)
    }

    #[test]
    fn identical_orbits_have_no_error() {
        let (model, slow, _) = well_orbits(0.01, 10.0);
        let grid = Grid::dirichlet(0.0, 1.0, 2048).unwrap();
        let r = recurrence_consistency(&model, grid, [&slow, &slow], [1.0, 1.0], 0.05).unwrap();
        assert!(r.relative_error < 1e-12, "{r:?}");
        assert_eq!(r.delta_action, 0.0);
    }

    #[test]
    fn half_quantum_action_difference_is_destructive() {
        // R1 = p1 L and R2 = 4 p1 L for the doubled orbit, so 3 p1 = (2M + 1)πħ
        // puts the pair half a quantum apart.
        let hbar = 0.01;
        let p1 = (2.0 * 477.0 + 1.0) * PI * hbar / 3.0;
        let (model, slow, fast) = well_orbits(hbar, p1);
        let grid = Grid::dirichlet(0.0, 1.0, 2048).unwrap();
        let r = recurrence_consistency(&model, grid, [&slow, &fast], [1.0, 1.0], 0.05).unwrap();
        assert!(r.measured < 1e-3 * r.reference, "{r:?}");
    }

    #[test]
    fn unequal_periods_rejected() {
        let (model, slow, _) = well_orbits(0.01, 10.0);
        let (_, other, _) = well_orbits(0.01, 11.0);
        let grid = Grid::dirichlet(0.0, 1.0, 512).unwrap();
        assert!(matches!(
            recurrence_consistency(&model, grid, [&slow, &other], [1.0, 1.0], 0.05),
            Err(Error::NoCommonPeriod(..))
        ));
    }
}
