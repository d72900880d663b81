use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Wavefunction;
use crate::error::{ensure, Error, Result};
use crate::grid::Boundary;
use crate::potentials::PotentialModel;
use crate::spectral::{self, FftPair, SineTransform};

const NORM_TOLERANCE: f64 = 1e-9;
const ALIASING_TAIL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactConfig {
    pub duration: f64,
    pub dt: f64,
    /// Time steps between emitted frames.
    pub frame_stride: usize,
}

impl ExactConfig {
    pub fn new(duration: f64, dt: f64, frame_stride: usize) -> Self {
        Self { duration, dt, frame_stride }
    }

    /// Number of steps and the step actually used so that the run ends
    /// exactly at `duration`.
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.duration / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.duration / n as f64)
    }

    pub fn frame_interval(&self) -> f64 {
        self.steps().1 * self.frame_stride as f64
    }
}

/// Largest step satisfying `dt * E_max / hbar < 0.1`, with `E_max` taken
/// over the state's significant momentum content and spatial support.
pub fn max_stable_dt(psi: &Wavefunction, model: &PotentialModel) -> f64 {
    const SIGNIFICANT: f64 = 1e-12;
    let grid = &psi.grid;
    let k_max = match grid.boundary {
        Boundary::Periodic => {
            let fft = FftPair::new(grid.n);
            let mut spectrum = psi.values.clone();
            fft.forward(&mut spectrum);
            let k = spectral::wavenumbers(grid);
            let peak = spectrum.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
            spectrum.iter().zip(&k).filter(|(s, _)| s.norm_sqr() > SIGNIFICANT * peak).map(|(_, k)| k.abs()).fold(0.0, f64::max)
        }
        Boundary::Dirichlet => {
            let c = SineTransform::new(grid.n).analyze(&psi.values);
            let peak = c.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max);
            let top = c.iter().rposition(|s| s.norm_sqr() > SIGNIFICANT * peak).unwrap_or(0);
            top as f64 * std::f64::consts::PI / grid.length()
        }
    };
    let rho = psi.density();
    let rho_peak = rho.iter().cloned().fold(0.0, f64::max);
    let v_max = grid
        .points()
        .iter()
        .zip(&rho)
        .filter(|(_, r)| **r > SIGNIFICANT * rho_peak)
        .map(|(x, _)| model.evaluate_unchecked(*x).abs())
        .fold(0.0, f64::max);
    let e_max = model.hbar * model.hbar * k_max * k_max / (2.0 * model.mass) + v_max;
    if e_max > 0.0 {
        0.1 * model.hbar / e_max
    } else {
        f64::INFINITY
    }
}

fn check_aliasing(psi: &Wavefunction) -> Result<()> {
    let tail = spectral::high_frequency_fraction(&psi.grid, &psi.values);
    if tail > ALIASING_TAIL {
        Err(Error::Aliasing { tail_mass: tail })
    } else {
        Ok(())
    }
}

fn check_norm(psi: &Wavefunction) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        Err(Error::NormDrift { norm, t: psi.time })
    } else {
        Ok(())
    }
}

fn check_well_grid(psi: &Wavefunction, model: &PotentialModel) -> Result<()> {
    match (model.well_length(), psi.grid.boundary) {
        (Some(l), Boundary::Dirichlet) => ensure(
            psi.grid.x_min.abs() < 1e-12 && (psi.grid.x_max - l).abs() < 1e-12 * l,
            "grid",
            || format!("well grid must span [0, {l}]"),
        ),
        (Some(_), Boundary::Periodic) => Err(Error::InvalidParameter {
            name: "grid",
            reason: "the infinite well needs a Dirichlet grid".into(),
        }),
        (None, Boundary::Dirichlet) => Err(Error::InvalidParameter {
            name: "grid",
            reason: "Dirichlet grids are reserved for the infinite well".into(),
        }),
        (None, Boundary::Periodic) => Ok(()),
    }
}

/// Evolves `psi0` and returns frames at `t = 0, stride*dt, ...`, always
/// including the final time.
///
/// Smooth potentials use second-order (Strang) split-step Fourier; the
/// infinite well is evolved exactly in its sine eigenbasis.
pub fn propagate_exact(psi0: &Wavefunction, model: &PotentialModel, cfg: &ExactConfig) -> Result<Vec<Wavefunction>> {
    ensure(cfg.duration > 0.0, "duration", || format!("must be positive, got {}", cfg.duration))?;
    ensure(cfg.dt > 0.0, "dt", || format!("must be positive, got {}", cfg.dt))?;
    ensure(cfg.frame_stride >= 1, "frame_stride", || "must be >= 1".into())?;
    check_well_grid(psi0, model)?;
    check_norm(psi0).map_err(|_| Error::InvalidParameter {
        name: "psi0",
        reason: format!("must be normalized, norm = {}", psi0.norm()),
    })?;
    check_aliasing(psi0)?;

    let frames = match psi0.grid.boundary {
        Boundary::Dirichlet => {
            let (steps, dt) = cfg.steps();
            let basis = WellEigenbasis::new(psi0, model);
            frame_times(steps, cfg.frame_stride, dt).into_iter().map(|t| basis.at(t)).collect::<Vec<_>>()
        }
        Boundary::Periodic => split_step(psi0, model, cfg)?,
    };
    for f in &frames {
        check_norm(f)?;
    }
    if let Some(last) = frames.last() {
        check_aliasing(last)?;
    }
    Ok(frames)
}

fn frame_times(steps: usize, stride: usize, dt: f64) -> Vec<f64> {
    let mut times: Vec<f64> = (0..=steps).step_by(stride).map(|s| s as f64 * dt).collect();
    if !steps.is_multiple_of(stride) {
        times.push(steps as f64 * dt);
    }
    times
}

fn split_step(psi0: &Wavefunction, model: &PotentialModel, cfg: &ExactConfig) -> Result<Vec<Wavefunction>> {
    let limit = max_stable_dt(psi0, model);
    let (steps, dt) = cfg.steps();
    if dt > limit {
        return Err(Error::TimeStepTooLarge { dt, limit });
    }
    let grid = psi0.grid;
    let hbar = model.hbar;
    let half_kick: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&x| Complex64::from_polar(1.0, -0.5 * model.evaluate_unchecked(x) * dt / hbar))
        .collect();
    let drift: Vec<Complex64> = spectral::wavenumbers(&grid)
        .iter()
        .map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * model.mass)))
        .collect();
    let fft = FftPair::new(grid.n);

    let mut frames = vec![psi0.clone()];
    let mut values = psi0.values.clone();
    for step in 1..=steps {
        values.iter_mut().zip(&half_kick).for_each(|(v, k)| *v *= k);
        fft.forward(&mut values);
        values.iter_mut().zip(&drift).for_each(|(v, d)| *v *= d);
        fft.inverse(&mut values);
        values.iter_mut().zip(&half_kick).for_each(|(v, k)| *v *= k);
        if step % cfg.frame_stride == 0 || step == steps {
            frames.push(Wavefunction { values: values.clone(), time: psi0.time + step as f64 * dt, ..psi0.clone() });
        }
    }
    Ok(frames)
}

/// Sine-eigenbasis expansion of a well state; evaluates the exact evolution
/// at any time.
pub struct WellEigenbasis {
    template: Wavefunction,
    coeffs: Vec<Complex64>,
    energies: Vec<f64>,
    transform: SineTransform,
}

impl WellEigenbasis {
    pub fn new(psi0: &Wavefunction, model: &PotentialModel) -> Self {
        let n = psi0.grid.n;
        let transform = SineTransform::new(n);
        let coeffs = transform.analyze(&psi0.values);
        let k1 = std::f64::consts::PI / psi0.grid.length();
        let energies = (0..n)
            .map(|i| {
                let k = i as f64 * k1;
                model.hbar * model.hbar * k * k / (2.0 * model.mass)
            })
            .collect();
        Self { template: psi0.clone(), coeffs, energies, transform }
    }

    pub fn at(&self, t: f64) -> Wavefunction {
        let hbar = self.template.hbar;
        let c: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(&self.energies)
            .map(|(c, e)| c * Complex64::from_polar(1.0, -e * t / hbar))
            .collect();
        let mut values = self.transform.sine_sum(&c);
        values[0] = Complex64::new(0.0, 0.0);
        Wavefunction { values, time: self.template.time + t, ..self.template.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn frame_times_include_end() {
        assert_eq!(frame_times(10, 4, 0.1).len(), 4);
        assert_eq!(frame_times(8, 4, 0.1).len(), 3);
    }

    #[test]
    fn rejects_unnormalized_input() {
        let model = PotentialModel::free(1.0, 1.0).unwrap();
        let grid = Grid::periodic(-10.0, 10.0, 256).unwrap();
        let psi = Wavefunction::gaussian(grid, &model, 0.0, 1.0, 0.0).unwrap().scaled(Complex64::new(2.0, 0.0));
        let cfg = ExactConfig::new(1.0, 0.01, 10);
        assert!(propagate_exact(&psi, &model, &cfg).is_err());
    }

    #[test]
    fn detects_aliasing() {
        let model = PotentialModel::free(1.0, 1.0).unwrap();
        let grid = Grid::periodic(-10.0, 10.0, 256).unwrap();
        // Nyquist wavenumber is 40; a packet at k = 38 sits in the tail band.
        let psi = Wavefunction::gaussian(grid, &model, 0.0, 1.0, 38.0).unwrap();
        let cfg = ExactConfig::new(0.01, 1e-5, 10);
        assert!(matches!(propagate_exact(&psi, &model, &cfg), Err(Error::Aliasing { .. })));
    }

    #[test]
    fn rejects_coarse_time_step() {
        let model = PotentialModel::harmonic(1.0, 1.0, 1.0).unwrap();
        let grid = Grid::periodic(-20.0, 20.0, 512).unwrap();
        let psi = Wavefunction::coherent_state(grid, &model, 2.0, 0.0).unwrap();
        let cfg = ExactConfig::new(1.0, 0.5, 1);
        assert!(matches!(propagate_exact(&psi, &model, &cfg), Err(Error::TimeStepTooLarge { .. })));
    }

    #[test]
    fn eigenstate_stays_stationary() {
        let model = PotentialModel::infinite_well(1.0, 1.0, 1.0).unwrap();
        let grid = Grid::dirichlet(0.0, 1.0, 256).unwrap();
        let psi = Wavefunction::well_eigenstate(grid, &model, 3).unwrap();
        let frames = propagate_exact(&psi, &model, &ExactConfig::new(0.37, 0.01, 5)).unwrap();
        for f in &frames {
            for (a, b) in f.values.iter().zip(&psi.values) {
                assert!((a.norm() - b.norm()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn well_requires_matching_dirichlet_grid() {
        let model = PotentialModel::infinite_well(1.0, 1.0, 1.0).unwrap();
        let grid = Grid::periodic(0.0, 1.0, 64).unwrap();
        let psi = Wavefunction::gaussian(grid, &model, 0.5, 0.05, 0.0).unwrap();
        assert!(propagate_exact(&psi, &model, &ExactConfig::new(0.1, 0.01, 1)).is_err());
    }
}
