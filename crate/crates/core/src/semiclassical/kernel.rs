use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{image_roots, BvpConfig, FlowEnd, ShootingRoot, ShootingTable};
use crate::error::{ensure, Error, Result};
use crate::exactqm::Wavefunction;
use crate::potentials::PotentialModel;

/// Fraction of grid points allowed to be masked by caustics.
pub const MAX_CAUSTIC_FRACTION: f64 = 0.05;

/// Phase `-μπ/2 - π·(reflections)` picked up along a path.
pub fn path_phase(maslov: u32, reflections: u32) -> f64 {
    -(maslov as f64) * std::f64::consts::FRAC_PI_2 - reflections as f64 * std::f64::consts::PI
}

/// One path's term `(2πiħ)^(-1/2) |J|^(-1/2) exp(iS/ħ + iφ)`, or `None` at a
/// caustic (`|J| < eps t / m`).
pub(crate) fn kernel_term(model: &PotentialModel, flow: &FlowEnd, duration: f64, eps: f64) -> Option<Complex64> {
    let j = flow.jacobi().abs();
    if j < eps * duration / model.mass {
        return None;
    }
    let hbar = model.hbar;
    let amp = (2.0 * std::f64::consts::PI * hbar * j).powf(-0.5);
    let phase = flow.action / hbar - std::f64::consts::FRAC_PI_4 + path_phase(flow.jacobi_zeros, flow.reflections);
    Some(Complex64::from_polar(amp, phase))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub paths: usize,
    /// Set when no path was found in the window; `value` is then zero.
    pub no_paths: bool,
}

fn roots_between(model: &PotentialModel, x0: f64, x: f64, duration: f64, cfg: &BvpConfig) -> Result<Vec<ShootingRoot>> {
    if model.is_hard_wall() {
        image_roots(model, x0, x, duration, cfg)
    } else {
        Ok(ShootingTable::new(model, x0, duration, cfg)?.roots(x)?.0)
    }
}

/// Van Vleck propagator `K(x, t; x0, 0)` summed over all classical paths with
/// initial momentum in the configured window.
pub fn van_vleck_kernel(model: &PotentialModel, x0: f64, x: f64, duration: f64, cfg: &BvpConfig) -> Result<KernelValue> {
    ensure(duration > 0.0, "duration", || format!("must be positive, got {duration}"))?;
    let roots = roots_between(model, x0, x, duration, cfg)?;
    let mut value = Complex64::new(0.0, 0.0);
    for r in &roots {
        value += kernel_term(model, &r.flow, duration, cfg.caustic_eps).ok_or(Error::Caustic {
            jacobi: r.flow.jacobi().abs(),
            eps: cfg.caustic_eps * duration / model.mass,
            t: duration,
        })?;
    }
    Ok(KernelValue { value, paths: roots.len(), no_paths: roots.is_empty() })
}

/// Semiclassically propagated state; points whose path sum hit a caustic
/// are zeroed and flagged in `caustic_mask`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalField {
    pub psi: Wavefunction,
    pub caustic_mask: Vec<bool>,
}

enum Source {
    Table(ShootingTable),
    Images,
}

/// `ψ(x, t) = ∫ K(x, t; x0, 0) ψ(x0, 0) dx0` by rectangle quadrature over the
/// grid points carrying initial amplitude.
pub fn propagate_semiclassical(psi0: &Wavefunction, model: &PotentialModel, duration: f64, cfg: &BvpConfig) -> Result<SemiclassicalField> {
    ensure(duration > 0.0, "duration", || format!("must be positive, got {duration}"))?;
    cfg.validate()?;
    let grid = psi0.grid;
    let cutoff = cfg.support_cutoff * psi0.max_amplitude();
    if cutoff == 0.0 {
        return Err(Error::EmptyState);
    }
    let launch: Vec<usize> = (0..grid.n).filter(|&j| psi0.values[j].norm() > cutoff).collect();
    let sources: Vec<Source> = launch
        .par_iter()
        .map(|&j| {
            if model.is_hard_wall() {
                Ok(Source::Images)
            } else {
                ShootingTable::new(model, grid.x(j), duration, cfg).map(Source::Table)
            }
        })
        .collect::<Result<_>>()?;

    let dx = grid.dx();
    let skip_wall = model.is_hard_wall();
    let points: Vec<Result<Option<Complex64>>> = (0..grid.n)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            if skip_wall && i == 0 {
                return Ok(Some(Complex64::new(0.0, 0.0)));
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for (&j, source) in launch.iter().zip(&sources) {
                let roots = match source {
                    Source::Images => image_roots(model, grid.x(j), x, duration, cfg)?,
                    Source::Table(table) => match table.roots(x) {
                        Ok((roots, _)) => roots,
                        Err(Error::DegeneratePaths) => return Ok(None),
                        Err(e) => return Err(e),
                    },
                };
                for r in &roots {
                    match kernel_term(model, &r.flow, duration, cfg.caustic_eps) {
                        Some(k) => sum += k * psi0.values[j],
                        None => return Ok(None),
                    }
                }
            }
            Ok(Some(sum * dx))
        })
        .collect();

    let mut values = Vec::with_capacity(grid.n);
    let mut caustic_mask = Vec::with_capacity(grid.n);
    for p in points {
        let p = p?;
        caustic_mask.push(p.is_none());
        values.push(p.unwrap_or_default());
    }
    let masked = caustic_mask.iter().filter(|m| **m).count();
    if masked as f64 > MAX_CAUSTIC_FRACTION * grid.n as f64 {
        return Err(Error::ExcessiveCaustics { masked, total: grid.n });
    }
    let psi = Wavefunction { values, time: psi0.time + duration, ..psi0.clone() };
    Ok(SemiclassicalField { psi, caustic_mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn i() -> Complex64 {
        Complex64::new(0.0, 1.0)
    }

    #[test]
    fn free_kernel_is_exact() {
        let model = PotentialModel::free(1.0, 1.0).unwrap();
        let k = van_vleck_kernel(&model, 0.0, 1.0, 1.0, &BvpConfig::new(-10.0, 10.0, 101)).unwrap();
        let expected = (2.0 * PI * i()).powf(-0.5) * Complex64::from_polar(1.0, 0.5);
        assert_eq!(k.paths, 1);
        assert!((k.value - expected).norm() < 1e-12);
    }

    #[test]
    fn oscillator_kernel_matches_mehler() {
        let model = PotentialModel::harmonic(1.0, 1.0, 1.0).unwrap();
        let cfg = BvpConfig::new(-20.0, 20.0, 201);
        for (x0, x, t) in [(0.0, 1.0, PI / 2.0), (0.3, -0.8, 1.0), (0.5, 0.2, 2.5)] {
            let k = van_vleck_kernel(&model, x0, x, t, &cfg).unwrap().value;
            let s = f64::sin(t);
            let phase = ((x * x + x0 * x0) * t.cos() - 2.0 * x * x0) / (2.0 * s);
            let mehler = (2.0 * PI * i() * s).powf(-0.5) * Complex64::from_polar(1.0, phase);
            assert!((k - mehler).norm() < 1e-10, "{k} vs {mehler}");
        }
    }

    #[test]
    fn empty_window_gives_zero_with_flag() {
        let model = PotentialModel::free(1.0, 1.0).unwrap();
        let k = van_vleck_kernel(&model, 0.0, 5.0, 1.0, &BvpConfig::new(-1.0, 1.0, 11)).unwrap();
        assert!(k.no_paths);
        assert_eq!(k.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn focal_instant_is_rejected() {
        let model = PotentialModel::harmonic(1.0, 1.0, 1.0).unwrap();
        let r = van_vleck_kernel(&model, 0.0, 0.0, PI, &BvpConfig::new(-5.0, 5.0, 51));
        assert!(matches!(r, Err(Error::DegeneratePaths)));
    }
}
