use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::grid::{Boundary, Grid};
use crate::potentials::{PotentialKind, PotentialModel};

/// Complex amplitudes on a uniform grid at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wavefunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Wavefunction {
    pub fn new(grid: Grid, values: Vec<Complex64>, time: f64, model: &PotentialModel) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} values for {} points", values.len(), grid.n)));
        }
        ensure(values.iter().all(|v| v.re.is_finite() && v.im.is_finite()), "values", || {
            "non-finite amplitude".into()
        })?;
        Ok(Self { grid, values, time, mass: model.mass, hbar: model.hbar })
    }

    /// Samples `f` on the grid at `t = 0`; Dirichlet wall points are zeroed.
    pub fn from_fn(grid: Grid, model: &PotentialModel, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let mut values: Vec<Complex64> = grid.points().into_iter().map(f).collect();
        if grid.boundary == Boundary::Dirichlet {
            values[0] = Complex64::new(0.0, 0.0);
        }
        Self::new(grid, values, 0.0, model)
    }

    /// Normalized Gaussian packet `exp(-(x-c)²/4σ² + i p (x-c)/ħ)`.
    pub fn gaussian(grid: Grid, model: &PotentialModel, center: f64, sigma: f64, momentum: f64) -> Result<Self> {
        ensure(sigma > 0.0, "sigma", || format!("must be positive, got {sigma}"))?;
        let hbar = model.hbar;
        Self::from_fn(grid, model, |x| {
            let d = x - center;
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), momentum * d / hbar)
        })?
        .normalized()
    }

    /// Coherent state of a harmonic oscillator: the ground-state Gaussian
    /// displaced to `center` with mean momentum `momentum`.
    pub fn coherent_state(grid: Grid, model: &PotentialModel, center: f64, momentum: f64) -> Result<Self> {
        let PotentialKind::HarmonicOscillator { omega } = model.kind else {
            return Err(Error::InvalidParameter {
                name: "model",
                reason: "coherent states need a harmonic oscillator".into(),
            });
        };
        let sigma = (model.hbar / (2.0 * model.mass * omega)).sqrt();
        Self::gaussian(grid, model, center, sigma, momentum)
    }

    /// Energy eigenstate `sqrt(2/L) sin(nπx/L)` of the infinite well.
    pub fn well_eigenstate(grid: Grid, model: &PotentialModel, level: usize) -> Result<Self> {
        let length = model.well_length().ok_or_else(|| Error::InvalidParameter {
            name: "model",
            reason: "eigenstates are defined for the infinite well".into(),
        })?;
        ensure(level >= 1, "level", || "must be >= 1".into())?;
        let k = level as f64 * std::f64::consts::PI / length;
        let amp = (2.0 / length).sqrt();
        Self::from_fn(grid, model, |x| Complex64::new(amp * (k * (x - grid.x_min)).sin(), 0.0))
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::EmptyState);
        }
        self.values.iter_mut().for_each(|v| *v /= n);
        Ok(self)
    }

    /// `<self|other>` by trapezoidal quadrature.
    pub fn inner(&self, other: &Wavefunction) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.dx())
    }

    /// L² distance `||self - other||`.
    pub fn distance(&self, other: &Wavefunction) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.dx()).sqrt())
    }

    /// `sum_i c_i psi_i` over wavefunctions on a common grid.
    pub fn superpose(terms: &[(Complex64, &Wavefunction)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::EmptyState)?;
        let mut values = vec![Complex64::new(0.0, 0.0); first.grid.n];
        for (c, psi) in terms {
            first.grid.check_same(&psi.grid)?;
            values.iter_mut().zip(&psi.values).for_each(|(v, p)| *v += c * p);
        }
        Ok(Self { values, ..(*first).clone() })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    pub(crate) fn max_amplitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Spectral first and second derivatives.
    pub fn derivatives(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        crate::spectral::derivatives(&self.grid, &self.values)
    }

    /// Cubic interpolation of the amplitude at `x`.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        crate::interp::cubic(&self.grid, &self.values, x)
    }
}
