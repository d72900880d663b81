//! Physical systems: potential shape, mass and the (tunable) action quantum.
//!
//! `hbar` is carried by the model rather than fixed so one set of classical
//! data can be swept towards the semiclassical limit.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    FreeParticle,
    HarmonicOscillator { omega: f64 },
    /// Hard walls at `0` and `length`, free motion in between.
    InfiniteWell { length: f64 },
    /// `V(x) = sum_n coefficients[n] * x^n`.
    PolynomialWell { coefficients: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    pub mass: f64,
    pub hbar: f64,
}

impl PotentialModel {
    pub fn new(kind: PotentialKind, mass: f64, hbar: f64) -> Result<Self> {
        ensure(mass > 0.0 && mass.is_finite(), "mass", || format!("must be positive, got {mass}"))?;
        ensure(hbar > 0.0 && hbar.is_finite(), "hbar", || format!("must be positive, got {hbar}"))?;
        match &kind {
            PotentialKind::HarmonicOscillator { omega } => {
                ensure(*omega > 0.0, "omega", || format!("must be positive, got {omega}"))?
            }
            PotentialKind::InfiniteWell { length } => {
                ensure(*length > 0.0, "length", || format!("must be positive, got {length}"))?
            }
            PotentialKind::PolynomialWell { coefficients } => ensure(
                coefficients.iter().all(|c| c.is_finite()),
                "coefficients",
                || "must be finite".into(),
            )?,
            PotentialKind::FreeParticle => {}
        }
        Ok(Self { kind, mass, hbar })
    }

    pub fn free(mass: f64, hbar: f64) -> Result<Self> {
        Self::new(PotentialKind::FreeParticle, mass, hbar)
    }

    pub fn harmonic(omega: f64, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(PotentialKind::HarmonicOscillator { omega }, mass, hbar)
    }

    pub fn infinite_well(length: f64, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(PotentialKind::InfiniteWell { length }, mass, hbar)
    }

    pub fn polynomial(coefficients: Vec<f64>, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(PotentialKind::PolynomialWell { coefficients }, mass, hbar)
    }

    /// Same classical system with a different action quantum.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::new(self.kind.clone(), self.mass, hbar)
    }

    pub fn well_length(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::InfiniteWell { length } => Some(length),
            _ => None,
        }
    }

    pub fn is_hard_wall(&self) -> bool {
        self.well_length().is_some()
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if let PotentialKind::InfiniteWell { length } = self.kind {
            if !(x > 0.0 && x < length) {
                return Err(Error::WallEvaluation { x, length });
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    pub fn gradient(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.gradient_unchecked(x))
    }

    /// `V(x)` without the wall check; the well interior value (0) is returned
    /// everywhere for `InfiniteWell`.
    pub(crate) fn evaluate_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::FreeParticle | PotentialKind::InfiniteWell { .. } => 0.0,
            PotentialKind::HarmonicOscillator { omega } => 0.5 * self.mass * omega * omega * x * x,
            PotentialKind::PolynomialWell { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
        }
    }

    pub(crate) fn gradient_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::FreeParticle | PotentialKind::InfiniteWell { .. } => 0.0,
            PotentialKind::HarmonicOscillator { omega } => self.mass * omega * omega * x,
            PotentialKind::PolynomialWell { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (n, c)| acc * x + n as f64 * c),
        }
    }

    /// `d²V/dx²`, needed by the tangent (variational) flow.
    pub(crate) fn curvature_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::FreeParticle | PotentialKind::InfiniteWell { .. } => 0.0,
            PotentialKind::HarmonicOscillator { omega } => self.mass * omega * omega,
            PotentialKind::PolynomialWell { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (n, c)| acc * x + (n * (n - 1)) as f64 * c),
        }
    }

    pub fn hamiltonian(&self, x: f64, p: f64) -> f64 {
        p * p / (2.0 * self.mass) + self.evaluate_unchecked(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn evaluate_examples() {
        let free = PotentialModel::free(1.0, 1.0).unwrap();
        assert_eq!(free.evaluate(3.7).unwrap(), 0.0);

        let ho = PotentialModel::harmonic(2.0, 1.0, 1.0).unwrap();
        assert_eq!(ho.evaluate(1.0).unwrap(), 2.0);

        let quartic = PotentialModel::polynomial(vec![0.0, 0.0, 0.0, 0.0, 1.0], 1.0, 1.0).unwrap();
        let direct: f64 = 2.0f64.powi(4);
        assert_eq!(quartic.evaluate(2.0).unwrap(), direct);
    }

    #[test]
    fn gradient_examples() {
        let ho = PotentialModel::harmonic(1.0, 1.0, 1.0).unwrap();
        assert_eq!(ho.gradient(0.5).unwrap(), 0.5);
        let free = PotentialModel::free(1.0, 1.0).unwrap();
        assert_eq!(free.gradient(-12.0).unwrap(), 0.0);
        let quad = PotentialModel::polynomial(vec![0.0, 0.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(quad.gradient(3.0).unwrap(), 6.0);
        let constant = PotentialModel::polynomial(vec![4.0], 1.0, 1.0).unwrap();
        assert_eq!(constant.gradient(1.3).unwrap(), 0.0);
    }

    #[test]
    fn wall_evaluation_errors() {
        let well = PotentialModel::infinite_well(1.0, 1.0, 1.0).unwrap();
        assert_eq!(well.evaluate(0.5).unwrap(), 0.0);
        for x in [0.0, 1.0, -0.1, 1.5] {
            assert!(matches!(well.evaluate(x), Err(Error::WallEvaluation { .. })));
            assert!(matches!(well.gradient(x), Err(Error::WallEvaluation { .. })));
        }
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(PotentialModel::free(-1.0, 1.0).is_err());
        assert!(PotentialModel::free(1.0, 0.0).is_err());
        assert!(PotentialModel::harmonic(0.0, 1.0, 1.0).is_err());
        assert!(PotentialModel::infinite_well(-2.0, 1.0, 1.0).is_err());
    }

    fn fd_error(model: &PotentialModel, x: f64, h: f64) -> f64 {
        let fd = (model.evaluate(x + h).unwrap() - model.evaluate(x - h).unwrap()) / (2.0 * h);
        (model.gradient(x).unwrap() - fd).abs()
    }

    proptest! {
        #[test]
        fn gradient_matches_centered_differences(
            c in proptest::collection::vec(-2.0f64..2.0, 4..6),
            x in -1.5f64..1.5,
        ) {
            let model = PotentialModel::polynomial(c, 1.0, 1.0).unwrap();
            let (e1, e2) = (fd_error(&model, x, 1e-2), fd_error(&model, x, 5e-3));
            // O(h²): halving h divides the error by ~4 once it dominates round-off.
            if e1 > 1e-9 {
                let ratio = e1 / e2;
                prop_assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
            }
        }
    }

    #[test]
    fn harmonic_curvature_is_constant() {
        let ho = PotentialModel::harmonic(3.0, 2.0, 1.0).unwrap();
        assert_eq!(ho.curvature_unchecked(-4.0), 18.0);
        let cubic = PotentialModel::polynomial(vec![0.0, 0.0, 0.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(cubic.curvature_unchecked(2.0), 12.0);
    }
}
