//! Linear fields `w^k = c ψ^k` riding the semiclassical branches, and a
//! kinematic solitonic bump `u0` attached to one of them.
//!
//! The bump moves with the classical path of its carrier branch. Its peak
//! follows the full interfering field at its own location, normalized by
//! the carrier: `a(t) = a(0) |w(x_b, t)| / |w^{k_b}(x_b, t)|`.

mod recurrence;
mod statistics;

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::{flow_endpoint, integrate_hamilton, ClassicalTrajectory, PhasePoint};
use crate::error::{Error, Result};
use crate::exactqm::Wavefunction;
use crate::grid::Grid;
use crate::pilotwave::NODE_EPS;
use crate::semiclassical::{BranchLabel, BranchLauncher, Contribution, SemiclassicalState};

pub use recurrence::{recurrence_consistency, RecurrenceCheck};
pub use statistics::{soliton_ensemble_statistics, SolitonStatistics};

/// Default bump width in grid cells.
pub const DEFAULT_WIDTH_CELLS: f64 = 4.0;

/// `w = c ψ_sc` and its branch components at one time.
#[derive(Debug, Clone)]
pub struct WField {
    pub c: Complex64,
    pub labels: Vec<BranchLabel>,
    /// `c ψ^k` on the grid, one per branch.
    pub components: Vec<Vec<Complex64>>,
    /// `Σ_k w^k`.
    pub total: Wavefunction,
    pub caustic_mask: Vec<bool>,
    state: SemiclassicalState,
}

/// Scales every branch of `state` by `c`.
pub fn build_wfields(state: &SemiclassicalState, c: Complex64) -> Result<WField> {
    if state.branches.is_empty() {
        return Err(Error::EmptyState);
    }
    let n = state.grid().n;
    let components: Vec<Vec<Complex64>> =
        state.branches.iter().map(|b| b.field(n).into_iter().map(|v| c * v).collect()).collect();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for comp in &components {
        values.iter_mut().zip(comp).for_each(|(t, v)| *t += v);
    }
    Ok(WField {
        c,
        labels: state.branches.iter().map(|b| b.label).collect(),
        components,
        total: Wavefunction { values, ..state.total.clone() },
        caustic_mask: state.caustic_mask.clone(),
        state: state.clone(),
    })
}

/// `w` frames at the given times (relative to the launch), sharing one
/// launcher.
pub fn wfield_frames(launcher: &Arc<BranchLauncher>, durations: &[f64], c: Complex64) -> Result<Vec<WField>> {
    durations.iter().map(|&d| build_wfields(&launcher.slice(d)?.assemble()?, c)).collect()
}

impl WField {
    pub fn grid(&self) -> &Grid {
        &self.total.grid
    }

    pub fn time(&self) -> f64 {
        self.total.time
    }

    pub fn launcher(&self) -> &Arc<BranchLauncher> {
        self.state.slice().launcher()
    }

    pub fn state(&self) -> &SemiclassicalState {
        &self.state
    }

    /// Branch contributions at `x` scaled by `c`; the flag marks a dropped
    /// caustic path.
    pub fn contributions_at(&self, x: f64) -> Result<(Vec<Contribution>, bool)> {
        let (mut contribs, caustic) = self.state.contributions_at(x)?;
        for c in &mut contribs {
            c.weight *= self.c;
            c.value *= self.c;
        }
        Ok((contribs, caustic))
    }

    /// `w(x)` summed over branches at an arbitrary point.
    pub fn value_at(&self, x: f64) -> Result<Complex64> {
        Ok(self.contributions_at(x)?.0.iter().map(|c| c.value).sum())
    }

    fn node_level(&self) -> f64 {
        NODE_EPS * self.total.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Kinematic bump: Gaussian profile of fixed width centred on the carrier
/// path launched from `(x0, p0)` of component `branch` at `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonBump {
    /// `k_b`: the launch component carrying the bump.
    pub branch: usize,
    pub x0: f64,
    pub p0: f64,
    pub t0: f64,
    pub time: f64,
    pub center: f64,
    pub momentum: f64,
    pub sigma: f64,
    pub peak: f64,
    pub initial_peak: f64,
}

impl SolitonBump {
    /// `u0(x) = a exp(-(x - x_b)²/2σ²)`.
    pub fn profile(&self, x: f64) -> f64 {
        let d = x - self.center;
        self.peak * (-d * d / (2.0 * self.sigma * self.sigma)).exp()
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Bump split over the branches of `wfield`: the profile on the carrier
    /// branch and zero on every other one.
    pub fn branch_components(&self, wfield: &WField) -> Result<Vec<Vec<f64>>> {
        let carrier = carrier_at(self, wfield)?;
        let grid = wfield.grid();
        Ok((0..wfield.labels.len())
            .map(|k| {
                if k == carrier.branch {
                    grid.points().iter().map(|&x| self.profile(x)).collect()
                } else {
                    vec![0.0; grid.n]
                }
            })
            .collect())
    }

    /// Classical path of the carrier over `duration` from `t0`.
    pub fn trajectory(&self, wfield: &WField, duration: f64) -> Result<ClassicalTrajectory> {
        let launcher = wfield.launcher();
        let dt = launcher.config().dt.min(duration.max(f64::MIN_POSITIVE));
        integrate_hamilton(launcher.model(), PhasePoint::new(self.x0, self.p0), duration, dt)
    }
}

/// Attaches a bump at `x0` to the field at launch. When several branches
/// start at `x0`, the carrier is drawn with probability `∝ |w^k(x0)|²`.
pub fn attach_soliton(wfield: &WField, x0: f64, seed: u64) -> Result<SolitonBump> {
    attach_with_rng(wfield, x0, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub(crate) fn attach_with_rng<R: Rng>(wfield: &WField, x0: f64, rng: &mut R) -> Result<SolitonBump> {
    let launcher = wfield.launcher();
    let level = wfield.node_level();
    let values: Vec<Option<Complex64>> = launcher.initial_values(x0).into_iter().map(|v| v.map(|v| wfield.c * v)).collect();
    let weights: Vec<f64> = values.iter().map(|v| v.filter(|v| v.norm() > level).map_or(0.0, |v| v.norm_sqr())).collect();
    let total_weight: f64 = weights.iter().sum();
    if total_weight == 0.0 {
        return Err(Error::DeadZone { x0 });
    }
    let live = weights.iter().filter(|w| **w > 0.0).count();
    let branch = if live == 1 {
        weights.iter().position(|w| *w > 0.0).unwrap()
    } else {
        let mut u = rng.random::<f64>() * total_weight;
        let mut pick = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if *w > 0.0 && u < *w {
                pick = k;
                break;
            }
            u -= w;
        }
        while weights[pick] == 0.0 {
            pick -= 1;
        }
        pick
    };
    let p0 = launcher.launch_momentum(branch, x0).ok_or(Error::DeadZone { x0 })?;
    let peak = values.iter().flatten().sum::<Complex64>().norm();
    let t0 = launcher.start_time();
    Ok(SolitonBump {
        branch,
        x0,
        p0,
        t0,
        time: t0,
        center: x0,
        momentum: p0,
        sigma: DEFAULT_WIDTH_CELLS * launcher.grid().dx(),
        peak,
        initial_peak: peak,
    })
}

/// The carrier's contribution at the bump centre: the path of component
/// `k_b` launched from the bump's own `x0`.
fn carrier_at(bump: &SolitonBump, wfield: &WField) -> Result<Contribution> {
    let (contribs, caustic) = wfield.contributions_at(bump.center)?;
    let tol = 1e-6 * wfield.grid().length();
    contribs
        .into_iter()
        .filter(|c| c.component == bump.branch)
        .min_by(|a, b| (a.x0 - bump.x0).abs().total_cmp(&(b.x0 - bump.x0).abs()))
        .filter(|c| (c.x0 - bump.x0).abs() <= tol)
        .ok_or_else(|| Error::BranchTerminated {
            t: wfield.time(),
            reason: if caustic { "carrier path at a caustic".into() } else { "carrier path not found".into() },
        })
}

/// `|w(x_b)| / |w^{k_b}(x_b)|` and the carrier contribution.
fn coupling(bump: &SolitonBump, wfield: &WField) -> Result<(f64, Contribution)> {
    let carrier = carrier_at(bump, wfield)?;
    let (contribs, _) = wfield.contributions_at(bump.center)?;
    let carrier_amp = carrier.value.norm();
    if carrier_amp <= wfield.node_level() {
        return Err(Error::CarrierNode { x: bump.center, t: wfield.time() });
    }
    let total: Complex64 = contribs.iter().map(|c| c.value).sum();
    Ok((total.norm() / carrier_amp, carrier))
}

/// Peak `a(0) |w(x_b, t)| / |w^{k_b}(x_b, t)|` with the bump placed at its
/// classical position for `wfield.time()`.
pub fn couple_amplitude(bump: &SolitonBump, wfield: &WField) -> Result<f64> {
    let moved = advance(bump, wfield)?;
    Ok(moved.peak)
}

/// Moves the bump along its carrier to `wfield.time()` and recouples its peak.
pub fn advance(bump: &SolitonBump, wfield: &WField) -> Result<SolitonBump> {
    let launcher = wfield.launcher();
    let duration = wfield.time() - bump.t0;
    if duration < 0.0 {
        return Err(Error::InvalidParameter { name: "wfield", reason: format!("frame at t = {} precedes the launch", wfield.time()) });
    }
    let flow = flow_endpoint(launcher.model(), PhasePoint::new(bump.x0, bump.p0), duration, [1.0, 0.0], launcher.config().dt)?;
    let mut moved = SolitonBump { time: wfield.time(), center: flow.end.x, momentum: flow.end.p, ..*bump };
    let (ratio, _) = coupling(&moved, wfield)?;
    moved.peak = bump.initial_peak * ratio;
    Ok(moved)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonSample {
    pub t: f64,
    pub x: f64,
    pub a: f64,
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonHistory {
    pub samples: Vec<SolitonSample>,
    pub last: SolitonBump,
    /// Why the history stops before the final frame, if it does.
    pub terminated: Option<Error>,
}

impl SolitonHistory {
    /// Polyline length through the samples; a wall bounce between two
    /// samples is cut short. [`SolitonBump::trajectory`] has the full path.
    pub fn path_length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].x - w[0].x).abs()).sum()
    }
}

/// Follows the bump through every frame at or after its launch time.
pub fn evolve_soliton(bump: &SolitonBump, frames: &[WField]) -> SolitonHistory {
    let mut samples = Vec::new();
    let mut last = *bump;
    for frame in frames.iter().filter(|f| f.time() >= bump.t0) {
        match advance(bump, frame) {
            Ok(b) => {
                samples.push(SolitonSample { t: b.time, x: b.center, a: b.peak, branch: b.branch });
                last = b;
            }
            Err(e) => return SolitonHistory { samples, last, terminated: Some(e) },
        }
    }
    SolitonHistory { samples, last, terminated: None }
}
