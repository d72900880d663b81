//! de Broglie–Bohm trajectories guided by exact wavefunction frames.

mod sampling;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::ClassicalTrajectory;
use crate::error::{ensure, Error, Result};
use crate::exactqm::Wavefunction;
use crate::grid::Grid;
use crate::interp;

pub use sampling::{binned_reference, equivariance_distance, histogram, sample_initial, tv_distance};

/// Default local error target for trajectory integration, per unit time.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
/// Node neighbourhood: `|ψ| < NODE_EPS · max|ψ|`.
pub const NODE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub v: f64,
    /// Set when `x` lies in a node neighbourhood and `v` was capped.
    pub capped: bool,
}

#[derive(Debug, Clone)]
struct Frame {
    time: f64,
    psi: Vec<Complex64>,
    dpsi: Vec<Complex64>,
    node_level: f64,
}

/// Frames of `ψ` and `∂ψ/∂x` with space (cubic) and time (linear in `ψ`)
/// interpolation.
#[derive(Debug, Clone)]
pub struct GuidingField {
    grid: Grid,
    mass: f64,
    hbar: f64,
    frames: Vec<Frame>,
    v_max: f64,
}

fn velocity_from(psi: Complex64, dpsi: Complex64, hbar: f64, mass: f64, node_level: f64, v_max: f64) -> Velocity {
    let rho = psi.norm_sqr();
    let v = hbar / mass * (psi.conj() * dpsi).im / rho;
    if psi.norm() < node_level || !v.is_finite() {
        let v = if v.is_finite() { v.clamp(-v_max, v_max) } else { 0.0 };
        Velocity { v, capped: true }
    } else {
        Velocity { v, capped: false }
    }
}

fn check_domain(grid: &Grid, x: f64, t: f64) -> Result<()> {
    if grid.contains(x) && x.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x, t })
    }
}

/// Guiding velocity `v = (ħ/m) Im(ψ* ∂ψ)/|ψ|²` at `x` for a single frame.
pub fn guiding_velocity(psi: &Wavefunction, x: f64) -> Result<Velocity> {
    check_domain(&psi.grid, x, psi.time)?;
    let (d1, _) = psi.derivatives();
    let p = interp::cubic(&psi.grid, &psi.values, x);
    let dp = interp::cubic_even(&psi.grid, &d1, x);
    Ok(velocity_from(p, dp, psi.hbar, psi.mass, NODE_EPS * psi.max_amplitude(), f64::INFINITY))
}

impl GuidingField {
    pub fn new(frames: &[Wavefunction]) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyState)?;
        for w in frames.windows(2) {
            w[0].grid.check_same(&w[1].grid)?;
            ensure(w[1].time > w[0].time, "frames", || "times must increase".into())?;
        }
        let prepared: Vec<Frame> = frames
            .par_iter()
            .map(|f| Frame {
                time: f.time,
                psi: f.values.clone(),
                dpsi: f.derivatives().0,
                node_level: NODE_EPS * f.max_amplitude(),
            })
            .collect();
        let interval = frames.windows(2).map(|w| w[1].time - w[0].time).fold(f64::INFINITY, f64::min);
        let v_max = 10.0 * first.grid.dx() / interval;
        Ok(Self { grid: first.grid, mass: first.mass, hbar: first.hbar, frames: prepared, v_max })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.time).collect()
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    fn at_frames(&self, a: usize, b: usize, t: f64, x: f64) -> Result<Velocity> {
        check_domain(&self.grid, x, t)?;
        let eval = |f: &Frame| (interp::cubic(&self.grid, &f.psi, x), interp::cubic_even(&self.grid, &f.dpsi, x));
        let fa = &self.frames[a];
        let (pa, da) = eval(fa);
        if a == b {
            return Ok(velocity_from(pa, da, self.hbar, self.mass, fa.node_level, self.v_max));
        }
        let fb = &self.frames[b];
        let (pb, db) = eval(fb);
        let s = (t - fa.time) / (fb.time - fa.time);
        let level = (1.0 - s) * fa.node_level + s * fb.node_level;
        Ok(velocity_from(pa * (1.0 - s) + pb * s, da * (1.0 - s) + db * s, self.hbar, self.mass, level, self.v_max))
    }

    /// Velocity at `(x, t)` for `t` within the frame span.
    pub fn velocity(&self, x: f64, t: f64) -> Result<Velocity> {
        let times = self.times();
        let last = times.len() - 1;
        if t <= times[0] {
            return self.at_frames(0, 0, t, x);
        }
        if t >= times[last] {
            return self.at_frames(last, last, t, x);
        }
        let b = times.partition_point(|&s| s <= t);
        self.at_frames(b - 1, b, t, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BohmSample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohmTrajectory {
    pub x0: f64,
    /// One sample per frame time.
    pub samples: Vec<BohmSample>,
    /// Whether any step entered a node neighbourhood.
    pub node_flagged: bool,
}

impl BohmTrajectory {
    pub fn path_length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].x - w[0].x).abs()).sum()
    }

    pub fn end(&self) -> &BohmSample {
        self.samples.last().expect("trajectory has samples")
    }
}

struct Rk4<'a> {
    field: &'a GuidingField,
    a: usize,
    b: usize,
    flagged: bool,
}

impl Rk4<'_> {
    fn v(&mut self, x: f64, t: f64) -> Result<f64> {
        let vel = self.field.at_frames(self.a, self.b, t, x)?;
        self.flagged |= vel.capped;
        Ok(vel.v)
    }

    fn step(&mut self, x: f64, t: f64, h: f64) -> Result<f64> {
        let k1 = self.v(x, t)?;
        let k2 = self.v(x + 0.5 * h * k1, t + 0.5 * h)?;
        let k3 = self.v(x + 0.5 * h * k2, t + 0.5 * h)?;
        let k4 = self.v(x + h * k3, t + h)?;
        Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }
}

/// Integrates `dx/dt = v(x, t)` from the first frame to the last with
/// adaptive RK4 (step doubling); steps never straddle a frame boundary.
pub fn integrate_bohm(field: &GuidingField, x0: f64) -> Result<BohmTrajectory> {
    integrate_bohm_with(field, x0, DEFAULT_TOLERANCE)
}

pub fn integrate_bohm_with(field: &GuidingField, x0: f64, tolerance: f64) -> Result<BohmTrajectory> {
    ensure(tolerance > 0.0, "tolerance", || "must be positive".into())?;
    let times = field.times();
    let v0 = field.velocity(x0, times[0])?;
    let mut samples = vec![BohmSample { t: times[0], x: x0, v: v0.v }];
    let mut flagged = v0.capped;
    let mut x = x0;
    let mut h = times.get(1).map_or(0.0, |t1| t1 - times[0]);
    for b in 1..times.len() {
        let mut rk = Rk4 { field, a: b - 1, b, flagged: false };
        let (t_start, t_end) = (times[b - 1], times[b]);
        let mut t = t_start;
        let min_step = 1e-12 * (t_end - t_start);
        while t < t_end {
            let last = h >= t_end - t;
            let step = if last { t_end - t } else { h };
            let full = rk.step(x, t, step)?;
            let half = rk.step(x, t, 0.5 * step)?;
            let fine = rk.step(half, t + 0.5 * step, 0.5 * step)?;
            let err = (fine - full).abs();
            let allowed = tolerance * step;
            if err <= allowed || step <= min_step {
                x = fine + (fine - full) / 15.0;
                t = if last { t_end } else { t + step };
                let grow = if err == 0.0 { 4.0 } else { (0.9 * (allowed / err).powf(0.25)).clamp(0.2, 4.0) };
                h = (step * grow).max(min_step);
            } else {
                h = (step * (0.9 * (allowed / err).powf(0.25)).clamp(0.1, 0.9)).max(min_step);
            }
        }
        let vel = field.at_frames(b, b, t_end, x)?;
        flagged |= rk.flagged || vel.capped;
        samples.push(BohmSample { t: t_end, x, v: vel.v });
    }
    Ok(BohmTrajectory { x0, samples, node_flagged: flagged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEnsemble {
    pub trajectories: Vec<BohmTrajectory>,
    pub seed: u64,
    pub size: usize,
}

impl TrajectoryEnsemble {
    /// Positions at frame index `k`.
    pub fn positions(&self, k: usize) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.samples[k].x).collect()
    }

    pub fn frame_count(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.samples.len())
    }

    /// Pairs whose order differs from their initial order at some frame.
    pub fn crossing_violations(&self) -> usize {
        let mut order: Vec<usize> = (0..self.trajectories.len()).collect();
        order.sort_by(|&a, &b| self.trajectories[a].x0.total_cmp(&self.trajectories[b].x0));
        let mut violations = 0;
        for k in 0..self.frame_count() {
            for w in order.windows(2) {
                let (a, b) = (&self.trajectories[w[0]], &self.trajectories[w[1]]);
                if a.x0 < b.x0 && a.samples[k].x >= b.samples[k].x {
                    violations += 1;
                }
            }
        }
        violations
    }
}

/// Trajectories from `|ψ0|²`-distributed starts, integrated in parallel;
/// the result does not depend on the thread count.
pub fn run_ensemble(field: &GuidingField, psi0: &Wavefunction, n: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    let starts = sample_initial(psi0, n, seed)?;
    let trajectories = starts.par_iter().map(|&x0| integrate_bohm(field, x0)).collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryEnsemble { trajectories, seed, size: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchReport {
    pub sup_deviation: f64,
    pub bohm_path_length: f64,
    pub classical_path_length: f64,
    /// Bohmian over classical path length; `None` if the classical path is static.
    pub length_ratio: Option<f64>,
}

/// Compares a Bohmian path with a classical one started at the same time.
pub fn mismatch_report(bohm: &BohmTrajectory, classical: &ClassicalTrajectory) -> MismatchReport {
    let t0 = bohm.samples[0].t;
    let c0 = classical.samples[0].t;
    let span = bohm.end().t - t0;
    let sup_deviation = bohm
        .samples
        .iter()
        .map(|s| (s.x - classical.position_at(s.t - t0 + c0)).abs())
        .fold(0.0, f64::max);
    let end = c0 + span;
    let mut classical_path_length = 0.0;
    for w in classical.samples.windows(2) {
        if w[0].t >= end {
            break;
        }
        if w[1].t <= end {
            classical_path_length += (w[1].x - w[0].x).abs();
        } else {
            classical_path_length += (classical.position_at(end) - w[0].x).abs();
        }
    }
    let bohm_path_length = bohm.path_length();
    MismatchReport {
        sup_deviation,
        bohm_path_length,
        classical_path_length,
        length_ratio: (classical_path_length > 0.0).then(|| bohm_path_length / classical_path_length),
    }
}
