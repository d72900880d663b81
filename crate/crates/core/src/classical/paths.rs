//! Boundary-value search: all classical paths from `x0` to `x` in time `t`.

use serde::{Deserialize, Serialize};

use super::flow::{flow_endpoint, FlowEnd};
use super::{integrate_hamilton, ClassicalTrajectory, PhasePoint};
use crate::error::{ensure, Error, Result};
use crate::potentials::PotentialModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BvpConfig {
    /// Initial-momentum window scanned for roots.
    pub p_min: f64,
    pub p_max: f64,
    pub p_samples: usize,
    /// Step for numerically integrated potentials.
    pub dt: f64,
    /// Endpoint tolerance relative to `max(1, |x|)`.
    pub tolerance: f64,
    /// Relative caustic threshold on `|J| m / t`.
    pub caustic_eps: f64,
    /// Initial amplitudes below this fraction of the peak are not launched.
    pub support_cutoff: f64,
    pub newton_polish: bool,
}

impl BvpConfig {
    pub fn new(p_min: f64, p_max: f64, p_samples: usize) -> Self {
        Self {
            p_min,
            p_max,
            p_samples,
            dt: 1e-3,
            tolerance: 1e-12,
            caustic_eps: super::CAUSTIC_EPS,
            support_cutoff: 1e-10,
            newton_polish: true,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        ensure(self.p_max > self.p_min, "p_window", || format!("empty window [{}, {}]", self.p_min, self.p_max))?;
        ensure(self.p_samples >= 2, "p_samples", || "need at least two samples".into())?;
        ensure(self.dt > 0.0, "dt", || "must be positive".into())?;
        ensure(self.tolerance > 0.0, "tolerance", || "must be positive".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingRoot {
    pub p0: f64,
    pub flow: FlowEnd,
}

/// Paths found plus brackets where refinement did not converge to a root
/// (e.g. a jump in the shooting map).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<ClassicalTrajectory>,
    pub failed_brackets: Vec<(f64, f64)>,
}

/// Final positions over a grid of initial momenta from a fixed `x0`; reused
/// for every target position.
#[derive(Debug, Clone)]
pub struct ShootingTable {
    model: PotentialModel,
    x0: f64,
    duration: f64,
    seed_slope: f64,
    cfg: BvpConfig,
    momenta: Vec<f64>,
    finals: Vec<f64>,
    degenerate: Option<f64>,
}

impl ShootingTable {
    pub fn new(model: &PotentialModel, x0: f64, duration: f64, cfg: &BvpConfig) -> Result<Self> {
        Self::with_seed(model, x0, duration, cfg, 0.0)
    }

    /// `seed_slope = dp0/dx0` of the launching manifold; roots then also
    /// report zeros of the manifold tangent.
    pub fn with_seed(model: &PotentialModel, x0: f64, duration: f64, cfg: &BvpConfig, seed_slope: f64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.p_samples;
        let momenta: Vec<f64> =
            (0..n).map(|i| cfg.p_min + (cfg.p_max - cfg.p_min) * i as f64 / (n - 1) as f64).collect();
        let finals = momenta
            .iter()
            .map(|&p| flow_endpoint(model, PhasePoint::new(x0, p), duration, [1.0, seed_slope], cfg.dt).map(|f| f.end.x))
            .collect::<Result<Vec<_>>>()?;
        let lo = finals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = lo.abs().max(hi.abs()).max(1.0);
        let degenerate = (hi - lo <= 1e3 * cfg.tolerance * scale).then_some(0.5 * (lo + hi));
        Ok(Self { model: model.clone(), x0, duration, seed_slope, cfg: *cfg, momenta, finals, degenerate })
    }

    fn eval(&self, p: f64) -> Result<FlowEnd> {
        flow_endpoint(&self.model, PhasePoint::new(self.x0, p), self.duration, [1.0, self.seed_slope], self.cfg.dt)
    }

    /// Roots of `x(t; x0, p0) = target` in the momentum window, sorted by `p0`.
    pub fn roots(&self, target: f64) -> Result<(Vec<ShootingRoot>, Vec<(f64, f64)>)> {
        let tol = self.cfg.tolerance * target.abs().max(1.0);
        if let Some(x) = self.degenerate {
            return if (x - target).abs() <= 1e3 * tol { Err(Error::DegeneratePaths) } else { Ok((Vec::new(), Vec::new())) };
        }
        let mut roots: Vec<ShootingRoot> = Vec::new();
        let mut failed = Vec::new();
        let f: Vec<f64> = self.finals.iter().map(|x| x - target).collect();
        for i in 0..f.len() {
            if f[i] == 0.0 {
                push_unique(&mut roots, ShootingRoot { p0: self.momenta[i], flow: self.eval(self.momenta[i])? });
            }
            if i + 1 < f.len() && f[i] * f[i + 1] < 0.0 {
                match self.refine(target, (self.momenta[i], f[i]), (self.momenta[i + 1], f[i + 1]), tol)? {
                    Some(root) => push_unique(&mut roots, root),
                    None => failed.push((self.momenta[i], self.momenta[i + 1])),
                }
            }
        }
        Ok((roots, failed))
    }

    fn refine(&self, target: f64, a: (f64, f64), b: (f64, f64), tol: f64) -> Result<Option<ShootingRoot>> {
        let (mut pa, mut fa) = a;
        let (mut pb, _) = b;
        let mut guess = pa - fa * (pb - pa) / (b.1 - fa);
        for _ in 0..200 {
            let p = if guess > pa.min(pb) && guess < pa.max(pb) { guess } else { 0.5 * (pa + pb) };
            let flow = self.eval(p)?;
            let fp = flow.end.x - target;
            if fp.abs() <= tol {
                return Ok(Some(ShootingRoot { p0: p, flow }));
            }
            if fp * fa < 0.0 {
                pb = p;
            } else {
                pa = p;
                fa = fp;
            }
            if (pb - pa).abs() <= 4.0 * f64::EPSILON * p.abs().max(1.0) {
                return Ok(None);
            }
            let j = flow.jacobi();
            guess = if self.cfg.newton_polish && j != 0.0 { p - fp / j } else { 0.5 * (pa + pb) };
        }
        Ok(None)
    }
}

fn push_unique(roots: &mut Vec<ShootingRoot>, root: ShootingRoot) {
    if !roots.iter().any(|r| (r.p0 - root.p0).abs() <= 1e-9 * root.p0.abs().max(1.0)) {
        roots.push(root);
    }
}

/// Hard-wall paths by the method of images: the unfolded free path ends on
/// `±x + 2nL`, each image giving exactly one root.
pub fn image_roots(model: &PotentialModel, x0: f64, x: f64, duration: f64, cfg: &BvpConfig) -> Result<Vec<ShootingRoot>> {
    let length = model.well_length().ok_or_else(|| Error::InvalidParameter {
        name: "model",
        reason: "images need the hard-wall well".into(),
    })?;
    cfg.validate()?;
    let m = model.mass;
    let lo = x0 + cfg.p_min * duration / m;
    let hi = x0 + cfg.p_max * duration / m;
    let mut roots = Vec::new();
    for base in [x, -x] {
        let n_lo = ((lo - base) / (2.0 * length)).ceil() as i64;
        let n_hi = ((hi - base) / (2.0 * length)).floor() as i64;
        for n in n_lo..=n_hi {
            let image = base + 2.0 * n as f64 * length;
            let p0 = m * (image - x0) / duration;
            let flow = flow_endpoint(model, PhasePoint::new(x0, p0), duration, [1.0, 0.0], cfg.dt)?;
            push_unique(&mut roots, ShootingRoot { p0, flow });
        }
    }
    roots.sort_by(|a, b| a.p0.total_cmp(&b.p0));
    Ok(roots)
}

fn trajectories(model: &PotentialModel, x0: f64, duration: f64, cfg: &BvpConfig, roots: &[ShootingRoot]) -> Result<Vec<ClassicalTrajectory>> {
    roots.iter().map(|r| integrate_hamilton(model, PhasePoint::new(x0, r.p0), duration, cfg.dt)).collect()
}

/// All classical paths with `x(0) = x0`, `x(t) = x` and initial momentum in
/// the configured window. The hard-wall well uses the image construction;
/// other potentials are shot and bracketed.
pub fn find_paths(model: &PotentialModel, x0: f64, x: f64, duration: f64, cfg: &BvpConfig) -> Result<PathSet> {
    if model.is_hard_wall() {
        let roots = image_roots(model, x0, x, duration, cfg)?;
        return Ok(PathSet { paths: trajectories(model, x0, duration, cfg, &roots)?, failed_brackets: Vec::new() });
    }
    shoot_paths(model, x0, x, duration, cfg)
}

/// Shooting search for any potential (including the well, as a check on
/// the image construction).
pub fn shoot_paths(model: &PotentialModel, x0: f64, x: f64, duration: f64, cfg: &BvpConfig) -> Result<PathSet> {
    let (roots, failed_brackets) = ShootingTable::new(model, x0, duration, cfg)?.roots(x)?;
    Ok(PathSet { paths: trajectories(model, x0, duration, cfg, &roots)?, failed_brackets })
}
