use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{Engine, ScenarioConfig, ScenarioName};
use crate::classical::{find_periodic_orbits, integrate_hamilton, BvpConfig, ClassicalTrajectory, PhasePoint};
use crate::doublesolution::{
    attach_soliton, evolve_soliton, recurrence_consistency, soliton_ensemble_statistics, wfield_frames, RecurrenceCheck,
    SolitonStatistics,
};
use crate::error::{Error, Result};
use crate::exactqm::{max_stable_dt, propagate_exact, ExactConfig, Wavefunction};
use crate::grid::Grid;
use crate::io;
use crate::pilotwave::{equivariance_distance, integrate_bohm, mismatch_report, run_ensemble, GuidingField, MismatchReport};
use crate::potentials::PotentialModel;
use crate::semiclassical::{counter_propagating_split, propagate_semiclassical, BranchLauncher};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> Section<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Section::Ok(v),
            Err(e) => Section::Failed { error: e.to_string() },
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Section::Ok(v) => Some(v),
            Section::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSummary {
    pub frames: usize,
    pub dt: f64,
    pub final_time: f64,
    /// `max |‖ψ‖ - 1|` over the frames.
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalSummary {
    pub l2_error: f64,
    pub fidelity: f64,
    pub caustic_points: usize,
    pub branches: Option<usize>,
    pub branch_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohmSummary {
    pub trajectories: usize,
    pub equivariance_tv: f64,
    pub crossing_violations: usize,
    pub node_flagged: usize,
    pub probe_x0: f64,
    pub probe_path_length: f64,
    pub mismatch: MismatchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonSummary {
    pub statistics: SolitonStatistics,
    pub probe_x0: f64,
    pub carrier: usize,
    pub carrier_momentum: f64,
    /// Length of the carrier's classical path over the run.
    pub path_length: f64,
    /// `max |x_b - x_Bohm|` over frame times, when the Bohm engine ran.
    pub bohm_deviation: Option<f64>,
    pub terminated: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSummary {
    pub checks: Vec<RecurrenceCheck>,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioName,
    pub seed: u64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub exact: Option<Section<ExactSummary>>,
    pub semiclassical: Option<Section<SemiclassicalSummary>>,
    pub bohm: Option<Section<BohmSummary>>,
    pub soliton: Option<Section<SolitonSummary>>,
    pub recurrence: Option<Section<RecurrenceSummary>>,
    pub files: Vec<String>,
    /// Wall-clock seconds per engine; the only non-reproducible field.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        fn bad<T>(s: &Option<Section<T>>) -> bool {
            matches!(s, Some(Section::Failed { .. }))
        }
        bad(&self.exact) || bad(&self.semiclassical) || bad(&self.bohm) || bad(&self.soliton) || bad(&self.recurrence)
    }
}

/// Model, grid and initial state of a scenario.
pub fn build_setup(cfg: &ScenarioConfig) -> Result<(PotentialModel, Wavefunction)> {
    use ScenarioName::*;
    let m = &cfg.model;
    let model = match (&m.coefficients, cfg.scenario) {
        (Some(c), _) => PotentialModel::polynomial(c.clone(), m.mass, m.hbar)?,
        (None, FreeGaussian) => PotentialModel::free(m.mass, m.hbar)?,
        (None, HarmonicCoherent) => PotentialModel::harmonic(m.omega.unwrap_or(1.0), m.mass, m.hbar)?,
        (None, _) => PotentialModel::infinite_well(m.length.unwrap_or(1.0), m.mass, m.hbar)?,
    };
    let g = &cfg.grid;
    let grid = if cfg.scenario.is_well() { Grid::dirichlet(g.x_min, g.x_max, g.n)? } else { Grid::periodic(g.x_min, g.x_max, g.n)? };
    let s = &cfg.state;
    let psi = match (cfg.scenario, s.sigma) {
        (WellEigenstate, _) => Wavefunction::well_eigenstate(grid, &model, s.level)?,
        (HarmonicCoherent, None) => Wavefunction::coherent_state(grid, &model, s.center, s.momentum)?,
        (_, sigma) => Wavefunction::gaussian(grid, &model, s.center, sigma.unwrap_or(1.0), s.momentum)?,
    };
    Ok((model, psi))
}

/// Step and stride actually used: the configured values or the stability
/// rule and about twenty frames.
pub fn exact_config(cfg: &ScenarioConfig, psi0: &Wavefunction, model: &PotentialModel) -> ExactConfig {
    let duration = cfg.time.duration;
    let dt = cfg.time.dt.unwrap_or_else(|| duration / (duration / max_stable_dt(psi0, model)).ceil().max(1.0));
    let steps = (duration / dt).round().max(1.0) as usize;
    let stride = cfg.time.frame_stride.unwrap_or_else(|| (steps / 20).max(1));
    ExactConfig::new(duration, dt, stride)
}

fn bvp(cfg: &ScenarioConfig) -> BvpConfig {
    let s = &cfg.semiclassical;
    BvpConfig::new(s.p_min, s.p_max, s.p_samples)
}

/// Launch components: the counter-propagating halves for well states, the
/// state itself otherwise.
fn components(cfg: &ScenarioConfig, psi0: &Wavefunction) -> Result<Vec<Wavefunction>> {
    Ok(match cfg.scenario {
        ScenarioName::WellEigenstate => counter_propagating_split(psi0)?.to_vec(),
        _ => vec![psi0.clone()],
    })
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn timed<T>(timings: &mut BTreeMap<String, f64>, name: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    timings.insert(name.to_string(), start.elapsed().as_secs_f64());
    out
}

/// Probe carrier: the soliton attached at the probe point and its
/// classical path over the run.
fn probe(launcher: &Arc<BranchLauncher>, cfg: &ScenarioConfig) -> Result<(usize, f64, ClassicalTrajectory)> {
    let w0 = wfield_frames(launcher, &[0.0], Complex64::new(1.0, 0.0))?.remove(0);
    let bump = attach_soliton(&w0, cfg.state.probe, cfg.ensemble.seed)?;
    let duration = cfg.time.duration;
    let dt = duration / (duration / 1e-3).ceil();
    let traj = integrate_hamilton(launcher.model(), PhasePoint::new(bump.x0, bump.p0), duration, dt)?;
    Ok((bump.branch, bump.p0, traj))
}

/// Runs the requested engines in dependency order and writes CSV/JSON
/// artifacts to `cfg.output`. Engine failures are recorded in the report.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    fs::create_dir_all(&cfg.output)?;
    let mut out = Writer { dir: &cfg.output, files: Vec::new() };
    let mut timings = BTreeMap::new();
    let mut report = RunReport {
        scenario: cfg.scenario,
        seed: cfg.ensemble.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        exact: None,
        semiclassical: None,
        bohm: None,
        soliton: None,
        recurrence: None,
        files: Vec::new(),
        timings: BTreeMap::new(),
    };

    if cfg.scenario == ScenarioName::TwoOrbitRecurrence {
        let r = timed(&mut timings, "recurrence", || run_recurrence(cfg, &mut out));
        report.recurrence = Some(Section::from_result(r));
        return finish(report, out, timings);
    }

    let (model, psi0) = build_setup(cfg)?;
    let wants = |e: Engine| cfg.engines.contains(&e);
    let needs_frames = wants(Engine::Exact) || wants(Engine::Semiclassical) || wants(Engine::Bohm) || wants(Engine::Soliton);
    let ecfg = exact_config(cfg, &psi0, &model);
    let frames = if needs_frames { Some(timed(&mut timings, "exact", || propagate_exact(&psi0, &model, &ecfg))) } else { None };
    let frames = match frames {
        Some(Ok(f)) => f,
        Some(Err(e)) => {
            let error = format!("exact frames unavailable: {e}");
            report.exact = Some(Section::Failed { error: e.to_string() });
            report.semiclassical = wants(Engine::Semiclassical).then(|| Section::Failed { error: error.clone() });
            report.bohm = wants(Engine::Bohm).then(|| Section::Failed { error: error.clone() });
            report.soliton = wants(Engine::Soliton).then(|| Section::Failed { error: error.clone() });
            return finish(report, out, timings);
        }
        None => Vec::new(),
    };
    let last = frames.last().cloned().ok_or(Error::EmptyState)?;

    if wants(Engine::Exact) {
        let r = (|| {
            out.write("exact_frames.bin", |w| io::write_frame_cache(w, &frames))?;
            out.write("exact_final.csv", |w| io::write_frame_csv(w, &last))?;
            let norm_drift = frames.iter().map(|f| (f.norm() - 1.0).abs()).fold(0.0, f64::max);
            Ok(ExactSummary { frames: frames.len(), dt: ecfg.dt, final_time: last.time, norm_drift })
        })();
        report.exact = Some(Section::from_result(r));
    }

    if wants(Engine::Semiclassical) {
        let r = timed(&mut timings, "semiclassical", || {
            let sc = propagate_semiclassical(&psi0, &model, cfg.time.duration, &bvp(cfg))?;
            out.write("semiclassical.csv", |w| io::write_frame_csv(w, &sc.psi))?;
            let l2_error = sc.psi.distance(&last)?;
            let fidelity = sc.psi.inner(&last)?.norm_sqr();
            let caustic_points = sc.caustic_mask.iter().filter(|m| **m).count();
            let branches = BranchLauncher::new(&components(cfg, &psi0)?, &model, &bvp(cfg))
                .and_then(|l| l.slice(cfg.time.duration)?.assemble())
                .and_then(|state| {
                    out.write("branches.csv", |w| io::write_branch_csv(w, &state))?;
                    Ok(state.branches.len())
                });
            let (branches, branch_error) = match branches {
                Ok(n) => (Some(n), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(SemiclassicalSummary { l2_error, fidelity, caustic_points, branches, branch_error })
        });
        report.semiclassical = Some(Section::from_result(r));
    }

    let launcher = if wants(Engine::Bohm) || wants(Engine::Soliton) {
        Some(BranchLauncher::new(&components(cfg, &psi0)?, &model, &bvp(cfg)))
    } else {
        None
    };

    let mut bohm_probe = None;
    if wants(Engine::Bohm) {
        let r = timed(&mut timings, "bohm", || {
            let field = GuidingField::new(&frames)?;
            let ensemble = run_ensemble(&field, &psi0, cfg.ensemble.n, cfg.ensemble.seed)?;
            out.write("bohm_ensemble.csv", |w| io::write_ensemble_csv(w, &ensemble))?;
            let equivariance_tv = equivariance_distance(&ensemble, &last, cfg.ensemble.bins)?;
            let crossing_violations = ensemble.crossing_violations();
            let node_flagged = ensemble.trajectories.iter().filter(|t| t.node_flagged).count();
            let bohm = integrate_bohm(&field, cfg.state.probe)?;
            let launcher = launcher.clone().expect("launcher built for bohm")?;
            let (_, _, classical) = probe(&launcher, cfg)?;
            out.write("classical_probe.csv", |w| io::write_trajectory_csv(w, &classical))?;
            let mismatch = mismatch_report(&bohm, &classical);
            let summary = BohmSummary {
                trajectories: ensemble.trajectories.len(),
                equivariance_tv,
                crossing_violations,
                node_flagged,
                probe_x0: cfg.state.probe,
                probe_path_length: bohm.path_length(),
                mismatch,
            };
            bohm_probe = Some(bohm);
            Ok(summary)
        });
        report.bohm = Some(Section::from_result(r));
    }

    if wants(Engine::Soliton) {
        let r = timed(&mut timings, "soliton", || {
            let launcher = launcher.clone().expect("launcher built for solitons")?;
            let c = Complex64::new(1.0, 0.0);
            let times: Vec<f64> = frames.iter().map(|f| f.time - psi0.time).collect();
            let wframes = wfield_frames(&launcher, &times, c)?;
            let statistics = soliton_ensemble_statistics(
                &wframes[0],
                wframes.last().expect("frames"),
                &last,
                cfg.ensemble.n,
                cfg.ensemble.seed,
                cfg.ensemble.bins,
            )?;
            let bump = attach_soliton(&wframes[0], cfg.state.probe, cfg.ensemble.seed)?;
            let history = evolve_soliton(&bump, &wframes);
            out.write("soliton_probe.csv", |w| io::write_soliton_csv(w, std::slice::from_ref(&history)))?;
            let (carrier, carrier_momentum, classical) = probe(&launcher, cfg)?;
            let bohm_deviation = bohm_probe.as_ref().map(|b| {
                b.samples.iter().zip(&history.samples).map(|(b, s)| (b.x - s.x).abs()).fold(0.0, f64::max)
            });
            Ok(SolitonSummary {
                statistics,
                probe_x0: cfg.state.probe,
                carrier,
                carrier_momentum,
                path_length: classical.path_length(),
                bohm_deviation,
                terminated: history.terminated.map(|e| e.to_string()),
            })
        });
        report.soliton = Some(Section::from_result(r));
    }

    finish(report, out, timings)
}

fn finish(mut report: RunReport, mut out: Writer<'_>, timings: BTreeMap<String, f64>) -> Result<RunReport> {
    report.timings = timings;
    out.files.push("report.json".into());
    report.files = out.files.clone();
    out.write("report.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(report)
}

/// Two orbits through the well centre sharing the period `T = 2mL/p1`: the
/// primitive orbit at `p1` and the doubled orbit at `2 p1`. Their principal
/// actions differ by `3 p1 L`, so `p1 = (2πħM + ΔS)/3L` steps the
/// difference through `ΔS_j = 2πħ j/(steps + 1)`.
fn run_recurrence(cfg: &ScenarioConfig, out: &mut Writer<'_>) -> Result<RecurrenceSummary> {
    let (model, psi0) = build_setup(cfg)?;
    let length = cfg.model.length.unwrap_or(1.0);
    let (m, hbar) = (cfg.model.mass, cfg.model.hbar);
    let x0 = cfg.state.center;
    let sigma = cfg.state.sigma.unwrap_or(0.05);
    let r = &cfg.recurrence;
    let mut checks = Vec::new();
    for j in 1..=r.steps {
        let ds = 2.0 * std::f64::consts::PI * hbar * j as f64 / (r.steps + 1) as f64;
        let p1 = (2.0 * std::f64::consts::PI * hbar * r.quantum as f64 + ds) / (3.0 * length);
        let period = 2.0 * m * length / p1;
        let window = (0.99 * period, 1.01 * period);
        let dt = period / 1000.0;
        let slow = find_periodic_orbits(&model, x0, 0.5 * p1 * p1 / m, window, 1, dt)?;
        let fast = find_periodic_orbits(&model, x0, 2.0 * p1 * p1 / m, window, 2, dt)?;
        let (Some(slow), Some(fast)) = (slow.first(), fast.iter().find(|o| o.repetitions == 2)) else {
            return Err(Error::NoCommonPeriod(period, period / 2.0));
        };
        checks.push(recurrence_consistency(&model, psi0.grid, [slow, fast], r.weights, sigma)?);
    }
    out.write("recurrence.csv", |w| {
        writeln!(w, "delta_action,period,reference,predicted,measured,relative_error")?;
        for c in &checks {
            writeln!(w, "{},{},{},{},{},{}", c.delta_action, c.period, c.reference, c.predicted, c.measured, c.relative_error)?;
        }
        Ok(())
    })?;
    let max_relative_error = checks.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    Ok(RecurrenceSummary { checks, max_relative_error })
}
