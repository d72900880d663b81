//! Stationary-phase branch fields `ψ^k`.
//!
//! Each launch component (a state with a smooth phase on its support) sends
//! one classical path from every point `x0` of its support with momentum
//! `p0 = S0'(x0)`. At time `t` the endpoints form sheets; every sheet is a
//! branch, labelled by its reflection count and the number of conjugate
//! points of the launching manifold. A branch contributes
//!
//! `A0(x0) |∂x/∂x0|^(-1/2) exp(i(S0(x0) + R)/ħ - iμπ/2 - iπ·reflections)`
//!
//! at the point `x` its path reaches.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::path_phase;
use crate::classical::{flow_endpoint, BvpConfig, FlowEnd, PhasePoint};
use crate::error::{ensure, Error, Result};
use crate::exactqm::Wavefunction;
use crate::grid::{Boundary, Grid};
use crate::potentials::PotentialModel;
use crate::spectral::FftPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchLabel {
    pub component: usize,
    pub reflections: u32,
    pub maslov: u32,
    /// Distinguishes separate sheets that share the other labels.
    pub sheet: usize,
}

/// One branch's value at a point, with the path that carries it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub branch: usize,
    pub component: usize,
    pub x: f64,
    pub x0: f64,
    pub p0: f64,
    /// Momentum on arrival.
    pub p: f64,
    /// Principal action `R` of the path.
    pub action: f64,
    /// `∂x/∂x0` along the launching manifold.
    pub stretch: f64,
    pub maslov: u32,
    pub reflections: u32,
    /// `ψ0(x0) |∂x/∂x0|^(-1/2)`.
    pub weight: Complex64,
    /// `weight · exp(iR/ħ + iφ)`.
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub index: usize,
    pub contribution: Contribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub label: BranchLabel,
    /// Grid points the branch reaches, in grid order.
    pub points: Vec<BranchPoint>,
}

impl Branch {
    /// Branch field on the grid, zero where the branch is absent.
    pub fn field(&self, n: usize) -> Vec<Complex64> {
        let mut f = vec![Complex64::new(0.0, 0.0); n];
        for p in &self.points {
            f[p.index] = p.contribution.value;
        }
        f
    }
}

/// Splits a state into its positive- and negative-momentum halves (zero
/// and Nyquist modes shared equally). On Dirichlet grids the odd extension
/// is split, so a standing wave `sin(kx)` yields `±e^{±ikx}/2i`.
pub fn counter_propagating_split(psi: &Wavefunction) -> Result<[Wavefunction; 2]> {
    let n = psi.grid.n;
    let (mut spectrum, len) = match psi.grid.boundary {
        Boundary::Periodic => (psi.values.clone(), n),
        Boundary::Dirichlet => {
            let mut ext = vec![Complex64::new(0.0, 0.0); 2 * n];
            for j in 1..n {
                ext[j] = psi.values[j];
                ext[2 * n - j] = -psi.values[j];
            }
            (ext, 2 * n)
        }
    };
    let fft = FftPair::new(len);
    fft.forward(&mut spectrum);
    let half = len / 2;
    let mut parts = [spectrum.clone(), spectrum];
    for m in 0..len {
        let (w_pos, w_neg) = if m == 0 || m == half {
            (0.5, 0.5)
        } else if m < half {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        parts[0][m] *= w_pos;
        parts[1][m] *= w_neg;
    }
    let [mut pos, mut neg] = parts;
    fft.inverse(&mut pos);
    fft.inverse(&mut neg);
    pos.truncate(n);
    neg.truncate(n);
    Ok([Wavefunction { values: pos, ..psi.clone() }, Wavefunction { values: neg, ..psi.clone() }])
}

/// Initial data of one component at a launch point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Local {
    amp: f64,
    s0: f64,
    p0: f64,
    dp0: f64,
}

#[derive(Debug, Clone)]
struct Component {
    grid: Grid,
    amp: Vec<f64>,
    s0: Vec<f64>,
    p0: Vec<f64>,
    dp0: Vec<f64>,
    runs: Vec<Run>,
}

/// A contiguous stretch of support: grid indices `lo..=hi` and the launch
/// interval `[a, b]` (pulled just inside the walls on Dirichlet grids).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Run {
    lo: usize,
    hi: usize,
    a: f64,
    b: f64,
}

impl Run {
    fn launch_points(&self, grid: &Grid) -> Vec<f64> {
        let mut xs: Vec<f64> = (self.lo..=self.hi).map(|j| grid.x(j)).collect();
        xs[0] = self.a;
        if self.b > grid.x(self.hi) {
            xs.push(self.b);
        }
        xs
    }
}

fn lagrange4(values: &[f64], start: usize, s: f64) -> f64 {
    let u = s - start as f64;
    let w = [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ];
    (0..4).map(|k| w[k] * values[start + k]).sum()
}

impl Component {
    fn new(psi: &Wavefunction, cutoff: f64) -> Self {
        let grid = psi.grid;
        let n = grid.n;
        let dx = grid.dx();
        let hbar = psi.hbar;
        let amp: Vec<f64> = psi.values.iter().map(|v| v.norm()).collect();
        let mut s0 = vec![0.0; n];
        let mut p0 = vec![0.0; n];
        let mut dp0 = vec![0.0; n];
        let mut runs = Vec::new();
        let mut j = 0;
        while j < n {
            if amp[j] <= cutoff {
                j += 1;
                continue;
            }
            let lo = j;
            while j < n && amp[j] > cutoff {
                j += 1;
            }
            let hi = j - 1;
            // Derivative stencils need a few points.
            if hi - lo < 4 {
                continue;
            }
            let mut prev = psi.values[lo].arg();
            let mut acc = prev;
            s0[lo] = hbar * acc;
            for i in lo + 1..=hi {
                let a = psi.values[i].arg();
                let mut d = a - prev;
                d -= (d / std::f64::consts::TAU).round() * std::f64::consts::TAU;
                acc += d;
                prev = a;
                s0[i] = hbar * acc;
            }
            for i in lo..=hi {
                let f = |k: isize| s0[(i as isize + k) as usize];
                let (d1, d2) = if i >= lo + 2 && i + 2 <= hi {
                    (
                        (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * dx),
                        (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) / (12.0 * dx * dx),
                    )
                } else if i == lo {
                    ((-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * dx), (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) / (dx * dx))
                } else if i == hi {
                    ((3.0 * f(0) - 4.0 * f(-1) + f(-2)) / (2.0 * dx), (2.0 * f(0) - 5.0 * f(-1) + 4.0 * f(-2) - f(-3)) / (dx * dx))
                } else {
                    ((f(1) - f(-1)) / (2.0 * dx), (f(1) - 2.0 * f(0) + f(-1)) / (dx * dx))
                };
                p0[i] = d1;
                dp0[i] = d2;
            }
            let mut run = Run { lo, hi, a: grid.x(lo), b: grid.x(hi) };
            if grid.boundary == Boundary::Dirichlet {
                let inset = 1e-9 * grid.length();
                run.a = run.a.max(grid.x_min + inset);
                if hi == n - 1 {
                    run.b = grid.x_max - inset;
                }
            }
            runs.push(run);
        }
        Self { grid, amp, s0, p0, dp0, runs }
    }

    fn local(&self, run: Run, x0: f64) -> Local {
        let s = (x0 - self.grid.x_min) / self.grid.dx();
        let start = (s.floor() as isize - 1).clamp(run.lo as isize, run.hi as isize - 3) as usize;
        Local {
            amp: lagrange4(&self.amp, start, s).max(0.0),
            s0: lagrange4(&self.s0, start, s),
            p0: lagrange4(&self.p0, start, s),
            dp0: lagrange4(&self.dp0, start, s),
        }
    }

    fn run_containing(&self, x0: f64) -> Option<Run> {
        self.runs.iter().copied().find(|r| x0 >= r.a && x0 <= r.b)
    }
}

/// Launch data shared by every time slice.
#[derive(Debug)]
pub struct BranchLauncher {
    model: PotentialModel,
    cfg: BvpConfig,
    grid: Grid,
    components: Vec<Component>,
    time0: f64,
}

#[derive(Debug, Clone, Copy)]
struct Launch {
    x0: f64,
    local: Local,
    flow: FlowEnd,
}

impl Launch {
    fn label(&self) -> (u32, u32) {
        (self.flow.reflections, self.flow.seed_zeros)
    }
}

impl BranchLauncher {
    pub fn new(components: &[Wavefunction], model: &PotentialModel, cfg: &BvpConfig) -> Result<Arc<Self>> {
        cfg.validate()?;
        let first = components.first().ok_or(Error::EmptyState)?;
        for c in components {
            first.grid.check_same(&c.grid)?;
        }
        let peak = components.iter().map(|c| c.max_amplitude()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::EmptyState);
        }
        let cutoff = cfg.support_cutoff * peak;
        Ok(Arc::new(Self {
            model: model.clone(),
            cfg: *cfg,
            grid: first.grid,
            components: components.iter().map(|c| Component::new(c, cutoff)).collect(),
            time0: first.time,
        }))
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &BvpConfig {
        &self.cfg
    }

    /// Time of the launch components.
    pub fn start_time(&self) -> f64 {
        self.time0
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Initial value of each component at `x0` (`None` off its support).
    pub fn initial_values(&self, x0: f64) -> Vec<Option<Complex64>> {
        let hbar = self.model.hbar;
        self.components
            .iter()
            .map(|c| {
                c.run_containing(x0).map(|run| {
                    let l = c.local(run, x0);
                    Complex64::from_polar(l.amp, l.s0 / hbar)
                })
            })
            .collect()
    }

    /// Launch momentum `S0'(x0)` of a component.
    pub fn launch_momentum(&self, component: usize, x0: f64) -> Option<f64> {
        let c = self.components.get(component)?;
        c.run_containing(x0).map(|run| c.local(run, x0).p0)
    }

    fn launch(&self, component: usize, run: Run, x0: f64, duration: f64) -> Result<Launch> {
        let local = self.components[component].local(run, x0);
        let start = PhasePoint::new(x0, local.p0);
        let flow = if duration == 0.0 {
            FlowEnd {
                end: start,
                action: 0.0,
                monodromy: [[1.0, 0.0], [0.0, 1.0]],
                reflections: 0,
                jacobi_zeros: 0,
                seed_zeros: 0,
            }
        } else {
            flow_endpoint(&self.model, start, duration, [1.0, local.dp0], self.cfg.dt)?
        };
        Ok(Launch { x0, local, flow })
    }

    /// Branch sheets after `duration`.
    pub fn slice(self: &Arc<Self>, duration: f64) -> Result<BranchSlice> {
        ensure(duration >= 0.0, "duration", || format!("must be non-negative, got {duration}"))?;
        let mut sheets = Vec::new();
        for (ci, comp) in self.components.iter().enumerate() {
            for &run in &comp.runs {
                let launches = run
                    .launch_points(&self.grid)
                    .into_par_iter()
                    .map(|x0| self.launch(ci, run, x0, duration))
                    .collect::<Result<Vec<_>>>()?;
                self.split_sheets(ci, run, duration, launches, &mut sheets)?;
            }
        }
        let mut counts = std::collections::HashMap::new();
        for s in &mut sheets {
            let key = (s.label.component, s.label.reflections, s.label.maslov);
            let c = counts.entry(key).or_insert(0usize);
            s.label.sheet = *c;
            *c += 1;
        }
        Ok(BranchSlice { launcher: Arc::clone(self), duration, sheets })
    }

    fn split_sheets(&self, ci: usize, run: Run, duration: f64, launches: Vec<Launch>, out: &mut Vec<Sheet>) -> Result<()> {
        let new_sheet = |l: &Launch| Sheet {
            label: BranchLabel { component: ci, reflections: l.label().0, maslov: l.label().1, sheet: 0 },
            run,
            samples: vec![*l],
        };
        let mut current = new_sheet(&launches[0]);
        for pair in launches.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.label() == b.label() {
                current.samples.push(b);
                continue;
            }
            // Locate every label change between the two launch points.
            let mut left = a;
            while left.label() != b.label() {
                let (mut lo, mut hi) = (left, b);
                for _ in 0..60 {
                    let mid = self.launch(ci, run, 0.5 * (lo.x0 + hi.x0), duration)?;
                    if mid.label() == left.label() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if lo.x0 != left.x0 {
                    current.samples.push(lo);
                }
                out.push(std::mem::replace(&mut current, new_sheet(&hi)));
                left = hi;
            }
            if left.x0 != b.x0 {
                current.samples.push(b);
            }
        }
        out.push(current);
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Sheet {
    label: BranchLabel,
    run: Run,
    /// Launches in increasing `x0`; endpoints are monotone along the sheet.
    samples: Vec<Launch>,
}

/// All branches at one time, evaluable at any point.
#[derive(Debug, Clone)]
pub struct BranchSlice {
    launcher: Arc<BranchLauncher>,
    duration: f64,
    sheets: Vec<Sheet>,
}

impl BranchSlice {
    pub fn time(&self) -> f64 {
        self.launcher.time0 + self.duration
    }

    pub fn labels(&self) -> Vec<BranchLabel> {
        self.sheets.iter().map(|s| s.label).collect()
    }

    pub fn launcher(&self) -> &Arc<BranchLauncher> {
        &self.launcher
    }

    fn contribution(&self, k: usize, launch: &Launch, x: f64) -> Option<Contribution> {
        let stretch = launch.flow.stretch(launch.local.dp0);
        if stretch.abs() < self.launcher.cfg.caustic_eps {
            return None;
        }
        let hbar = self.launcher.model.hbar;
        let weight = Complex64::from_polar(launch.local.amp * stretch.abs().powf(-0.5), launch.local.s0 / hbar);
        let phase = launch.flow.action / hbar + path_phase(launch.flow.seed_zeros, launch.flow.reflections);
        Some(Contribution {
            branch: k,
            component: self.sheets[k].label.component,
            x,
            x0: launch.x0,
            p0: launch.local.p0,
            p: launch.flow.end.p,
            action: launch.flow.action,
            stretch,
            maslov: launch.flow.seed_zeros,
            reflections: launch.flow.reflections,
            weight,
            value: weight * Complex64::from_polar(1.0, phase),
        })
    }

    /// Branch values at `x`. The flag is set when a path reaching `x` sits on
    /// a caustic and was dropped.
    pub fn contributions_at(&self, x: f64) -> Result<(Vec<Contribution>, bool)> {
        let mut out = Vec::new();
        let mut caustic = false;
        for (k, sheet) in self.sheets.iter().enumerate() {
            let s = &sheet.samples;
            let xf = |i: usize| s[i].flow.end.x;
            let increasing = xf(s.len() - 1) >= xf(0);
            let key = |i: usize| if increasing { xf(i) } else { -xf(i) };
            let target = if increasing { x } else { -x };
            if target < key(0) || target > key(s.len() - 1) {
                continue;
            }
            let i = (0..s.len()).collect::<Vec<_>>().partition_point(|&i| key(i) < target);
            let launch = if key(i) == target {
                s[i]
            } else {
                self.solve(sheet, s[i - 1], s[i], x)?
            };
            match self.contribution(k, &launch, x) {
                Some(c) => out.push(c),
                None => caustic = true,
            }
        }
        Ok((out, caustic))
    }

    /// Launch point in `[a.x0, b.x0]` whose path ends at `x`.
    fn solve(&self, sheet: &Sheet, a: Launch, b: Launch, x: f64) -> Result<Launch> {
        let ci = sheet.label.component;
        let tol = 1e-13 * x.abs().max(1.0);
        let (mut lo, mut hi) = (a, b);
        let (mut flo, mut fhi) = (a.flow.end.x - x, b.flow.end.x - x);
        let mut side = 0i8;
        for _ in 0..200 {
            // Illinois-modified regula falsi.
            let mut x0 = (lo.x0 * fhi - hi.x0 * flo) / (fhi - flo);
            if !(x0 > lo.x0.min(hi.x0) && x0 < lo.x0.max(hi.x0)) {
                x0 = 0.5 * (lo.x0 + hi.x0);
            }
            let mid = self.launcher.launch(ci, sheet.run, x0, self.duration)?;
            let fm = mid.flow.end.x - x;
            if fm.abs() <= tol || (hi.x0 - lo.x0).abs() <= 1e-15 * x0.abs().max(1.0) {
                return Ok(mid);
            }
            if fm * flo > 0.0 {
                lo = mid;
                flo = fm;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = mid;
                fhi = fm;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        Ok(if flo.abs() < fhi.abs() { lo } else { hi })
    }

    /// Assembles every branch on the launch grid.
    pub fn assemble(&self) -> Result<SemiclassicalState> {
        let grid = self.launcher.grid;
        let skip_wall = grid.boundary == Boundary::Dirichlet;
        let per_point = (0..grid.n)
            .into_par_iter()
            .map(|i| if skip_wall && i == 0 { Ok((Vec::new(), false)) } else { self.contributions_at(grid.x(i)) })
            .collect::<Result<Vec<_>>>()?;
        let mut branches: Vec<Branch> = self.labels().into_iter().map(|label| Branch { label, points: Vec::new() }).collect();
        let mut caustic_mask = Vec::with_capacity(grid.n);
        let mut values = vec![Complex64::new(0.0, 0.0); grid.n];
        for (i, (contribs, caustic)) in per_point.into_iter().enumerate() {
            caustic_mask.push(caustic);
            for c in contribs {
                branches[c.branch].points.push(BranchPoint { index: i, contribution: c });
            }
        }
        for b in &branches {
            for p in &b.points {
                values[p.index] += p.contribution.value;
            }
        }
        let masked = caustic_mask.iter().filter(|m| **m).count();
        if masked as f64 > super::MAX_CAUSTIC_FRACTION * grid.n as f64 {
            return Err(Error::ExcessiveCaustics { masked, total: grid.n });
        }
        let total = Wavefunction {
            grid,
            values,
            time: self.time(),
            mass: self.launcher.model.mass,
            hbar: self.launcher.model.hbar,
        };
        Ok(SemiclassicalState { branches, total, caustic_mask, slice: self.clone() })
    }
}

/// Branch fields on the grid at one time and their sum.
#[derive(Debug, Clone)]
pub struct SemiclassicalState {
    pub branches: Vec<Branch>,
    pub total: Wavefunction,
    pub caustic_mask: Vec<bool>,
    slice: BranchSlice,
}

impl SemiclassicalState {
    pub fn grid(&self) -> &Grid {
        &self.total.grid
    }

    pub fn time(&self) -> f64 {
        self.total.time
    }

    pub fn slice(&self) -> &BranchSlice {
        &self.slice
    }

    pub fn contributions_at(&self, x: f64) -> Result<(Vec<Contribution>, bool)> {
        self.slice.contributions_at(x)
    }
}

/// Branch decomposition of `psi0` treated as a single launch component.
pub fn branch_decompose(psi0: &Wavefunction, model: &PotentialModel, duration: f64, cfg: &BvpConfig) -> Result<SemiclassicalState> {
    branch_decompose_components(std::slice::from_ref(psi0), model, duration, cfg)
}

/// Branch decomposition of `Σ components`, each launched along its own phase
/// gradient (e.g. the two halves from [`counter_propagating_split`]).
pub fn branch_decompose_components(
    components: &[Wavefunction],
    model: &PotentialModel,
    duration: f64,
    cfg: &BvpConfig,
) -> Result<SemiclassicalState> {
    BranchLauncher::new(components, model, cfg)?.slice(duration)?.assemble()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_of_standing_wave() {
        let model = PotentialModel::infinite_well(1.0, 1.0, 1.0).unwrap();
        let grid = Grid::dirichlet(0.0, 1.0, 128).unwrap();
        let psi = Wavefunction::well_eigenstate(grid, &model, 5).unwrap();
        let [pos, neg] = counter_propagating_split(&psi).unwrap();
        let k = 5.0 * std::f64::consts::PI;
        let amp = 2f64.sqrt();
        for j in 1..grid.n {
            let x = grid.x(j);
            let expect = Complex64::from_polar(amp / 2.0, k * x - std::f64::consts::FRAC_PI_2);
            assert!((pos.values[j] - expect).norm() < 1e-12);
            assert!((pos.values[j] + neg.values[j] - psi.values[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn free_gaussian_has_one_branch() {
        let model = PotentialModel::free(1.0, 1.0).unwrap();
        let grid = Grid::periodic(-20.0, 20.0, 1024).unwrap();
        let psi = Wavefunction::gaussian(grid, &model, -2.0, 1.0, 2.0).unwrap();
        let state = branch_decompose(&psi, &model, 1.0, &BvpConfig::new(-10.0, 10.0, 11)).unwrap();
        assert_eq!(state.branches.len(), 1);
        assert_eq!(state.branches[0].label, BranchLabel { component: 0, reflections: 0, maslov: 0, sheet: 0 });
        // A linear initial phase transports |ψ0|² rigidly.
        let norm = (2.0 * std::f64::consts::PI).powf(-0.25);
        for p in &state.branches[0].points {
            let c = p.contribution;
            assert!((c.x - c.x0 - 2.0).abs() < 1e-10);
            let expected = norm * (-(c.x0 + 2.0).powi(2) / 4.0).exp();
            assert!((c.weight.norm() - expected).abs() < 1e-5 * norm);
        }
        assert_eq!(state.branches[0].field(grid.n), state.total.values);
    }

    #[test]
    fn eigenstate_components_rebuild_the_standing_wave() {
        let model = PotentialModel::infinite_well(1.0, 1.0, 0.02).unwrap();
        let grid = Grid::dirichlet(0.0, 1.0, 512).unwrap();
        let psi = Wavefunction::well_eigenstate(grid, &model, 5).unwrap();
        let parts = counter_propagating_split(&psi).unwrap();
        let e = model.hbar * model.hbar * (5.0 * std::f64::consts::PI).powi(2) / 2.0;
        let t = 0.37;
        let state = branch_decompose_components(&parts, &model, t, &BvpConfig::new(-20.0, 20.0, 11)).unwrap();
        let phase = Complex64::from_polar(1.0, -e * t / model.hbar);
        let exact = psi.scaled(phase);
        let err = state.total.distance(&exact).unwrap();
        assert!(err < 1e-6, "{err}");
    }
}
