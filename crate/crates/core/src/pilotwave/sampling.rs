//! Sampling from `|ψ|²` and binned distribution distances. The density is
//! taken piecewise linear between grid points (zero at Dirichlet walls).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrajectoryEnsemble;
use crate::error::{ensure, Error, Result};
use crate::exactqm::Wavefunction;
use crate::grid::{Boundary, Grid};

/// Node densities `(x_j, ρ_j)` closing the domain on the right.
fn density_nodes(psi: &Wavefunction) -> (Vec<f64>, Vec<f64>) {
    let grid = psi.grid;
    let mut xs = grid.points();
    let mut rho = psi.density();
    xs.push(grid.x_max);
    rho.push(match grid.boundary {
        Boundary::Periodic => rho[0],
        Boundary::Dirichlet => 0.0,
    });
    (xs, rho)
}

/// Cumulative mass at every node.
fn cumulative(xs: &[f64], rho: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; xs.len()];
    for j in 1..xs.len() {
        c[j] = c[j - 1] + 0.5 * (rho[j - 1] + rho[j]) * (xs[j] - xs[j - 1]);
    }
    c
}

/// Mass of the piecewise-linear density in `[x_j, x]`, `x` inside cell `j`.
fn partial_mass(xs: &[f64], rho: &[f64], j: usize, x: f64) -> f64 {
    let h = xs[j + 1] - xs[j];
    let u = (x - xs[j]) / h;
    h * (rho[j] * u + 0.5 * (rho[j + 1] - rho[j]) * u * u)
}

/// `n` i.i.d. draws from `|ψ0|²` by inverse CDF; deterministic in `seed`.
pub fn sample_initial(psi0: &Wavefunction, n: usize, seed: u64) -> Result<Vec<f64>> {
    ensure(n >= 1, "n", || "need at least one sample".into())?;
    let (xs, rho) = density_nodes(psi0);
    let cdf = cumulative(&xs, &rho);
    let total = *cdf.last().unwrap();
    if total <= 0.0 {
        return Err(Error::EmptyState);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let j = (cdf.partition_point(|&c| c <= target).max(1) - 1).min(xs.len() - 2);
        let need = target - cdf[j];
        let h = xs[j + 1] - xs[j];
        let (a, b) = (rho[j], rho[j + 1]);
        // Solve h (a u + (b - a) u²/2) = need for u in [0, 1].
        let slope = b - a;
        let u = if slope.abs() < 1e-14 * a.abs().max(1e-300) {
            if a > 0.0 { need / (h * a) } else { 0.5 }
        } else {
            let disc = (a * a + 2.0 * slope * need / h).max(0.0);
            2.0 * need / h / (a + disc.sqrt())
        };
        let mut x = xs[j] + u.clamp(0.0, 1.0) * h;
        // Trajectories may not start on a wall.
        if psi0.grid.boundary == Boundary::Dirichlet {
            let inset = 1e-12 * psi0.grid.length();
            x = x.clamp(psi0.grid.x_min + inset, psi0.grid.x_max - inset);
        } else if x >= psi0.grid.x_max {
            x = psi0.grid.x_min;
        }
        out.push(x);
    }
    Ok(out)
}

/// Probability of each of `bins` equal bins spanning the grid domain.
pub fn binned_reference(psi: &Wavefunction, bins: usize) -> Result<Vec<f64>> {
    ensure(bins >= 1, "bins", || "need at least one bin".into())?;
    let (xs, rho) = density_nodes(psi);
    let cdf = cumulative(&xs, &rho);
    let total = *cdf.last().unwrap();
    if total <= 0.0 {
        return Err(Error::EmptyState);
    }
    let grid = psi.grid;
    let width = grid.length() / bins as f64;
    let mass_below = |x: f64| -> f64 {
        if x <= xs[0] {
            return 0.0;
        }
        if x >= grid.x_max {
            return total;
        }
        let j = ((x - grid.x_min) / grid.dx()).floor().clamp(0.0, (xs.len() - 2) as f64) as usize;
        cdf[j] + partial_mass(&xs, &rho, j, x)
    };
    Ok((0..bins)
        .map(|b| {
            let lo = grid.x_min + b as f64 * width;
            (mass_below(lo + width) - mass_below(lo)) / total
        })
        .collect())
}

/// Normalized (weighted) histogram of `positions` over `bins` equal bins of
/// the grid domain; points outside the domain only count towards the total.
pub fn histogram(positions: &[f64], weights: Option<&[f64]>, grid: &Grid, bins: usize) -> Vec<f64> {
    let width = grid.length() / bins as f64;
    let mut hist = vec![0.0; bins];
    let mut total = 0.0;
    for (i, &x) in positions.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        total += w;
        let b = ((x - grid.x_min) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            hist[b as usize] += w;
        }
    }
    if total > 0.0 {
        hist.iter_mut().for_each(|h| *h /= total);
    }
    hist
}

/// Total-variation distance between a (weighted) empirical histogram of
/// `positions` and the binned `|ψ|²`. Unit weights when `weights` is `None`.
pub fn tv_distance(positions: &[f64], weights: Option<&[f64]>, psi: &Wavefunction, bins: usize) -> Result<f64> {
    let reference = binned_reference(psi, bins)?;
    if let Some(w) = weights {
        ensure(w.len() == positions.len(), "weights", || "one weight per position".into())?;
    }
    let hist = histogram(positions, weights, &psi.grid, bins);
    if hist.iter().all(|h| *h == 0.0) {
        return Ok(1.0);
    }
    Ok(0.5 * hist.iter().zip(&reference).map(|(h, r)| (h - r).abs()).sum::<f64>())
}

/// TV distance between the ensemble at `frame.time` and `|ψ(frame.time)|²`.
pub fn equivariance_distance(ensemble: &TrajectoryEnsemble, frame: &Wavefunction, bins: usize) -> Result<f64> {
    let first = ensemble.trajectories.first().ok_or(Error::EmptyState)?;
    let k = first
        .samples
        .iter()
        .position(|s| (s.t - frame.time).abs() <= 1e-9 * frame.time.abs().max(1.0))
        .ok_or_else(|| Error::InvalidParameter {
            name: "frame",
            reason: format!("ensemble has no sample at t = {}", frame.time),
        })?;
    tv_distance(&ensemble.positions(k), None, frame, bins)
}
