//! Hydrodynamic (polar) view of a wavefunction: amplitude, phase, flow,
//! quantum potential, and discrete residuals of the two coupled equations
//! those fields satisfy.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Wavefunction;
use crate::error::{Error, Result};
use crate::potentials::PotentialModel;

/// Default node threshold relative to `max R`.
pub const DEFAULT_NODE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarField {
    pub r: Vec<f64>,
    /// Phase times hbar, unwrapped along the grid.
    pub s: Vec<f64>,
    pub node_mask: Vec<bool>,
    pub hbar: f64,
}

impl PolarField {
    pub fn recompose(&self) -> Vec<Complex64> {
        self.r.iter().zip(&self.s).map(|(r, s)| Complex64::from_polar(*r, s / self.hbar)).collect()
    }
}

fn wrap(phase: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = phase - two_pi * (phase / two_pi).round();
    // `round` sends exactly ±π to ∓π inconsistently; pin to +π.
    if w <= -std::f64::consts::PI {
        w + two_pi
    } else {
        w
    }
}

pub fn polar_decompose(psi: &Wavefunction) -> Result<PolarField> {
    polar_decompose_with(psi, DEFAULT_NODE_EPS)
}

/// `psi = R exp(iS/hbar)` with `S` unwrapped outward from the density
/// maximum. Points where `R < node_eps * max R` are masked; their `S` is
/// linearly interpolated between trusted neighbours.
pub fn polar_decompose_with(psi: &Wavefunction, node_eps: f64) -> Result<PolarField> {
    let r: Vec<f64> = psi.values.iter().map(|v| v.norm()).collect();
    let (imax, rmax) = r.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if rmax == 0.0 {
        return Err(Error::EmptyState);
    }
    let node_mask: Vec<bool> = r.iter().map(|&v| v < node_eps * rmax).collect();
    let n = r.len();
    let mut phase = vec![f64::NAN; n];
    phase[imax] = psi.values[imax].arg();

    let mut last = imax;
    for j in imax + 1..n {
        if !node_mask[j] {
            phase[j] = phase[last] + wrap((psi.values[j] * psi.values[last].conj()).arg());
            last = j;
        }
    }
    last = imax;
    for j in (0..imax).rev() {
        if !node_mask[j] {
            phase[j] = phase[last] + wrap((psi.values[j] * psi.values[last].conj()).arg());
            last = j;
        }
    }
    fill_masked(&mut phase, &node_mask);
    let s = phase.iter().map(|p| p * psi.hbar).collect();
    Ok(PolarField { r, s, node_mask, hbar: psi.hbar })
}

fn fill_masked(values: &mut [f64], mask: &[bool]) {
    let trusted: Vec<usize> = (0..values.len()).filter(|&j| !mask[j]).collect();
    let (first, last) = (trusted[0], *trusted.last().unwrap());
    for j in 0..first {
        values[j] = values[first];
    }
    for j in last + 1..values.len() {
        values[j] = values[last];
    }
    for w in trusted.windows(2) {
        let (a, b) = (w[0], w[1]);
        for j in a + 1..b {
            let s = (j - a) as f64 / (b - a) as f64;
            values[j] = values[a] * (1.0 - s) + values[b] * s;
        }
    }
}

/// Probability current `(hbar/m) Im(psi* dpsi/dx)` with a spectral derivative.
pub fn current_density(psi: &Wavefunction) -> Vec<f64> {
    let (d1, _) = psi.derivatives();
    let c = psi.hbar / psi.mass;
    psi.values.iter().zip(&d1).map(|(v, d)| c * (v.conj() * d).im).collect()
}

/// `Q = -(hbar²/2m) R''/R` with a fourth-order five-point stencil; `None`
/// inside the node mask.
pub fn quantum_potential(psi: &Wavefunction) -> Result<Vec<Option<f64>>> {
    let polar = polar_decompose(psi)?;
    let grid = &psi.grid;
    let h2 = grid.dx() * grid.dx();
    let c = -psi.hbar * psi.hbar / (2.0 * psi.mass);
    Ok((0..grid.n)
        .map(|j| {
            if polar.node_mask[j] {
                return None;
            }
            let i = j as isize;
            let f = |o: isize| grid.extended(&polar.r, i + o);
            let d2 = (-f(-2) + 16.0 * f(-1) - 30.0 * f(0) + 16.0 * f(1) - f(2)) / (12.0 * h2);
            Some(c * d2 / polar.r[j])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// Pointwise residual; `None` where it is not evaluated (node regions).
    pub values: Vec<Option<f64>>,
    /// `sqrt(sum r² dx)` over evaluated points.
    pub l2: f64,
}

impl Residual {
    fn from_values(values: Vec<Option<f64>>, dx: f64) -> Self {
        let l2 = (values.iter().flatten().map(|r| r * r).sum::<f64>() * dx).sqrt();
        Self { values, l2 }
    }
}

fn check_pair(a: &Wavefunction, b: &Wavefunction) -> Result<f64> {
    a.grid.check_same(&b.grid)?;
    let dt = b.time - a.time;
    if dt <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "frames",
            reason: format!("frames must be time-ordered, got {} then {}", a.time, b.time),
        });
    }
    Ok(dt)
}

/// Second-order centered flux `(hbar/m) Im(psi_j* (psi_{j+1} - psi_{j-1}) / 2dx)`.
fn centered_flux(psi: &Wavefunction) -> Vec<f64> {
    let g = &psi.grid;
    let c = psi.hbar / (psi.mass * 2.0 * g.dx());
    (0..g.n as isize)
        .map(|i| {
            let d = g.extended(&psi.values, i + 1) - g.extended(&psi.values, i - 1);
            c * (psi.values[i as usize].conj() * d).im
        })
        .collect()
}

/// Residual of `d(R²)/dt + d/dx(R² dS/dx)/m = 0` between two frames,
/// centered at their midpoint time with second-order stencils in `x` and `t`.
pub fn continuity_residual(a: &Wavefunction, b: &Wavefunction) -> Result<Residual> {
    let dt = check_pair(a, b)?;
    let g = a.grid;
    let div = |psi: &Wavefunction| -> Vec<f64> {
        let j = centered_flux(psi);
        (0..g.n as isize).map(|i| (g.extended(&j, i + 1) - g.extended(&j, i - 1)) / (2.0 * g.dx())).collect()
    };
    let (da, db) = (div(a), div(b));
    let values = (0..g.n)
        .map(|i| Some((b.values[i].norm_sqr() - a.values[i].norm_sqr()) / dt + 0.5 * (da[i] + db[i])))
        .collect();
    Ok(Residual::from_values(values, g.dx()))
}

/// Residual of `dS/dt + (dS/dx)²/2m + V + Q = 0` between two frames,
/// evaluated where neither frame has a node within the stencil.
pub fn qhj_residual(a: &Wavefunction, b: &Wavefunction, model: &PotentialModel) -> Result<Residual> {
    let dt = check_pair(a, b)?;
    let g = a.grid;
    let (pa, pb) = (polar_decompose(a)?, polar_decompose(b)?);
    let masked = |j: isize| -> bool {
        let n = g.n as isize;
        (-1..=1).any(|o| {
            let k = (j + o).rem_euclid(n) as usize;
            pa.node_mask[k] || pb.node_mask[k]
        })
    };
    let hbar = a.hbar;
    let m = a.mass;
    let h = g.dx();
    let spatial = |psi: &Wavefunction, polar: &PolarField, j: isize| -> f64 {
        let vp = g.extended(&psi.values, j + 1);
        let vm = g.extended(&psi.values, j - 1);
        let ds = hbar * (vp * vm.conj()).arg() / (2.0 * h);
        let r = |o: isize| g.extended(&polar.r, j + o);
        let q = -hbar * hbar / (2.0 * m) * (r(1) - 2.0 * r(0) + r(-1)) / (h * h * r(0));
        ds * ds / (2.0 * m) + model.evaluate_unchecked(g.x(j as usize)) + q
    };
    let values = (0..g.n as isize)
        .map(|j| {
            if masked(j) {
                return None;
            }
            let k = j as usize;
            let ds_dt = hbar * (b.values[k] * a.values[k].conj()).arg() / dt;
            Some(ds_dt + 0.5 * (spatial(a, &pa, j) + spatial(b, &pb, j)))
        })
        .collect();
    Ok(Residual::from_values(values, h))
}

/// `|<psi0|psi(t)>|²`.
pub fn autocorrelation(psi0: &Wavefunction, frame: &Wavefunction) -> Result<f64> {
    Ok(psi0.inner(frame)?.norm_sqr())
}
