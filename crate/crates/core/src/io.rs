//! CSV dumps and the binary frame cache.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so equal
//! values always produce identical bytes.
//!
//! Frame cache layout, little-endian, repeated per frame:
//! `N: u64, x_min: f64, x_max: f64, t: f64`, then `N` pairs `(re, im)` of
//! `f64`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::classical::{ClassicalTrajectory, ZeroCounter};
use crate::doublesolution::SolitonHistory;
use crate::error::{Error, Result};
use crate::exactqm::{current_density, polar_decompose, quantum_potential, Wavefunction};
use crate::grid::{Boundary, Grid};
use crate::pilotwave::TrajectoryEnsemble;
use crate::potentials::PotentialModel;
use crate::semiclassical::SemiclassicalState;

/// Columns `t,x,p,S,J,mu`; `mu` counts conjugate points up to each sample.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &ClassicalTrajectory) -> Result<()> {
    writeln!(w, "t,x,p,S,J,mu")?;
    let mut zeros = ZeroCounter::default();
    for (k, s) in traj.samples.iter().enumerate() {
        if k > 0 {
            zeros.push(s.unfolded_monodromy()[0][1]);
        }
        writeln!(w, "{},{},{},{},{},{}", s.t, s.x, s.p, s.action, s.jacobi(), zeros.finish())?;
    }
    Ok(())
}

/// Columns `x,re,im,R,S,j,Q`; `Q` is empty at nodes.
pub fn write_frame_csv<W: Write>(mut w: W, psi: &Wavefunction) -> Result<()> {
    let polar = polar_decompose(psi)?;
    let j = current_density(psi);
    let q = quantum_potential(psi)?;
    writeln!(w, "x,re,im,R,S,j,Q")?;
    for (i, x) in psi.grid.points().into_iter().enumerate() {
        let v = psi.values[i];
        let q = q[i].map(|q| q.to_string()).unwrap_or_default();
        writeln!(w, "{x},{},{},{},{},{},{q}", v.re, v.im, polar.r[i], polar.s[i], j[i])?;
    }
    Ok(())
}

/// Columns `k,x,x0,p0,S,mu,reflections,re_weight,im_weight`.
pub fn write_branch_csv<W: Write>(mut w: W, state: &SemiclassicalState) -> Result<()> {
    writeln!(w, "k,x,x0,p0,S,mu,reflections,re_weight,im_weight")?;
    for (k, b) in state.branches.iter().enumerate() {
        for p in &b.points {
            let c = &p.contribution;
            writeln!(
                w,
                "{k},{},{},{},{},{},{},{},{}",
                c.x, c.x0, c.p0, c.action, c.maslov, c.reflections, c.weight.re, c.weight.im
            )?;
        }
    }
    Ok(())
}

/// Columns `id,t,x,v`.
pub fn write_ensemble_csv<W: Write>(mut w: W, ensemble: &TrajectoryEnsemble) -> Result<()> {
    writeln!(w, "id,t,x,v")?;
    for (id, traj) in ensemble.trajectories.iter().enumerate() {
        for s in &traj.samples {
            writeln!(w, "{id},{},{},{}", s.t, s.x, s.v)?;
        }
    }
    Ok(())
}

/// Columns `id,t,x_b,a,k_b`.
pub fn write_soliton_csv<W: Write>(mut w: W, histories: &[SolitonHistory]) -> Result<()> {
    writeln!(w, "id,t,x_b,a,k_b")?;
    for (id, h) in histories.iter().enumerate() {
        for s in &h.samples {
            writeln!(w, "{id},{},{},{},{}", s.t, s.x, s.a, s.branch)?;
        }
    }
    Ok(())
}

pub fn write_frame_cache<W: Write>(mut w: W, frames: &[Wavefunction]) -> Result<()> {
    for f in frames {
        w.write_all(&(f.grid.n as u64).to_le_bytes())?;
        for v in [f.grid.x_min, f.grid.x_max, f.time] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &f.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_word<R: Read>(r: &mut R) -> Result<Option<[u8; 8]>> {
    let mut buf = [0u8; 8];
    let mut filled = 0;
    while filled < 8 {
        let got = r.read(&mut buf[filled..])?;
        if got == 0 {
            return if filled == 0 { Ok(None) } else { Err(Error::Io("truncated frame cache".into())) };
        }
        filled += got;
    }
    Ok(Some(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    read_word(r)?.map(f64::from_le_bytes).ok_or_else(|| Error::Io("truncated frame cache".into()))
}

/// Reads every frame of a cache; the boundary and physical constants are
/// not stored and come from the caller.
pub fn read_frame_cache<R: Read>(mut r: R, boundary: Boundary, model: &PotentialModel) -> Result<Vec<Wavefunction>> {
    let mut frames = Vec::new();
    while let Some(word) = read_word(&mut r)? {
        let n = u64::from_le_bytes(word) as usize;
        let (x_min, x_max, time) = (read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?);
        let grid = Grid::new(x_min, x_max, n, boundary)?;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(Complex64::new(read_f64(&mut r)?, read_f64(&mut r)?));
        }
        frames.push(Wavefunction { grid, values, time, mass: model.mass, hbar: model.hbar });
    }
    Ok(frames)
}
