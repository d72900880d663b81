use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{advance, attach_with_rng, WField};
use crate::error::{ensure, Error, Result};
use crate::exactqm::Wavefunction;
use crate::pilotwave::{binned_reference, histogram, sample_initial, tv_distance};

/// Detection statistics of a soliton ensemble.
///
/// Two conventions for a bump whose peak has dropped: `vanish` weights each
/// detection by `(a(t)/a(0))²`, so a bump at a node of `w` is never seen;
/// `defer` counts every bump once wherever its carrier put it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonStatistics {
    pub time: f64,
    pub n: usize,
    pub seed: u64,
    pub bins: usize,
    pub tv_vanish: f64,
    pub tv_defer: f64,
    pub histogram_vanish: Vec<f64>,
    pub histogram_defer: Vec<f64>,
    pub reference: Vec<f64>,
    /// Attachments per launch component.
    pub attachments: Vec<usize>,
    pub detected: usize,
    /// Failed solitons by error kind.
    pub errors: BTreeMap<String, usize>,
}

fn error_kind(e: &Error) -> String {
    let text = format!("{e:?}");
    text.split([' ', '{', '(']).next().unwrap_or_default().to_string()
}

/// Attaches `n` bumps at `|w(·, 0)|²`-distributed points of `initial`, moves
/// each to `detection.time()`, and compares the detections with the binned
/// `|exact|²`. Soliton `i` draws its carrier from stream `i` of the seed.
pub fn soliton_ensemble_statistics(
    initial: &WField,
    detection: &WField,
    exact: &Wavefunction,
    n: usize,
    seed: u64,
    bins: usize,
) -> Result<SolitonStatistics> {
    ensure(n >= 1000, "n", || format!("need at least 1000 solitons, got {n}"))?;
    initial.grid().check_same(&exact.grid)?;
    let starts = sample_initial(&initial.total, n, seed)?;
    let outcomes: Vec<Result<(usize, f64, f64)>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, &x0)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let bump = attach_with_rng(initial, x0, &mut rng)?;
            let moved = advance(&bump, detection)?;
            let ratio = if bump.initial_peak > 0.0 { moved.peak / bump.initial_peak } else { 0.0 };
            Ok((bump.branch, moved.center, ratio))
        })
        .collect();

    let mut attachments = vec![0; initial.launcher().component_count()];
    let mut errors = BTreeMap::new();
    let (mut xs, mut weights) = (Vec::new(), Vec::new());
    for o in outcomes {
        match o {
            Ok((branch, x, ratio)) => {
                attachments[branch] += 1;
                xs.push(x);
                weights.push(ratio * ratio);
            }
            Err(e) => *errors.entry(error_kind(&e)).or_insert(0) += 1,
        }
    }
    let grid = exact.grid;
    Ok(SolitonStatistics {
        time: detection.time(),
        n,
        seed,
        bins,
        tv_vanish: tv_distance(&xs, Some(&weights), exact, bins)?,
        tv_defer: tv_distance(&xs, None, exact, bins)?,
        histogram_vanish: histogram(&xs, Some(&weights), &grid, bins),
        histogram_defer: histogram(&xs, None, &grid, bins),
        reference: binned_reference(exact, bins)?,
        attachments,
        detected: xs.len(),
        errors,
    })
}
