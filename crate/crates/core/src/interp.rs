//! Four-point cubic (Lagrange) interpolation on uniform grids.

use std::ops::{Add, Mul, Neg};

use crate::grid::Grid;

pub(crate) fn cubic<T>(grid: &Grid, values: &[T], x: f64) -> T
where
    T: Copy + Neg<Output = T> + Add<Output = T> + Mul<f64, Output = T>,
{
    cubic_with_parity(grid, values, x, true)
}

/// Cubic interpolation of a field that is even about Dirichlet walls
/// (e.g. the derivative of a wavefunction).
pub(crate) fn cubic_even<T>(grid: &Grid, values: &[T], x: f64) -> T
where
    T: Copy + Neg<Output = T> + Add<Output = T> + Mul<f64, Output = T>,
{
    cubic_with_parity(grid, values, x, false)
}

fn cubic_with_parity<T>(grid: &Grid, values: &[T], x: f64, odd: bool) -> T
where
    T: Copy + Neg<Output = T> + Add<Output = T> + Mul<f64, Output = T>,
{
    let (i, s) = grid.locate(x);
    // Nodes at offsets -1, 0, 1, 2 relative to cell start.
    let w_m1 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w_0 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w_1 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w_2 = (s + 1.0) * s * (s - 1.0) / 6.0;
    let at = |k: isize| grid.extended_with_parity(values, k, odd);
    at(i - 1) * w_m1 + at(i) * w_0 + at(i + 1) * w_1 + at(i + 2) * w_2
}
