//! Uniform one-dimensional grids.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Points `x_min + j*dx`, `j = 0..n`, with `x_max` identified with `x_min`.
    Periodic,
    /// Hard walls at `x_min` and `x_max`; the wave vanishes on both. Point
    /// `j = 0` sits on the left wall, the right wall is the implicit point `j = n`.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize, boundary: Boundary) -> Result<Self> {
        ensure(x_max > x_min, "grid", || format!("x_max ({x_max}) must exceed x_min ({x_min})"))?;
        ensure(n >= 16 && n.is_power_of_two(), "grid.n", || {
            format!("must be a power of two >= 16, got {n}")
        })?;
        Ok(Self { x_min, x_max, n, boundary })
    }

    pub fn periodic(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::new(x_min, x_max, n, Boundary::Periodic)
    }

    pub fn dirichlet(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::new(x_min, x_max, n, Boundary::Dirichlet)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Whether `x` is inside the region trajectories may occupy.
    pub fn contains(&self, x: f64) -> bool {
        match self.boundary {
            Boundary::Periodic => x >= self.x_min && x < self.x_max,
            Boundary::Dirichlet => x > self.x_min && x < self.x_max,
        }
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Index and fractional offset of `x` within its cell.
    pub(crate) fn locate(&self, x: f64) -> (isize, f64) {
        let s = (x - self.x_min) / self.dx();
        let i = s.floor();
        (i as isize, s - i)
    }

    /// Value at integer index `i`, extending past the ends according to the
    /// boundary: periodic wrap, or odd reflection about the walls.
    pub(crate) fn extended<T>(&self, values: &[T], i: isize) -> T
    where
        T: Copy + std::ops::Neg<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        self.extended_with_parity(values, i, true)
    }

    /// As [`Grid::extended`], with an even reflection on Dirichlet grids when
    /// `odd` is false (the parity of a derivative of a wall-vanishing field).
    pub(crate) fn extended_with_parity<T>(&self, values: &[T], i: isize, odd: bool) -> T
    where
        T: Copy + std::ops::Neg<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let n = self.n as isize;
        match self.boundary {
            Boundary::Periodic => values[i.rem_euclid(n) as usize],
            Boundary::Dirichlet => {
                // Period-2n extension: f(-i) = ±f(i), f(n + i) = ±f(n - i).
                let sign = if odd { -1.0 } else { 1.0 };
                let m = i.rem_euclid(2 * n);
                if m < n {
                    values[m as usize]
                } else if m == n {
                    if odd {
                        // On the right wall; `-values[0]` is the zero wall
                        // value for any consistent Dirichlet field.
                        -values[0]
                    } else {
                        // Even about the wall: quadratic with zero slope.
                        values[(n - 1) as usize] * (4.0 / 3.0) + values[(n - 2) as usize] * (-1.0 / 3.0)
                    }
                } else {
                    values[(2 * n - m) as usize] * sign
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::periodic(0.0, 1.0, 15).is_err());
        assert!(Grid::periodic(0.0, 1.0, 100).is_err());
        assert!(Grid::periodic(1.0, 1.0, 64).is_err());
        assert!(Grid::periodic(0.0, 1.0, 64).is_ok());
    }

    #[test]
    fn dirichlet_extension_is_odd() {
        let g = Grid::dirichlet(0.0, 1.0, 16).unwrap();
        let v: Vec<f64> = (0..16).map(|j| (j as f64 * std::f64::consts::PI / 16.0).sin()).collect();
        assert_eq!(g.extended(&v, -3), -v[3]);
        assert_eq!(g.extended(&v, 18), -v[14]);
        assert_eq!(g.extended(&v, 16), 0.0);
        assert_eq!(g.extended(&v, 35), v[3]);
    }

    #[test]
    fn periodic_extension_wraps() {
        let g = Grid::periodic(-1.0, 1.0, 16).unwrap();
        let v: Vec<f64> = (0..16).map(|j| j as f64).collect();
        assert_eq!(g.extended(&v, -1), 15.0);
        assert_eq!(g.extended(&v, 17), 1.0);
    }
}
