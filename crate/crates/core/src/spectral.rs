//! FFT-backed transforms shared by the quantum engines.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Boundary, Grid};

/// Forward/inverse FFT pair of one size.
pub(crate) struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), n }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Normalized inverse.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let s = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn inverse_raw(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
    }
}

/// Angular wavenumbers of a periodic grid in FFT order.
pub(crate) fn wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let dk = 2.0 * std::f64::consts::PI / grid.length();
    (0..n)
        .map(|i| {
            let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            m * dk
        })
        .collect()
}

/// Sine and cosine sums on the Dirichlet grid points `j = 0..n`:
/// `sum_n a_n sin(pi n j / N)` and `sum_n a_n cos(pi n j / N)`.
pub(crate) struct SineTransform {
    fft: FftPair,
    n: usize,
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        Self { fft: FftPair::new(2 * n), n }
    }

    pub fn sine_sum(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for k in 1..n {
            buf[k] = coeffs[k];
            buf[2 * n - k] = -coeffs[k];
        }
        self.fft.inverse_raw(&mut buf);
        let inv_2i = Complex64::new(0.0, -0.5);
        buf[..n].iter().map(|b| b * inv_2i).collect()
    }

    pub fn cosine_sum(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        buf[0] = coeffs[0];
        for k in 1..n {
            buf[k] = coeffs[k];
            buf[2 * n - k] = coeffs[k];
        }
        self.fft.inverse_raw(&mut buf);
        buf[..n].iter().map(|b| (b + coeffs[0]) * 0.5).collect()
    }

    /// Sine-series coefficients `c_k`, `k = 0..n` (`c_0 = 0`), such that
    /// `values[j] = sum_k c_k sin(pi k j / N)` at interior points.
    pub fn analyze(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut c = self.sine_sum(values);
        let s = 2.0 / self.n as f64;
        c.iter_mut().for_each(|v| *v *= s);
        c[0] = Complex64::new(0.0, 0.0);
        c
    }
}

/// First and second spatial derivatives by the grid's natural spectral basis.
pub(crate) fn derivatives(grid: &Grid, values: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    match grid.boundary {
        Boundary::Periodic => {
            let fft = FftPair::new(grid.n);
            let k = wavenumbers(grid);
            let mut spectrum = values.to_vec();
            fft.forward(&mut spectrum);
            let nyq = grid.n / 2;
            let mut d1: Vec<Complex64> = spectrum
                .iter()
                .zip(&k)
                .enumerate()
                .map(|(i, (s, &k))| if i == nyq { Complex64::new(0.0, 0.0) } else { s * Complex64::new(0.0, k) })
                .collect();
            let mut d2: Vec<Complex64> = spectrum.iter().zip(&k).map(|(s, &k)| s * (-k * k)).collect();
            fft.inverse(&mut d1);
            fft.inverse(&mut d2);
            (d1, d2)
        }
        Boundary::Dirichlet => {
            let st = SineTransform::new(grid.n);
            let c = st.analyze(values);
            let kk = std::f64::consts::PI / grid.length();
            let c1: Vec<Complex64> = c.iter().enumerate().map(|(i, v)| v * (i as f64 * kk)).collect();
            let c2: Vec<Complex64> =
                c.iter().enumerate().map(|(i, v)| v * (-(i as f64 * kk).powi(2))).collect();
            (st.cosine_sum(&c1), st.sine_sum(&c2))
        }
    }
}

/// Fraction of spectral power above three quarters of the Nyquist wavenumber.
pub(crate) fn high_frequency_fraction(grid: &Grid, values: &[Complex64]) -> f64 {
    let (total, tail) = match grid.boundary {
        Boundary::Periodic => {
            let fft = FftPair::new(grid.n);
            let mut spectrum = values.to_vec();
            fft.forward(&mut spectrum);
            let cut = 3 * grid.n / 8;
            spectrum.iter().enumerate().fold((0.0, 0.0), |(t, tl), (i, s)| {
                let m = if i <= grid.n / 2 { i } else { grid.n - i };
                let p = s.norm_sqr();
                (t + p, if m > cut { tl + p } else { tl })
            })
        }
        Boundary::Dirichlet => {
            let c = SineTransform::new(grid.n).analyze(values);
            let cut = 3 * grid.n / 4;
            c.iter().enumerate().fold((0.0, 0.0), |(t, tl), (i, s)| {
                let p = s.norm_sqr();
                (t + p, if i > cut { tl + p } else { tl })
            })
        }
    };
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}
