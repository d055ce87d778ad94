//! FFT helpers on a uniform periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{validation, Result};

/// Forward and inverse transforms plus the wavenumbers of a periodic grid.
#[derive(Clone)]
pub struct Fourier {
    n: usize,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fourier {
    /// `n` points on a period of length `length`.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !(length > 0.0) {
            return validation(format!("need n >= 4 and L > 0, got n = {n}, L = {length}"));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / length
            })
            .collect();
        Ok(Fourier { n, k, fwd, inv })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Index of the Nyquist mode for even `n`.
    pub fn nyquist(&self) -> Option<usize> {
        (self.n % 2 == 0).then_some(self.n / 2)
    }

    pub fn forward(&self, u: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform, normalized, real part.
    pub fn inverse(&self, uh: &[C64]) -> Vec<f64> {
        let mut buf = uh.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter().map(|v| v.re * s).collect()
    }

    /// `d^order u / dx^order`. Odd orders drop the Nyquist mode.
    pub fn derivative(&self, u: &[f64], order: u32) -> Vec<f64> {
        let mut uh = self.forward(u);
        let i = C64::new(0.0, 1.0);
        for (v, &k) in uh.iter_mut().zip(&self.k) {
            *v *= (i * k).powu(order);
        }
        if order % 2 == 1 {
            if let Some(m) = self.nyquist() {
                uh[m] = C64::new(0.0, 0.0);
            }
        }
        self.inverse(&uh)
    }
}
