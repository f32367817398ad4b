//! FFT plumbing shared by the moment calculation and the propagator.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::wavepacket::Grid1D;

/// Angular wavenumbers in FFT output order (non-negative first, then negative).
pub fn wavenumbers(grid: &Grid1D) -> Vec<f64> {
    let n = grid.n_points();
    let dk = 2.0 * PI / (n as f64 * grid.spacing());
    (0..n)
        .map(|j| {
            let j = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            j * dk
        })
        .collect()
}

/// Forward and inverse transforms of one fixed length.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    /// Inverse transform including the 1/n normalization.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
        let scale = 1.0 / data.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}
