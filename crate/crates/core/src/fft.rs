//! Two-dimensional FFT on row-major `nx × ny` buffers.
//!
//! The forward transform leaves the spectrum transposed (`ny × nx`, index
//! `jy * nx + ix`); the inverse expects that layout. Diagonal operators in
//! Fourier space never need the natural order, so one transpose per direction
//! is saved. The inverse is unnormalized.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

/// Scratch owned by one caller of [`Fft2`].
pub struct FftScratch {
    pub(crate) transpose: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_x: planner.plan_fft_inverse(nx),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scratch(&self) -> FftScratch {
        let fft_len = [&self.fwd_x, &self.fwd_y, &self.inv_x, &self.inv_y]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        FftScratch {
            transpose: vec![Complex64::new(0.0, 0.0); self.len()],
            fft: vec![Complex64::new(0.0, 0.0); fft_len],
        }
    }

    /// Natural layout in `data`, transposed spectrum out (in `data`).
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut FftScratch) {
        debug_assert_eq!(data.len(), self.len());
        self.fwd_y.process_with_scratch(data, &mut scratch.fft);
        transpose(data, &mut scratch.transpose, self.nx, self.ny);
        self.fwd_x.process_with_scratch(&mut scratch.transpose, &mut scratch.fft);
        data.copy_from_slice(&scratch.transpose);
    }

    /// Transposed spectrum in `data`, natural layout out. Unnormalized.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut FftScratch) {
        debug_assert_eq!(data.len(), self.len());
        self.inv_x.process_with_scratch(data, &mut scratch.fft);
        transpose(data, &mut scratch.transpose, self.ny, self.nx);
        self.inv_y.process_with_scratch(&mut scratch.transpose, &mut scratch.fft);
        data.copy_from_slice(&scratch.transpose);
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`, blocked for cache reuse.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 32;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                let row = &src[r * cols..(r + 1) * cols];
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = row[c];
                }
            }
        }
    }
}
