//! Internal 2D DFT plumbing on row-major buffers.
//!
//! Convention used throughout the crate: the forward transform is
//! unnormalized, the inverse carries `1/n` with `n = rows * cols`. Parseval
//! then reads `sum_x |f(x)|^2 = (1/n) sum_xi |f~(xi)|^2`.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

/// Planned 2D transform for a fixed grid size. Plans are `Send + Sync`, so a
/// single engine can serve parallel per-bin transforms; scratch space is
/// allocated per call.
#[derive(Clone)]
pub struct Fft2d {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            rows,
            cols,
            row_fwd: planner.plan_fft(cols, FftDirection::Forward),
            row_inv: planner.plan_fft(cols, FftDirection::Inverse),
            col_fwd: planner.plan_fft(rows, FftDirection::Forward),
            col_inv: planner.plan_fft(rows, FftDirection::Inverse),
        }
    }

    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    fn transform(&self, data: &mut [Complex64], dir: FftDirection) {
        debug_assert_eq!(data.len(), self.size());
        let (row_plan, col_plan) = match dir {
            FftDirection::Forward => (&self.row_fwd, &self.col_fwd),
            FftDirection::Inverse => (&self.row_inv, &self.col_inv),
        };
        let mut scratch =
            vec![Complex64::default(); row_plan.get_inplace_scratch_len().max(col_plan.get_inplace_scratch_len())];
        for row in data.chunks_exact_mut(self.cols) {
            row_plan.process_with_scratch(row, &mut scratch);
        }
        let mut transposed = transpose(self.cols, self.rows, data);
        for col in transposed.chunks_exact_mut(self.rows) {
            col_plan.process_with_scratch(col, &mut scratch);
        }
        let back = transpose(self.rows, self.cols, &transposed);
        data.copy_from_slice(&back);
    }

    /// Unnormalized forward DFT of a real buffer.
    pub fn forward_real(&self, real: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, FftDirection::Forward);
        buf
    }

    /// Inverse DFT including the 1/n factor; returns the full complex field.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.transform(&mut buf, FftDirection::Inverse);
        let norm = 1.0 / self.size() as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
        buf
    }

    /// Inverse DFT of a spectrum known to describe real data. Returns the
    /// real parts together with the largest absolute imaginary residue so
    /// callers can assert it is numerical noise.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> (Vec<f64>, f64) {
        let full = self.inverse(spectrum);
        let mut residue = 0.0f64;
        let real = full
            .iter()
            .map(|z| {
                residue = residue.max(z.im.abs());
                z.re
            })
            .collect();
        (real, residue)
    }
}

/// Row-major transpose of a `height x width` matrix into `width x height`.
fn transpose(width: usize, height: usize, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = data[r * width + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_round_trips() {
        let fft = Fft2d::new(3, 5);
        let data: Vec<f64> = (0..15).map(|i| (i as f64 * 0.7).sin() + i as f64).collect();
        let spec = fft.forward_real(&data);
        let (back, residue) = fft.inverse_real(&spec);
        assert!(residue < 1e-12);
        for (a, b) in data.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_with_inverse_norm() {
        let fft = Fft2d::new(4, 4);
        let data: Vec<f64> = (0..16).map(|i| (i as f64).cos()).collect();
        let spec = fft.forward_real(&data);
        let spatial: f64 = data.iter().map(|v| v * v).sum();
        let spectral: f64 = spec.iter().map(|z| z.norm_sqr()).sum::<f64>() / 16.0;
        assert!((spatial - spectral).abs() < 1e-10);
    }

    #[test]
    fn dc_bin_is_plain_sum() {
        let fft = Fft2d::new(2, 3);
        let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let spec = fft.forward_real(&data);
        assert!((spec[0].re - 21.0).abs() < 1e-12);
        assert!(spec[0].im.abs() < 1e-12);
    }
}
