//! Spatial side of the filter: isotropic Gaussians sampled on the pixel
//! torus, the per-bin time-varying DoG kernels, their spectra, and the
//! asymptotic DoG limit.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::params::RetinaParams;
use crate::temporal::{asymptotic_weight, TemporalWeights};

/// Rectangular pixel raster with wraparound (toroidal) distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelGrid {
    pub rows: usize,
    pub cols: usize,
}

impl PixelGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain(format!("pixel grid must be at least 1x1, got {rows}x{cols}")));
        }
        Ok(PixelGrid { rows, cols })
    }

    pub fn square(side: usize) -> Result<Self> {
        PixelGrid::new(side, side)
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    /// Shortest wrapped offset along an axis of length `len`.
    pub fn wrap(offset: usize, len: usize) -> f64 {
        offset.min(len - offset) as f64
    }
}

/// Isotropic 2D Gaussian with the continuous unit-mass normalization
/// `1/(2 pi sigma^2)`. Sampled at integer offsets without discrete
/// renormalization, so narrow kernels carry slightly more than unit discrete
/// mass.
pub fn eval_gaussian2d(dx: f64, dy: f64, sigma: f64) -> Result<f64> {
    if !dx.is_finite() || !dy.is_finite() || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "eval_gaussian2d needs finite inputs, got dx={dx}, dy={dy}, sigma={sigma}"
        )));
    }
    if sigma <= 0.0 {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let s2 = sigma * sigma;
    Ok((-(dx * dx + dy * dy) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2))
}

/// Gaussian sampled on the torus, centered at index (0, 0); entry `[r][c]`
/// holds the value at the wrapped offset.
pub fn sample_kernel_grid(sigma: f64, grid: &PixelGrid) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.n());
    for r in 0..grid.rows {
        let dy = PixelGrid::wrap(r, grid.rows);
        for c in 0..grid.cols {
            let dx = PixelGrid::wrap(c, grid.cols);
            out.push(eval_gaussian2d(dx, dy, sigma)?);
        }
    }
    Ok(out)
}

/// The filter bank: one spatial DoG kernel per coarse time bin, its
/// unnormalized forward spectrum, and the aggregate spectrum
/// `S(xi) = sum_j |phi~_j(xi)|^2` that drives frame bounds and dual synthesis.
#[derive(Debug, Clone)]
pub struct SpatioTemporalFilter {
    pub grid: PixelGrid,
    pub time_bins: Vec<f64>,
    /// Per-bin kernels, row-major, centered at (0, 0).
    pub kernels: Vec<Vec<f64>>,
    /// Per-bin unnormalized forward DFTs of the kernels.
    pub spectra: Vec<Vec<Complex64>>,
    /// `sum_j |spectra[j]|^2`, accumulated in ascending bin order.
    pub aggregate_spectrum: Vec<f64>,
}

impl SpatioTemporalFilter {
    pub fn bins(&self) -> usize {
        self.time_bins.len()
    }

    pub fn min_aggregate(&self) -> f64 {
        self.aggregate_spectrum.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_aggregate(&self) -> f64 {
        self.aggregate_spectrum.iter().copied().fold(0.0, f64::max)
    }

    /// DC gain of each bin (the kernel sums; equal to `spectra[j][0]`).
    pub fn dc_values(&self) -> Vec<f64> {
        self.spectra.iter().map(|s| s[0].re).collect()
    }
}

/// Assemble the per-bin DoG kernels `w_c rc_j G_sigma_c - w_s rs_j G_sigma_s`
/// on the torus and populate spectra.
pub fn build_phi(
    params: &RetinaParams,
    weights: &TemporalWeights,
    grid: &PixelGrid,
) -> Result<SpatioTemporalFilter> {
    params.validate()?;
    if weights.rc.len() != weights.time_bins.len() || weights.rs.len() != weights.time_bins.len() {
        return Err(Error::Dimension(format!(
            "weights track lengths {}/{} do not match {} bins",
            weights.rc.len(),
            weights.rs.len(),
            weights.time_bins.len()
        )));
    }
    for (&rc, &rs) in weights.rc.iter().zip(weights.rs.iter()) {
        if !rc.is_finite() || !rs.is_finite() {
            return Err(Error::Domain(format!("non-finite temporal weight rc={rc}, rs={rs}")));
        }
    }
    let center = sample_kernel_grid(params.sigma_c, grid)?;
    let surround = sample_kernel_grid(params.sigma_s, grid)?;
    let fft = Fft2d::new(grid.rows, grid.cols);

    let per_bin: Vec<(Vec<f64>, Vec<Complex64>)> = (0..weights.len())
        .into_par_iter()
        .map(|j| {
            let cw = params.w_c * weights.rc[j];
            let sw = params.w_s * weights.rs[j];
            let kernel: Vec<f64> = center
                .iter()
                .zip(surround.iter())
                .map(|(&g_c, &g_s)| cw * g_c - sw * g_s)
                .collect();
            let spectrum = fft.forward_real(&kernel);
            (kernel, spectrum)
        })
        .collect();

    let mut kernels = Vec::with_capacity(per_bin.len());
    let mut spectra = Vec::with_capacity(per_bin.len());
    for (kernel, spectrum) in per_bin {
        kernels.push(kernel);
        spectra.push(spectrum);
    }
    let mut aggregate_spectrum = vec![0.0; grid.n()];
    for spectrum in &spectra {
        for (acc, z) in aggregate_spectrum.iter_mut().zip(spectrum.iter()) {
            *acc += z.norm_sqr();
        }
    }
    Ok(SpatioTemporalFilter {
        grid: *grid,
        time_bins: weights.time_bins.clone(),
        kernels,
        spectra,
        aggregate_spectrum,
    })
}

/// Asymptotic kernel `n!(1-w_c) (w_c G_sigma_c - w_s G_sigma_s)`: the DoG the
/// time-varying kernels converge to.
pub fn dog_limit(params: &RetinaParams, grid: &PixelGrid) -> Result<Vec<f64>> {
    params.validate()?;
    let limit = asymptotic_weight(params);
    let center = sample_kernel_grid(params.sigma_c, grid)?;
    let surround = sample_kernel_grid(params.sigma_s, grid)?;
    Ok(center
        .iter()
        .zip(surround.iter())
        .map(|(&g_c, &g_s)| limit * (params.w_c * g_c - params.w_s * g_s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::FineTimeGrid;
    use crate::temporal::TemporalProfile;

    fn defaults() -> RetinaParams {
        RetinaParams::default()
    }

    fn default_weights(bins: &[f64]) -> TemporalWeights {
        let grid = FineTimeGrid::new(1e-4, 0.5).unwrap();
        TemporalProfile::compute(&defaults(), &grid)
            .unwrap()
            .weights_at(bins)
            .unwrap()
    }

    #[test]
    fn gaussian_peak_value() {
        // 1/(2 pi 2.25), frozen from direct evaluation.
        let v = eval_gaussian2d(0.0, 0.0, 1.5).unwrap();
        assert!((v - 0.07073553026306459).abs() < 1e-15);
    }

    #[test]
    fn gaussian_isotropy() {
        let a = eval_gaussian2d(2.0, 3.0, 1.2).unwrap();
        assert_eq!(a, eval_gaussian2d(-2.0, 3.0, 1.2).unwrap());
        assert_eq!(a, eval_gaussian2d(3.0, 2.0, 1.2).unwrap());
    }

    #[test]
    fn gaussian_rejects_bad_inputs() {
        assert!(eval_gaussian2d(f64::NAN, 0.0, 1.0).is_err());
        assert!(eval_gaussian2d(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_mass_on_64_torus() {
        let grid = PixelGrid::square(64).unwrap();
        let k = sample_kernel_grid(1.5, &grid).unwrap();
        let sum: f64 = k.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "mass {sum}");
    }

    #[test]
    fn kernel_grid_peak_and_wrap_symmetry() {
        let grid = PixelGrid::new(16, 12).unwrap();
        let k = sample_kernel_grid(2.0, &grid).unwrap();
        let peak = k[0];
        assert!(k.iter().all(|&v| v <= peak));
        assert_eq!(k[grid.index(1, 0)], k[grid.index(15, 0)]);
        assert_eq!(k[grid.index(0, 1)], k[grid.index(0, 11)]);
    }

    #[test]
    fn kernel_grid_degenerate_1x1() {
        let grid = PixelGrid::square(1).unwrap();
        let k = sample_kernel_grid(0.8, &grid).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], eval_gaussian2d(0.0, 0.0, 0.8).unwrap());
    }

    #[test]
    fn phi_zero_weights_give_zero_kernel() {
        // The filter vanishes at t = 0.
        let grid = PixelGrid::square(8).unwrap();
        let mut w = default_weights(&[0.1, 0.2]);
        w.time_bins.insert(0, 0.0);
        w.rc.insert(0, 0.0);
        w.rs.insert(0, 0.0);
        let f = build_phi(&defaults(), &w, &grid).unwrap();
        assert!(f.kernels[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn phi_equal_weights_give_scaled_dog() {
        let grid = PixelGrid::square(8).unwrap();
        let p = defaults();
        let limit = asymptotic_weight(&p);
        let w = TemporalWeights {
            time_bins: vec![1.0],
            rc: vec![limit],
            rs: vec![limit],
        };
        let f = build_phi(&p, &w, &grid).unwrap();
        let dog = dog_limit(&p, &grid).unwrap();
        for (a, b) in f.kernels[0].iter().zip(dog.iter()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn phi_dc_transitions_low_pass_to_band_pass() {
        // Sampled early enough the center dominates and the kernel is
        // low-pass (positive DC); as the weights converge the surround wins
        // and the DC settles at the (negative) DoG limit.
        let grid = PixelGrid::square(16).unwrap();
        let p = defaults();
        let bins = [0.002, 0.005, 0.02, 0.05, 0.17];
        let w = default_weights(&bins);
        let f = build_phi(&p, &w, &grid).unwrap();
        let dc = f.dc_values();
        assert!(dc[0] > 0.0, "earliest bin should be low-pass, dc = {}", dc[0]);
        assert!(dc[4] < 0.0, "late bin should suppress DC, dc = {}", dc[4]);
        // Late-bin DC approaches the limit kernel's sum.
        let dog_sum: f64 = dog_limit(&p, &grid).unwrap().iter().sum();
        assert!((dc[4] - dog_sum).abs() <= 2e-3 * dog_sum.abs());
        // DC equals the kernel sum under the unnormalized forward DFT.
        for (kernel, &dc_j) in f.kernels.iter().zip(dc.iter()) {
            let sum: f64 = kernel.iter().sum();
            assert!((dc_j - sum).abs() <= 1e-12 * sum.abs().max(1.0));
        }
    }

    #[test]
    fn phi_spectra_are_real_and_aggregate_positive() {
        let grid = PixelGrid::square(16).unwrap();
        let bins = [0.034, 0.068, 0.102, 0.136, 0.17];
        let f = build_phi(&defaults(), &default_weights(&bins), &grid).unwrap();
        for spectrum in &f.spectra {
            let max_mag = spectrum.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            let max_im = spectrum.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
            assert!(max_im <= 1e-12 * max_mag.max(1.0), "imag residue {max_im}");
        }
        assert!(f.min_aggregate() > 0.0);
    }

    #[test]
    fn phi_linear_in_weights() {
        let grid = PixelGrid::square(8).unwrap();
        let w = default_weights(&[0.03, 0.1]);
        let f1 = build_phi(&defaults(), &w, &grid).unwrap();
        let f2 = build_phi(&defaults(), &w.scaled(2.0), &grid).unwrap();
        for j in 0..f1.bins() {
            for (a, b) in f1.kernels[j].iter().zip(f2.kernels[j].iter()) {
                assert!((2.0 * a - b).abs() <= 1e-15 * b.abs().max(f64::MIN_POSITIVE));
            }
        }
    }

    #[test]
    fn dog_limit_center_value_and_degenerate_wc() {
        let grid = PixelGrid::square(64).unwrap();
        let p = defaults();
        let dog = dog_limit(&p, &grid).unwrap();
        // Plug-in oracle: n!(1-w_c) (w_c/(2 pi sigma_c^2) - w_s/(2 pi sigma_s^2)).
        let two_pi = 2.0 * std::f64::consts::PI;
        let expect = 0.25 * (0.75 / (two_pi * 0.25) - 1.0 / (two_pi * 2.25));
        assert!((dog[0] - expect).abs() < 1e-14, "center {} vs {}", dog[0], expect);
        assert!((expect - 0.10168232475315535).abs() < 1e-15);

        let all_center = RetinaParams { w_c: 1.0, ..p };
        let zero = dog_limit(&all_center, &grid).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn final_bin_kernel_approaches_dog_limit() {
        // Needs the default (fine) quadrature grid: the coarser test grid's
        // O(dt^2) bias is comparable to the 2.5e-4 weight residuals at the
        // convergence point and can push the kernel gap past the 1e-3 bound.
        let p = defaults();
        let grid_t = FineTimeGrid::default();
        let profile = TemporalProfile::compute(&p, &grid_t).unwrap();
        let t_conv = profile.convergence_time(&p, 1e-3).unwrap();
        let bins: Vec<f64> = (1..=5).map(|j| j as f64 * t_conv / 5.0).collect();
        let grid = PixelGrid::square(32).unwrap();
        let f = build_phi(&p, &profile.weights_at(&bins).unwrap(), &grid).unwrap();
        let dog = dog_limit(&p, &grid).unwrap();
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let diff: Vec<f64> = f.kernels[4].iter().zip(dog.iter()).map(|(a, b)| a - b).collect();
        assert!(inf(&diff) <= 1e-3 * inf(&dog), "{} vs {}", inf(&diff), inf(&dog));
    }
}
