//! Discrete analysis operator and frame bounds.
//!
//! Images are decomposed by circular convolution with each time bin's kernel,
//! computed spectrally. The family of shifted kernels forms a frame; both the
//! loose closed-form bounds and the sharp spectral extremes are provided,
//! together with a randomized energy-ratio check and a dense-matrix oracle.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::rng::Lcg64;
use crate::spatial::{PixelGrid, SpatioTemporalFilter};

/// A single-channel image on the pixel torus, row-major, native intensity
/// scale (typically 0..=255).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub grid: PixelGrid,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(grid: PixelGrid, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != grid.n() {
            return Err(Error::Dimension(format!(
                "image buffer has {} values for a {}x{} grid",
                pixels.len(),
                grid.rows,
                grid.cols
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("image contains non-finite value {bad}")));
        }
        Ok(Image { grid, pixels })
    }

    pub fn zeros(grid: PixelGrid) -> Self {
        Image { grid, pixels: vec![0.0; grid.n()] }
    }

    pub fn constant(grid: PixelGrid, value: f64) -> Self {
        Image { grid, pixels: vec![value; grid.n()] }
    }

    /// Unit impulse at the origin pixel.
    pub fn impulse(grid: PixelGrid) -> Self {
        let mut pixels = vec![0.0; grid.n()];
        pixels[0] = 1.0;
        Image { grid, pixels }
    }

    /// Deterministic pseudo-random image with values uniform in [0, hi).
    pub fn random(grid: PixelGrid, rng: &mut Lcg64, hi: f64) -> Self {
        Image { grid, pixels: rng.fill(grid.n(), hi) }
    }

    pub fn squared_norm(&self) -> f64 {
        self.pixels.iter().map(|v| v * v).sum()
    }

    pub fn mean_square(&self) -> f64 {
        self.squared_norm() / self.grid.n() as f64
    }
}

/// Activation coefficients `A(x_k, t_j)`: one real field per time bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTensor {
    pub grid: PixelGrid,
    pub time_bins: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl ActivationTensor {
    pub fn bins(&self) -> usize {
        self.time_bins.len()
    }

    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum()
    }

    pub fn zeros_like(grid: PixelGrid, time_bins: &[f64]) -> Self {
        ActivationTensor {
            grid,
            time_bins: time_bins.to_vec(),
            coeffs: vec![vec![0.0; grid.n()]; time_bins.len()],
        }
    }
}

/// Frame bounds: the loose closed-form pair and the sharp spectral pair.
/// `alpha_paper <= alpha_tight <= beta_tight <= beta_paper` always holds; the
/// tight pair equals the extreme squared singular values of the dense frame
/// matrix under the circular model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub alpha_paper: f64,
    pub beta_paper: f64,
    pub alpha_tight: f64,
    pub beta_tight: f64,
}

impl FrameBounds {
    pub fn compute(filter: &SpatioTemporalFilter) -> Result<FrameBounds> {
        let (alpha_paper, beta_paper) = frame_bounds_paper(filter)?;
        let (alpha_tight, beta_tight) = frame_bounds_tight(filter)?;
        Ok(FrameBounds { alpha_paper, beta_paper, alpha_tight, beta_tight })
    }

    pub fn ordered(&self) -> bool {
        self.alpha_paper <= self.alpha_tight
            && self.alpha_tight <= self.beta_tight
            && self.beta_tight <= self.beta_paper
    }
}

/// Apply the analysis operator: per-bin circular convolution of the image
/// with the kernel, evaluated as `inverse-DFT(phi~_j . f~)`.
pub fn analyze(image: &Image, filter: &SpatioTemporalFilter) -> Result<ActivationTensor> {
    if image.grid != filter.grid {
        return Err(Error::Dimension(format!(
            "image grid {}x{} does not match filter grid {}x{}",
            image.grid.rows, image.grid.cols, filter.grid.rows, filter.grid.cols
        )));
    }
    let fft = Fft2d::new(filter.grid.rows, filter.grid.cols);
    let image_spectrum = fft.forward_real(&image.pixels);

    let per_bin: Vec<(Vec<f64>, f64)> = filter
        .spectra
        .par_iter()
        .map(|kernel_spectrum| {
            let product: Vec<Complex64> = kernel_spectrum
                .iter()
                .zip(image_spectrum.iter())
                .map(|(k, f)| k * f)
                .collect();
            fft.inverse_real(&product)
        })
        .collect();

    let mut coeffs = Vec::with_capacity(per_bin.len());
    let mut residue = 0.0f64;
    let mut scale = 0.0f64;
    for (bin, bin_residue) in per_bin {
        residue = residue.max(bin_residue);
        scale = bin.iter().fold(scale, |m, v| m.max(v.abs()));
        coeffs.push(bin);
    }
    assert!(
        residue <= 1e-9 * scale.max(f64::MIN_POSITIVE),
        "spectral convolution produced imaginary residue {residue} at scale {scale}"
    );
    Ok(ActivationTensor { grid: filter.grid, time_bins: filter.time_bins.clone(), coeffs })
}

/// Closed-form frame bounds: `alpha = min_xi S(xi)/n` and
/// `beta = n sum_j sum_x phi_j(x)^2` (the triple-sum form collapses on the
/// torus because every row of the frame is a shift of the same kernel).
pub fn frame_bounds_paper(filter: &SpatioTemporalFilter) -> Result<(f64, f64)> {
    let n = filter.grid.n() as f64;
    let alpha = filter.min_aggregate() / n;
    if alpha <= 0.0 {
        return Err(Error::FrameDegenerate { alpha });
    }
    let mut energy = 0.0;
    for kernel in &filter.kernels {
        energy += kernel.iter().map(|v| v * v).sum::<f64>();
    }
    Ok((alpha, n * energy))
}

/// Sharp frame bounds: the extremes of the aggregate spectrum. These are the
/// exact extreme eigenvalues of the analysis normal operator.
pub fn frame_bounds_tight(filter: &SpatioTemporalFilter) -> Result<(f64, f64)> {
    let alpha = filter.min_aggregate();
    if alpha <= 0.0 {
        return Err(Error::FrameDegenerate { alpha });
    }
    Ok((alpha, filter.max_aggregate()))
}

/// Outcome of a randomized energy-ratio check.
#[derive(Debug, Clone, Copy)]
pub struct FrameCheckReport {
    pub trials: usize,
    pub min_rho: f64,
    pub max_rho: f64,
    pub bounds: FrameBounds,
}

/// Draw `trials` pseudo-random images (LCG stream from `seed`, values uniform
/// in [0, 255)) and verify the energy ratio `rho = sum |A|^2 / |f|^2` lies in
/// the tight frame sandwich, with slack `1e-9 beta_tight`.
pub fn frame_check(filter: &SpatioTemporalFilter, trials: usize, seed: u64) -> Result<FrameCheckReport> {
    if trials == 0 {
        return Err(Error::Domain("frame_check needs at least one trial".into()));
    }
    let bounds = FrameBounds::compute(filter)?;
    if !bounds.ordered() {
        return Err(Error::FrameDegenerate { alpha: bounds.alpha_tight });
    }
    let eps = 1e-9 * bounds.beta_tight;
    let mut rng = Lcg64::new(seed);
    let mut min_rho = f64::INFINITY;
    let mut max_rho = f64::NEG_INFINITY;
    for trial in 0..trials {
        let image = Image::random(filter.grid, &mut rng, 255.0);
        let acts = analyze(&image, filter)?;
        let rho = acts.squared_norm() / image.squared_norm();
        if rho < bounds.alpha_tight - eps || rho > bounds.beta_tight + eps {
            return Err(Error::FrameViolation {
                trial,
                rho,
                alpha: bounds.alpha_tight,
                beta: bounds.beta_tight,
            });
        }
        min_rho = min_rho.min(rho);
        max_rho = max_rho.max(rho);
    }
    Ok(FrameCheckReport { trials, min_rho, max_rho, bounds })
}

/// Dense frame matrix `(n m) x n`: row (j, k) is the kernel of bin j
/// circularly shifted to pixel k. Exists as an oracle for the spectral path;
/// refuses to build beyond [`DENSE_ROW_LIMIT`] rows.
#[derive(Debug, Clone)]
pub struct DenseFrameMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub const DENSE_ROW_LIMIT: usize = 65536;

impl DenseFrameMatrix {
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Multiply by a flattened image; reproduces `analyze` up to rounding.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "matvec input has {} entries, matrix has {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = vec![0.0; self.rows];
        for (r, out_v) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v.iter()) {
                acc += a * b;
            }
            *out_v = acc;
        }
        Ok(out)
    }
}

pub fn dense_frame_matrix(filter: &SpatioTemporalFilter) -> Result<DenseFrameMatrix> {
    let n = filter.grid.n();
    let rows = n * filter.bins();
    if rows > DENSE_ROW_LIMIT {
        return Err(Error::ScaleGuard { rows, limit: DENSE_ROW_LIMIT });
    }
    let (grid_rows, grid_cols) = (filter.grid.rows, filter.grid.cols);
    let mut data = vec![0.0; rows * n];
    for (j, kernel) in filter.kernels.iter().enumerate() {
        for k in 0..n {
            let (kr, kc) = (k / grid_cols, k % grid_cols);
            let row = &mut data[(j * n + k) * n..(j * n + k + 1) * n];
            for (i, slot) in row.iter_mut().enumerate() {
                let (ir, ic) = (i / grid_cols, i % grid_cols);
                let dr = (kr + grid_rows - ir) % grid_rows;
                let dc = (kc + grid_cols - ic) % grid_cols;
                *slot = kernel[dr * grid_cols + dc];
            }
        }
    }
    Ok(DenseFrameMatrix { rows, cols: n, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{FineTimeGrid, RetinaParams};
    use crate::spatial::{build_phi, sample_kernel_grid};
    use crate::temporal::{TemporalProfile, TemporalWeights};

    fn defaults() -> RetinaParams {
        RetinaParams::default()
    }

    pub fn small_filter(side: usize, bins: &[f64]) -> SpatioTemporalFilter {
        let grid_t = FineTimeGrid::new(1e-4, 0.5).unwrap();
        let weights = TemporalProfile::compute(&defaults(), &grid_t)
            .unwrap()
            .weights_at(bins)
            .unwrap();
        build_phi(&defaults(), &weights, &PixelGrid::square(side).unwrap()).unwrap()
    }

    /// Single-bin filter whose kernel is a unit impulse: the frame is the
    /// identity, so every bound collapses to known constants.
    fn impulse_filter(side: usize) -> SpatioTemporalFilter {
        let grid = PixelGrid::square(side).unwrap();
        let mut kernel = vec![0.0; grid.n()];
        kernel[0] = 1.0;
        let fft = Fft2d::new(side, side);
        let spectrum = fft.forward_real(&kernel);
        let aggregate_spectrum = spectrum.iter().map(|z| z.norm_sqr()).collect();
        SpatioTemporalFilter {
            grid,
            time_bins: vec![0.1],
            kernels: vec![kernel],
            spectra: vec![spectrum],
            aggregate_spectrum,
        }
    }

    /// O(n^2) sliding-window circular convolution, the independent oracle for
    /// the spectral path.
    fn brute_convolve(grid: &PixelGrid, kernel: &[f64], image: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grid.n()];
        for kr in 0..grid.rows {
            for kc in 0..grid.cols {
                let mut acc = 0.0;
                for ir in 0..grid.rows {
                    for ic in 0..grid.cols {
                        let dr = (kr + grid.rows - ir) % grid.rows;
                        let dc = (kc + grid.cols - ic) % grid.cols;
                        acc += kernel[dr * grid.cols + dc] * image[ir * grid.cols + ic];
                    }
                }
                out[kr * grid.cols + kc] = acc;
            }
        }
        out
    }

    #[test]
    fn analyze_impulse_returns_kernels() {
        let filter = small_filter(8, &[0.03, 0.1, 0.17]);
        let acts = analyze(&Image::impulse(filter.grid), &filter).unwrap();
        for j in 0..filter.bins() {
            for (a, k) in acts.coeffs[j].iter().zip(filter.kernels[j].iter()) {
                assert!((a - k).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn analyze_zero_image_gives_zero_tensor() {
        let filter = small_filter(8, &[0.03, 0.1]);
        let acts = analyze(&Image::zeros(filter.grid), &filter).unwrap();
        assert_eq!(acts.squared_norm(), 0.0);
    }

    #[test]
    fn analyze_constant_image_matches_dc_and_brute_force() {
        let filter = small_filter(8, &[0.03, 0.1, 0.17]);
        let c = 3.25;
        let acts = analyze(&Image::constant(filter.grid, c), &filter).unwrap();
        for (j, &dc) in filter.dc_values().iter().enumerate() {
            for v in &acts.coeffs[j] {
                assert!((v - c * dc).abs() <= 1e-12 * (c * dc).abs().max(1.0));
            }
            let brute = brute_convolve(&filter.grid, &filter.kernels[j], &vec![c; filter.grid.n()]);
            for (a, b) in acts.coeffs[j].iter().zip(brute.iter()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn analyze_matches_brute_force_on_random_image() {
        let filter = small_filter(8, &[0.02, 0.08, 0.15]);
        let mut rng = Lcg64::new(11);
        let image = Image::random(filter.grid, &mut rng, 255.0);
        let acts = analyze(&image, &filter).unwrap();
        for j in 0..filter.bins() {
            let brute = brute_convolve(&filter.grid, &filter.kernels[j], &image.pixels);
            for (a, b) in acts.coeffs[j].iter().zip(brute.iter()) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn analyze_rejects_grid_mismatch() {
        let filter = small_filter(8, &[0.03]);
        let image = Image::zeros(PixelGrid::square(16).unwrap());
        assert!(matches!(analyze(&image, &filter), Err(Error::Dimension(_))));
    }

    #[test]
    fn analyze_is_linear() {
        let filter = small_filter(8, &[0.02, 0.1]);
        let mut rng = Lcg64::new(5);
        let f = Image::random(filter.grid, &mut rng, 255.0);
        let g = Image::random(filter.grid, &mut rng, 255.0);
        let (a, b) = (1.7, -0.35);
        let mixed = Image::new(
            filter.grid,
            f.pixels.iter().zip(g.pixels.iter()).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let acts_mixed = analyze(&mixed, &filter).unwrap();
        let acts_f = analyze(&f, &filter).unwrap();
        let acts_g = analyze(&g, &filter).unwrap();
        let scale = acts_mixed.squared_norm().sqrt();
        for j in 0..filter.bins() {
            for i in 0..filter.grid.n() {
                let lin = a * acts_f.coeffs[j][i] + b * acts_g.coeffs[j][i];
                assert!((acts_mixed.coeffs[j][i] - lin).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn parseval_per_bin() {
        let filter = small_filter(8, &[0.02, 0.08]);
        let mut rng = Lcg64::new(99);
        let image = Image::random(filter.grid, &mut rng, 255.0);
        let acts = analyze(&image, &filter).unwrap();
        let fft = Fft2d::new(8, 8);
        let f_spec = fft.forward_real(&image.pixels);
        let n = filter.grid.n() as f64;
        for j in 0..filter.bins() {
            let spatial: f64 = acts.coeffs[j].iter().map(|v| v * v).sum();
            let spectral: f64 = filter.spectra[j]
                .iter()
                .zip(f_spec.iter())
                .map(|(k, f)| (k * f).norm_sqr())
                .sum::<f64>()
                / n;
            assert!((spatial - spectral).abs() <= 1e-9 * spatial.max(1.0));
        }
    }

    #[test]
    fn impulse_frame_bounds() {
        let filter = impulse_filter(4);
        let n = 16.0;
        let (ap, bp) = frame_bounds_paper(&filter).unwrap();
        let (at, bt) = frame_bounds_tight(&filter).unwrap();
        assert!((ap - 1.0 / n).abs() < 1e-12);
        assert!((bp - n).abs() < 1e-12);
        assert!((at - 1.0).abs() < 1e-12);
        assert!((bt - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_scale_quadratically() {
        let filter = small_filter(8, &[0.03, 0.1]);
        let mut scaled = filter.clone();
        let c = 3.0;
        for kernel in scaled.kernels.iter_mut() {
            for v in kernel.iter_mut() {
                *v *= c;
            }
        }
        for spectrum in scaled.spectra.iter_mut() {
            for z in spectrum.iter_mut() {
                *z *= c;
            }
        }
        for s in scaled.aggregate_spectrum.iter_mut() {
            *s *= c * c;
        }
        let (ap, bp) = frame_bounds_paper(&filter).unwrap();
        let (ap2, bp2) = frame_bounds_paper(&scaled).unwrap();
        assert!((ap2 - c * c * ap).abs() <= 1e-12 * ap2);
        assert!((bp2 - c * c * bp).abs() <= 1e-12 * bp2);
    }

    #[test]
    fn bound_ordering_chain() {
        for side in [4usize, 8, 16] {
            let filter = small_filter(side, &[0.02, 0.07, 0.17]);
            let bounds = FrameBounds::compute(&filter).unwrap();
            assert!(bounds.ordered(), "{bounds:?}");
        }
    }

    #[test]
    fn adding_a_bin_raises_both_tight_bounds() {
        let two = small_filter(8, &[0.03, 0.1]);
        let three = small_filter(8, &[0.03, 0.1, 0.17]);
        let (a2, b2) = frame_bounds_tight(&two).unwrap();
        let (a3, b3) = frame_bounds_tight(&three).unwrap();
        assert!(a3 >= a2);
        assert!(b3 >= b2);
    }

    #[test]
    fn frame_check_random_trials_stay_bounded() {
        let filter = small_filter(16, &[0.03, 0.08, 0.17]);
        let report = frame_check(&filter, 20, 42).unwrap();
        assert!(report.min_rho >= report.bounds.alpha_tight - 1e-9 * report.bounds.beta_tight);
        assert!(report.max_rho <= report.bounds.beta_tight + 1e-9 * report.bounds.beta_tight);
    }

    #[test]
    fn frame_check_constant_image_hits_dc_aggregate() {
        let filter = small_filter(8, &[0.03, 0.1, 0.17]);
        let image = Image::constant(filter.grid, 7.0);
        let acts = analyze(&image, &filter).unwrap();
        let rho = acts.squared_norm() / image.squared_norm();
        assert!((rho - filter.aggregate_spectrum[0]).abs() <= 1e-9 * rho.max(1.0));
    }

    #[test]
    fn frame_check_extremal_cosine_attains_alpha_tight() {
        let filter = small_filter(8, &[0.03, 0.1, 0.17]);
        let (alpha, _) = frame_bounds_tight(&filter).unwrap();
        let argmin = filter
            .aggregate_spectrum
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let (fr, fc) = (argmin / 8, argmin % 8);
        let grid = filter.grid;
        let pixels: Vec<f64> = (0..grid.n())
            .map(|i| {
                let (r, c) = (i / 8, i % 8);
                let phase = 2.0 * std::f64::consts::PI
                    * (fr as f64 * r as f64 / 8.0 + fc as f64 * c as f64 / 8.0);
                phase.cos()
            })
            .collect();
        let image = Image::new(grid, pixels).unwrap();
        let acts = analyze(&image, &filter).unwrap();
        let rho = acts.squared_norm() / image.squared_norm();
        assert!((rho - alpha).abs() <= 1e-9 * filter.max_aggregate(), "rho {rho} vs alpha {alpha}");
    }

    #[test]
    fn dense_matrix_impulse_kernel_is_identity() {
        let filter = impulse_filter(3);
        let dense = dense_frame_matrix(&filter).unwrap();
        for r in 0..dense.rows {
            for c in 0..dense.cols {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert_eq!(dense.entry(r, c), expect);
            }
        }
    }

    #[test]
    fn dense_matvec_matches_analyze() {
        let filter = small_filter(8, &[0.02, 0.09, 0.16]);
        let dense = dense_frame_matrix(&filter).unwrap();
        let mut rng = Lcg64::new(3);
        let image = Image::random(filter.grid, &mut rng, 255.0);
        let acts = analyze(&image, &filter).unwrap();
        let flat = dense.matvec(&image.pixels).unwrap();
        for j in 0..filter.bins() {
            for k in 0..filter.grid.n() {
                let diff = (flat[j * filter.grid.n() + k] - acts.coeffs[j][k]).abs();
                assert!(diff <= 1e-9, "bin {j} pixel {k}: diff {diff}");
            }
        }
    }

    #[test]
    fn dense_matrix_scale_guard() {
        // 64x64 pixels with 17+ bins crosses the row limit; clone one bin until
        // the guard trips.
        let filter = small_filter(64, &[0.02]);
        let mut many_bins = filter.clone();
        let kernel = many_bins.kernels[0].clone();
        let spectrum = many_bins.spectra[0].clone();
        while many_bins.bins() * many_bins.grid.n() <= DENSE_ROW_LIMIT {
            let t = many_bins.time_bins.last().unwrap() + 0.01;
            many_bins.time_bins.push(t);
            many_bins.kernels.push(kernel.clone());
            many_bins.spectra.push(spectrum.clone());
        }
        assert!(matches!(dense_frame_matrix(&many_bins), Err(Error::ScaleGuard { .. })));
    }

    #[test]
    fn sample_kernel_wraps_like_dense_rows() {
        // Kernel symmetry used by the dense construction: wrapped lookup
        // equals the sampled Gaussian at the wrapped distance.
        let grid = PixelGrid::new(5, 7).unwrap();
        let k = sample_kernel_grid(1.1, &grid).unwrap();
        for r in 0..5 {
            for c in 0..7 {
                let expect = crate::spatial::eval_gaussian2d(
                    PixelGrid::wrap(c, 7),
                    PixelGrid::wrap(r, 5),
                    1.1,
                )
                .unwrap();
                assert_eq!(k[grid.index(r, c)], expect);
            }
        }
    }

    #[test]
    fn weights_reject_non_finite() {
        let grid = PixelGrid::square(4).unwrap();
        let w = TemporalWeights {
            time_bins: vec![0.1],
            rc: vec![f64::NAN],
            rs: vec![0.0],
        };
        assert!(build_phi(&defaults(), &w, &grid).is_err());
    }
}
