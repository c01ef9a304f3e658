//! Synthesis side: exact dual-frame reconstruction in the Fourier domain,
//! masked least squares by gradient descent, rank-order coefficient
//! selection, and the progressive-quality experiment.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2d;
use crate::frame::{analyze, frame_bounds_tight, ActivationTensor, Image};
use crate::spatial::SpatioTemporalFilter;

/// Per-bin boolean coefficient selection. Each bin keeps
/// `max(1, round(percentage/100 * n))` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMask {
    pub bins: Vec<Vec<bool>>,
    pub percentage: f64,
}

impl CoefficientMask {
    pub fn full(bins: usize, n: usize) -> Self {
        CoefficientMask { bins: vec![vec![true; n]; bins], percentage: 100.0 }
    }

    pub fn selected_per_bin(&self) -> Vec<usize> {
        self.bins.iter().map(|b| b.iter().filter(|&&v| v).count()).collect()
    }

    pub fn is_full(&self) -> bool {
        self.bins.iter().all(|b| b.iter().all(|&v| v))
    }
}

/// How omitted coefficients enter the objective: excluded from the residual
/// (`MaskedObjective`) or treated as zero-valued observations (`ZeroFill`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskSemantics {
    MaskedObjective,
    ZeroFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    FourierDual,
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `1/(2 beta_tight)`: a guaranteed-descent step for this quadratic
    /// objective, whose curvature is bounded by `2 beta_tight`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    Zeros,
    /// Constant image estimated from the first bin's DC coefficient.
    DcEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    pub mode: SolverMode,
    pub mask_semantics: MaskSemantics,
    pub step_size: StepSize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub init: InitStrategy,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            mode: SolverMode::GradientDescent,
            mask_semantics: MaskSemantics::MaskedObjective,
            step_size: StepSize::Auto,
            max_iters: 50_000,
            grad_tol: 1e-10,
            init: InitStrategy::Zeros,
        }
    }
}

impl ReconstructionOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        if !self.grad_tol.is_finite() || self.grad_tol <= 0.0 {
            return Err(Error::Domain(format!("grad_tol must be > 0, got {}", self.grad_tol)));
        }
        if let StepSize::Fixed(s) = self.step_size {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::Domain(format!("step size must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Gradient-descent outcome: the iterate, its trace, and convergence state.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub image: Image,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value at every visited iterate (including the last).
    pub objective_trace: Vec<f64>,
    pub final_gradient_norm: f64,
}

/// One measured point of the progressive-quality curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub percentage: f64,
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgressiveCurve {
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone)]
pub struct ProgressiveOutcome {
    pub curve: ProgressiveCurve,
    /// Reconstructed images per percentage, when requested.
    pub images: Option<Vec<Image>>,
}

fn check_tensor_filter(acts: &ActivationTensor, filter: &SpatioTemporalFilter) -> Result<()> {
    if acts.grid != filter.grid {
        return Err(Error::Dimension(format!(
            "tensor grid {}x{} does not match filter grid {}x{}",
            acts.grid.rows, acts.grid.cols, filter.grid.rows, filter.grid.cols
        )));
    }
    if acts.bins() != filter.bins() {
        return Err(Error::Dimension(format!(
            "tensor has {} bins, filter has {}",
            acts.bins(),
            filter.bins()
        )));
    }
    Ok(())
}

fn check_mask(mask: &CoefficientMask, acts: &ActivationTensor) -> Result<()> {
    if mask.bins.len() != acts.bins() || mask.bins.iter().any(|b| b.len() != acts.grid.n()) {
        return Err(Error::Dimension(format!(
            "mask shape does not match {} bins of {} coefficients",
            acts.bins(),
            acts.grid.n()
        )));
    }
    Ok(())
}

/// Exact dual-frame synthesis: `f~(xi) = sum_j conj(phi~_j) A~_j / S(xi)`,
/// the Fourier-diagonal form of the normal equations. Requires full
/// coefficients and a strictly positive aggregate spectrum.
pub fn dual_solve(acts: &ActivationTensor, filter: &SpatioTemporalFilter) -> Result<Image> {
    check_tensor_filter(acts, filter)?;
    let min_s = filter.min_aggregate();
    let max_s = filter.max_aggregate();
    if min_s <= 1e-12 * max_s {
        return Err(Error::IllConditioned { min_spectrum: min_s, max_spectrum: max_s });
    }
    let fft = Fft2d::new(filter.grid.rows, filter.grid.cols);
    let bin_spectra: Vec<Vec<Complex64>> = acts
        .coeffs
        .par_iter()
        .map(|bin| fft.forward_real(bin))
        .collect();
    let n = filter.grid.n();
    let mut numerator = vec![Complex64::new(0.0, 0.0); n];
    for (kernel_spectrum, act_spectrum) in filter.spectra.iter().zip(bin_spectra.iter()) {
        for i in 0..n {
            numerator[i] += kernel_spectrum[i].conj() * act_spectrum[i];
        }
    }
    for (num, &s) in numerator.iter_mut().zip(filter.aggregate_spectrum.iter()) {
        *num /= s;
    }
    let (pixels, residue) = fft.inverse_real(&numerator);
    let scale = pixels.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(
        residue <= 1e-9 * scale.max(f64::MIN_POSITIVE),
        "dual synthesis produced imaginary residue {residue} at scale {scale}"
    );
    Image::new(filter.grid, pixels)
}

fn convolve_bin(fft: &Fft2d, image_spectrum: &[Complex64], kernel_spectrum: &[Complex64]) -> Vec<f64> {
    let product: Vec<Complex64> = kernel_spectrum
        .iter()
        .zip(image_spectrum.iter())
        .map(|(k, f)| k * f)
        .collect();
    fft.inverse_real(&product).0
}

/// Masked quadratic objective `sum_j |mask_j . (phi_j (*) f - A_j)|^2` and its
/// gradient `2 sum_j phi_j^flip (*) (mask_j . residual_j)`; the adjoint
/// convolution is evaluated spectrally with the conjugate kernel.
pub fn objective_and_gradient(
    image: &Image,
    acts: &ActivationTensor,
    mask: &CoefficientMask,
    filter: &SpatioTemporalFilter,
) -> Result<(f64, Image)> {
    check_tensor_filter(acts, filter)?;
    check_mask(mask, acts)?;
    if image.grid != filter.grid {
        return Err(Error::Dimension("image grid does not match filter grid".into()));
    }
    let fft = Fft2d::new(filter.grid.rows, filter.grid.cols);
    objective_and_gradient_with(&fft, image, acts, mask, filter)
}

/// Shape-checked core, reusing a planned transform across solver iterations.
fn objective_and_gradient_with(
    fft: &Fft2d,
    image: &Image,
    acts: &ActivationTensor,
    mask: &CoefficientMask,
    filter: &SpatioTemporalFilter,
) -> Result<(f64, Image)> {
    let image_spectrum = fft.forward_real(&image.pixels);
    let n = filter.grid.n();

    // Per-bin: masked residual energy plus the spectral contribution
    // conj(phi~_j) . DFT(masked residual). Bins are independent; the final
    // reductions run in ascending bin order for bit-stable output.
    let per_bin: Vec<(f64, Vec<Complex64>)> = (0..filter.bins())
        .into_par_iter()
        .map(|j| {
            let conv = convolve_bin(fft, &image_spectrum, &filter.spectra[j]);
            let masked_residual: Vec<f64> = conv
                .iter()
                .zip(acts.coeffs[j].iter())
                .zip(mask.bins[j].iter())
                .map(|((c, a), &keep)| if keep { c - a } else { 0.0 })
                .collect();
            let energy: f64 = masked_residual.iter().map(|v| v * v).sum();
            let residual_spectrum = fft.forward_real(&masked_residual);
            let contribution: Vec<Complex64> = filter.spectra[j]
                .iter()
                .zip(residual_spectrum.iter())
                .map(|(k, r)| k.conj() * r)
                .collect();
            (energy, contribution)
        })
        .collect();

    let mut value = 0.0;
    let mut gradient_spectrum = vec![Complex64::new(0.0, 0.0); n];
    for (energy, contribution) in &per_bin {
        value += energy;
        for (g, c) in gradient_spectrum.iter_mut().zip(contribution.iter()) {
            *g += c;
        }
    }
    let (mut gradient, _) = fft.inverse_real(&gradient_spectrum);
    for g in gradient.iter_mut() {
        *g *= 2.0;
    }
    Ok((value, Image { grid: filter.grid, pixels: gradient }))
}

fn apply_semantics(
    acts: &ActivationTensor,
    mask: &CoefficientMask,
    semantics: MaskSemantics,
) -> (ActivationTensor, CoefficientMask) {
    match semantics {
        MaskSemantics::MaskedObjective => (acts.clone(), mask.clone()),
        MaskSemantics::ZeroFill => {
            let coeffs = acts
                .coeffs
                .iter()
                .zip(mask.bins.iter())
                .map(|(bin, keep)| {
                    bin.iter()
                        .zip(keep.iter())
                        .map(|(&v, &k)| if k { v } else { 0.0 })
                        .collect()
                })
                .collect();
            let zero_filled = ActivationTensor {
                grid: acts.grid,
                time_bins: acts.time_bins.clone(),
                coeffs,
            };
            (zero_filled, CoefficientMask::full(acts.bins(), acts.grid.n()))
        }
    }
}

fn initial_image(
    init: InitStrategy,
    acts: &ActivationTensor,
    filter: &SpatioTemporalFilter,
) -> Image {
    match init {
        InitStrategy::Zeros => Image::zeros(filter.grid),
        InitStrategy::DcEstimate => {
            let dc_gain = filter.spectra[0][0].re;
            if dc_gain.abs() < 1e-12 * filter.max_aggregate().sqrt().max(1.0) {
                return Image::zeros(filter.grid);
            }
            let coeff_sum: f64 = acts.coeffs[0].iter().sum();
            let mean = coeff_sum / (filter.grid.n() as f64 * dc_gain);
            Image::constant(filter.grid, mean)
        }
    }
}

/// Gradient descent on the masked least-squares objective. Non-convergence
/// within `max_iters` is not an error: the last iterate is returned with
/// `converged = false`.
pub fn masked_least_squares(
    acts: &ActivationTensor,
    mask: &CoefficientMask,
    filter: &SpatioTemporalFilter,
    opts: &ReconstructionOptions,
) -> Result<Reconstruction> {
    opts.validate()?;
    check_tensor_filter(acts, filter)?;
    check_mask(mask, acts)?;
    let (acts_eff, mask_eff) = apply_semantics(acts, mask, opts.mask_semantics);
    let step = match opts.step_size {
        StepSize::Fixed(s) => s,
        StepSize::Auto => {
            let (_, beta_tight) = frame_bounds_tight(filter)?;
            1.0 / (2.0 * beta_tight)
        }
    };
    let tolerance = opts.grad_tol * (1.0 + acts_eff.squared_norm().sqrt());
    let mut image = initial_image(opts.init, &acts_eff, filter);
    let fft = Fft2d::new(filter.grid.rows, filter.grid.cols);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let (value, gradient) =
            objective_and_gradient_with(&fft, &image, &acts_eff, &mask_eff, filter)?;
        trace.push(value);
        let grad_norm = gradient.pixels.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grad_norm <= tolerance {
            return Ok(Reconstruction {
                image,
                iterations,
                converged: true,
                objective_trace: trace,
                final_gradient_norm: grad_norm,
            });
        }
        if iterations >= opts.max_iters {
            return Ok(Reconstruction {
                image,
                iterations,
                converged: false,
                objective_trace: trace,
                final_gradient_norm: grad_norm,
            });
        }
        for (p, g) in image.pixels.iter_mut().zip(gradient.pixels.iter()) {
            *p -= step * g;
        }
        iterations += 1;
    }
}

/// Rank-order selection: per bin, keep the `max(1, round(p/100 n))` largest
/// coefficients by magnitude; ties break toward the smaller row-major index.
pub fn roc_select(acts: &ActivationTensor, percentage: f64) -> Result<CoefficientMask> {
    if !percentage.is_finite() || percentage <= 0.0 || percentage > 100.0 {
        return Err(Error::Domain(format!(
            "percentage must lie in (0, 100], got {percentage}"
        )));
    }
    let n = acts.grid.n();
    let count = ((percentage / 100.0 * n as f64).round() as usize).clamp(1, n);
    let bins: Vec<Vec<bool>> = acts
        .coeffs
        .par_iter()
        .map(|bin| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_unstable_by(|&a, &b| {
                bin[b]
                    .abs()
                    .partial_cmp(&bin[a].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let mut keep = vec![false; n];
            for &idx in order.iter().take(count) {
                keep[idx] = true;
            }
            keep
        })
        .collect();
    Ok(CoefficientMask { bins, percentage })
}

/// Mean square error `|f - fhat|^2 / n`.
pub fn mse(reference: &Image, estimate: &Image) -> Result<f64> {
    if reference.grid != estimate.grid {
        return Err(Error::Dimension(format!(
            "mse grids differ: {}x{} vs {}x{}",
            reference.grid.rows, reference.grid.cols, estimate.grid.rows, estimate.grid.cols
        )));
    }
    let sum: f64 = reference
        .pixels
        .iter()
        .zip(estimate.pixels.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / reference.grid.n() as f64)
}

/// Analyze once, then reconstruct at each percentage with rank-order masks
/// and measure the distortion against the input.
pub fn progressive_reconstruct(
    image: &Image,
    filter: &SpatioTemporalFilter,
    percentages: &[f64],
    opts: &ReconstructionOptions,
    keep_images: bool,
) -> Result<ProgressiveOutcome> {
    if percentages.is_empty() {
        return Err(Error::Domain("need at least one percentage".into()));
    }
    for w in percentages.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Domain(format!(
                "percentages must be strictly ascending, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    for &p in percentages {
        if !p.is_finite() || p <= 0.0 || p > 100.0 {
            return Err(Error::Domain(format!("percentage must lie in (0, 100], got {p}")));
        }
    }
    let acts = analyze(image, filter)?;
    let results: Vec<(CurvePoint, Image)> = percentages
        .par_iter()
        .map(|&p| -> Result<(CurvePoint, Image)> {
            let mask = roc_select(&acts, p)?;
            let rec = masked_least_squares(&acts, &mask, filter, opts)?;
            let err = mse(image, &rec.image)?;
            Ok((
                CurvePoint {
                    percentage: p,
                    mse: err,
                    iterations: rec.iterations,
                    converged: rec.converged,
                },
                rec.image,
            ))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(results.len());
    let mut images = Vec::with_capacity(results.len());
    for (point, img) in results {
        points.push(point);
        images.push(img);
    }
    Ok(ProgressiveOutcome {
        curve: ProgressiveCurve { points },
        images: keep_images.then_some(images),
    })
}
