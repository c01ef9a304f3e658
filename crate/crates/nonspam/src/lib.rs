//! Retinal-inspired non-separable spatiotemporal (nonSPAM) filter bank.
//!
//! A still image is decomposed over a family of time-varying
//! difference-of-Gaussians kernels: a narrow excitatory center Gaussian and a
//! wider, temporally delayed inhibitory surround, whose relative weights
//! follow the running integrals of gamma/exponential temporal kernels. On
//! the pixel torus the resulting family of shifted kernels forms a frame, so
//! the image can be reconstructed exactly from the full coefficient set and
//! progressively from rank-ordered subsets.
//!
//! Pipeline:
//! 1. [`temporal`]: sample the temporal kernels and integrate the running
//!    weights R_C, R_S on a fine grid.
//! 2. [`spatial`]: assemble per-time-bin DoG kernels and their spectra.
//! 3. [`frame`]: apply the analysis operator and verify frame bounds.
//! 4. [`reconstruct`]: dual-frame synthesis, masked least squares, rank-order
//!    coefficient selection, progressive quality curves.
//!
//! All operations are deterministic: quadratures and spectral reductions use
//! fixed summation orders, and randomized checks run on an explicitly seeded
//! LCG ([`rng::Lcg64`]), so outputs are bit-identical across runs and thread
//! counts.

pub mod error;
pub mod fft;
pub mod frame;
pub mod nspm;
pub mod oracle;
pub mod params;
pub mod pgm;
pub mod reconstruct;
pub mod rng;
pub mod spatial;
pub mod temporal;

pub use error::{Error, Result};
pub use frame::{
    analyze, dense_frame_matrix, frame_bounds_paper, frame_bounds_tight, frame_check,
    ActivationTensor, DenseFrameMatrix, FrameBounds, FrameCheckReport, Image,
};
pub use params::{FineTimeGrid, RetinaParams, DEFAULT_DT, DEFAULT_T_MAX, QUADRATURE_TOL};
pub use reconstruct::{
    dual_solve, masked_least_squares, mse, objective_and_gradient, progressive_reconstruct,
    roc_select, CoefficientMask, CurvePoint, InitStrategy, MaskSemantics, ProgressiveCurve,
    ProgressiveOutcome, Reconstruction, ReconstructionOptions, SolverMode, StepSize,
};
pub use rng::Lcg64;
pub use spatial::{
    build_phi, dog_limit, eval_gaussian2d, sample_kernel_grid, PixelGrid, SpatioTemporalFilter,
};
pub use temporal::{
    asymptotic_weight, convergence_time, default_time_bins, default_time_bins_from_profile,
    eval_center_t, eval_gamma, eval_surround_temporal, integrate_weights, TemporalProfile,
    TemporalWeights,
};
