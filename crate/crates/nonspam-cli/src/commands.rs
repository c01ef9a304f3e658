//! The five pipeline commands. Every command is a pure function of its
//! inputs: identical invocations produce byte-identical files.

use std::fs;
use std::path::Path;

use nonspam::{
    analyze, build_phi, default_time_bins_from_profile, dense_frame_matrix, dual_solve,
    frame_check, masked_least_squares, mse, nspm, oracle, progressive_reconstruct, roc_select,
    ActivationTensor, CoefficientMask, FrameBounds, Image, MaskSemantics, PixelGrid, SolverMode,
    SpatioTemporalFilter, TemporalProfile, TemporalWeights,
};

use nonspam::pgm;

use crate::config::Config;
use crate::error::CliError;

/// 12 significant digits, the precision contract for all CSV/report output.
fn sig(v: f64) -> String {
    format!("{:.11e}", v)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

struct TemporalPipeline {
    profile: TemporalProfile,
    weights: TemporalWeights,
}

fn temporal_pipeline(config: &Config) -> Result<TemporalPipeline, CliError> {
    for w in config.params.warnings() {
        eprintln!("warning: {w}");
    }
    let grid = config.fine_grid()?;
    let profile = TemporalProfile::compute(&config.params, &grid)?;
    let bins = match &config.time_bins {
        Some(bins) => bins.clone(),
        None => default_time_bins_from_profile(&profile, &config.params, config.m)?,
    };
    let weights = profile.weights_at(&bins)?;
    Ok(TemporalPipeline { profile, weights })
}

fn filter_for_grid(config: &Config, grid: PixelGrid) -> Result<SpatioTemporalFilter, CliError> {
    let pipeline = temporal_pipeline(config)?;
    Ok(build_phi(&config.params, &pipeline.weights, &grid)?)
}

/// Filter matching a stored coefficient tensor: kernel weights are recomputed
/// at the tensor's own time stamps, so decompose/reconstruct pairs agree as
/// long as the configuration parameters match.
fn filter_for_tensor(config: &Config, acts: &ActivationTensor) -> Result<SpatioTemporalFilter, CliError> {
    for w in config.params.warnings() {
        eprintln!("warning: {w}");
    }
    let grid = config.fine_grid()?;
    let profile = TemporalProfile::compute(&config.params, &grid)?;
    let weights = profile.weights_at(&acts.time_bins)?;
    Ok(build_phi(&config.params, &weights, &acts.grid)?)
}

/// `kernels`: temporal-kernel CSV (time_s, T, TS, RC, RS on the fine grid)
/// plus a transversal spectrum-magnitude cut per time bin.
pub fn cmd_kernels(config: &Config, out_dir: &Path, grid_side: usize) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let pipeline = temporal_pipeline(config)?;
    let profile = &pipeline.profile;

    let mut csv = String::from("time_s,T,TS,RC,RS\n");
    for i in 0..profile.grid.samples {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            sig(profile.grid.time(i)),
            sig(profile.center[i]),
            sig(profile.surround[i]),
            sig(profile.rc[i]),
            sig(profile.rs[i]),
        ));
    }
    write_text(&out_dir.join("kernels.csv"), &csv)?;

    let grid = PixelGrid::square(grid_side)?;
    let filter = build_phi(&config.params, &pipeline.weights, &grid)?;
    let mut cut = String::from("freq_index");
    for j in 1..=filter.bins() {
        cut.push_str(&format!(",bin_{j}"));
    }
    cut.push('\n');
    for fx in 0..grid.cols {
        cut.push_str(&fx.to_string());
        for spectrum in &filter.spectra {
            cut.push(',');
            cut.push_str(&sig(spectrum[fx].norm()));
        }
        cut.push('\n');
    }
    write_text(&out_dir.join("spectrum_cut.csv"), &cut)?;
    Ok(())
}

/// `decompose`: PGM in, NSPM coefficient file out; optionally renders each
/// bin as a min-max normalized PGM with the bounds recorded in a sidecar.
pub fn cmd_decompose(
    image_path: &Path,
    config: &Config,
    out_path: &Path,
    render_dir: Option<&Path>,
) -> Result<(), CliError> {
    let image = pgm::read_pgm(image_path)?;
    let filter = filter_for_grid(config, image.grid)?;
    let acts = analyze(&image, &filter)?;
    nspm::write_nspm(out_path, &acts)?;

    if let Some(dir) = render_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let mut sidecar = String::from("bin,min,max\n");
        for (j, bin) in acts.coeffs.iter().enumerate() {
            let lo = bin.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = bin.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            let rendered: Vec<f64> = bin
                .iter()
                .map(|&v| if span > 0.0 { (v - lo) / span * 255.0 } else { 0.0 })
                .collect();
            let image = Image::new(acts.grid, rendered)?;
            pgm::write_pgm(&dir.join(format!("bin_{:02}.pgm", j + 1)), &image)?;
            sidecar.push_str(&format!("{},{},{}\n", j + 1, sig(lo), sig(hi)));
        }
        write_text(&dir.join("bounds.txt"), &sidecar)?;
    }
    Ok(())
}

fn zero_filled(acts: &ActivationTensor, mask: &CoefficientMask) -> ActivationTensor {
    ActivationTensor {
        grid: acts.grid,
        time_bins: acts.time_bins.clone(),
        coeffs: acts
            .coeffs
            .iter()
            .zip(mask.bins.iter())
            .map(|(bin, keep)| {
                bin.iter()
                    .zip(keep.iter())
                    .map(|(&v, &k)| if k { v } else { 0.0 })
                    .collect()
            })
            .collect(),
    }
}

fn reconstruct_at(
    acts: &ActivationTensor,
    filter: &SpatioTemporalFilter,
    config: &Config,
    percentage: f64,
) -> Result<(Image, usize, bool), CliError> {
    let mask = roc_select(acts, percentage)?;
    match config.mode {
        SolverMode::FourierDual => {
            let image = if mask.is_full() {
                dual_solve(acts, filter)?
            } else {
                match config.mask_semantics {
                    MaskSemantics::ZeroFill => dual_solve(&zero_filled(acts, &mask), filter)?,
                    MaskSemantics::MaskedObjective => {
                        return Err(CliError::Usage(
                            "mode fourier-dual solves the full-frame problem; partial \
                             percentages need mask_semantics = zero-fill or mode = gradient-descent"
                                .into(),
                        ))
                    }
                }
            };
            Ok((image, 0, true))
        }
        SolverMode::GradientDescent => {
            let rec = masked_least_squares(acts, &mask, filter, &config.solver_options())?;
            Ok((rec.image, rec.iterations, rec.converged))
        }
    }
}

/// `reconstruct`: NSPM coefficients in, PGM out, plus a text report
/// (printed and written next to the image). Non-convergence is flagged in the
/// report, not a hard failure.
pub fn cmd_reconstruct(
    coeff_path: &Path,
    config: &Config,
    percentage: f64,
    out_path: &Path,
    original: Option<&Path>,
) -> Result<(), CliError> {
    let acts = nspm::read_nspm(coeff_path)?;
    let filter = filter_for_tensor(config, &acts)?;
    let (image, iterations, converged) = reconstruct_at(&acts, &filter, config, percentage)?;
    pgm::write_pgm(out_path, &image)?;

    let mut report = String::new();
    report.push_str(&format!("percentage = {}\n", sig(percentage)));
    report.push_str(&format!("iterations = {iterations}\n"));
    report.push_str(&format!("converged = {}\n", u8::from(converged)));
    if let Some(orig_path) = original {
        let orig = pgm::read_pgm(orig_path)?;
        let err = mse(&orig, &image)?;
        report.push_str(&format!("mse = {}\n", sig(err)));
        report.push_str(&format!("mean_square_signal = {}\n", sig(orig.mean_square())));
    }
    print!("{report}");
    let report_path = out_path.with_extension("report.txt");
    write_text(&report_path, &report)?;
    Ok(())
}

/// `curve`: decompose + progressive reconstruction over a percentage list;
/// writes the (percentage, mse, iterations, converged) table.
pub fn cmd_curve(
    image_path: &Path,
    config: &Config,
    percentages: &[f64],
    out_csv: &Path,
) -> Result<(), CliError> {
    let image = pgm::read_pgm(image_path)?;
    let filter = filter_for_grid(config, image.grid)?;
    let opts = nonspam::ReconstructionOptions {
        mode: SolverMode::GradientDescent,
        ..config.solver_options()
    };
    let outcome = progressive_reconstruct(&image, &filter, percentages, &opts, false)?;
    let mut csv = String::from("percentage,mse,iterations,converged\n");
    for p in &outcome.curve.points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            sig(p.percentage),
            sig(p.mse),
            p.iterations,
            u8::from(p.converged)
        ));
    }
    write_text(out_csv, &csv)?;
    Ok(())
}

/// `bounds`: print the four frame bounds, run the seeded energy-ratio check,
/// and optionally cross-check against the dense SVD oracle.
pub fn cmd_bounds(config: &Config, grid_side: usize, with_oracle: bool) -> Result<(), CliError> {
    let grid = PixelGrid::square(grid_side)?;
    let filter = filter_for_grid(config, grid)?;
    let bounds = FrameBounds::compute(&filter)?;
    println!("alpha_paper = {}", sig(bounds.alpha_paper));
    println!("alpha_tight = {}", sig(bounds.alpha_tight));
    println!("beta_tight = {}", sig(bounds.beta_tight));
    println!("beta_paper = {}", sig(bounds.beta_paper));
    if !bounds.ordered() {
        return Err(CliError::Lib(nonspam::Error::FrameDegenerate {
            alpha: bounds.alpha_tight,
        }));
    }
    println!("ordering alpha_paper <= alpha_tight <= beta_tight <= beta_paper: ok");

    let report = frame_check(&filter, 20, config.seed)?;
    println!("frame_check trials = {}", report.trials);
    println!("frame_check min_rho = {}", sig(report.min_rho));
    println!("frame_check max_rho = {}", sig(report.max_rho));

    if with_oracle {
        let dense = dense_frame_matrix(&filter)?;
        let (lo, hi) = oracle::singular_squared_extremes(&dense)?;
        let alpha_dev = (lo - bounds.alpha_tight).abs() / bounds.alpha_tight;
        let beta_dev = (hi - bounds.beta_tight).abs() / bounds.beta_tight;
        println!("oracle sigma_min_sq = {}", sig(lo));
        println!("oracle sigma_max_sq = {}", sig(hi));
        println!("oracle alpha_rel_dev = {}", sig(alpha_dev));
        println!("oracle beta_rel_dev = {}", sig(beta_dev));
        let eig = oracle::gram_eigenvalues(&dense);
        let mut spectrum = filter.aggregate_spectrum.clone();
        spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gram_dev = eig
            .iter()
            .zip(spectrum.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / bounds.beta_tight;
        println!("oracle gram_rel_dev = {}", sig(gram_dev));
        if alpha_dev > 1e-8 || beta_dev > 1e-8 || gram_dev > 1e-8 {
            return Err(CliError::Numerical(format!(
                "dense oracle disagrees with spectral bounds beyond 1e-8 \
                 (alpha {alpha_dev:e}, beta {beta_dev:e}, gram {gram_dev:e})"
            )));
        }
    }
    Ok(())
}
