//! Temporal side of the filter: gamma/exponential kernels, the center kernel
//! T(t), the delayed surround kernel (T * E_tau_s)(t), and their running
//! integrals R_C and R_S which weight the spatial DoG over time.
//!
//! All quadratures are trapezoidal on the caller's [`FineTimeGrid`] with a
//! fixed ascending summation order, so results are bit-stable.

use crate::error::{Error, Result};
use crate::params::{FineTimeGrid, RetinaParams};

/// Sampled running integrals of the center and surround temporal kernels on
/// the coarse time bins: `rc[j]` = integral of T up to `time_bins[j]`,
/// `rs[j]` likewise for the delayed surround kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalWeights {
    pub time_bins: Vec<f64>,
    pub rc: Vec<f64>,
    pub rs: Vec<f64>,
}

impl TemporalWeights {
    pub fn len(&self) -> usize {
        self.time_bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_bins.is_empty()
    }

    /// Uniform scaling of both weight tracks; the resulting filter scales
    /// linearly (used by linearity tests).
    pub fn scaled(&self, c: f64) -> TemporalWeights {
        TemporalWeights {
            time_bins: self.time_bins.clone(),
            rc: self.rc.iter().map(|v| c * v).collect(),
            rs: self.rs.iter().map(|v| c * v).collect(),
        }
    }
}

/// Gamma temporal kernel `t^n exp(-t/tau) / tau^(n+1)`, causal (zero for
/// negative times). `n = 0` is the plain exponential kernel.
pub fn eval_gamma(t: f64, tau: f64, n: u32) -> Result<f64> {
    if !t.is_finite() || !tau.is_finite() {
        return Err(Error::Domain(format!("eval_gamma needs finite t and tau, got t={t}, tau={tau}")));
    }
    if tau <= 0.0 {
        return Err(Error::Domain(format!("eval_gamma needs tau > 0, got {tau}")));
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    Ok(t.powi(n as i32) * (-t / tau).exp() / tau.powi(n as i32 + 1))
}

/// n! as a float; the common limit of the running integrals is n!(1 - w_c).
fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Causal trapezoidal convolution of two kernels sampled on the same uniform
/// grid. Output has the same length; index 0 is exactly zero (empty
/// integration range).
fn conv_causal_trapezoid(f: &[f64], g: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    debug_assert_eq!(n, g.len());
    let mut out = vec![0.0; n];
    for i in 1..n {
        let mut acc = 0.5 * (f[0] * g[i] + f[i] * g[0]);
        for k in 1..i {
            acc += f[k] * g[i - k];
        }
        out[i] = acc * dt;
    }
    out
}

/// Cumulative trapezoid: `out[i]` approximates the integral of `f` over
/// `[0, i*dt]`.
fn cumtrapz(f: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for i in 1..f.len() {
        out[i] = out[i - 1] + 0.5 * dt * (f[i - 1] + f[i]);
    }
    out
}

fn check_grid_resolution(params: &RetinaParams, grid: &FineTimeGrid) -> Result<()> {
    let limit = params.min_tau() / 10.0;
    if grid.dt > limit {
        return Err(Error::Precision(format!(
            "grid dt = {} too coarse for smallest time constant {}; need dt <= {}",
            grid.dt,
            params.min_tau(),
            limit
        )));
    }
    Ok(())
}

/// Center temporal kernel T = E_gamma * (delta_0 - w_c E_tau_c), sampled on
/// the fine grid. The delta term is the convolution identity and is applied
/// symbolically; only the remaining kernel pair is convolved numerically.
pub fn eval_center_t(params: &RetinaParams, grid: &FineTimeGrid) -> Result<Vec<f64>> {
    params.validate()?;
    check_grid_resolution(params, grid)?;
    let e_gamma: Vec<f64> = grid
        .times()
        .map(|t| eval_gamma(t, params.tau_g, params.gamma_order_n))
        .collect::<Result<_>>()?;
    if params.w_c == 0.0 {
        return Ok(e_gamma);
    }
    let e_center: Vec<f64> = grid
        .times()
        .map(|t| eval_gamma(t, params.tau_c, 0))
        .collect::<Result<_>>()?;
    let conv = conv_causal_trapezoid(&e_gamma, &e_center, grid.dt);
    Ok(e_gamma
        .iter()
        .zip(conv.iter())
        .map(|(eg, c)| eg - params.w_c * c)
        .collect())
}

/// Delayed surround kernel (T * E_tau_s)(t) from precomputed T samples.
pub fn eval_surround_temporal(
    t_samples: &[f64],
    params: &RetinaParams,
    grid: &FineTimeGrid,
) -> Result<Vec<f64>> {
    if t_samples.len() != grid.samples {
        return Err(Error::Dimension(format!(
            "T has {} samples but grid has {}",
            t_samples.len(),
            grid.samples
        )));
    }
    params.validate()?;
    let e_surround: Vec<f64> = grid
        .times()
        .map(|t| eval_gamma(t, params.tau_s, 0))
        .collect::<Result<_>>()?;
    Ok(conv_causal_trapezoid(t_samples, &e_surround, grid.dt))
}

/// Running integrals R_C, R_S of the two temporal kernels, sampled (with
/// linear interpolation of the cumulative integral) at the requested coarse
/// time bins.
pub fn integrate_weights(
    t_samples: &[f64],
    ts_samples: &[f64],
    grid: &FineTimeGrid,
    time_bins: &[f64],
) -> Result<TemporalWeights> {
    if t_samples.len() != grid.samples || ts_samples.len() != grid.samples {
        return Err(Error::Dimension(format!(
            "kernel sample lengths {} / {} do not match grid {}",
            t_samples.len(),
            ts_samples.len(),
            grid.samples
        )));
    }
    let horizon = grid.last_time();
    for w in time_bins.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Domain(format!(
                "time bins must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let rc_cum = cumtrapz(t_samples, grid.dt);
    let rs_cum = cumtrapz(ts_samples, grid.dt);
    let mut rc = Vec::with_capacity(time_bins.len());
    let mut rs = Vec::with_capacity(time_bins.len());
    for &t in time_bins {
        if !t.is_finite() || t < 0.0 || t > horizon * (1.0 + 1e-12) {
            return Err(Error::Range(format!(
                "time bin {t} outside the sampled horizon [0, {horizon}]"
            )));
        }
        rc.push(interp_cumulative(&rc_cum, grid.dt, t));
        rs.push(interp_cumulative(&rs_cum, grid.dt, t));
    }
    Ok(TemporalWeights { time_bins: time_bins.to_vec(), rc, rs })
}

fn interp_cumulative(cum: &[f64], dt: f64, t: f64) -> f64 {
    let pos = t / dt;
    let i0 = (pos.floor() as usize).min(cum.len() - 1);
    let frac = pos - i0 as f64;
    if frac <= 0.0 || i0 + 1 >= cum.len() {
        cum[i0]
    } else {
        cum[i0] + frac * (cum[i0 + 1] - cum[i0])
    }
}

/// Common limit n!(1 - w_c) of R_C and R_S as t grows (the gamma kernel has
/// mass n!, the surround exponential mass 1).
pub fn asymptotic_weight(params: &RetinaParams) -> f64 {
    factorial(params.gamma_order_n) * (1.0 - params.w_c)
}

/// Precomputed temporal profile on a fine grid: both kernels and their
/// cumulative integrals. The heavier operations are grouped here so the
/// pipeline evaluates the O(samples^2) convolutions once.
#[derive(Debug, Clone)]
pub struct TemporalProfile {
    pub grid: FineTimeGrid,
    /// T(t) on the grid.
    pub center: Vec<f64>,
    /// (T * E_tau_s)(t) on the grid.
    pub surround: Vec<f64>,
    /// Running integral of `center`.
    pub rc: Vec<f64>,
    /// Running integral of `surround`.
    pub rs: Vec<f64>,
}

impl TemporalProfile {
    pub fn compute(params: &RetinaParams, grid: &FineTimeGrid) -> Result<Self> {
        let center = eval_center_t(params, grid)?;
        let surround = eval_surround_temporal(&center, params, grid)?;
        let rc = cumtrapz(&center, grid.dt);
        let rs = cumtrapz(&surround, grid.dt);
        Ok(TemporalProfile { grid: *grid, center, surround, rc, rs })
    }

    pub fn weights_at(&self, time_bins: &[f64]) -> Result<TemporalWeights> {
        integrate_weights(&self.center, &self.surround, &self.grid, time_bins)
    }

    /// First grid time where both running integrals sit within `eps`
    /// (relative) of the asymptotic weight.
    pub fn convergence_time(&self, params: &RetinaParams, eps: f64) -> Result<f64> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::Domain(format!("eps must be > 0, got {eps}")));
        }
        let limit = asymptotic_weight(params);
        if limit == 0.0 {
            return Err(Error::Domain(
                "asymptotic weight is zero (w_c = 1); convergence time undefined".into(),
            ));
        }
        let tol = eps * limit.abs();
        let residual_at = |i: usize| (self.rc[i] - limit).abs().max((self.rs[i] - limit).abs());
        for i in 0..self.grid.samples {
            if residual_at(i) <= tol {
                return Ok(self.grid.time(i));
            }
        }
        Err(Error::NotConverged {
            residual: residual_at(self.grid.samples - 1) / limit.abs(),
            horizon: self.grid.last_time(),
        })
    }
}

/// Convenience wrapper matching the one-shot signature: computes the profile
/// internally and scans for the convergence time.
pub fn convergence_time(params: &RetinaParams, grid: &FineTimeGrid, eps: f64) -> Result<f64> {
    TemporalProfile::compute(params, grid)?.convergence_time(params, eps)
}

/// Default coarse bins: `m` uniform samples on (0, dt_conv] where dt_conv is
/// the 1e-3 relative convergence time of the weights.
pub fn default_time_bins(params: &RetinaParams, grid: &FineTimeGrid, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain("need at least one time bin".into()));
    }
    let profile = TemporalProfile::compute(params, grid)?;
    default_time_bins_from_profile(&profile, params, m)
}

pub fn default_time_bins_from_profile(
    profile: &TemporalProfile,
    params: &RetinaParams,
    m: usize,
) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain("need at least one time bin".into()));
    }
    let dt_conv = profile.convergence_time(params, 1e-3)?;
    if dt_conv == 0.0 {
        return Err(Error::Domain("degenerate convergence time 0".into()));
    }
    Ok((1..=m).map(|j| j as f64 * dt_conv / m as f64).collect())
}
