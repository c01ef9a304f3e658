use crate::error::{Error, Result};

/// Scalar constants of the non-separable spatiotemporal filter.
///
/// Time constants are in seconds, Gaussian widths in pixels, weights
/// dimensionless. The defaults approximate the spectrum and speed of retinal
/// center-surround processing and are used throughout the test suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetinaParams {
    /// Center low-pass time constant.
    pub tau_c: f64,
    /// Surround delay time constant.
    pub tau_s: f64,
    /// Gamma (photoreceptor) time constant.
    pub tau_g: f64,
    /// Order of the gamma temporal kernel; 0 reduces it to an exponential.
    pub gamma_order_n: u32,
    /// Center weight.
    pub w_c: f64,
    /// Surround weight.
    pub w_s: f64,
    /// Center Gaussian width, pixels.
    pub sigma_c: f64,
    /// Surround Gaussian width, pixels.
    pub sigma_s: f64,
}

impl Default for RetinaParams {
    fn default() -> Self {
        RetinaParams {
            tau_c: 0.020,
            tau_s: 0.004,
            tau_g: 0.005,
            gamma_order_n: 0,
            w_c: 0.75,
            w_s: 1.0,
            sigma_c: 0.5,
            sigma_s: 1.5,
        }
    }
}

impl RetinaParams {
    /// Hard validity: positive time constants and widths, finite weights.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau_c", self.tau_c), ("tau_s", self.tau_s), ("tau_g", self.tau_g)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("sigma_c", self.sigma_c), ("sigma_s", self.sigma_s)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("w_c", self.w_c), ("w_s", self.w_s)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Soft diagnostics: parameter choices that are legal but collapse the
    /// filter's asymptotics. `w_c = 1` zeroes the asymptotic DoG (the running
    /// weights converge to n!(1-w_c)); it is reported here, never rejected.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.w_c == 1.0 {
            out.push("w_c = 1: asymptotic weight n!(1-w_c) vanishes; the filter decays to zero".into());
        } else if self.w_c <= 0.0 || self.w_c > 1.0 {
            out.push(format!(
                "w_c = {} outside (0, 1): asymptotic weight is not a positive fraction of n!",
                self.w_c
            ));
        }
        out
    }

    /// Smallest of the three time constants; the fine grid must resolve it.
    pub fn min_tau(&self) -> f64 {
        self.tau_c.min(self.tau_s).min(self.tau_g)
    }

    pub fn max_tau(&self) -> f64 {
        self.tau_c.max(self.tau_s).max(self.tau_g)
    }
}

/// Uniform internal time grid: `samples` points `0, dt, 2dt, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineTimeGrid {
    pub dt: f64,
    pub t_max: f64,
    pub samples: usize,
}

/// Default quadrature step, seconds. Resolves the smallest default time
/// constant (4 ms) with 160 samples and keeps the trapezoid error on the
/// running integrals below [`QUADRATURE_TOL`].
pub const DEFAULT_DT: f64 = 2.5e-5;

/// Default horizon, seconds: 25 time constants of the slowest default kernel.
pub const DEFAULT_T_MAX: f64 = 0.5;

/// Claimed absolute quadrature accuracy of the running integrals on the
/// default grid.
pub const QUADRATURE_TOL: f64 = 1e-5;

impl Default for FineTimeGrid {
    fn default() -> Self {
        // Defaults satisfy their own invariants.
        FineTimeGrid::new(DEFAULT_DT, DEFAULT_T_MAX).unwrap()
    }
}

impl FineTimeGrid {
    pub fn new(dt: f64, t_max: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::Domain(format!("grid dt must be finite and > 0, got {dt}")));
        }
        if !t_max.is_finite() || t_max < dt {
            return Err(Error::Domain(format!("grid t_max must be >= dt, got {t_max}")));
        }
        let samples = (t_max / dt).floor() as usize + 1;
        Ok(FineTimeGrid { dt, t_max, samples })
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Last representable grid time. `floor(t_max/dt)*dt`; may sit a hair
    /// below `t_max` when `t_max/dt` is not integral.
    pub fn last_time(&self) -> f64 {
        self.time(self.samples - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples).map(|i| self.time(i))
    }
}
