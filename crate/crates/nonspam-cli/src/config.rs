//! Flat `key = value` configuration files.
//!
//! Missing keys take the documented defaults; unknown keys are rejected.
//! `#` starts a comment.

use std::fs;
use std::path::Path;

use nonspam::{
    FineTimeGrid, InitStrategy, MaskSemantics, ReconstructionOptions, RetinaParams, SolverMode,
    StepSize, DEFAULT_DT, DEFAULT_T_MAX,
};

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct Config {
    pub params: RetinaParams,
    pub dt: f64,
    pub t_max: f64,
    /// Number of coarse time bins when `time_bins` is not given.
    pub m: usize,
    /// Explicit bin times (seconds); overrides `m`.
    pub time_bins: Option<Vec<f64>>,
    pub mask_semantics: MaskSemantics,
    pub mode: SolverMode,
    pub step_size: StepSize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub init: InitStrategy,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let opts = ReconstructionOptions::default();
        Config {
            params: RetinaParams::default(),
            dt: DEFAULT_DT,
            t_max: DEFAULT_T_MAX,
            m: 5,
            time_bins: None,
            mask_semantics: opts.mask_semantics,
            mode: opts.mode,
            step_size: opts.step_size,
            max_iters: opts.max_iters,
            grad_tol: opts.grad_tol,
            init: opts.init,
            seed: 1,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Config::parse(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Config, String> {
        let mut config = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            config
                .apply(key, value)
                .map_err(|msg| format!("line {}: {msg}", lineno + 1))?;
        }
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let float = |v: &str| -> Result<f64, String> {
            v.parse::<f64>().map_err(|_| format!("invalid number {v:?} for key {key:?}"))
        };
        let uint = |v: &str| -> Result<u64, String> {
            v.parse::<u64>().map_err(|_| format!("invalid integer {v:?} for key {key:?}"))
        };
        match key {
            "tau_c" => self.params.tau_c = float(value)?,
            "tau_s" => self.params.tau_s = float(value)?,
            "tau_g" => self.params.tau_g = float(value)?,
            "gamma_order_n" => self.params.gamma_order_n = uint(value)? as u32,
            "w_c" => self.params.w_c = float(value)?,
            "w_s" => self.params.w_s = float(value)?,
            "sigma_c" => self.params.sigma_c = float(value)?,
            "sigma_s" => self.params.sigma_s = float(value)?,
            "dt" => self.dt = float(value)?,
            "t_max" => self.t_max = float(value)?,
            "m" => {
                self.m = uint(value)? as usize;
                if self.m == 0 {
                    return Err("m must be at least 1".into());
                }
            }
            "time_bins" => {
                let bins = value
                    .split(',')
                    .map(|v| float(v.trim()))
                    .collect::<Result<Vec<f64>, _>>()?;
                if bins.is_empty() {
                    return Err("time_bins must list at least one time".into());
                }
                self.time_bins = Some(bins);
            }
            "mask_semantics" => {
                self.mask_semantics = match value {
                    "masked-objective" => MaskSemantics::MaskedObjective,
                    "zero-fill" => MaskSemantics::ZeroFill,
                    other => return Err(format!(
                        "unknown mask_semantics {other:?} (expected masked-objective or zero-fill)"
                    )),
                }
            }
            "mode" => {
                self.mode = match value {
                    "fourier-dual" => SolverMode::FourierDual,
                    "gradient-descent" => SolverMode::GradientDescent,
                    other => return Err(format!(
                        "unknown mode {other:?} (expected fourier-dual or gradient-descent)"
                    )),
                }
            }
            "step_size" => {
                self.step_size = if value == "auto" {
                    StepSize::Auto
                } else {
                    StepSize::Fixed(float(value)?)
                }
            }
            "max_iters" => {
                self.max_iters = uint(value)? as usize;
                if self.max_iters == 0 {
                    return Err("max_iters must be at least 1".into());
                }
            }
            "grad_tol" => self.grad_tol = float(value)?,
            "init" => {
                self.init = match value {
                    "zeros" => InitStrategy::Zeros,
                    "dc-estimate" => InitStrategy::DcEstimate,
                    other => return Err(format!(
                        "unknown init {other:?} (expected zeros or dc-estimate)"
                    )),
                }
            }
            "seed" => self.seed = uint(value)?,
            other => return Err(format!("unknown configuration key {other:?}")),
        }
        Ok(())
    }

    pub fn solver_options(&self) -> ReconstructionOptions {
        ReconstructionOptions {
            mode: self.mode,
            mask_semantics: self.mask_semantics,
            step_size: self.step_size,
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            init: self.init,
        }
    }

    pub fn fine_grid(&self) -> Result<FineTimeGrid, CliError> {
        FineTimeGrid::new(self.dt, self.t_max).map_err(CliError::Lib)
    }
}
