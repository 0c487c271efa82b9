//! Run configuration: a line-oriented `key = value` document.
//!
//! `#` starts a comment, blank lines are ignored, every key is optional and
//! unknown keys are rejected. Missing keys fall back to the reference
//! parameter set (see [`ModelParams::default`]).

use std::path::PathBuf;

use crate::calibration::{CalibrationWindow, StructuralFitMode};
use crate::error::{Error, Result};
use crate::gaussmath::shifted_lognormal_params;
use crate::num::Real;
use crate::process::{ModelParams, ProcessKind};
use crate::risk::{default_thresholds, SweepConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T: Real = f64> {
    pub params: ModelParams<T>,
    pub alpha: T,
    pub window: CalibrationWindow<T>,
    pub lower_thresholds: Vec<T>,
    pub structural_mode: StructuralFitMode,
    pub output_dir: PathBuf,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            alpha: T::lit(0.99),
            window: CalibrationWindow::default(),
            lower_thresholds: default_thresholds(),
            structural_mode: StructuralFitMode::LossSpace,
            output_dir: PathBuf::from("."),
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "process",
    "mu",
    "sigma",
    "c",
    "lambda",
    "jump_mean",
    "jump_sd",
    "v0",
    "face",
    "maturity",
    "steps",
    "firms",
    "scenarios",
    "seed",
    "alpha",
    "window_lower",
    "window_upper",
    "bin_width",
    "min_bin_count",
    "lower_thresholds",
    "structural_mode",
    "output_dir",
];

fn parse_real<T: Real>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
        line,
        reason: format!("`{key}` expects a number, got `{value}`"),
    })
}

fn parse_int<N: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<N> {
    value.parse::<N>().map_err(|_| Error::Parse {
        line,
        reason: format!("`{key}` expects a nonnegative integer, got `{value}`"),
    })
}

impl<T: Real> RunConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::constraint("alpha", "must lie in (0, 1)"));
        }
        self.window.validate().map_err(|e| match e {
            Error::Constraint { key, reason } if key == "window" => Error::Constraint {
                key: "window_lower".into(),
                reason,
            },
            other => other,
        })?;
        if self.lower_thresholds.is_empty() {
            return Err(Error::constraint(
                "lower_thresholds",
                "needs at least one value",
            ));
        }
        if self.lower_thresholds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::constraint(
                "lower_thresholds",
                "must be strictly ascending",
            ));
        }
        if self
            .lower_thresholds
            .iter()
            .any(|&t| !(t < self.window.upper))
        {
            return Err(Error::constraint(
                "lower_thresholds",
                "must lie below window_upper",
            ));
        }
        Ok(())
    }

    pub fn sweep_config(&self) -> SweepConfig<T> {
        SweepConfig {
            alpha: self.alpha,
            window: self.window,
            lower_thresholds: self.lower_thresholds.clone(),
            structural_mode: self.structural_mode,
            ..SweepConfig::default()
        }
    }
}

/// Parses a configuration document and checks every constraint.
pub fn parse_config<T: Real>(text: &str) -> Result<RunConfig<T>> {
    let mut config = RunConfig::<T>::default();
    let mut jump_mean = config.params.jump.mean_shifted;
    let mut jump_sd = config.params.jump.sd_shifted;
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            reason: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Parse {
                line,
                reason: format!("unknown key `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                reason: format!("duplicate key `{key}`"),
            });
        }
        let p = &mut config.params;
        match key {
            "process" => p.process_kind = value.parse::<ProcessKind>()?,
            "mu" => p.mu = parse_real(line, key, value)?,
            "sigma" => p.sigma = parse_real(line, key, value)?,
            "c" => p.c = parse_real(line, key, value)?,
            "lambda" => p.lambda = parse_real(line, key, value)?,
            "jump_mean" => jump_mean = parse_real(line, key, value)?,
            "jump_sd" => jump_sd = parse_real(line, key, value)?,
            "v0" => p.v0 = parse_real(line, key, value)?,
            "face" => p.face = parse_real(line, key, value)?,
            "maturity" => p.maturity = parse_real(line, key, value)?,
            "steps" => p.steps = parse_int(line, key, value)?,
            "firms" => p.firms = parse_int(line, key, value)?,
            "scenarios" => p.scenarios = parse_int(line, key, value)?,
            "seed" => p.seed = parse_int(line, key, value)?,
            "alpha" => config.alpha = parse_real(line, key, value)?,
            "window_lower" => config.window.lower = parse_real(line, key, value)?,
            "window_upper" => config.window.upper = parse_real(line, key, value)?,
            "bin_width" => config.window.bin_width = parse_real(line, key, value)?,
            "min_bin_count" => config.window.min_bin_count = parse_int(line, key, value)?,
            "lower_thresholds" => {
                config.lower_thresholds = value
                    .split(',')
                    .map(|v| parse_real(line, key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "structural_mode" => config.structural_mode = value.parse()?,
            "output_dir" => config.output_dir = PathBuf::from(value),
            _ => unreachable!("key list and match arms disagree"),
        }
    }

    config.params.jump = shifted_lognormal_params(jump_mean, jump_sd).map_err(|e| {
        let key = if jump_mean > T::zero() {
            "jump_sd"
        } else {
            "jump_mean"
        };
        Error::constraint(key, e.to_string())
    })?;
    config.validate()?;
    Ok(config)
}
