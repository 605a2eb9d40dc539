//! Experiment configuration: `key = value` text format with defaults,
//! overrides, and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::GroupFamily;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{key}`")]
    UnknownKey { key: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    BadLine { line: usize, text: String },
    #[error("invalid value `{value}` for key `{key}`: expected {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("failed to read configuration: {0}")]
    Io(#[from] std::io::Error),
}

/// Which task family the experiment samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Sinusoid regression tasks related by output-space group elements.
    Sinusoid,
    /// Pendulum dynamics tasks over a grid of masses and lengths.
    Pendulum,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Sinusoid => "sinusoid",
            Preset::Pendulum => "pendulum",
        })
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sinusoid" => Ok(Preset::Sinusoid),
            "pendulum" => Ok(Preset::Pendulum),
            other => Err(format!("unknown preset `{other}` (expected sinusoid or pendulum)")),
        }
    }
}

/// A target-fitting strategy compared by the transfer experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Scratch,
    Leaf,
    Similarity,
    LeafTrue,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Scratch => "scratch",
            Strategy::Leaf => "leaf",
            Strategy::Similarity => "similarity",
            Strategy::LeafTrue => "leaf-true",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scratch" => Ok(Strategy::Scratch),
            "leaf" => Ok(Strategy::Leaf),
            "similarity" => Ok(Strategy::Similarity),
            "leaf-true" => Ok(Strategy::LeafTrue),
            other => Err(format!(
                "unknown strategy `{other}` (expected scratch, leaf, similarity, or leaf-true)"
            )),
        }
    }
}

/// Full experiment settings. Every field maps to one `key = value` line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Preset,
    /// Group relating the tasks (sinusoid preset only; ignored by pendulum).
    pub group: GroupFamily,
    /// Number of source tasks.
    pub k_source: usize,
    /// Training points per task.
    pub n_per_task: usize,
    /// Label noise standard deviation.
    pub noise_sigma: f64,
    /// Gradient-descent iteration budget shared by every strategy.
    pub budget_iters: usize,
    pub trials: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub gd_step: f64,
    pub gd_tol: f64,
    /// Ridge weight on non-constant coefficients.
    pub l2: f64,
    /// Worker threads for trials; results do not depend on this, so it is
    /// excluded from serialized reports and from [`resolved_text`](Self::resolved_text)
    /// to keep emitted files byte-identical across worker counts.
    #[serde(skip_serializing, default = "default_jobs")]
    pub jobs: usize,
}

fn default_jobs() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Preset::Sinusoid,
            group: GroupFamily::Affine,
            // eight sources pin the shared block tightly enough that the
            // leaf strategy's advantage is stable across seeds
            k_source: 8,
            n_per_task: 20,
            noise_sigma: 0.05,
            budget_iters: 2000,
            trials: 50,
            seed: 42,
            strategies: vec![
                Strategy::Scratch,
                Strategy::Leaf,
                Strategy::Similarity,
                Strategy::LeafTrue,
            ],
            gd_step: 0.2,
            gd_tol: 1e-9,
            l2: 0.0,
            jobs: 1,
        }
    }
}

const KEYS: &[&str] = &[
    "experiment",
    "group",
    "k_source",
    "n_per_task",
    "noise_sigma",
    "budget_iters",
    "trials",
    "seed",
    "strategies",
    "gd_step",
    "gd_tol",
    "l2",
    "jobs",
];

fn bad_value(key: &str, value: &str, expected: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: expected.to_string(),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment;
    /// blank lines are ignored.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine {
                    line: i + 1,
                    text: raw.trim().to_string(),
                });
            };
            cfg.apply(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Sets one key from its text form.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => {
                self.experiment = value.parse().map_err(|e: String| bad_value(key, value, &e))?
            }
            "group" => {
                self.group = value.parse().map_err(|e: String| bad_value(key, value, &e))?
            }
            "k_source" => {
                self.k_source = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a positive integer"))?
            }
            "n_per_task" => {
                self.n_per_task = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a positive integer"))?
            }
            "noise_sigma" => {
                self.noise_sigma = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a non-negative number"))?
            }
            "budget_iters" => {
                self.budget_iters = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a positive integer"))?
            }
            "trials" => {
                self.trials = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a positive integer"))?
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "an unsigned integer"))?
            }
            "strategies" => {
                let parsed: Result<Vec<Strategy>, String> = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Strategy::from_str)
                    .collect();
                self.strategies = parsed.map_err(|e| bad_value(key, value, &e))?;
            }
            "gd_step" => {
                self.gd_step = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a positive number"))?
            }
            "gd_tol" => {
                self.gd_tol = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a non-negative number"))?
            }
            "l2" => {
                self.l2 = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a non-negative number"))?
            }
            "jobs" => {
                self.jobs = value
                    .parse()
                    .map_err(|_| bad_value(key, value, "a positive integer"))?
            }
            other => {
                return Err(ConfigError::UnknownKey {
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Rejects settings no experiment can run with.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()));
        }
        if self.k_source < 2 {
            return Err(ConfigError::Invalid(
                "k_source must be at least 2 (multitask fitting needs two tasks)".into(),
            ));
        }
        if self.n_per_task == 0 {
            return Err(ConfigError::Invalid("n_per_task must be at least 1".into()));
        }
        if self.budget_iters == 0 {
            return Err(ConfigError::Invalid("budget_iters must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(ConfigError::Invalid("strategies must not be empty".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "noise_sigma must be non-negative and finite, got {}",
                self.noise_sigma
            )));
        }
        if !(self.gd_step > 0.0) || !self.gd_step.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "gd_step must be positive and finite, got {}",
                self.gd_step
            )));
        }
        if !(self.gd_tol >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "gd_tol must be non-negative, got {}",
                self.gd_tol
            )));
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "l2 must be non-negative and finite, got {}",
                self.l2
            )));
        }
        if self.jobs == 0 {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        match self.experiment {
            Preset::Sinusoid => {
                if self.group == GroupFamily::Rotation2D {
                    return Err(ConfigError::Invalid(
                        "rotation-2d does not act on sinusoid tasks; use translation or affine"
                            .into(),
                    ));
                }
            }
            Preset::Pendulum => {
                if self.k_source > 24 {
                    return Err(ConfigError::Invalid(
                        "pendulum preset draws sources from a 5x5 grid minus the target; \
                         k_source can be at most 24"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "experiment" => self.experiment.to_string(),
            "group" => self.group.to_string(),
            "k_source" => self.k_source.to_string(),
            "n_per_task" => self.n_per_task.to_string(),
            "noise_sigma" => self.noise_sigma.to_string(),
            "budget_iters" => self.budget_iters.to_string(),
            "trials" => self.trials.to_string(),
            "seed" => self.seed.to_string(),
            "strategies" => self
                .strategies
                .iter()
                .map(Strategy::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "gd_step" => self.gd_step.to_string(),
            "gd_tol" => self.gd_tol.to_string(),
            "l2" => self.l2.to_string(),
            "jobs" => self.jobs.to_string(),
            _ => unreachable!("value_of called with unknown key"),
        }
    }

    /// The full configuration as `key = value` lines in canonical order;
    /// parseable back by [`parse_str`](Self::parse_str). `jobs` is omitted
    /// so archived configs stay independent of the worker count.
    pub fn resolved_text(&self) -> String {
        KEYS.iter()
            .filter(|k| **k != "jobs")
            .map(|k| format!("{k} = {}", self.value_of(k)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment, Preset::Sinusoid);
        assert_eq!(cfg.strategies.len(), 4);
    }

    #[test]
    fn parses_overrides_comments_and_blanks() {
        let text = "\n# comment line\nexperiment = pendulum\n\ntrials = 7  # trailing comment\nstrategies = scratch, leaf\nseed=9\n";
        let cfg = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(cfg.experiment, Preset::Pendulum);
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.strategies, vec![Strategy::Scratch, Strategy::Leaf]);
        // untouched keys keep defaults
        assert_eq!(cfg.n_per_task, ExperimentConfig::default().n_per_task);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(matches!(
            ExperimentConfig::parse_str("unknown_key = 3"),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("just some text"),
            Err(ConfigError::BadLine { line: 1, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("trials = many"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse_str("strategies = scratch,warp"),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn validation_catches_bad_combinations() {
        let mut cfg = ExperimentConfig::default();
        cfg.group = GroupFamily::Rotation2D;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.experiment = Preset::Pendulum;
        cfg.k_source = 25;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.k_source = 1;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.strategies.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.noise_sigma = -0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn resolved_text_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply("experiment", "pendulum").unwrap();
        cfg.apply("noise_sigma", "0.25").unwrap();
        cfg.apply("strategies", "leaf,scratch").unwrap();
        let text = cfg.resolved_text();
        let back = ExperimentConfig::parse_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(text.contains("experiment = pendulum"));
        assert!(text.contains("strategies = leaf,scratch"));
    }
}
