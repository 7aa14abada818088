//! TOML experiment configuration: schema, parsing, and validation.
//!
//! Validation errors name the offending field so a misconfigured run fails
//! with an actionable message and exit code 2.

use serde::Deserialize;
use subdiff::sde::CoefficientPreset;
use subdiff::subordinator::{Family, SubordinatorSpec};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub subordinator: SubordinatorSection,
    pub model: ModelSection,
    pub run: RunSection,
    #[serde(default)]
    pub moments: MomentsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorSection {
    /// "stable" or "tempered-stable".
    pub family: String,
    pub beta: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// "gbm", "linear-drift-gbm", "ou", or "constant".
    pub preset: String,
    #[serde(default = "default_y0")]
    pub y0: f64,
    pub mu: Option<f64>,
    pub theta: Option<f64>,
    pub sigma: Option<f64>,
}

fn default_y0() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    /// Step size for `simulate-path` and `moments`.
    pub delta: Option<f64>,
    /// Step-size grid for `convergence`, strictly decreasing.
    pub deltas: Option<Vec<f64>>,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    pub seed: u64,
}

fn default_n_paths() -> usize {
    300
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    /// Moment orders to tabulate.
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    /// Argument of the exponential moment `E[exp(lambda E_delta(t))]`.
    #[serde(default = "default_lambda")]
    pub exp_lambda: f64,
    /// Evaluation times; defaults to `[horizon]`.
    pub times: Option<Vec<f64>>,
}

impl Default for MomentsSection {
    fn default() -> Self {
        MomentsSection {
            orders: default_orders(),
            exp_lambda: default_lambda(),
            times: None,
        }
    }
}

fn default_orders() -> Vec<u32> {
    vec![1, 2]
}

fn default_lambda() -> f64 {
    0.5
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
    }

    pub fn subordinator_spec(&self) -> Result<SubordinatorSpec, CliError> {
        let s = &self.subordinator;
        let family = match s.family.as_str() {
            "stable" => Family::Stable,
            "tempered-stable" => Family::TemperedStable,
            other => {
                return Err(CliError::Config(format!(
                    "subordinator.family: expected \"stable\" or \"tempered-stable\", got \"{other}\""
                )))
            }
        };
        SubordinatorSpec::new(family, s.beta, s.kappa, s.drift, s.scale)
            .map_err(|e| CliError::Config(format!("subordinator: {e}")))
    }

    pub fn preset(&self) -> Result<CoefficientPreset, CliError> {
        let m = &self.model;
        let require = |value: Option<f64>, field: &str| {
            value.ok_or_else(|| {
                CliError::Config(format!(
                    "model.{field}: required for preset \"{}\"",
                    m.preset
                ))
            })
        };
        match m.preset.as_str() {
            "gbm" => Ok(CoefficientPreset::Gbm),
            "linear-drift-gbm" => Ok(CoefficientPreset::LinearDriftGbm {
                mu: require(m.mu, "mu")?,
            }),
            "ou" => Ok(CoefficientPreset::OrnsteinUhlenbeck {
                theta: require(m.theta, "theta")?,
                mu: require(m.mu, "mu")?,
                sigma: require(m.sigma, "sigma")?,
            }),
            "constant" => Ok(CoefficientPreset::Constant),
            other => Err(CliError::Config(format!(
                "model.preset: unknown preset \"{other}\""
            ))),
        }
    }

    pub fn y0(&self) -> Vec<f64> {
        vec![self.model.y0]
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        let t = self.run.horizon;
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!(
                "run.horizon: must be finite and > 0, got {t}"
            )));
        }
        Ok(t)
    }

    pub fn delta(&self) -> Result<f64, CliError> {
        let d = self
            .run
            .delta
            .ok_or_else(|| CliError::Config("run.delta: required for this command".into()))?;
        if !(d > 0.0 && d < 1.0) {
            return Err(CliError::Config(format!(
                "run.delta: must lie in (0, 1), got {d}"
            )));
        }
        Ok(d)
    }

    pub fn deltas(&self) -> Result<Vec<f64>, CliError> {
        let ds = self
            .run
            .deltas
            .clone()
            .ok_or_else(|| CliError::Config("run.deltas: required for convergence".into()))?;
        if ds.is_empty() {
            return Err(CliError::Config("run.deltas: must be nonempty".into()));
        }
        if !ds.iter().all(|&d| d > 0.0 && d < 1.0) {
            return Err(CliError::Config(
                "run.deltas: every value must lie in (0, 1)".into(),
            ));
        }
        if !ds.windows(2).all(|w| w[1] < w[0]) {
            return Err(CliError::Config(
                "run.deltas: values must be strictly decreasing".into(),
            ));
        }
        Ok(ds)
    }

    pub fn n_paths(&self) -> Result<usize, CliError> {
        if self.run.n_paths < 2 {
            return Err(CliError::Config(format!(
                "run.n_paths: must be at least 2, got {}",
                self.run.n_paths
            )));
        }
        Ok(self.run.n_paths)
    }

    pub fn moment_times(&self) -> Result<Vec<f64>, CliError> {
        let horizon = self.horizon()?;
        let times = self
            .moments
            .times
            .clone()
            .unwrap_or_else(|| vec![horizon]);
        if !times.iter().all(|&t| (0.0..=horizon).contains(&t)) {
            return Err(CliError::Config(format!(
                "moments.times: every value must lie in [0, {horizon}]"
            )));
        }
        if !times.windows(2).all(|w| w[0] <= w[1]) {
            return Err(CliError::Config(
                "moments.times: values must be sorted".into(),
            ));
        }
        Ok(times)
    }
}
