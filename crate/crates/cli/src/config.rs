//! JSON run configuration for the `smc` subcommand.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wabc::discrepancy::{DistanceConfig, DistanceMethod, SummaryKind};
use wabc::models::ModelOptions;
use wabc::smc::{SmcConfig, DEFAULT_TRIAL_CAP};
use wabc::timeseries::{aspect_ratio_lambda, Embedding, ResidualModel, Series};
use wabc::{GenerativeModel, GroundMetric, PointCloud};

use crate::CliError;

fn default_method() -> String {
    "wasserstein".into()
}
fn default_particles() -> usize {
    2048
}
fn default_alpha() -> f64 {
    0.5
}
fn default_hits() -> usize {
    2
}
fn default_components() -> usize {
    5
}
fn default_passes() -> usize {
    1
}
fn default_trial_cap() -> u64 {
    DEFAULT_TRIAL_CAP
}
fn default_p() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingSpec {
    #[default]
    None,
    /// Either a fixed `lambda` or the trace-plot aspect ratio `[H, V]`
    /// (default `[1, 1]`).
    Curve {
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        aspect: Option<[f64; 2]>,
    },
    Delay {
        lags: Vec<usize>,
        #[serde(default = "one")]
        stride: usize,
    },
    /// Residuals of the configured model (`ar1` or `cosine`).
    Residual,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default = "euclidean")]
    pub kind: String,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn euclidean() -> String {
    "euclidean".into()
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            kind: euclidean(),
            p: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SummarySpec {
    Mean,
    AcfSquares { lags: usize },
}

/// One distance: method, embedding, ground metric and their options.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DistanceSpec {
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub subsample: Option<usize>,
    #[serde(default)]
    pub summary: Option<SummarySpec>,
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SecondStage {
    pub distance: DistanceSpec,
    pub budget: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelOptionsSpec {
    #[serde(default)]
    pub toggle_horizon: Option<usize>,
    /// Restrict the `mg1` prior on θ1 to `[0, min y]`.
    #[serde(default)]
    pub constrain_theta1: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default)]
    pub model_options: ModelOptionsSpec,
    /// Parameter for synthetic observed data, used when `data` is absent.
    #[serde(default)]
    pub theta_true: Option<Vec<f64>>,
    /// Observed data file; relative paths resolve against the config file.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub subsample: Option<usize>,
    #[serde(default)]
    pub summary: Option<SummarySpec>,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_hits")]
    pub hits: usize,
    #[serde(default = "default_components")]
    pub components: usize,
    pub budget: u64,
    #[serde(default = "default_passes")]
    pub passes: usize,
    #[serde(default = "default_trial_cap")]
    pub trial_cap: u64,
    #[serde(default)]
    pub max_steps: Option<usize>,
    pub seed: u64,
    /// Seed of the synthetic observed data; defaults to `seed`.
    #[serde(default)]
    pub data_seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Also write the particles of every step under `steps/`.
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub second_stage: Option<SecondStage>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn distance(&self) -> DistanceSpec {
        DistanceSpec {
            method: self.method.clone(),
            embedding: self.embedding.clone(),
            metric: self.metric.clone(),
            subsample: self.subsample,
            summary: self.summary.clone(),
            bandwidth: self.bandwidth,
        }
    }

    pub fn smc_config(&self, budget: u64) -> SmcConfig {
        SmcConfig {
            particles: self.particles,
            alpha: self.alpha,
            hits: self.hits,
            components: self.components,
            budget,
            seed: self.seed,
            passes: self.passes,
            trial_cap: self.trial_cap,
            max_steps: self.max_steps,
        }
    }

    pub fn model_options(&self, observed: Option<&PointCloud>) -> ModelOptions {
        let theta1_max = match (self.model_options.constrain_theta1, observed) {
            (true, Some(y)) => Some(y.as_slice().iter().cloned().fold(f64::INFINITY, f64::min)),
            _ => None,
        };
        ModelOptions {
            toggle_horizon: self.model_options.toggle_horizon,
            theta1_max,
        }
    }
}

pub fn parse_metric(kind: &str, p: f64) -> Result<GroundMetric, CliError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(CliError::Usage(format!("order p must be >= 1, got {p}")));
    }
    Ok(match kind {
        "euclidean" => GroundMetric::euclidean(p),
        "l1" => GroundMetric::l1(p),
        other => return Err(CliError::Usage(format!("unknown ground metric {other:?}"))),
    })
}

impl DistanceSpec {
    /// Resolves the distance against the observed data and the model.
    pub fn build(&self, observed: &PointCloud, model: &dyn GenerativeModel) -> Result<DistanceConfig, CliError> {
        let usage = |e: wabc::Error| CliError::Usage(e.to_string());
        let mut method = DistanceMethod::parse(&self.method).map_err(usage)?;
        match (&mut method, &self.summary) {
            (DistanceMethod::Summary(k), Some(s)) => {
                *k = match s {
                    SummarySpec::Mean => SummaryKind::Mean,
                    SummarySpec::AcfSquares { lags } => SummaryKind::AcfSquares { lags: *lags },
                }
            }
            (DistanceMethod::Summary(_), None) => {}
            (_, Some(_)) => return Err(CliError::Usage("`summary` is only valid with method \"summary\"".into())),
            _ => {}
        }
        if let Some(h) = self.bandwidth {
            match &mut method {
                DistanceMethod::Mmd { bandwidth } => *bandwidth = Some(h),
                _ => return Err(CliError::Usage("`bandwidth` is only valid with method \"mmd\"".into())),
            }
        }
        let mut metric = parse_metric(&self.metric.kind, self.metric.p)?;
        let embedding = match &self.embedding {
            EmbeddingSpec::None => Embedding::None,
            EmbeddingSpec::Curve { lambda, aspect } => {
                let lambda = match (lambda, aspect) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::Usage("curve embedding takes `lambda` or `aspect`, not both".into()))
                    }
                    (Some(l), None) => *l,
                    (None, a) => {
                        let [h, v] = a.unwrap_or([1.0, 1.0]);
                        aspect_ratio_lambda(&Series::new(observed.clone()), h, v).map_err(usage)?
                    }
                };
                metric = GroundMetric::curve_match(lambda, self.metric.p).map_err(usage)?;
                Embedding::Curve { lambda }
            }
            EmbeddingSpec::Delay { lags, stride } => Embedding::Delay {
                lags: lags.clone(),
                stride: *stride,
            },
            EmbeddingSpec::Residual => Embedding::Residual(ResidualModel::parse(model.name()).map_err(usage)?),
        };
        let mut cfg = DistanceConfig::new(method, embedding, metric);
        cfg.subsample = self.subsample;
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}
