//! Generative models used in the experiments.
//!
//! | name            | θ                                   | output            |
//! |-----------------|-------------------------------------|-------------------|
//! | `normal`        | (θ1, θ2)                            | i.i.d. 2-D        |
//! | `gandk`         | (a, b, g, k)                        | i.i.d. 1-D        |
//! | `bigandk`       | (a1, b1, g1, k1, a2, b2, g2, k2, ρ) | i.i.d. 2-D        |
//! | `toggleswitch`  | (α1, α2, β1, β2, μ, σ, γ)           | i.i.d. 1-D        |
//! | `mg1`           | (θ1, θ2 − θ1, θ3)                   | series            |
//! | `ar1`           | (φ, log σ)                          | series            |
//! | `cosine`        | (ω, φ, log σ, log A)                | series            |
//! | `levy_sv`       | (μ, β, ξ, ω², λ)                    | series            |

mod ar1;
mod cosine;
mod gandk;
mod levy;
mod mg1;
mod normal;
mod toggle;

pub use ar1::Ar1;
pub use cosine::Cosine;
pub use gandk::{gandk_logpdf, gandk_quantile, BivariateGandk, Gandk};
pub use levy::{acf_summary, LevySv};
pub use mg1::{mg1_recursion, Mg1};
pub use normal::{NormalLocation, NORMAL_LOCATION_COV, NORMAL_LOCATION_PRIOR_VAR};
pub use toggle::{ToggleSwitch, DEFAULT_TOGGLE_HORIZON};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::param::{ParamSpace, ParamVector, ProductPrior};
use crate::rng::RandomStream;
use crate::timeseries::Embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// Exchangeable observations.
    Iid,
    /// Rows are ordered in time.
    Series,
}

pub trait GenerativeModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn prior(&self) -> &ProductPrior;

    fn param_space(&self) -> &ParamSpace;

    fn output(&self) -> OutputKind;

    /// Dimension of one observation.
    fn obs_dim(&self) -> usize;

    /// Exactly `n` observations at `theta`.
    fn simulate(&self, theta: &[f64], n: usize, rng: &mut RandomStream) -> Result<PointCloud>;

    fn has_loglik(&self) -> bool {
        false
    }

    fn loglik(&self, _theta: &[f64], _data: &PointCloud) -> Result<f64> {
        Err(Error::InvalidArgument(format!(
            "model {} has no tractable likelihood",
            self.name()
        )))
    }

    fn default_embedding(&self) -> Embedding {
        Embedding::None
    }

    fn prior_sample(&self, rng: &mut RandomStream) -> ParamVector {
        self.prior().sample(rng)
    }

    /// `−∞` outside the parameter space.
    fn prior_logdensity(&self, theta: &[f64]) -> f64 {
        if self.param_space().contains(theta) {
            self.prior().logdensity(theta)
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Knobs that change a model's definition rather than its parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelOptions {
    /// Toggle-switch horizon `T`.
    pub toggle_horizon: Option<usize>,
    /// Upper bound on θ1 for `mg1`, usually the smallest observation.
    pub theta1_max: Option<f64>,
}

pub const MODEL_NAMES: [&str; 8] = [
    "normal",
    "gandk",
    "bigandk",
    "toggleswitch",
    "mg1",
    "ar1",
    "cosine",
    "levy_sv",
];

pub fn build_model(name: &str, opts: &ModelOptions) -> Result<Box<dyn GenerativeModel>> {
    Ok(match name {
        "normal" => Box::new(NormalLocation::new()),
        "gandk" => Box::new(Gandk::new()),
        "bigandk" => Box::new(BivariateGandk::new()),
        "toggleswitch" => Box::new(ToggleSwitch::new(
            opts.toggle_horizon.unwrap_or(DEFAULT_TOGGLE_HORIZON),
        )?),
        "mg1" => Box::new(match opts.theta1_max {
            Some(m) => Mg1::constrained(m)?,
            None => Mg1::new(),
        }),
        "ar1" => Box::new(Ar1::new()),
        "cosine" => Box::new(Cosine::new()),
        "levy_sv" => Box::new(LevySv::new()),
        other => {
            return Err(Error::Unknown(format!(
                "model {other:?} (known: {})",
                MODEL_NAMES.join(", ")
            )))
        }
    })
}

pub(crate) fn check_theta(model: &dyn GenerativeModel, theta: &[f64]) -> Result<()> {
    model.param_space().check(theta)
}

pub(crate) fn check_len(data: &PointCloud, d: usize) -> Result<()> {
    if data.dim() != d {
        return Err(Error::DimensionMismatch(d, data.dim()));
    }
    Ok(())
}
