//! Approximate Bayesian computation with transport distances between
//! empirical distributions of observed and simulated data.

pub mod cloud;
pub mod discrepancy;
pub mod error;
pub mod gaussian;
pub mod metric;
pub mod models;
pub mod param;
pub mod reference;
pub mod rng;
pub mod smc;
pub mod timeseries;
pub mod transport;

pub use cloud::PointCloud;
pub use discrepancy::{DataDistance, Discrepancy, DistanceConfig, DistanceMethod, GatedDistance, SummaryKind};
pub use error::{Error, Result};
pub use gaussian::MvNormal;
pub use metric::{ground_distance, GroundMetric, MetricKind};
pub use models::{build_model, GenerativeModel, ModelOptions, OutputKind};
pub use param::{ParamSpace, ParamVector, Prior1d, ProductPrior, Support};
pub use rng::RandomStream;
