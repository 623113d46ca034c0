//! Human posture classification from pairwise ultra-wideband ranges.
//!
//! Five UWB nodes worn on the belly, wrists and ankles range against each
//! other; the ten pairwise distances of one frame form a feature vector that
//! is classified into one of nine postures by a k-nearest-neighbour
//! classifier, an RBF support vector machine or a multilayer perceptron. The
//! predicted postures drive simulated aerial and ground robots.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, which is what the command-line tool
//! and the evaluation protocol use.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifiers;
pub mod commander;
pub mod dataset;
mod error;
pub mod evaluation;
pub mod matrix;
pub mod ranging;
mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use classifiers::{Classifier, ModelKind};
pub use dataset::PostureClass;
pub use ranging::{NodeId, NodeSet, NoiseScenario};

pub type RangeSample = ranging::RangeSample<f64>;
pub type NoiseSpec = ranging::NoiseSpec<f64>;
pub type RangingErrorModel = ranging::RangingErrorModel<f64>;

pub type Dataset = dataset::Dataset<f64>;
pub type SubjectRecord = dataset::SubjectRecord<f64>;
pub type SkeletonParams = dataset::SkeletonParams<f64>;

pub type FeatureMatrix = matrix::FeatureMatrix<f64>;
pub type Scaler = classifiers::Scaler<f64>;
pub type KnnModel = classifiers::KnnModel<f64>;
pub type SvmModel = classifiers::SvmModel<f64>;
pub type MlpModel = classifiers::MlpModel<f64>;
pub type MlpConfig = classifiers::MlpConfig<f64>;
pub type GridSearchSpec = classifiers::GridSearchSpec<f64>;
pub type ModelSpec = classifiers::ModelSpec<f64>;
pub type TrainedModel = classifiers::TrainedModel<f64>;
pub type ModelBundle = classifiers::ModelBundle<f64>;

pub type VelocityCommand = commander::VelocityCommand<f64>;
pub type RobotState = commander::RobotState<f64>;
pub type Speeds = commander::Speeds<f64>;

pub type EvaluationReport = evaluation::EvaluationReport<f64>;
