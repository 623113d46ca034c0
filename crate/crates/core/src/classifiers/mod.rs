//! The three posture classifiers, feature standardization and
//! hyperparameter selection.

mod knn;
mod mlp;
mod scaler;
mod selection;
pub mod smo;
mod svm;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use knn::KnnModel;
pub use mlp::{DenseLayer, Gradients, MlpConfig, MlpModel};
pub use scaler::Scaler;
pub(crate) use selection::{select_k, select_svm_params};
pub use selection::{select_k_elbow, svm_grid_search, GridSearchSpec, Selection};
pub use svm::{BinaryMachine, SvmModel};

use crate::dataset::PostureClass;
use crate::matrix::FeatureMatrix;
use crate::ranging::{FeatureProjection, NodeSet};
use crate::{Error, Real, Result};

/// A fitted model that maps one feature vector to a posture.
pub trait Classifier<T: Real>: Send + Sync {
    fn input_dim(&self) -> usize;

    fn predict(&self, query: &[T]) -> Result<PostureClass>;
}

pub(crate) fn check_training_set<T: Real>(x: &FeatureMatrix<T>, y: &[PostureClass]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if x.rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.rows(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Knn,
    Svm,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Knn, ModelKind::Svm, ModelKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::Svm => "svm",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{s}`")))
    }
}

/// Concrete hyperparameters of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", bound = "T: Real")]
pub enum Hyperparameters<T> {
    Knn { k: usize },
    Svm { c: T, gamma: T },
    Mlp(MlpConfig<T>),
}

impl<T: Real> Hyperparameters<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparameters::Knn { .. } => ModelKind::Knn,
            Hyperparameters::Svm { .. } => ModelKind::Svm,
            Hyperparameters::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Defaults: k = 2, C = 1 with γ = 0.1, and the default network.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Knn => Hyperparameters::Knn { k: 2 },
            ModelKind::Svm => Hyperparameters::Svm {
                c: T::one(),
                gamma: T::lit(0.1),
            },
            ModelKind::Mlp => Hyperparameters::Mlp(MlpConfig::default()),
        }
    }

    pub fn fit(&self, x: FeatureMatrix<T>, y: &[PostureClass]) -> Result<TrainedModel<T>> {
        Ok(match self {
            Hyperparameters::Knn { k } => TrainedModel::Knn(KnnModel::fit(*k, x, y.to_vec())?),
            Hyperparameters::Svm { c, gamma } => {
                TrainedModel::Svm(SvmModel::fit(*c, *gamma, &x, y)?)
            }
            Hyperparameters::Mlp(cfg) => TrainedModel::Mlp(MlpModel::fit(&x, y, cfg.clone())?),
        })
    }
}

/// What to train: fixed hyperparameters, or a family whose hyperparameters
/// are chosen by subject-wise validation on the training subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "selection", rename_all = "kebab-case", bound = "T: Real")]
pub enum ModelSpec<T> {
    Fixed { params: Hyperparameters<T> },
    KnnElbow { candidates: Vec<usize> },
    SvmGrid { grid: GridSearchSpec<T> },
}

impl<T: Real> ModelSpec<T> {
    pub fn knn(k: usize) -> Self {
        ModelSpec::Fixed {
            params: Hyperparameters::Knn { k },
        }
    }

    pub fn svm(c: T, gamma: T) -> Self {
        ModelSpec::Fixed {
            params: Hyperparameters::Svm { c, gamma },
        }
    }

    pub fn mlp(config: MlpConfig<T>) -> Self {
        ModelSpec::Fixed {
            params: Hyperparameters::Mlp(config),
        }
    }

    pub fn knn_elbow(candidates: Vec<usize>) -> Self {
        ModelSpec::KnnElbow { candidates }
    }

    pub fn svm_grid(grid: GridSearchSpec<T>) -> Self {
        ModelSpec::SvmGrid { grid }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Fixed { params } => params.kind(),
            ModelSpec::KnnElbow { .. } => ModelKind::Knn,
            ModelSpec::SvmGrid { .. } => ModelKind::Svm,
        }
    }

    /// Elbow candidates 1..=10 for KNN, the default grid for SVM, the
    /// default network for MLP.
    pub fn auto(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Knn => ModelSpec::knn_elbow((1..=10).collect()),
            ModelKind::Svm => ModelSpec::svm_grid(GridSearchSpec::default()),
            ModelKind::Mlp => ModelSpec::mlp(MlpConfig::default()),
        }
    }
}

/// Any of the three fitted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "model",
    rename_all = "lowercase",
    bound = "T: Real"
)]
pub enum TrainedModel<T> {
    Knn(KnnModel<T>),
    Svm(SvmModel<T>),
    Mlp(MlpModel<T>),
}

impl<T: Real> TrainedModel<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Knn(_) => ModelKind::Knn,
            TrainedModel::Svm(_) => ModelKind::Svm,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
        }
    }

    fn inner(&self) -> &dyn Classifier<T> {
        match self {
            TrainedModel::Knn(m) => m,
            TrainedModel::Svm(m) => m,
            TrainedModel::Mlp(m) => m,
        }
    }
}

impl<T: Real> Classifier<T> for TrainedModel<T> {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }

    fn predict(&self, query: &[T]) -> Result<PostureClass> {
        self.inner().predict(query)
    }
}

pub const BUNDLE_FORMAT: &str = "uwb-posture-model";
pub const BUNDLE_VERSION: u32 = 1;

/// Everything needed to classify raw range vectors: node projection,
/// standardization and the fitted model. Serialized as versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelBundle<T> {
    pub format: String,
    pub version: u32,
    pub node_count: usize,
    pub retained_nodes: NodeSet,
    pub scaler: Scaler<T>,
    pub model: TrainedModel<T>,
}

impl<T: Real> ModelBundle<T> {
    pub fn new(
        node_count: usize,
        retained_nodes: NodeSet,
        scaler: Scaler<T>,
        model: TrainedModel<T>,
    ) -> Result<Self> {
        let proj = FeatureProjection::new(node_count, retained_nodes)?;
        if scaler.dim() != proj.dim() || model.input_dim() != proj.dim() {
            return Err(Error::DimensionMismatch {
                expected: proj.dim(),
                found: model.input_dim(),
            });
        }
        Ok(Self {
            format: BUNDLE_FORMAT.to_string(),
            version: BUNDLE_VERSION,
            node_count,
            retained_nodes,
            scaler,
            model,
        })
    }

    pub fn projection(&self) -> Result<FeatureProjection> {
        FeatureProjection::new(self.node_count, self.retained_nodes)
    }

    /// Classifies a full distance vector (all `node_count` nodes).
    pub fn predict_distances(&self, distances: &[T]) -> Result<PostureClass> {
        let mut f = self.projection()?.apply(distances)?;
        self.scaler.transform_in_place(&mut f)?;
        self.model.predict(&f)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let b: Self =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if b.format != BUNDLE_FORMAT || b.version != BUNDLE_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model file {} v{}",
                b.format, b.version
            )));
        }
        Self::new(b.node_count, b.retained_nodes, b.scaler, b.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
