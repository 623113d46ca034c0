use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::latency::LatencyStats;
use super::metrics::{class_metrics, confusion, overall_accuracy, ClassMetrics, ConfusionMatrix};
use super::{stack_subjects, Side};
use crate::classifiers::{
    select_k, select_svm_params, Classifier, Hyperparameters, ModelKind, ModelSpec, Scaler,
    TrainedModel,
};
use crate::dataset::{Dataset, PostureClass, SubjectFeatures};
use crate::ranging::{pair_count, NodeSet, NoiseScenario, NoiseSpec};
use crate::rng::{self, tag};
use crate::{Error, Real, Result};

/// Result of one held-out subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FoldOutcome<T> {
    pub subject_id: String,
    pub test_samples: usize,
    /// Hyperparameters actually used after any selection step.
    pub params: Hyperparameters<T>,
    pub matrix: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EvaluationReport<T> {
    pub model: ModelKind,
    pub spec: ModelSpec<T>,
    pub noise: NoiseSpec<T>,
    pub retained_nodes: NodeSet,
    pub feature_dim: usize,
    pub folds: Vec<FoldOutcome<T>>,
    pub matrix: ConfusionMatrix,
    /// Indexed by class.
    pub per_class: Vec<ClassMetrics>,
    pub overall_accuracy: f64,
    pub mean_balanced_accuracy: f64,
    /// Wall-clock seconds per single-query prediction over all folds.
    /// Absent after [`without_timing`](Self::without_timing).
    pub latency: Option<LatencyStats>,
    pub seed: u64,
}

impl<T: Real> EvaluationReport<T> {
    /// Builds the derived fields from fold outcomes.
    pub fn from_folds(
        spec: ModelSpec<T>,
        noise: NoiseSpec<T>,
        retained_nodes: NodeSet,
        folds: Vec<FoldOutcome<T>>,
        latency: Option<LatencyStats>,
    ) -> Result<Self> {
        let mut matrix = ConfusionMatrix::new();
        for f in &folds {
            matrix.add(&f.matrix);
        }
        let per_class = PostureClass::ALL
            .iter()
            .map(|c| class_metrics(&matrix, *c))
            .collect::<Result<Vec<_>>>()?;
        let mean_balanced_accuracy =
            per_class.iter().map(|m| m.balanced_accuracy).sum::<f64>() / per_class.len() as f64;
        Ok(Self {
            model: spec.kind(),
            overall_accuracy: overall_accuracy(&matrix)?,
            feature_dim: pair_count(retained_nodes.len()),
            spec,
            noise,
            retained_nodes,
            folds,
            matrix,
            per_class,
            mean_balanced_accuracy,
            latency,
            seed: noise.seed,
        })
    }

    /// Copy with the wall-clock fields removed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            latency: None,
            ..self.clone()
        }
    }
}

/// Standardization and model trained for one held-out subject.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel<T> {
    pub params: Hyperparameters<T>,
    pub scaler: Scaler<T>,
    pub model: TrainedModel<T>,
}

fn fit_fold<T: Real>(
    subjects: &[SubjectFeatures<T>],
    held_out: usize,
    spec: &ModelSpec<T>,
    noise: &NoiseSpec<T>,
) -> Result<FoldModel<T>> {
    let train: Vec<&SubjectFeatures<T>> = subjects
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held_out)
        .map(|(_, s)| s)
        .collect();
    let params = match spec {
        ModelSpec::Fixed { params } => params.clone(),
        ModelSpec::KnnElbow { candidates } => Hyperparameters::Knn {
            k: select_k(&train, candidates, noise)?.chosen,
        },
        ModelSpec::SvmGrid { grid } => {
            let (c, gamma) = select_svm_params(&train, grid, noise)?.chosen;
            Hyperparameters::Svm { c, gamma }
        }
    };
    let params = match params {
        Hyperparameters::Mlp(mut cfg) => {
            cfg.seed =
                rng::mix(rng::derive_seed(cfg.seed, tag::MLP_FOLD).wrapping_add(held_out as u64));
            Hyperparameters::Mlp(cfg)
        }
        p => p,
    };
    let (x, y) = stack_subjects(train.iter().copied(), noise, Side::Train)?;
    let scaler = Scaler::fit(&x)?;
    let model = params.fit(scaler.transform_matrix(&x)?, &y)?;
    Ok(FoldModel {
        params,
        scaler,
        model,
    })
}

fn check_subjects<T: Real>(dataset: &Dataset<T>) -> Result<()> {
    match dataset.subjects().len() {
        n if n < 2 => Err(Error::NeedMultipleSubjects(n)),
        _ => Ok(()),
    }
}

/// Trains the model of the fold that holds out `held_out`, exactly as
/// [`run_loocv`] does.
pub fn train_fold<T: Real>(
    dataset: &Dataset<T>,
    spec: &ModelSpec<T>,
    noise: &NoiseSpec<T>,
    retained: NodeSet,
    held_out: &str,
) -> Result<FoldModel<T>> {
    check_subjects(dataset)?;
    let idx = dataset
        .subject_ids()
        .iter()
        .position(|s| *s == held_out)
        .ok_or_else(|| Error::UnknownSubject(held_out.to_string()))?;
    fit_fold(&dataset.subject_features(retained)?, idx, spec, noise)
}

/// Trains on every subject of `dataset`, applying training-side noise and
/// any selection step `spec` requests.
pub fn train_all<T: Real>(
    dataset: &Dataset<T>,
    spec: &ModelSpec<T>,
    noise: &NoiseSpec<T>,
    retained: NodeSet,
) -> Result<FoldModel<T>> {
    fit_fold(
        &dataset.subject_features(retained)?,
        usize::MAX,
        spec,
        noise,
    )
}

/// Subject-wise leave-one-out: every subject is held out once, the model is
/// trained on the rest and the fold confusion matrices are summed.
///
/// Noise is applied to training rows, test rows or both according to the
/// scenario. Hyperparameter selection, when `spec` requests it, only sees
/// the training subjects of the fold.
pub fn run_loocv<T: Real>(
    dataset: &Dataset<T>,
    spec: &ModelSpec<T>,
    noise: &NoiseSpec<T>,
    retained: NodeSet,
) -> Result<EvaluationReport<T>> {
    let mut reports = run_loocv_scenarios(dataset, spec, noise, &[noise.scenario], retained)?;
    Ok(reports.pop().expect("one scenario"))
}

/// [`run_loocv`] for several scenarios of one noise spec, in the given
/// order. Scenarios that agree on training-side noise share their trained
/// models, so each report equals the corresponding single run.
pub fn run_loocv_scenarios<T: Real>(
    dataset: &Dataset<T>,
    spec: &ModelSpec<T>,
    noise: &NoiseSpec<T>,
    scenarios: &[NoiseScenario],
    retained: NodeSet,
) -> Result<Vec<EvaluationReport<T>>> {
    check_subjects(dataset)?;
    let subjects = dataset.subject_features(retained)?;
    let specs: Vec<NoiseSpec<T>> = scenarios.iter().map(|s| noise.with_scenario(*s)).collect();
    // per fold, per scenario: outcome and prediction times
    let per_fold: Vec<Vec<(FoldOutcome<T>, Vec<f64>)>> = (0..subjects.len())
        .into_par_iter()
        .map(|i| {
            let mut out: Vec<Option<(FoldOutcome<T>, Vec<f64>)>> = vec![None; specs.len()];
            for noisy_train in [false, true] {
                let group: Vec<usize> = (0..specs.len())
                    .filter(|j| specs[*j].scenario.affects_train() == noisy_train)
                    .collect();
                let Some(&first) = group.first() else {
                    continue;
                };
                let fold = fit_fold(&subjects, i, spec, &specs[first])?;
                for j in group {
                    out[j] = Some(score_fold(&subjects[i], &fold, &specs[j])?);
                }
            }
            Ok(out
                .into_iter()
                .map(|o| o.expect("every scenario scored"))
                .collect())
        })
        .collect::<Result<_>>()?;
    specs
        .iter()
        .enumerate()
        .map(|(j, noise)| {
            let mut folds = Vec::with_capacity(per_fold.len());
            let mut times = Vec::new();
            for f in &per_fold {
                folds.push(f[j].0.clone());
                times.extend_from_slice(&f[j].1);
            }
            EvaluationReport::from_folds(
                spec.clone(),
                *noise,
                retained,
                folds,
                LatencyStats::from_samples(&times),
            )
        })
        .collect()
}

fn score_fold<T: Real>(
    test: &SubjectFeatures<T>,
    fold: &FoldModel<T>,
    noise: &NoiseSpec<T>,
) -> Result<(FoldOutcome<T>, Vec<f64>)> {
    let (x, truth) = stack_subjects(std::iter::once(test), noise, Side::Test)?;
    let mut pred = Vec::with_capacity(truth.len());
    let mut times = Vec::with_capacity(truth.len());
    let mut scaled = vec![T::zero(); x.cols()];
    for q in x.iter_rows() {
        let start = Instant::now();
        scaled.copy_from_slice(q);
        fold.scaler.transform_in_place(&mut scaled)?;
        pred.push(fold.model.predict(&scaled)?);
        times.push(start.elapsed().as_secs_f64());
    }
    let outcome = FoldOutcome {
        subject_id: test.subject_id.clone(),
        test_samples: truth.len(),
        params: fold.params.clone(),
        matrix: confusion(&truth, &pred)?,
    };
    Ok((outcome, times))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SkeletonParams};
    use crate::ranging::RangingErrorModel;

    fn small(subjects: usize) -> Dataset<f64> {
        generate_synthetic(
            subjects,
            8,
            &SkeletonParams::default(),
            &RangingErrorModel::new(0.05, 3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn matrix_conserves_samples() {
        let d = small(3);
        let r = run_loocv(&d, &ModelSpec::knn(3), &NoiseSpec::none(), NodeSet::all()).unwrap();
        assert_eq!(r.folds.len(), 3);
        assert_eq!(r.matrix.total() as usize, d.len());
        for (f, s) in r.folds.iter().zip(d.subjects()) {
            assert_eq!(f.matrix.total() as usize, s.samples.len());
            assert_eq!(f.subject_id, s.subject_id);
        }
        for c in PostureClass::ALL {
            assert_eq!(r.matrix.row_sum(c), 24);
            assert_eq!(class_metrics(&r.matrix, c).unwrap(), r.per_class[c.index()]);
        }
        assert_eq!(r.feature_dim, 10);
    }

    #[test]
    fn deterministic_per_seed() {
        let d = small(2);
        let noise = NoiseSpec::new(NoiseScenario::Both, 0.3, 11).unwrap();
        let a = run_loocv(&d, &ModelSpec::svm(1.0, 0.1), &noise, NodeSet::all()).unwrap();
        let b = run_loocv(&d, &ModelSpec::svm(1.0, 0.1), &noise, NodeSet::all()).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        assert!(a.latency.is_some());
    }

    #[test]
    fn selection_is_recorded_per_fold() {
        let d = small(3);
        let r = run_loocv(
            &d,
            &ModelSpec::knn_elbow(vec![1, 2, 3]),
            &NoiseSpec::none(),
            NodeSet::all(),
        )
        .unwrap();
        for f in &r.folds {
            assert!(matches!(f.params, Hyperparameters::Knn { k } if (1..=3).contains(&k)));
        }
    }

    #[test]
    fn test_noise_leaves_training_untouched() {
        let d = small(3);
        let clean = NoiseSpec::none();
        let test_only = NoiseSpec::new(NoiseScenario::TestOnly, 0.3, 0).unwrap();
        let train_only = test_only.with_scenario(NoiseScenario::TrainOnly);
        for spec in [
            ModelSpec::knn_elbow(vec![1, 2, 3]),
            ModelSpec::svm(1.0, 0.1),
        ] {
            let a = train_fold(&d, &spec, &clean, NodeSet::all(), "S2").unwrap();
            let b = train_fold(&d, &spec, &test_only, NodeSet::all(), "S2").unwrap();
            let c = train_fold(&d, &spec, &train_only, NodeSet::all(), "S2").unwrap();
            assert_eq!(a, b);
            assert_ne!(a.scaler, c.scaler);
        }
    }

    #[test]
    fn shared_training_matches_single_runs() {
        let d = small(3);
        let noise = NoiseSpec::new(NoiseScenario::None, 0.3, 4).unwrap();
        let spec = ModelSpec::knn_elbow(vec![1, 3]);
        let all =
            run_loocv_scenarios(&d, &spec, &noise, &NoiseScenario::ALL, NodeSet::all()).unwrap();
        for (r, sc) in all.iter().zip(NoiseScenario::ALL) {
            let single = run_loocv(&d, &spec, &noise.with_scenario(sc), NodeSet::all()).unwrap();
            assert_eq!(r.without_timing(), single.without_timing());
        }
    }

    #[test]
    fn train_all_uses_every_sample() {
        let d = small(2);
        let m = train_all(&d, &ModelSpec::knn(1), &NoiseSpec::none(), NodeSet::all()).unwrap();
        assert!(matches!(&m.model, TrainedModel::Knn(k) if k.stored() == d.len()));
    }

    #[test]
    fn errors() {
        let d = small(1);
        assert!(matches!(
            run_loocv(&d, &ModelSpec::knn(1), &NoiseSpec::none(), NodeSet::all()),
            Err(Error::NeedMultipleSubjects(1))
        ));
        let d = small(2);
        assert!(matches!(
            train_fold(
                &d,
                &ModelSpec::knn(1),
                &NoiseSpec::none(),
                NodeSet::all(),
                "nobody"
            ),
            Err(Error::UnknownSubject(_))
        ));
    }
}
