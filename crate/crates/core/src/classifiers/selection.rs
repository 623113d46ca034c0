//! Hyperparameter choice by subject-wise leave-one-out on training subjects.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::vote;
use super::{KnnModel, Scaler, SvmModel};
use crate::dataset::{Dataset, SubjectFeatures};
use crate::evaluation::{stack_subjects, Side};
use crate::ranging::{NodeSet, NoiseSpec};
use crate::{Classifier, Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GridSearchSpec<T> {
    pub c_values: Vec<T>,
    pub gamma_values: Vec<T>,
}

impl<T: Real> Default for GridSearchSpec<T> {
    fn default() -> Self {
        Self {
            c_values: [0.1, 1.0, 10.0, 100.0].map(T::lit).to_vec(),
            gamma_values: [0.01, 0.1, 1.0].map(T::lit).to_vec(),
        }
    }
}

/// Inner validation folds: each training subject held out once.
fn inner_folds<T: Real>(
    subjects: &[&SubjectFeatures<T>],
    noise: &NoiseSpec<T>,
) -> Result<Vec<InnerFold<T>>> {
    if subjects.len() < 2 {
        return Err(Error::NeedMultipleSubjects(subjects.len()));
    }
    (0..subjects.len())
        .map(|v| {
            let (x, y) = stack_subjects(
                subjects
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != v)
                    .map(|(_, s)| *s),
                noise,
                Side::Train,
            )?;
            let scaler = Scaler::fit(&x)?;
            let train_x = scaler.transform_matrix(&x)?;
            // validation subjects are training data too, so they see
            // training-side noise only
            let (vx, vy) = stack_subjects(std::iter::once(subjects[v]), noise, Side::Train)?;
            let val_x = scaler.transform_matrix(&vx)?;
            Ok(InnerFold {
                train_x,
                train_y: y,
                val_x,
                val_y: vy,
            })
        })
        .collect()
}

struct InnerFold<T> {
    train_x: crate::matrix::FeatureMatrix<T>,
    train_y: Vec<crate::PostureClass>,
    val_x: crate::matrix::FeatureMatrix<T>,
    val_y: Vec<crate::PostureClass>,
}

/// Chooses k by mean held-out accuracy; the smallest k wins ties. Also
/// returns the mean accuracy of each (sorted, deduplicated) candidate.
pub(crate) fn select_k<T: Real>(
    subjects: &[&SubjectFeatures<T>],
    candidates: &[usize],
    noise: &NoiseSpec<T>,
) -> Result<Selection<usize>> {
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() || ks[0] == 0 {
        return Err(Error::InvalidArgument(
            "k candidates must be a non-empty list of positive integers".into(),
        ));
    }
    let folds = inner_folds(subjects, noise)?;
    let k_max = *ks.last().expect("non-empty");
    let per_fold: Vec<Vec<f64>> = folds
        .par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let model = KnnModel::fit(k_max, f.train_x.clone(), f.train_y.clone())?;
            let mut correct = vec![0usize; ks.len()];
            for (q, truth) in f.val_x.iter_rows().zip(&f.val_y) {
                let nn = model.neighbors(q, k_max)?;
                for (slot, &k) in ks.iter().enumerate() {
                    if vote(nn[..k].iter().map(|(_, i)| model.label(*i))) == *truth {
                        correct[slot] += 1;
                    }
                }
            }
            Ok(correct
                .into_iter()
                .map(|c| c as f64 / f.val_y.len().max(1) as f64)
                .collect())
        })
        .collect::<Result<_>>()?;
    let means: Vec<(usize, f64)> = ks
        .iter()
        .enumerate()
        .map(|(slot, &k)| {
            (
                k,
                per_fold.iter().map(|a| a[slot]).sum::<f64>() / per_fold.len() as f64,
            )
        })
        .collect();
    let best = pick_first_max(means.iter().map(|(_, a)| *a));
    Ok(Selection {
        chosen: means[best].0,
        scores: means,
    })
}

/// Chooses `(C, γ)` by mean held-out accuracy; ties go to the smaller C,
/// then the smaller γ.
pub(crate) fn select_svm_params<T: Real>(
    subjects: &[&SubjectFeatures<T>],
    spec: &GridSearchSpec<T>,
    noise: &NoiseSpec<T>,
) -> Result<Selection<(T, T)>> {
    let sorted = |v: &[T]| {
        let mut v = v.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).expect("grid values are finite"));
        v.dedup();
        v
    };
    if spec.c_values.is_empty()
        || spec.gamma_values.is_empty()
        || spec
            .c_values
            .iter()
            .chain(&spec.gamma_values)
            .any(|v| !(*v > T::zero()) || !v.is_finite())
    {
        return Err(Error::InvalidArgument(
            "grid candidates must be non-empty lists of positive values".into(),
        ));
    }
    let cells: Vec<(T, T)> = sorted(&spec.c_values)
        .into_iter()
        .flat_map(|c| sorted(&spec.gamma_values).into_iter().map(move |g| (c, g)))
        .collect();
    let folds = inner_folds(subjects, noise)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(ci, fi)| -> Result<f64> {
            let (c, g) = cells[ci];
            let f = &folds[fi];
            let model = SvmModel::fit(c, g, &f.train_x, &f.train_y)?;
            let mut correct = 0usize;
            for (q, truth) in f.val_x.iter_rows().zip(&f.val_y) {
                if model.predict(q)? == *truth {
                    correct += 1;
                }
            }
            Ok(correct as f64 / f.val_y.len().max(1) as f64)
        })
        .collect::<Result<_>>()?;
    let means: Vec<((T, T), f64)> = cells
        .iter()
        .enumerate()
        .map(|(ci, cell)| {
            let s: f64 = scores[ci * folds.len()..(ci + 1) * folds.len()]
                .iter()
                .sum();
            (*cell, s / folds.len() as f64)
        })
        .collect();
    let best = pick_first_max(means.iter().map(|(_, a)| *a));
    Ok(Selection {
        chosen: means[best].0,
        scores: means,
    })
}

fn pick_first_max(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in scores.enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// Outcome of a hyperparameter search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "P: Serialize + serde::de::DeserializeOwned")]
pub struct Selection<P> {
    pub chosen: P,
    /// Mean held-out accuracy of every candidate, in search order.
    pub scores: Vec<(P, f64)>,
}

impl<P: PartialEq> Selection<P> {
    pub fn score_of(&self, candidate: &P) -> Option<f64> {
        self.scores
            .iter()
            .find(|(p, _)| p == candidate)
            .map(|(_, s)| *s)
    }
}

/// Elbow selection of k over the subjects of `train`.
pub fn select_k_elbow<T: Real>(
    train: &Dataset<T>,
    k_candidates: &[usize],
    noise: &NoiseSpec<T>,
) -> Result<Selection<usize>> {
    let subjects = train.subject_features(NodeSet::first(train.node_count()))?;
    let refs: Vec<&SubjectFeatures<T>> = subjects.iter().collect();
    select_k(&refs, k_candidates, noise)
}

/// Grid search of `(C, γ)` over the subjects of `train`.
pub fn svm_grid_search<T: Real>(
    train: &Dataset<T>,
    spec: &GridSearchSpec<T>,
    noise: &NoiseSpec<T>,
) -> Result<Selection<(T, T)>> {
    let subjects = train.subject_features(NodeSet::first(train.node_count()))?;
    let refs: Vec<&SubjectFeatures<T>> = subjects.iter().collect();
    select_svm_params(&refs, spec, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SkeletonParams};
    use crate::ranging::RangingErrorModel;

    fn data(subjects: usize) -> Dataset<f64> {
        generate_synthetic(
            subjects,
            6,
            &SkeletonParams::<f64>::default(),
            &RangingErrorModel::new(0.05, 2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_candidates_are_returned() {
        let d = data(3);
        assert_eq!(
            select_k_elbow(&d, &[7], &NoiseSpec::none()).unwrap().chosen,
            7
        );
        let grid = GridSearchSpec {
            c_values: vec![5.0],
            gamma_values: vec![0.2],
        };
        let sel = svm_grid_search(&d, &grid, &NoiseSpec::none()).unwrap();
        assert_eq!(sel.chosen, (5.0, 0.2));
        assert_eq!(sel.score_of(&(5.0, 0.2)), Some(sel.scores[0].1));
    }

    #[test]
    fn needs_two_subjects() {
        let d = data(1);
        assert!(matches!(
            select_k_elbow(&d, &[1, 2], &NoiseSpec::none()),
            Err(Error::NeedMultipleSubjects(1))
        ));
        assert!(matches!(
            svm_grid_search(&d, &GridSearchSpec::default(), &NoiseSpec::none()),
            Err(Error::NeedMultipleSubjects(1))
        ));
    }

    #[test]
    fn rejects_empty_candidates() {
        let d = data(2);
        assert!(select_k_elbow(&d, &[], &NoiseSpec::none()).is_err());
        let grid = GridSearchSpec {
            c_values: vec![],
            gamma_values: vec![0.1],
        };
        assert!(svm_grid_search(&d, &grid, &NoiseSpec::none()).is_err());
    }

    #[test]
    fn ties_prefer_smallest_k() {
        // noiseless, rigid data: every k up to 5 scores 100 %
        let d = generate_synthetic(
            3,
            6,
            &SkeletonParams::<f64>::default().rigid(),
            &RangingErrorModel::noiseless(),
        )
        .unwrap();
        let subjects = d.subject_features(NodeSet::all()).unwrap();
        let refs: Vec<_> = subjects.iter().collect();
        let Selection { chosen: k, scores } =
            select_k(&refs, &[5, 3, 1, 3], &NoiseSpec::none()).unwrap();
        assert_eq!(
            scores.iter().map(|s| s.0).collect::<Vec<_>>(),
            vec![1, 3, 5]
        );
        assert!(scores.iter().all(|s| s.1 == 1.0));
        assert_eq!(k, 1);
    }
}
