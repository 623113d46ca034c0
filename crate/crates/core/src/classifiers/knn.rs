use serde::{Deserialize, Serialize};

use super::{check_training_set, Classifier};
use crate::dataset::PostureClass;
use crate::matrix::FeatureMatrix;
use crate::{Error, Real, Result};

/// k-nearest-neighbour classifier under the Manhattan (L1) distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KnnModel<T> {
    k: usize,
    features: FeatureMatrix<T>,
    labels: Vec<PostureClass>,
}

#[inline]
fn manhattan<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).sum()
}

/// Majority label of `neighbors`; equal vote counts go to the lower class.
pub(crate) fn vote(neighbors: impl Iterator<Item = PostureClass>) -> PostureClass {
    let mut counts = [0usize; PostureClass::COUNT];
    for c in neighbors {
        counts[c.index()] += 1;
    }
    let mut best = 0;
    for (i, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = i;
        }
    }
    PostureClass::ALL[best]
}

impl<T: Real> KnnModel<T> {
    pub fn fit(k: usize, features: FeatureMatrix<T>, labels: Vec<PostureClass>) -> Result<Self> {
        check_training_set(&features, &labels)?;
        if k == 0 || k > features.rows() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} must be between 1 and the {} stored samples",
                features.rows()
            )));
        }
        Ok(Self {
            k,
            features,
            labels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn stored(&self) -> usize {
        self.features.rows()
    }

    /// The `k` stored samples closest to `query` as `(distance, index)`,
    /// nearest first. Equal distances keep the lower stored index first.
    pub fn neighbors(&self, query: &[T], k: usize) -> Result<Vec<(T, usize)>> {
        if query.len() != self.features.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.features.cols(),
                found: query.len(),
            });
        }
        let k = k.min(self.features.rows());
        let mut best: Vec<(T, usize)> = Vec::with_capacity(k + 1);
        for (i, row) in self.features.iter_rows().enumerate() {
            let d = manhattan(row, query);
            if best.len() == k {
                if d >= best[k - 1].0 {
                    continue;
                }
                best.pop();
            }
            // insert after every entry with distance <= d
            let pos = best.partition_point(|(bd, _)| *bd <= d);
            best.insert(pos, (d, i));
        }
        Ok(best)
    }

    pub fn label(&self, index: usize) -> PostureClass {
        self.labels[index]
    }
}

impl<T: Real> Classifier<T> for KnnModel<T> {
    fn input_dim(&self) -> usize {
        self.features.cols()
    }

    fn predict(&self, query: &[T]) -> Result<PostureClass> {
        let nn = self.neighbors(query, self.k)?;
        Ok(vote(nn.iter().map(|(_, i)| self.labels[*i])))
    }
}
