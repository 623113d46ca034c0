use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::matrix::FeatureMatrix;
use crate::{Error, Real, Result};

const WARM_UP_CALLS: usize = 10;

/// Per-prediction wall-clock time, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub max: f64,
    pub count: usize,
}

impl LatencyStats {
    /// `None` for an empty sample.
    pub fn from_samples(seconds: &[f64]) -> Option<Self> {
        if seconds.is_empty() {
            return None;
        }
        let mut sorted = seconds.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        Some(Self {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p95: sorted[rank - 1],
            max: sorted[sorted.len() - 1],
            count: sorted.len(),
        })
    }
}

/// Times single-query predictions, one call per row of `queries`, after ten
/// untimed warm-up calls.
pub fn latency_profile<T: Real, C: Classifier<T> + ?Sized>(
    model: &C,
    queries: &FeatureMatrix<T>,
) -> Result<LatencyStats> {
    if queries.is_empty() {
        return Err(Error::EmptyInput);
    }
    for i in 0..WARM_UP_CALLS {
        std::hint::black_box(model.predict(queries.row(i % queries.rows()))?);
    }
    let mut times = Vec::with_capacity(queries.rows());
    for q in queries.iter_rows() {
        let start = Instant::now();
        std::hint::black_box(model.predict(std::hint::black_box(q))?);
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(LatencyStats::from_samples(&times).expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::KnnModel;
    use crate::dataset::PostureClass;

    #[test]
    fn stats_of_known_sample() {
        let s: Vec<f64> = (1..=20).map(f64::from).collect();
        let st = LatencyStats::from_samples(&s).unwrap();
        assert_eq!((st.mean, st.p95, st.max, st.count), (10.5, 19.0, 20.0, 20));
        assert!(LatencyStats::from_samples(&[]).is_none());
    }

    #[test]
    fn profiles_a_model() {
        let x = FeatureMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let m = KnnModel::fit(1, x.clone(), vec![PostureClass::Up, PostureClass::Down]).unwrap();
        let st = latency_profile(&m, &x).unwrap();
        assert_eq!(st.count, 2);
        assert!(st.mean >= 0.0 && st.max >= st.p95);
        assert!(matches!(
            latency_profile(&m, &FeatureMatrix::<f64>::new(2)),
            Err(Error::EmptyInput)
        ));
    }
}
