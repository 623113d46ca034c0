//! Confusion matrices, per-class metrics and the subject-wise evaluation
//! protocol: leave-one-subject-out runs, noise scenarios, node ablation and
//! prediction latency.

mod latency;
mod loocv;
mod metrics;
mod sweep;

pub use latency::{latency_profile, LatencyStats};
pub use loocv::{
    run_loocv, run_loocv_scenarios, train_all, train_fold, EvaluationReport, FoldModel, FoldOutcome,
};
pub use metrics::{class_metrics, confusion, overall_accuracy, ClassMetrics, ConfusionMatrix};
pub use sweep::{
    node_ablation, noise_sweep, AblationCell, AblationPolicy, AblationTable, NoiseSweep, SweepCell,
    FIXED_DROP_ORDER,
};

use crate::dataset::{PostureClass, SubjectFeatures};
use crate::matrix::FeatureMatrix;
use crate::ranging::{inject_noise, NoiseSpec};
use crate::rng::{self, tag};
use crate::{Real, Result};

/// Which half of a split a feature row belongs to. Train and test noise are
/// drawn from independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Train,
    Test,
}

/// Stacks subjects into one matrix, perturbing rows when the scenario puts
/// noise on `side`. Row `i` of a subject uses stream `offset + i`.
pub(crate) fn stack_subjects<'a, T: Real + 'a>(
    subjects: impl Iterator<Item = &'a SubjectFeatures<T>>,
    noise: &NoiseSpec<T>,
    side: Side,
) -> Result<(FeatureMatrix<T>, Vec<PostureClass>)> {
    let noisy = match side {
        Side::Train => noise.scenario.affects_train(),
        Side::Test => noise.scenario.affects_test(),
    };
    let side_spec = NoiseSpec {
        seed: rng::derive_seed(
            noise.seed,
            match side {
                Side::Train => tag::TRAIN_NOISE,
                Side::Test => tag::TEST_NOISE,
            },
        ),
        ..*noise
    };
    let mut x: Option<FeatureMatrix<T>> = None;
    let mut y = Vec::new();
    for s in subjects {
        let m = x.get_or_insert_with(|| FeatureMatrix::new(s.x.cols()));
        if noisy {
            for (i, row) in s.x.iter_rows().enumerate() {
                m.push_row(&inject_noise(row, &side_spec, s.offset + i as u64))?;
            }
        } else {
            m.extend(&s.x)?;
        }
        y.extend_from_slice(&s.y);
    }
    Ok((x.unwrap_or_else(|| FeatureMatrix::new(0)), y))
}
