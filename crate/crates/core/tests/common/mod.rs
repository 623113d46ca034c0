//! Reference implementations used as oracles by the integration and
//! acceptance tests. They favour obviousness over speed.
#![allow(dead_code)]

use std::path::PathBuf;

use uwb_posture::classifiers::MlpModel;
use uwb_posture::evaluation::ConfusionMatrix;
use uwb_posture::matrix::FeatureMatrix;
use uwb_posture::PostureClass;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_matrix(name: &str) -> ConfusionMatrix {
    let file = std::fs::File::open(fixture(name)).expect("fixture exists");
    ConfusionMatrix::from_csv(file).expect("fixture parses")
}

/// Per-class balanced accuracy bars of the KNN model, classes 0..8.
pub const KNN_BALANCED_ACCURACY: [f64; 9] = [
    0.7278125,
    0.9981249999999999,
    0.61171875,
    0.9898437499999999,
    0.94765625,
    0.9534374999999999,
    0.9924999999999999,
    0.775,
    0.92109375,
];

/// Per-class F1 bars of the KNN model, classes 0..8.
pub const KNN_F1: [f64; 9] = [
    0.6213921901528013,
    0.9852216748768473,
    0.3586744639376218,
    0.9886506935687264,
    0.7206551410373065,
    0.768928220255654,
    0.9924433249370278,
    0.6893353941267387,
    0.7670940170940171,
];

/// Brute force: sort every training point by (L1 distance, index), vote over
/// the first `k`, lowest class wins a tied vote.
pub fn knn_oracle(x: &[Vec<f64>], y: &[PostureClass], query: &[f64], k: usize) -> PostureClass {
    let mut order: Vec<(f64, usize)> = x
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(query).map(|(a, b)| (a - b).abs()).sum(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = [0usize; 9];
    for (_, i) in &order[..k] {
        votes[y[*i].index()] += 1;
    }
    let best = votes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap()
        .0;
    PostureClass::from_index(best).unwrap()
}

pub fn rbf_gram(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| {
                    (-gamma * a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()).exp()
                })
                .collect()
        })
        .collect()
}

/// `½ αᵀQα − Σα` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(k: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}`: the projection is
/// `clip(v − λy)` for the λ that zeroes the constraint, found by bisection.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> (Vec<f64>, f64) {
        let a: Vec<f64> = v
            .iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c))
            .collect();
        let s = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
        (a, s)
    };
    // s(λ) is non-increasing in λ
    let bound = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi)).0
}

/// Minimum of the binary SVM dual by accelerated projected gradient.
pub fn qp_oracle(k: &[Vec<f64>], y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j]).collect())
        .collect();
    // Gershgorin bound on the largest eigenvalue
    let lip = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / lip;
    let mut alpha = vec![0.0; n];
    let mut z = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad: Vec<f64> = (0..n)
            .map(|i| q[i].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() - 1.0)
            .collect();
        let next = project(
            &z.iter()
                .zip(&grad)
                .map(|(zi, gi)| zi - step * gi)
                .collect::<Vec<_>>(),
            y,
            c,
        );
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next
            .iter()
            .zip(&alpha)
            .map(|(a, p)| a + (t - 1.0) / t_next * (a - p))
            .collect();
        alpha = next;
        t = t_next;
    }
    let obj = dual_objective(k, y, &alpha);
    (alpha, obj)
}

/// Largest relative discrepancy between analytic and central-difference
/// gradients, `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(
    model: &MlpModel<f64>,
    x: &FeatureMatrix<f64>,
    targets: &[usize],
    h: f64,
) -> f64 {
    let (_, grad) = model.gradients(x, targets).unwrap();
    let analytic = grad.flatten();
    let mut numeric = Vec::with_capacity(analytic.len());
    let mut probe = model.clone();
    for li in 0..model.layers().len() {
        let count = model.layers()[li].weights.len() + model.layers()[li].bias.len();
        for pi in 0..count {
            let mut eval = |delta: f64| {
                let layer = &mut probe.layers_mut()[li];
                let w = layer.weights.len();
                let slot = if pi < w {
                    &mut layer.weights[pi]
                } else {
                    &mut layer.bias[pi - w]
                };
                let orig = *slot;
                *slot = orig + delta;
                let l = probe.loss(x, targets).unwrap();
                let layer = &mut probe.layers_mut()[li];
                if pi < w {
                    layer.weights[pi] = orig;
                } else {
                    layer.bias[pi - w] = orig;
                }
                l
            };
            numeric.push((eval(h) - eval(-h)) / (2.0 * h));
        }
    }
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}
