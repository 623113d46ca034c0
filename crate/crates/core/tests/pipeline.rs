mod common;

use common::{fixture, fixture_matrix};
use uwb_posture::classifiers::{Hyperparameters, MlpConfig, ModelBundle, Scaler};
use uwb_posture::commander::{replay, ReplayConfig, StreamFrame};
use uwb_posture::dataset::{generate_synthetic, load_csv, save_csv, SkeletonParams};
use uwb_posture::evaluation::{class_metrics, overall_accuracy, run_loocv};
use uwb_posture::ranging::{NoiseSpec, RangingErrorModel};
use uwb_posture::{Dataset, ModelSpec, NodeSet, PostureClass};

#[test]
fn loads_the_small_fixture() {
    let d: Dataset = load_csv(fixture("three_postures.csv")).unwrap();
    assert_eq!(d.len(), 27);
    assert_eq!(d.subject_ids(), vec!["S1"]);
    assert_eq!(d.node_count(), 5);
    let labels: Vec<_> = d.samples().map(|s| s.label.unwrap().index()).collect();
    assert_eq!(labels.iter().filter(|l| **l == 1).count(), 9);
    assert_eq!(*labels.iter().max().unwrap(), 2);
}

#[test]
fn fixture_matrices_are_consistent() {
    for name in ["knn_reference.csv", "svm_reference.csv", "mlp_reference.csv"] {
        let cm = fixture_matrix(name);
        assert_eq!(cm.total(), 3600);
        for c in PostureClass::ALL {
            assert_eq!(cm.row_sum(c), 400);
            let m = class_metrics(&cm, c).unwrap();
            assert!((m.balanced_accuracy - (m.recall + m.specificity) / 2.0).abs() < 1e-15);
        }
    }
    assert!(
        (overall_accuracy(&fixture_matrix("svm_reference.csv")).unwrap() - 3207.0 / 3600.0).abs()
            < 1e-12
    );
}

#[test]
fn csv_round_trip_through_disk() {
    let d: Dataset = load_csv(fixture("three_postures.csv")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.csv");
    save_csv(&d, &path).unwrap();
    assert_eq!(load_csv::<f64>(&path).unwrap(), d);
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        std::fs::read_to_string(fixture("three_postures.csv")).unwrap()
    );
}

#[test]
fn rigid_noiseless_data_is_learned_perfectly() {
    let d: Dataset = generate_synthetic(
        3,
        10,
        &SkeletonParams::default().rigid(),
        &RangingErrorModel::noiseless(),
    )
    .unwrap();
    let mlp = MlpConfig {
        epochs: 60,
        ..MlpConfig::default()
    };
    for spec in [
        ModelSpec::knn(2),
        ModelSpec::svm(1.0, 0.1),
        ModelSpec::mlp(mlp),
    ] {
        let r = run_loocv(&d, &spec, &NoiseSpec::none(), NodeSet::all()).unwrap();
        assert_eq!(r.overall_accuracy, 1.0, "{:?}", spec.kind());
        for (m, c) in r.per_class.iter().zip(PostureClass::ALL) {
            assert_eq!(*m, class_metrics(&r.matrix, c).unwrap());
        }
    }
}

#[test]
fn saved_bundle_drives_a_replay() {
    let d: Dataset = generate_synthetic(
        2,
        20,
        &SkeletonParams::default(),
        &RangingErrorModel::new(0.05, 1).unwrap(),
    )
    .unwrap();
    let feats = d.subject_features(NodeSet::all()).unwrap();
    let mut x = feats[0].x.clone();
    x.extend(&feats[1].x).unwrap();
    let y: Vec<_> = feats.iter().flat_map(|f| f.y.iter().copied()).collect();
    let scaler = Scaler::fit(&x).unwrap();
    let model = Hyperparameters::Svm { c: 1.0, gamma: 0.1 }
        .fit(scaler.transform_matrix(&x).unwrap(), &y)
        .unwrap();
    let bundle = ModelBundle::new(5, NodeSet::all(), scaler, model).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    bundle.save(&path).unwrap();
    let loaded = ModelBundle::load(&path).unwrap();

    let frames: Vec<StreamFrame<f64>> = d
        .samples()
        .take(60)
        .enumerate()
        .map(|(i, s)| StreamFrame {
            t: i as f64 / 15.0,
            d: s.distances.clone(),
        })
        .collect();
    let cfg = ReplayConfig::default();
    let a = replay(&frames, &bundle, &cfg).unwrap();
    let b = replay(&frames, &loaded, &cfg).unwrap();
    let lines = |log: &[uwb_posture::commander::LogEntry<f64>]| {
        log.iter()
            .map(|e| e.without_timing().to_json_line().unwrap())
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(lines(&a), lines(&b));
    assert_eq!(a.len(), 60);
}
