//! Node geometry, pairwise range features, ranging error and evaluation noise.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::PostureClass;
use crate::rng::{self, tag};
use crate::{Error, Real, Result};

pub const MAX_NODES: usize = 5;

/// Body-worn UWB node. The discriminant is the node's stable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeId {
    Belly = 0,
    LeftWrist = 1,
    RightWrist = 2,
    LeftAnkle = 3,
    RightAnkle = 4,
}

impl NodeId {
    pub const ALL: [NodeId; MAX_NODES] = [
        NodeId::Belly,
        NodeId::LeftWrist,
        NodeId::RightWrist,
        NodeId::LeftAnkle,
        NodeId::RightAnkle,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeId::Belly => "belly",
            NodeId::LeftWrist => "left-wrist",
            NodeId::RightWrist => "right-wrist",
            NodeId::LeftAnkle => "left-ankle",
            NodeId::RightAnkle => "right-ankle",
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<usize>() {
            return Self::from_index(i)
                .ok_or_else(|| Error::InvalidArgument(format!("node index {i} out of range")));
        }
        Self::ALL
            .into_iter()
            .find(|n| n.name().eq_ignore_ascii_case(s) || n.name().replace('-', "_") == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown node `{s}`")))
    }
}

/// Unordered node pair stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodePair {
    a: NodeId,
    b: NodeId,
}

impl NodePair {
    /// Orders the endpoints canonically. Self-pairs are rejected.
    pub fn new(x: NodeId, y: NodeId) -> Result<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(Self { a: x, b: y }),
            std::cmp::Ordering::Greater => Ok(Self { a: y, b: x }),
            std::cmp::Ordering::Equal => Err(Error::InvalidArgument(format!(
                "node pair ({x}, {y}) is a self-pair"
            ))),
        }
    }

    pub fn a(&self) -> NodeId {
        self.a
    }

    pub fn b(&self) -> NodeId {
        self.b
    }

    /// Column name used by the dataset CSV, e.g. `d_0_3`.
    pub fn column_name(&self) -> String {
        format!("d_{}_{}", self.a.index(), self.b.index())
    }
}

/// Number of pairwise distances between `n` nodes.
#[inline]
pub const fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Inverse of [`pair_count`] for supported node counts.
pub fn node_count_for_pairs(pairs: usize) -> Option<usize> {
    (2..=MAX_NODES).find(|&n| pair_count(n) == pairs)
}

/// All pairs among the first `node_count` nodes in lexicographic order
/// `(0,1), (0,2), ..., (n-2,n-1)`. This order fixes every feature layout.
pub fn canonical_pairs(node_count: usize) -> Result<Vec<NodePair>> {
    if !(2..=MAX_NODES).contains(&node_count) {
        return Err(Error::InvalidNodeCount(node_count));
    }
    let mut pairs = Vec::with_capacity(pair_count(node_count));
    for i in 0..node_count {
        for j in i + 1..node_count {
            pairs.push(NodePair {
                a: NodeId::ALL[i],
                b: NodeId::ALL[j],
            });
        }
    }
    Ok(pairs)
}

/// Set of retained nodes, as a bit mask over node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct NodeSet(u8);

impl NodeSet {
    /// The first `n` nodes.
    pub fn first(n: usize) -> Self {
        NodeSet(((1u16 << n.min(MAX_NODES)) - 1) as u8)
    }

    pub fn all() -> Self {
        Self::first(MAX_NODES)
    }

    pub fn from_nodes(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        NodeSet(nodes.into_iter().fold(0, |m, n| m | (1 << n.index())))
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.0 & (1 << n.index()) != 0
    }

    pub fn insert(&mut self, n: NodeId) {
        self.0 |= 1 << n.index();
    }

    pub fn remove(&mut self, n: NodeId) {
        self.0 &= !(1 << n.index());
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        NodeId::ALL.into_iter().filter(|n| self.contains(*n))
    }

    /// True when every member has an index below `node_count`.
    pub fn within(&self, node_count: usize) -> bool {
        self.iter().all(|n| n.index() < node_count)
    }

    /// Every subset of `0..node_count` with exactly `size` members, in
    /// increasing bit-mask order.
    pub fn subsets_of_size(node_count: usize, size: usize) -> Vec<NodeSet> {
        let full = Self::first(node_count).0 as u16;
        (0..=full)
            .filter(|m| m & !full == 0 && m.count_ones() as usize == size)
            .map(|m| NodeSet(m as u8))
            .collect()
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(NodeId::name).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for NodeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(NodeId::from_str)
            .collect::<Result<Vec<_>>>()
            .map(Self::from_nodes)
    }
}

impl Serialize for NodeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for NodeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<NodeId>::deserialize(d).map(Self::from_nodes)
    }
}

/// One frame of all-to-all ranging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RangeSample<T> {
    /// Seconds; non-decreasing within a stream.
    pub timestamp: f64,
    /// Meters, in canonical pair order.
    pub distances: Vec<T>,
    pub subject: String,
    pub label: Option<PostureClass>,
}

impl<T: Real> RangeSample<T> {
    /// Node count implied by the distance vector length.
    pub fn node_count(&self) -> Option<usize> {
        node_count_for_pairs(self.distances.len())
    }

    /// Checks length against `node_count` and that every distance is finite
    /// and nonnegative.
    pub fn validate(&self, node_count: usize) -> Result<()> {
        if self.distances.len() != pair_count(node_count) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(node_count),
                found: self.distances.len(),
            });
        }
        if let Some(d) = self
            .distances
            .iter()
            .find(|d| !d.is_finite() || **d < T::zero())
        {
            return Err(Error::InvalidArgument(format!(
                "distance {d} is negative or not finite"
            )));
        }
        Ok(())
    }
}

/// Column indices that survive when only some nodes are retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureProjection {
    node_count: usize,
    columns: Vec<usize>,
}

impl FeatureProjection {
    pub fn new(node_count: usize, retained: NodeSet) -> Result<Self> {
        let pairs = canonical_pairs(node_count)?;
        if retained.len() < 2 {
            return Err(Error::InvalidNodeCount(retained.len()));
        }
        if !retained.within(node_count) {
            return Err(Error::InvalidArgument(format!(
                "retained nodes {retained} are not all among the first {node_count} nodes"
            )));
        }
        let columns = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| retained.contains(p.a) && retained.contains(p.b))
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            node_count,
            columns,
        })
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn input_dim(&self) -> usize {
        pair_count(self.node_count)
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn apply<T: Real>(&self, distances: &[T]) -> Result<Vec<T>> {
        if distances.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: distances.len(),
            });
        }
        Ok(self.columns.iter().map(|&c| distances[c]).collect())
    }
}

/// Distances of the canonical pairs whose endpoints are both retained, in
/// canonical order.
pub fn build_features<T: Real>(sample: &RangeSample<T>, retained: NodeSet) -> Result<Vec<T>> {
    let n = sample.node_count().ok_or(Error::DimensionMismatch {
        expected: pair_count(MAX_NODES),
        found: sample.distances.len(),
    })?;
    FeatureProjection::new(n, retained)?.apply(&sample.distances)
}

/// Where evaluation noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScenario {
    #[default]
    None,
    TrainOnly,
    TestOnly,
    Both,
}

impl NoiseScenario {
    pub const ALL: [NoiseScenario; 4] = [
        NoiseScenario::None,
        NoiseScenario::TrainOnly,
        NoiseScenario::TestOnly,
        NoiseScenario::Both,
    ];

    pub fn affects_train(self) -> bool {
        matches!(self, NoiseScenario::TrainOnly | NoiseScenario::Both)
    }

    pub fn affects_test(self) -> bool {
        matches!(self, NoiseScenario::TestOnly | NoiseScenario::Both)
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseScenario::None => "none",
            NoiseScenario::TrainOnly => "train-only",
            NoiseScenario::TestOnly => "test-only",
            NoiseScenario::Both => "both",
        }
    }
}

impl fmt::Display for NoiseScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.name() == s.trim() || n.name().replace('-', "_") == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown noise scenario `{s}`")))
    }
}

/// Additive uniform measurement noise used to stress the classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NoiseSpec<T> {
    pub scenario: NoiseScenario,
    /// Half-width of the uniform perturbation, meters.
    pub max_magnitude: T,
    pub seed: u64,
}

impl<T: Real> NoiseSpec<T> {
    pub const DEFAULT_MAGNITUDE: f64 = 0.30;

    pub fn none() -> Self {
        Self {
            scenario: NoiseScenario::None,
            max_magnitude: T::lit(Self::DEFAULT_MAGNITUDE),
            seed: 0,
        }
    }

    pub fn new(scenario: NoiseScenario, max_magnitude: T, seed: u64) -> Result<Self> {
        if !(max_magnitude >= T::zero()) || !max_magnitude.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise magnitude {max_magnitude} must be finite and nonnegative"
            )));
        }
        Ok(Self {
            scenario,
            max_magnitude,
            seed,
        })
    }

    pub fn with_scenario(mut self, scenario: NoiseScenario) -> Self {
        self.scenario = scenario;
        self
    }

    fn is_identity(&self) -> bool {
        self.scenario == NoiseScenario::None || self.max_magnitude == T::zero()
    }
}

impl<T: Real> Default for NoiseSpec<T> {
    fn default() -> Self {
        Self::none()
    }
}

/// Perturbs every element with an independent draw from
/// `U[-max_magnitude, +max_magnitude]` and clamps at zero.
///
/// Element `i` uses draw `i` of stream `stream_position` under `spec.seed`.
/// The scenario is only consulted for `None`, which makes this the identity;
/// deciding which side of a split receives noise is the caller's job.
pub fn inject_noise<T: Real>(features: &[T], spec: &NoiseSpec<T>, stream_position: u64) -> Vec<T> {
    if spec.is_identity() {
        return features.to_vec();
    }
    let half = spec.max_magnitude.to_f64_lossy();
    let mut draws = rng::stream(spec.seed, stream_position);
    features
        .iter()
        .map(|&v| {
            let noisy = v + T::lit(rng::uniform_symmetric(&mut draws, half));
            noisy.max(T::zero())
        })
        .collect()
}

/// Two-way-ranging error: zero-mean Gaussian with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RangingErrorModel<T> {
    pub sigma: T,
    pub seed: u64,
}

impl<T: Real> RangingErrorModel<T> {
    pub const DEFAULT_SIGMA: f64 = 0.05;

    pub fn new(sigma: T, seed: u64) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ranging sigma {sigma} must be finite and nonnegative"
            )));
        }
        Ok(Self { sigma, seed })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma: T::zero(),
            seed: 0,
        }
    }
}

impl<T: Real> Default for RangingErrorModel<T> {
    fn default() -> Self {
        Self {
            sigma: T::lit(Self::DEFAULT_SIGMA),
            seed: 0,
        }
    }
}

/// Measured range between `p` and `q`: Euclidean distance plus one Gaussian
/// draw addressed by `draw_index`, clamped at zero.
pub fn simulate_range<T: Real>(
    p: [T; 3],
    q: [T; 3],
    model: &RangingErrorModel<T>,
    draw_index: u64,
) -> T {
    let true_distance = p
        .iter()
        .zip(&q)
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum::<T>()
        .sqrt();
    if model.sigma == T::zero() {
        return true_distance;
    }
    let mut draws = rng::stream(rng::derive_seed(model.seed, tag::RANGE_ERROR), draw_index);
    let err = model.sigma * T::lit(rng::standard_normal(&mut draws));
    (true_distance + err).max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_tuples(n: usize) -> Vec<(usize, usize)> {
        canonical_pairs(n)
            .unwrap()
            .iter()
            .map(|p| (p.a().index(), p.b().index()))
            .collect()
    }

    #[test]
    fn canonical_pairs_five_nodes() {
        assert_eq!(
            pair_tuples(5),
            vec![
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4)
            ]
        );
        assert_eq!(pair_tuples(2), vec![(0, 1)]);
        assert!(matches!(
            canonical_pairs(1),
            Err(Error::InvalidNodeCount(1))
        ));
        assert!(matches!(
            canonical_pairs(6),
            Err(Error::InvalidNodeCount(6))
        ));
    }

    #[test]
    fn node_pair_is_canonical() {
        let p = NodePair::new(NodeId::RightAnkle, NodeId::Belly).unwrap();
        assert_eq!((p.a(), p.b()), (NodeId::Belly, NodeId::RightAnkle));
        assert_eq!(p.column_name(), "d_0_4");
        assert!(NodePair::new(NodeId::Belly, NodeId::Belly).is_err());
    }

    fn sample(distances: Vec<f64>) -> RangeSample<f64> {
        RangeSample {
            timestamp: 0.0,
            distances,
            subject: "s".into(),
            label: None,
        }
    }

    #[test]
    fn build_features_projections() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = sample(d.clone());
        assert_eq!(build_features(&s, NodeSet::all()).unwrap(), d);
        let two = NodeSet::from_nodes([NodeId::Belly, NodeId::LeftWrist]);
        assert_eq!(build_features(&s, two).unwrap(), vec![1.0]);
        // d01, d02, d12
        assert_eq!(
            build_features(&s, NodeSet::first(3)).unwrap(),
            vec![1.0, 2.0, 5.0]
        );
        let one = NodeSet::from_nodes([NodeId::Belly]);
        assert!(matches!(
            build_features(&s, one),
            Err(Error::InvalidNodeCount(1))
        ));
    }

    #[test]
    fn build_features_rejects_nodes_outside_sample() {
        let s = sample(vec![1.0, 2.0, 3.0]);
        let bad = NodeSet::from_nodes([NodeId::Belly, NodeId::RightAnkle]);
        assert!(build_features(&s, bad).is_err());
    }

    #[test]
    fn node_set_parsing() {
        let s: NodeSet = "belly,left-wrist,4".parse().unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.contains(NodeId::RightAnkle));
        assert_eq!("all".parse::<NodeSet>().unwrap(), NodeSet::all());
        assert!("elbow".parse::<NodeSet>().is_err());
        assert_eq!(NodeSet::subsets_of_size(5, 2).len(), 10);
        assert_eq!(NodeSet::subsets_of_size(5, 5), vec![NodeSet::all()]);
    }

    #[test]
    fn zero_noise_is_identity() {
        let v = vec![0.5, 1.0, 2.0];
        let spec = NoiseSpec::new(NoiseScenario::Both, 0.0, 3).unwrap();
        assert_eq!(inject_noise(&v, &spec, 9), v);
        let none = NoiseSpec::new(NoiseScenario::None, 0.3, 3).unwrap();
        assert_eq!(inject_noise(&v, &none, 9), v);
    }

    #[test]
    fn noise_is_deterministic() {
        let v = vec![1.0; 10];
        let spec = NoiseSpec::new(NoiseScenario::Both, 0.3, 11).unwrap();
        assert_eq!(inject_noise(&v, &spec, 4), inject_noise(&v, &spec, 4));
        assert_ne!(inject_noise(&v, &spec, 4), inject_noise(&v, &spec, 5));
    }

    #[test]
    fn noise_bounded_over_many_draws() {
        let v: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        let spec = NoiseSpec::new(NoiseScenario::Both, 0.30, 2024).unwrap();
        let mut max_dev: f64 = 0.0;
        for pos in 0..1_000u64 {
            let out = inject_noise(&v, &spec, pos);
            for (a, b) in v.iter().zip(&out) {
                assert!(*b >= 0.0);
                assert!((a - b).abs() <= 0.30 + 1e-12);
                if *a > 0.3 {
                    max_dev = max_dev.max((a - b).abs());
                }
            }
        }
        // 10^4 draws should come close to the bound
        assert!(max_dev > 0.29);
    }

    #[test]
    fn negative_noise_spec_rejected() {
        assert!(NoiseSpec::<f64>::new(NoiseScenario::Both, -0.1, 0).is_err());
        assert!(RangingErrorModel::<f64>::new(-1.0, 0).is_err());
    }

    #[test]
    fn simulate_range_exact_cases() {
        let m = RangingErrorModel::<f64>::noiseless();
        assert_eq!(simulate_range([0.0, 0.0, 0.0], [3.0, 4.0, 0.0], &m, 0), 5.0);
        assert_eq!(simulate_range([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], &m, 0), 0.0);
    }

    #[test]
    fn simulate_range_moments() {
        let m = RangingErrorModel::new(0.05, 77).unwrap();
        let n = 10_000u64;
        let xs: Vec<f64> = (0..n)
            .map(|i| simulate_range([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], &m, i))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        assert!((0.045..=0.055).contains(&sd), "sd = {sd}");
        assert!((mean - 2.0).abs() < 0.005, "mean = {mean}");
    }

    #[test]
    fn works_in_single_precision() {
        let m = RangingErrorModel::<f32>::noiseless();
        assert_eq!(
            simulate_range([0.0f32, 0.0, 0.0], [3.0, 4.0, 0.0], &m, 0),
            5.0
        );
    }

    proptest! {
        #[test]
        fn feature_length_law(mask in 0u8..32) {
            let set = NodeSet::from_nodes(NodeId::ALL.into_iter().filter(|n| mask & (1 << n.index()) != 0));
            let s = sample((0..10).map(f64::from).collect());
            match build_features(&s, set) {
                Ok(f) => prop_assert_eq!(f.len(), pair_count(set.len())),
                Err(_) => prop_assert!(set.len() < 2),
            }
        }

        #[test]
        fn range_is_symmetric(
            p in prop::array::uniform3(-5.0f64..5.0),
            q in prop::array::uniform3(-5.0f64..5.0),
            seed in any::<u64>(),
            idx in any::<u64>(),
        ) {
            let m = RangingErrorModel::new(0.05, seed).unwrap();
            prop_assert_eq!(simulate_range(p, q, &m, idx), simulate_range(q, p, &m, idx));
        }

        #[test]
        fn noise_within_bounds(
            v in prop::collection::vec(0.0f64..5.0, 1..12),
            mag in 0.0f64..0.5,
            seed in any::<u64>(),
            pos in any::<u64>(),
        ) {
            let spec = NoiseSpec::new(NoiseScenario::TestOnly, mag, seed).unwrap();
            let out = inject_noise(&v, &spec, pos);
            prop_assert_eq!(out.len(), v.len());
            for (a, b) in v.iter().zip(&out) {
                prop_assert!(*b >= 0.0 && (a - b).abs() <= mag + 1e-12);
            }
        }
    }
}
