use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::loocv::{run_loocv, run_loocv_scenarios, EvaluationReport};
use crate::classifiers::{ModelKind, ModelSpec};
use crate::dataset::Dataset;
use crate::ranging::{pair_count, NodeId, NodeSet, NoiseScenario, NoiseSpec, MAX_NODES};
use crate::{Error, Real, Result};

/// Nodes removed one at a time when ablating with
/// [`AblationPolicy::FixedOrder`]: the first entry goes first.
pub const FIXED_DROP_ORDER: [NodeId; 3] =
    [NodeId::RightAnkle, NodeId::LeftAnkle, NodeId::RightWrist];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SweepCell<T> {
    pub model: ModelKind,
    pub scenario: NoiseScenario,
    pub report: EvaluationReport<T>,
}

/// One LOOCV report per (model spec, scenario).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NoiseSweep<T> {
    pub magnitude: T,
    pub seed: u64,
    pub cells: Vec<SweepCell<T>>,
}

impl<T: Real> NoiseSweep<T> {
    pub fn get(&self, model: ModelKind, scenario: NoiseScenario) -> Option<&EvaluationReport<T>> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.scenario == scenario)
            .map(|c| &c.report)
    }
}

/// Runs every spec under all four noise scenarios. Selection steps in a spec
/// are repeated for each scenario.
pub fn noise_sweep<T: Real>(
    dataset: &Dataset<T>,
    specs: &[ModelSpec<T>],
    magnitude: T,
    seed: u64,
    retained: NodeSet,
) -> Result<NoiseSweep<T>> {
    let base = NoiseSpec::new(NoiseScenario::None, magnitude, seed)?;
    let mut cells = Vec::with_capacity(specs.len() * NoiseScenario::ALL.len());
    for spec in specs {
        let reports = run_loocv_scenarios(dataset, spec, &base, &NoiseScenario::ALL, retained)?;
        for (scenario, report) in NoiseScenario::ALL.into_iter().zip(reports) {
            cells.push(SweepCell {
                model: spec.kind(),
                scenario,
                report,
            });
        }
    }
    Ok(NoiseSweep {
        magnitude,
        seed,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationPolicy {
    /// Drop nodes in [`FIXED_DROP_ORDER`].
    FixedOrder,
    /// Average over every node subset of each size.
    AllSubsets,
}

impl AblationPolicy {
    pub fn name(self) -> &'static str {
        match self {
            AblationPolicy::FixedOrder => "fixed-order",
            AblationPolicy::AllSubsets => "all-subsets",
        }
    }

    /// Node subsets evaluated for `size` retained nodes out of five.
    pub fn subsets(self, size: usize) -> Result<Vec<NodeSet>> {
        if !(2..=MAX_NODES).contains(&size) {
            return Err(Error::InvalidNodeCount(size));
        }
        Ok(match self {
            AblationPolicy::FixedOrder => {
                let mut set = NodeSet::all();
                for n in &FIXED_DROP_ORDER[..MAX_NODES - size] {
                    set.remove(*n);
                }
                vec![set]
            }
            AblationPolicy::AllSubsets => NodeSet::subsets_of_size(MAX_NODES, size),
        })
    }
}

impl fmt::Display for AblationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [AblationPolicy::FixedOrder, AblationPolicy::AllSubsets]
            .into_iter()
            .find(|p| p.name() == s.trim() || p.name().replace('-', "_") == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ablation policy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub node_count: usize,
    pub model: ModelKind,
    pub feature_dim: usize,
    /// Mean balanced accuracy of each evaluated subset.
    pub subsets: Vec<(NodeSet, f64)>,
    /// Average of `subsets`.
    pub mean_balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub policy: AblationPolicy,
    /// Ordered by node count (5 down to 2), then by spec order.
    pub cells: Vec<AblationCell>,
}

impl AblationTable {
    pub fn get(&self, node_count: usize, model: ModelKind) -> Option<&AblationCell> {
        self.cells
            .iter()
            .find(|c| c.node_count == node_count && c.model == model)
    }
}

/// LOOCV with 5, 4, 3 and 2 retained nodes. Each cell is the mean over
/// classes of the balanced accuracy of an aggregated LOOCV matrix, averaged
/// over the subsets the policy yields.
pub fn node_ablation<T: Real>(
    dataset: &Dataset<T>,
    specs: &[ModelSpec<T>],
    noise: &NoiseSpec<T>,
    policy: AblationPolicy,
) -> Result<AblationTable> {
    if dataset.node_count() != MAX_NODES {
        return Err(Error::InvalidNodeCount(dataset.node_count()));
    }
    let mut cells = Vec::new();
    for size in (2..=MAX_NODES).rev() {
        let sets = policy.subsets(size)?;
        for spec in specs {
            let subsets = sets
                .iter()
                .map(|s| {
                    Ok((
                        *s,
                        run_loocv(dataset, spec, noise, *s)?.mean_balanced_accuracy,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            cells.push(AblationCell {
                node_count: size,
                model: spec.kind(),
                feature_dim: pair_count(size),
                mean_balanced_accuracy: subsets.iter().map(|s| s.1).sum::<f64>()
                    / subsets.len() as f64,
                subsets,
            });
        }
    }
    Ok(AblationTable { policy, cells })
}
