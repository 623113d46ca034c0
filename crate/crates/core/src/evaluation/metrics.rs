use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::dataset::PostureClass;
use crate::{Error, Result};

const N: usize = PostureClass::COUNT;

/// Entry `(t, p)` counts samples of true class `t` predicted as `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; N]; N],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; N]; N]) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[[u64; N]; N] {
        &self.counts
    }

    pub fn get(&self, truth: PostureClass, pred: PostureClass) -> u64 {
        self.counts[truth.index()][pred.index()]
    }

    pub fn record(&mut self, truth: PostureClass, pred: PostureClass) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (v, o) in row.iter_mut().zip(orow) {
                *v += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, truth: PostureClass) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn col_sum(&self, pred: PostureClass) -> u64 {
        self.counts.iter().map(|r| r[pred.index()]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N).map(|i| self.counts[i][i]).sum()
    }

    /// Header `true\pred,0,...,8` then one row per true class led by its
    /// index.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\pred");
        for p in 0..N {
            let _ = write!(s, ",{p}");
        }
        s.push('\n');
        for (t, row) in self.counts.iter().enumerate() {
            let _ = write!(s, "{t}");
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    /// Reads the format of [`to_csv`](Self::to_csv), or nine bare rows of
    /// nine counts. Blank lines and lines starting with `#` are skipped.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut counts = [[0u64; N]; N];
        let mut row = 0;
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields[0].starts_with("true") {
                continue;
            }
            let values = match fields.len() {
                n if n == N => &fields[..],
                n if n == N + 1 => &fields[1..],
                n => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {N} counts, found {n} fields"),
                    })
                }
            };
            if row == N {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("more than {N} matrix rows"),
                });
            }
            for (j, v) in values.iter().enumerate() {
                counts[row][j] = v.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("`{v}` is not a nonnegative integer count"),
                })?;
            }
            row += 1;
        }
        if row != N {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {N} matrix rows, found {row}"),
            });
        }
        Ok(Self { counts })
    }
}

/// Tallies predictions against ground truth.
pub fn confusion(truth: &[PostureClass], pred: &[PostureClass]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::new();
    for (t, p) in truth.iter().zip(pred) {
        cm.record(*t, *p);
    }
    Ok(cm)
}

impl ConfusionMatrix {
    /// Like [`confusion`] but from raw integer labels, which are checked.
    pub fn from_indices(truth: &[i64], pred: &[i64]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: pred.len(),
            });
        }
        let class = |v: i64| {
            usize::try_from(v)
                .ok()
                .and_then(|i| PostureClass::from_index(i).ok())
                .ok_or(Error::InvalidLabel(v))
        };
        let mut cm = Self::new();
        for (t, p) in truth.iter().zip(pred) {
            cm.record(class(*t)?, class(*p)?);
        }
        Ok(cm)
    }
}

/// One-vs-rest metrics of a single class. Ratios with an empty denominator
/// are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub recall: f64,
    pub precision: f64,
    pub specificity: f64,
    /// Mean of recall and specificity.
    pub balanced_accuracy: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_metrics(cm: &ConfusionMatrix, class: PostureClass) -> Result<ClassMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let tp = cm.get(class, class);
    let positives = cm.row_sum(class);
    let predicted = cm.col_sum(class);
    let fp = predicted - tp;
    let negatives = total - positives;
    let tn = negatives - fp;

    let recall = ratio(tp, positives);
    let precision = ratio(tp, predicted);
    let specificity = ratio(tn, negatives);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassMetrics {
        recall,
        precision,
        specificity,
        balanced_accuracy: (recall + specificity) / 2.0,
        f1,
    })
}

/// Trace over total.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(cm.trace() as f64 / total as f64)
}
