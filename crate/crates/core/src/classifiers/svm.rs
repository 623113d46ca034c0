use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::{solve_binary, RbfKernel, SmoParams};
use super::{check_training_set, Classifier};
use crate::dataset::PostureClass;
use crate::matrix::FeatureMatrix;
use crate::{Error, Real, Result};

/// One-vs-one machine for the class pair `(positive, negative)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BinaryMachine<T> {
    pub positive: PostureClass,
    pub negative: PostureClass,
    /// `(support vector slot, α_i · y_i)`.
    pub terms: Vec<(usize, T)>,
    pub bias: T,
    /// Set when training data held at most one of the two classes.
    pub constant: Option<PostureClass>,
}

impl<T: Real> BinaryMachine<T> {
    /// Vote given the kernel values against every stored support vector.
    pub fn vote(&self, kernel_values: &[T]) -> PostureClass {
        if let Some(c) = self.constant {
            return c;
        }
        let d: T = self
            .terms
            .iter()
            .map(|(s, coef)| *coef * kernel_values[*s])
            .sum::<T>()
            + self.bias;
        if d >= T::zero() {
            self.positive
        } else {
            self.negative
        }
    }
}

/// Multi-class RBF support vector machine using one-vs-one voting over all
/// 36 class pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SvmModel<T> {
    c: T,
    kernel: RbfKernel<T>,
    support_vectors: FeatureMatrix<T>,
    machines: Vec<BinaryMachine<T>>,
}

impl<T: Real> SvmModel<T> {
    pub fn fit(c: T, gamma: T, x: &FeatureMatrix<T>, y: &[PostureClass]) -> Result<Self> {
        check_training_set(x, y)?;
        if !(c > T::zero()) || !(gamma > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "C = {c} and gamma = {gamma} must be positive"
            )));
        }
        let kernel = RbfKernel { gamma };
        let params = SmoParams::new(c);
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); PostureClass::COUNT];
        for (i, l) in y.iter().enumerate() {
            by_class[l.index()].push(i);
        }
        let pairs: Vec<(usize, usize)> = (0..PostureClass::COUNT)
            .flat_map(|a| (a + 1..PostureClass::COUNT).map(move |b| (a, b)))
            .collect();

        // each machine refers to global training rows until slots are assigned
        let trained: Vec<(BinaryMachine<T>, Vec<usize>)> = pairs
            .par_iter()
            .map(|&(a, b)| -> Result<_> {
                let (pa, pb) = (PostureClass::ALL[a], PostureClass::ALL[b]);
                let (ia, ib) = (&by_class[a], &by_class[b]);
                if ia.is_empty() || ib.is_empty() {
                    let constant = if ia.is_empty() && !ib.is_empty() {
                        pb
                    } else {
                        pa
                    };
                    return Ok((
                        BinaryMachine {
                            positive: pa,
                            negative: pb,
                            terms: Vec::new(),
                            bias: T::zero(),
                            constant: Some(constant),
                        },
                        Vec::new(),
                    ));
                }
                let mut rows: Vec<usize> = ia.iter().chain(ib).copied().collect();
                rows.sort_unstable();
                let sub = x.select_rows(&rows);
                let positive: Vec<bool> = rows.iter().map(|&r| y[r] == pa).collect();
                let sol = solve_binary(&sub, &positive, kernel, &params)?;
                let mut terms = Vec::new();
                let mut globals = Vec::new();
                for (k, &a_k) in sol.alpha.iter().enumerate() {
                    if a_k > T::zero() {
                        let sign = if positive[k] { T::one() } else { -T::one() };
                        terms.push((globals.len(), a_k * sign));
                        globals.push(rows[k]);
                    }
                }
                Ok((
                    BinaryMachine {
                        positive: pa,
                        negative: pb,
                        terms,
                        bias: sol.bias,
                        constant: None,
                    },
                    globals,
                ))
            })
            .collect::<Result<_>>()?;

        let mut slot_of = vec![usize::MAX; x.rows()];
        let mut support_vectors = FeatureMatrix::new(x.cols());
        let mut machines = Vec::with_capacity(trained.len());
        for (mut m, globals) in trained {
            for (term, g) in m.terms.iter_mut().zip(&globals) {
                if slot_of[*g] == usize::MAX {
                    slot_of[*g] = support_vectors.rows();
                    support_vectors.push_row(x.row(*g))?;
                }
                term.0 = slot_of[*g];
            }
            machines.push(m);
        }
        Ok(Self {
            c,
            kernel,
            support_vectors,
            machines,
        })
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn gamma(&self) -> T {
        self.kernel.gamma
    }

    pub fn machines(&self) -> &[BinaryMachine<T>] {
        &self.machines
    }

    pub fn support_vector_count(&self) -> usize {
        self.support_vectors.rows()
    }

    /// Vote count per class for `query`.
    pub fn votes(&self, query: &[T]) -> Result<[usize; PostureClass::COUNT]> {
        if query.len() != self.support_vectors.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.support_vectors.cols(),
                found: query.len(),
            });
        }
        let kv: Vec<T> = self
            .support_vectors
            .iter_rows()
            .map(|sv| self.kernel.eval(sv, query))
            .collect();
        let mut votes = [0usize; PostureClass::COUNT];
        for m in &self.machines {
            votes[m.vote(&kv).index()] += 1;
        }
        Ok(votes)
    }
}

impl<T: Real> Classifier<T> for SvmModel<T> {
    fn input_dim(&self) -> usize {
        self.support_vectors.cols()
    }

    fn predict(&self, query: &[T]) -> Result<PostureClass> {
        let votes = self.votes(query)?;
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        Ok(PostureClass::ALL[best])
    }
}
