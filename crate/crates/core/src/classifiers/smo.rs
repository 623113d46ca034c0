//! Binary soft-margin SVM dual solved by sequential minimal optimization.
//!
//! Minimizes `½ αᵀQα − Σα` subject to `yᵀα = 0` and `0 ≤ α ≤ C`, with
//! `Q_ij = y_i y_j K(x_i, x_j)`. Each step picks the maximal violating pair
//! and solves the two-variable subproblem in closed form.

use serde::{Deserialize, Serialize};

use crate::matrix::FeatureMatrix;
use crate::{Error, Real, Result};

/// Gaussian kernel `exp(-gamma · ‖a − b‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RbfKernel<T> {
    pub gamma: T,
}

impl<T: Real> RbfKernel<T> {
    #[inline]
    pub fn eval(&self, a: &[T], b: &[T]) -> T {
        let sq: T = a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum();
        (-self.gamma * sq).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams<T> {
    pub c: T,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Memory budget for cached kernel rows, in bytes.
    pub cache_bytes: usize,
}

impl<T: Real> SmoParams<T> {
    pub fn new(c: T) -> Self {
        Self {
            c,
            tolerance: T::lit(1e-3),
            max_iterations: 10_000_000,
            cache_bytes: 64 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution<T> {
    pub alpha: Vec<T>,
    /// Decision function is `Σ α_i y_i K(x_i, x) + bias`.
    pub bias: T,
    /// Dual objective `½ αᵀQα − Σα` at the solution.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-recently-used cache of kernel matrix rows.
struct KernelCache<'a, T> {
    x: &'a FeatureMatrix<T>,
    kernel: RbfKernel<T>,
    capacity: usize,
    slot_of: Vec<Option<usize>>,
    rows: Vec<Vec<T>>,
    owner: Vec<usize>,
    stamp: Vec<u64>,
    tick: u64,
}

impl<'a, T: Real> KernelCache<'a, T> {
    fn new(x: &'a FeatureMatrix<T>, kernel: RbfKernel<T>, cache_bytes: usize) -> Self {
        let n = x.rows();
        let row_bytes = n.max(1) * std::mem::size_of::<T>();
        let capacity = (cache_bytes / row_bytes).clamp(2, n.max(2));
        Self {
            x,
            kernel,
            capacity,
            slot_of: vec![None; n],
            rows: Vec::new(),
            owner: Vec::new(),
            stamp: Vec::new(),
            tick: 0,
        }
    }

    /// Slot holding row `i`, computing it if needed.
    fn ensure(&mut self, i: usize) -> usize {
        self.tick += 1;
        if let Some(s) = self.slot_of[i] {
            self.stamp[s] = self.tick;
            return s;
        }
        let slot = if self.rows.len() < self.capacity {
            self.rows.push(vec![T::zero(); self.x.rows()]);
            self.owner.push(i);
            self.stamp.push(self.tick);
            self.rows.len() - 1
        } else {
            let (lru, _) = self
                .stamp
                .iter()
                .enumerate()
                .min_by_key(|(_, t)| **t)
                .expect("cache has capacity >= 2");
            self.slot_of[self.owner[lru]] = None;
            self.owner[lru] = i;
            self.stamp[lru] = self.tick;
            lru
        };
        let xi = self.x.row(i);
        for (t, k) in self.rows[slot].iter_mut().enumerate() {
            *k = self.kernel.eval(xi, self.x.row(t));
        }
        self.slot_of[i] = Some(slot);
        slot
    }

    fn row(&self, slot: usize) -> &[T] {
        &self.rows[slot]
    }
}

/// Trains one binary machine. `positive[i]` gives the sign of sample `i`;
/// both signs must occur.
pub fn solve_binary<T: Real>(
    x: &FeatureMatrix<T>,
    positive: &[bool],
    kernel: RbfKernel<T>,
    params: &SmoParams<T>,
) -> Result<BinarySolution<T>> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if positive.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: positive.len(),
        });
    }
    if positive.iter().all(|p| *p) || positive.iter().all(|p| !*p) {
        return Err(Error::InvalidArgument(
            "binary SVM needs samples of both signs".into(),
        ));
    }
    let c = params.c;
    if !(c > T::zero()) || !(kernel.gamma > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "C = {c} and gamma = {} must be positive",
            kernel.gamma
        )));
    }

    let y: Vec<T> = positive
        .iter()
        .map(|p| if *p { T::one() } else { -T::one() })
        .collect();
    let diag: Vec<T> = (0..n).map(|i| kernel.eval(x.row(i), x.row(i))).collect();
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];
    let mut cache = KernelCache::new(x, kernel, params.cache_bytes);
    let tau = T::lit(1e-12);

    let in_up = |a: T, yi: T| (yi > T::zero() && a < c) || (yi < T::zero() && a > T::zero());
    let in_low = |a: T, yi: T| (yi > T::zero() && a > T::zero()) || (yi < T::zero() && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        let mut g_max = T::neg_infinity();
        let mut g_min = T::infinity();
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < params.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let si = cache.ensure(i);
        let sj = cache.ensure(j);
        let (ki, kj) = (cache.row(si), cache.row(sj));
        let qij = y[i] * y[j] * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] + qij + qij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > T::zero() {
                if alpha[j] < T::zero() {
                    alpha[j] = T::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = -diff;
            }
            if diff > T::zero() {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - qij - qij;
            if quad <= T::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < T::zero() {
                alpha[j] = T::zero();
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < T::zero() {
                alpha[i] = T::zero();
                alpha[j] = sum;
            }
        }
        // exact box bounds despite rounding in the clip arithmetic
        alpha[i] = alpha[i].max(T::zero()).min(c);
        alpha[j] = alpha[j].max(T::zero()).min(c);

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    // rho from free vectors, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    let (mut free_sum, mut free_count) = (T::zero(), 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= T::zero() {
            if y[t] > T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / T::from_usize(free_count).expect("count fits the scalar")
    } else {
        (ub + lb) / T::lit(2.0)
    };

    let half = T::lit(0.5);
    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| half * *a * (*g - T::one()))
        .sum();

    Ok(BinarySolution {
        alpha,
        bias: -rho,
        objective,
        iterations,
        converged,
    })
}
