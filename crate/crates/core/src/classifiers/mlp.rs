//! Fully connected network: ReLU hidden layers, softmax output, mean
//! cross-entropy loss, trained by mini-batch gradient descent with momentum.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_training_set, Classifier};
use crate::dataset::PostureClass;
use crate::matrix::FeatureMatrix;
use crate::rng;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MlpConfig<T> {
    pub hidden: Vec<usize>,
    pub learning_rate: T,
    pub momentum: T,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl<T: Real> Default for MlpConfig<T> {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            learning_rate: T::lit(1e-3),
            momentum: T::lit(0.9),
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl<T: Real> MlpConfig<T> {
    fn validate(&self) -> Result<()> {
        if self.hidden.contains(&0) || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "hidden widths, epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > T::zero())
            || !(self.momentum >= T::zero())
            || self.momentum >= T::one()
        {
            return Err(Error::InvalidArgument(
                "learning rate must be positive and momentum in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Affine layer `z = W a + b` with `W` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DenseLayer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> DenseLayer<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
        }
    }

    #[inline]
    fn forward(&self, a: &[T], z: &mut [T]) {
        for (o, zo) in z.iter_mut().enumerate() {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *zo = self.bias[o] + w.iter().zip(a).map(|(w, a)| *w * *a).sum::<T>();
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Gradient (or velocity) with the same shapes as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<DenseLayer<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn norm(&self) -> T {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|g| *g * *g)
            .sum::<T>()
            .sqrt()
    }

    /// Every parameter gradient in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|v| *v = T::zero());
            l.bias.iter_mut().for_each(|v| *v = T::zero());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MlpModel<T> {
    layers: Vec<DenseLayer<T>>,
    config: MlpConfig<T>,
}

/// Reusable per-sample buffers for forward and backward passes.
struct Workspace<T> {
    /// Activations per layer boundary; `acts[0]` is the input.
    acts: Vec<Vec<T>>,
    deltas: Vec<Vec<T>>,
}

impl<T: Real> Workspace<T> {
    fn new(layers: &[DenseLayer<T>]) -> Self {
        let mut acts = vec![vec![T::zero(); layers[0].inputs]];
        acts.extend(layers.iter().map(|l| vec![T::zero(); l.outputs]));
        let deltas = layers.iter().map(|l| vec![T::zero(); l.outputs]).collect();
        Self { acts, deltas }
    }
}

fn softmax_in_place<T: Real>(z: &mut [T]) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

impl<T: Real> MlpModel<T> {
    /// Network with weights drawn uniformly from `±sqrt(6 / fan_in)` and
    /// zero biases.
    pub fn init(input_dim: usize, outputs: usize, config: MlpConfig<T>) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 || outputs < 2 {
            return Err(Error::InvalidArgument(
                "network needs at least one input and two outputs".into(),
            ));
        }
        let mut widths = vec![input_dim];
        widths.extend(&config.hidden);
        widths.push(outputs);
        let mut draws = rng::stream(config.seed, 0);
        let layers = widths
            .windows(2)
            .map(|w| {
                let mut layer = DenseLayer::zeros(w[0], w[1]);
                let limit = (6.0 / w[0] as f64).sqrt();
                for v in layer.weights.iter_mut() {
                    *v = T::lit(draws.random_range(-limit..=limit));
                }
                layer
            })
            .collect();
        Ok(Self { layers, config })
    }

    /// Trains a nine-class network on `x`, `y`.
    pub fn fit(x: &FeatureMatrix<T>, y: &[PostureClass], config: MlpConfig<T>) -> Result<Self> {
        check_training_set(x, y)?;
        let targets: Vec<usize> = y.iter().map(|c| c.index()).collect();
        let mut model = Self::init(x.cols(), PostureClass::COUNT, config)?;
        model.train(x, &targets)?;
        Ok(model)
    }

    /// Runs the configured number of epochs from the current weights.
    pub fn train(&mut self, x: &FeatureMatrix<T>, targets: &[usize]) -> Result<()> {
        self.check_batch(x, targets)?;
        let cfg = self.config.clone();
        let mut velocity = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let mut grad = velocity.clone();
        let mut ws = Workspace::new(&self.layers);
        let mut order: Vec<usize> = (0..x.rows()).collect();
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng::stream(cfg.seed, 1 + epoch as u64));
            for batch in order.chunks(cfg.batch_size) {
                grad.reset();
                self.accumulate(x, targets, batch, &mut grad, &mut ws);
                for ((layer, v), g) in self
                    .layers
                    .iter_mut()
                    .zip(&mut velocity.layers)
                    .zip(&grad.layers)
                {
                    let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
                    let vels = v.weights.iter_mut().chain(v.bias.iter_mut());
                    let grads = g.weights.iter().chain(&g.bias);
                    for ((p, v), g) in params.zip(vels).zip(grads) {
                        *v = cfg.momentum * *v - cfg.learning_rate * *g;
                        *p += *v;
                    }
                }
            }
        }
        Ok(())
    }

    /// Adds the gradient of the mean loss over `batch` into `grad`. Returns
    /// the summed (not averaged) loss.
    fn accumulate(
        &self,
        x: &FeatureMatrix<T>,
        targets: &[usize],
        batch: &[usize],
        grad: &mut Gradients<T>,
        ws: &mut Workspace<T>,
    ) -> T {
        let scale = T::one() / T::from_usize(batch.len()).expect("batch size fits the scalar");
        let last = self.layers.len() - 1;
        let mut loss = T::zero();
        for &r in batch {
            ws.acts[0].copy_from_slice(x.row(r));
            for (l, layer) in self.layers.iter().enumerate() {
                let (before, after) = ws.acts.split_at_mut(l + 1);
                let z = &mut after[0];
                layer.forward(&before[l], z);
                if l < last {
                    z.iter_mut().for_each(|v| *v = v.max(T::zero()));
                }
            }
            let probs = &mut ws.acts[last + 1];
            softmax_in_place(probs);
            let t = targets[r];
            loss -= probs[t].max(T::min_positive_value()).ln();

            let out = &mut ws.deltas[last];
            out.copy_from_slice(probs);
            out[t] -= T::one();
            out.iter_mut().for_each(|d| *d *= scale);

            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let g = &mut grad.layers[l];
                let a = &ws.acts[l];
                let (lower, upper) = ws.deltas.split_at_mut(l);
                let delta = &upper[0];
                for (o, d) in delta.iter().enumerate() {
                    g.bias[o] += *d;
                    let gw = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in gw.iter_mut().zip(a) {
                        *gw += *d * *a;
                    }
                }
                if l > 0 {
                    let prev = &mut lower[l - 1];
                    prev.iter_mut().for_each(|v| *v = T::zero());
                    for (o, d) in delta.iter().enumerate() {
                        let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(w) {
                            *p += *d * *w;
                        }
                    }
                    // ReLU derivative: post-activation is zero exactly where
                    // the unit was inactive
                    for (p, a) in prev.iter_mut().zip(a) {
                        if *a <= T::zero() {
                            *p = T::zero();
                        }
                    }
                }
            }
        }
        loss
    }

    fn check_batch(&self, x: &FeatureMatrix<T>, targets: &[usize]) -> Result<()> {
        if x.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if x.rows() != targets.len() {
            return Err(Error::LengthMismatch {
                left: targets.len(),
                right: x.rows(),
            });
        }
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        if let Some(t) = targets.iter().find(|t| **t >= self.output_dim()) {
            return Err(Error::InvalidLabel(*t as i64));
        }
        Ok(())
    }

    /// Analytic gradient of the mean cross-entropy over the batch, with the
    /// mean loss.
    pub fn gradients(&self, x: &FeatureMatrix<T>, targets: &[usize]) -> Result<(T, Gradients<T>)> {
        self.check_batch(x, targets)?;
        let mut grad = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let mut ws = Workspace::new(&self.layers);
        let batch: Vec<usize> = (0..x.rows()).collect();
        let loss = self.accumulate(x, targets, &batch, &mut grad, &mut ws);
        Ok((
            loss / T::from_usize(x.rows()).expect("row count fits the scalar"),
            grad,
        ))
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, x: &FeatureMatrix<T>, targets: &[usize]) -> Result<T> {
        self.check_batch(x, targets)?;
        let mut total = T::zero();
        for (row, &t) in x.iter_rows().zip(targets) {
            let p = self.probabilities(row)?;
            total -= p[t].max(T::min_positive_value()).ln();
        }
        Ok(total / T::from_usize(x.rows()).expect("row count fits the scalar"))
    }

    /// Output-layer pre-activations.
    pub fn logits(&self, query: &[T]) -> Result<Vec<T>> {
        if query.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: query.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut a = query.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = vec![T::zero(); layer.outputs];
            layer.forward(&a, &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn probabilities(&self, query: &[T]) -> Result<Vec<T>> {
        let mut z = self.logits(query)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Predicted class and the full probability vector.
    pub fn predict_with_probabilities(&self, query: &[T]) -> Result<(PostureClass, Vec<T>)> {
        let p = self.probabilities(query)?;
        let class = PostureClass::from_index(argmax(&p))?;
        Ok((class, p))
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn config(&self) -> &MlpConfig<T> {
        &self.config
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl<T: Real> Classifier<T> for MlpModel<T> {
    fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    fn predict(&self, query: &[T]) -> Result<PostureClass> {
        let z = self.logits(query)?;
        PostureClass::from_index(argmax(&z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(hidden: Vec<usize>, seed: u64) -> MlpConfig<f64> {
        MlpConfig {
            hidden,
            seed,
            ..MlpConfig::default()
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let m = MlpModel::init(10, 9, cfg(vec![64, 64], 4)).unwrap();
        let mut r = rng::stream(8, 0);
        for _ in 0..1000 {
            let q: Vec<f64> = (0..10).map(|_| r.random_range(-5.0..5.0)).collect();
            let p = m.probabilities(&q).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn output_bias_shift_keeps_prediction() {
        let mut m = MlpModel::init(4, 9, cfg(vec![8], 2)).unwrap();
        let q = [0.3, -1.0, 2.0, 0.5];
        let before = m.predict(&q).unwrap();
        let p0 = m.probabilities(&q).unwrap();
        let last = m.layers_mut().last_mut().unwrap();
        last.bias.iter_mut().for_each(|b| *b += 123.0);
        assert_eq!(m.predict(&q).unwrap(), before);
        let p1 = m.probabilities(&q).unwrap();
        for (a, b) in p0.iter().zip(&p1) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_softmax_gradient_closed_form() {
        let mut m = MlpModel::init(3, 4, cfg(vec![], 1)).unwrap();
        m.layers_mut()[0].bias = vec![0.1, -0.2, 0.3, 0.0];
        let x = FeatureMatrix::from_rows(&[[0.5, -1.5, 2.0]]).unwrap();
        let (_, g) = m.gradients(&x, &[2]).unwrap();
        let mut p = m.logits(x.row(0)).unwrap();
        softmax_in_place(&mut p);
        p[2] -= 1.0;
        for (o, po) in p.iter().enumerate() {
            for (i, xi) in x.row(0).iter().enumerate() {
                assert!((g.layers[0].weights[o * 3 + i] - po * xi).abs() < 1e-14);
            }
            assert!((g.layers[0].bias[o] - po).abs() < 1e-14);
        }
    }

    #[test]
    fn same_seed_same_weights() {
        let x = FeatureMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [PostureClass::Up, PostureClass::Down, PostureClass::Left];
        let c = MlpConfig {
            epochs: 5,
            ..cfg(vec![6, 5], 17)
        };
        let a = MlpModel::fit(&x, &y, c.clone()).unwrap();
        let b = MlpModel::fit(&x, &y, c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let m = MlpModel::init(2, 9, cfg(vec![3], 0)).unwrap();
        assert!(matches!(
            m.gradients(&FeatureMatrix::new(2), &[]),
            Err(Error::EmptyBatch)
        ));
        assert!(matches!(
            m.predict(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(MlpModel::<f64>::init(
            2,
            9,
            MlpConfig {
                batch_size: 0,
                ..MlpConfig::default()
            }
        )
        .is_err());
        assert!(matches!(
            MlpModel::<f64>::fit(&FeatureMatrix::new(2), &[], MlpConfig::default()),
            Err(Error::EmptyTrainingSet)
        ));
    }

    #[test]
    fn trains_in_single_precision() {
        let x = FeatureMatrix::from_rows(&[[0.0f32, 1.0], [1.0, 0.0]]).unwrap();
        let y = [PostureClass::Up, PostureClass::Down];
        let c = MlpConfig {
            hidden: vec![8],
            learning_rate: 0.05,
            epochs: 200,
            ..MlpConfig::default()
        };
        let m = MlpModel::fit(&x, &y, c).unwrap();
        assert_eq!(m.predict(&[0.0, 1.0]).unwrap(), PostureClass::Up);
        assert_eq!(m.predict(&[1.0, 0.0]).unwrap(), PostureClass::Down);
    }
}
