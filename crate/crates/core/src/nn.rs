//! Feed-forward network engine.
//!
//! Hidden layers use a rectifier, the output layer is affine with no squashing,
//! so the raw outputs are the class scores consumed by pseudo-labeling. Layers
//! store weights row-major with shape `(out_dim, in_dim)`.
//!
//! The engine is generic over the scalar type. Training runs in `f32`; the
//! gradient checker promotes a model to `f64` so central differences are
//! meaningful at a 1e-4 step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Float, NumCast};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Training objective applied to raw outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    /// Weighted squared distance to the one-hot target.
    #[default]
    Mse,
    /// Weighted softmax cross-entropy.
    Ce,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Ce => "ce",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mse" => Some(LossKind::Mse),
            "ce" => Some(LossKind::Ce),
            _ => None,
        }
    }
}

#[inline]
fn cast<T: NumCast, U: NumCast>(v: T) -> U {
    // all casts here are between f32/f64 and small integers
    U::from(v).expect("numeric cast")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T = f32> {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<T>,
    biases: Vec<T>,
}

impl<T: Float> Layer<T> {
    pub fn from_parts(in_dim: usize, out_dim: usize, weights: Vec<T>, biases: Vec<T>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config("layer dims must be positive".into()));
        }
        if weights.len() != in_dim * out_dim || biases.len() != out_dim {
            return Err(Error::Shape(format!(
                "layer {in_dim}->{out_dim} needs {} weights and {out_dim} biases, got {} and {}",
                in_dim * out_dim,
                weights.len(),
                biases.len()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            biases,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    fn affine(&self, input: &[T], out: &mut [T]) {
        for (o, (row, &b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.in_dim).zip(&self.biases))
        {
            let mut acc = b;
            for (&w, &x) in row.iter().zip(input) {
                acc = acc + w * x;
            }
            *o = acc;
        }
    }
}

/// Feed-forward network with rectifier hidden layers and an identity output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T = f32> {
    layers: Vec<Layer<T>>,
    seed: u64,
}

impl Model<f32> {
    /// Initializes a network with fan-based uniform weights and zero biases.
    ///
    /// `layer_dims` lists the input width, hidden widths and the output width.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::Config(
                "layer_dims needs an input and an output dimension".into(),
            ));
        }
        if layer_dims.contains(&0) {
            return Err(Error::Config("layer dims must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(layer_dims.len() - 1);
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = libm::sqrtf(6.0 / (fan_in + fan_out) as f32);
            let dist = Uniform::new_inclusive(-limit, limit)
                .map_err(|e| Error::Config(format!("init distribution: {e}")))?;
            let weights = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
            layers.push(Layer {
                in_dim: fan_in,
                out_dim: fan_out,
                weights,
                biases: vec![0.0; fan_out],
            });
        }
        Ok(Self { layers, seed })
    }
}

impl<T: Float> Model<T> {
    pub fn from_layers(layers: Vec<Layer<T>>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a model needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].out_dim,
                    i + 1,
                    pair[1].in_dim
                )));
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.layers.len() + 1);
        dims.push(self.layers[0].in_dim);
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Float>(&self) -> Model<U> {
        Model {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    weights: l.weights.iter().map(|&w| cast(w)).collect(),
                    biases: l.biases.iter().map(|&b| cast(b)).collect(),
                })
                .collect(),
            seed: self.seed,
        }
    }

    /// Mutable access to parameter `idx` in flat order: per layer, weights then biases.
    pub fn param_mut(&mut self, mut idx: usize) -> Option<&mut T> {
        for layer in &mut self.layers {
            if idx < layer.weights.len() {
                return Some(&mut layer.weights[idx]);
            }
            idx -= layer.weights.len();
            if idx < layer.biases.len() {
                return Some(&mut layer.biases[idx]);
            }
            idx -= layer.biases.len();
        }
        None
    }

    /// Raw outputs for a single sample.
    pub fn forward_row(&self, input: &[T]) -> Vec<T> {
        let mut current = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![T::zero(); layer.out_dim];
            layer.affine(&current, &mut next);
            if i != last {
                relu_in_place(&mut next);
            }
            current = next;
        }
        current
    }

    /// Scores every row of `features`; one output row per sample.
    pub fn forward(&self, features: &Matrix<T>) -> Result<Matrix<T>> {
        if features.rows() > 0 && features.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "features have {} columns, model expects {}",
                features.cols(),
                self.input_dim()
            )));
        }
        let m = self.output_dim();
        let mut out = Vec::with_capacity(features.rows() * m);
        for row in features.iter_rows() {
            out.extend(self.forward_row(row));
        }
        Matrix::from_vec(features.rows(), m, out)
    }

    /// Loss of the current parameters on `batch`.
    pub fn loss(&self, batch: &Batch<T>, kind: LossKind) -> Result<f64> {
        self.check_batch(batch)?;
        let scores = self.forward(&batch.features)?;
        match kind {
            LossKind::Mse => weighted_mse_loss(&scores, &batch.targets, &batch.weights),
            LossKind::Ce => softmax_ce_loss(&scores, &batch.targets, &batch.weights),
        }
    }

    /// Loss and its analytic gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, batch: &Batch<T>, kind: LossKind) -> Result<(f64, Gradients<T>)> {
        self.check_batch(batch)?;
        let n = batch.len();
        let mut grads = Gradients::zeros_like(self);
        if n == 0 {
            return Ok((0.0, grads));
        }
        let n_t: T = cast(n);
        let two = T::one() + T::one();
        let last = self.layers.len() - 1;
        let mut loss = 0.0f64;

        // pre-activation outputs per layer and the inputs that fed them
        let mut inputs: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let mut pre: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());

        for i in 0..n {
            inputs.clear();
            pre.clear();
            let mut current = batch.features.row(i).to_vec();
            for (l, layer) in self.layers.iter().enumerate() {
                let mut z = vec![T::zero(); layer.out_dim];
                layer.affine(&current, &mut z);
                let mut a = z.clone();
                if l != last {
                    relu_in_place(&mut a);
                }
                inputs.push(core::mem::replace(&mut current, a));
                pre.push(z);
            }
            let scores = current;
            let target = batch.targets.row(i);
            let w = batch.weights[i];

            let mut delta: Vec<T> = match kind {
                LossKind::Mse => {
                    loss += sample_sq_error(&scores, target) * cast::<T, f64>(w);
                    scores
                        .iter()
                        .zip(target)
                        .map(|(&s, &y)| two * w * (s - y) / n_t)
                        .collect()
                }
                LossKind::Ce => {
                    loss += sample_cross_entropy(&scores, target) * cast::<T, f64>(w);
                    let probs = softmax(&scores);
                    let mass = target.iter().fold(T::zero(), |a, &y| a + y);
                    probs
                        .iter()
                        .zip(target)
                        .map(|(&p, &y)| w * (mass * p - y) / n_t)
                        .collect()
                }
            };

            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let g = &mut grads.layers[l];
                let input = &inputs[l];
                for (o, &d) in delta.iter().enumerate() {
                    g.biases[o] = g.biases[o] + d;
                    let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (gw, &x) in row.iter_mut().zip(input) {
                        *gw = *gw + d * x;
                    }
                }
                if l == 0 {
                    break;
                }
                let below = &pre[l - 1];
                let mut next = vec![T::zero(); layer.in_dim];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (acc, &w) in next.iter_mut().zip(row) {
                        *acc = *acc + w * d;
                    }
                }
                for (acc, &z) in next.iter_mut().zip(below) {
                    if z <= T::zero() {
                        *acc = T::zero();
                    }
                }
                delta = next;
            }
        }
        Ok((loss / n as f64, grads))
    }

    /// One momentum-SGD step on `batch`. Returns the loss before the update.
    ///
    /// A non-finite loss, gradient or updated parameter aborts the step and
    /// leaves both model and optimizer untouched.
    pub fn train_step(&mut self, batch: &Batch<T>, kind: LossKind, opt: &mut Sgd<T>) -> Result<f64> {
        let (loss, grads) = self.loss_and_gradients(batch, kind)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss {loss}")));
        }
        if !grads.all_finite() {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        opt.step(self, &grads)?;
        Ok(loss)
    }

    fn check_batch(&self, batch: &Batch<T>) -> Result<()> {
        if batch.is_empty() {
            return Ok(());
        }
        if batch.features.cols() != self.input_dim() || batch.targets.cols() != self.output_dim() {
            return Err(Error::Shape(format!(
                "batch is {}->{} but model is {}->{}",
                batch.features.cols(),
                batch.targets.cols(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }
}

fn relu_in_place<T: Float>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

fn sample_sq_error<T: Float>(scores: &[T], target: &[T]) -> f64 {
    scores
        .iter()
        .zip(target)
        .map(|(&s, &y)| {
            let d = cast::<T, f64>(s) - cast::<T, f64>(y);
            d * d
        })
        .sum()
}

fn sample_cross_entropy<T: Float>(scores: &[T], target: &[T]) -> f64 {
    let max = scores
        .iter()
        .map(|&s| cast::<T, f64>(s))
        .fold(f64::NEG_INFINITY, f64::max);
    let log_norm = max
        + libm::log(
            scores
                .iter()
                .map(|&s| libm::exp(cast::<T, f64>(s) - max))
                .sum::<f64>(),
        );
    scores
        .iter()
        .zip(target)
        .map(|(&s, &y)| cast::<T, f64>(y) * (log_norm - cast::<T, f64>(s)))
        .sum()
}

fn check_loss_shapes<T: Float>(scores: &Matrix<T>, targets: &Matrix<T>, weights: &[T]) -> Result<()> {
    if scores.rows() != targets.rows()
        || scores.rows() != weights.len()
        || (scores.rows() > 0 && scores.cols() != targets.cols())
    {
        return Err(Error::Shape(format!(
            "scores {}x{}, targets {}x{}, {} weights",
            scores.rows(),
            scores.cols(),
            targets.rows(),
            targets.cols(),
            weights.len()
        )));
    }
    Ok(())
}

/// `(1/N) Σ w_i ‖scores_i − targets_i‖²`, accumulated in `f64`.
pub fn weighted_mse_loss<T: Float>(scores: &Matrix<T>, targets: &Matrix<T>, weights: &[T]) -> Result<f64> {
    check_loss_shapes(scores, targets, weights)?;
    if weights.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = scores
        .iter_rows()
        .zip(targets.iter_rows())
        .zip(weights)
        .map(|((s, y), &w)| cast::<T, f64>(w) * sample_sq_error(s, y))
        .sum();
    Ok(total / weights.len() as f64)
}

/// Weighted mean of `−log softmax(scores)_label`, same `1/N` convention as the MSE loss.
pub fn softmax_ce_loss<T: Float>(scores: &Matrix<T>, targets: &Matrix<T>, weights: &[T]) -> Result<f64> {
    check_loss_shapes(scores, targets, weights)?;
    if weights.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = scores
        .iter_rows()
        .zip(targets.iter_rows())
        .zip(weights)
        .map(|((s, y), &w)| {
            if w == T::zero() {
                0.0
            } else {
                cast::<T, f64>(w) * sample_cross_entropy(s, y)
            }
        })
        .sum();
    Ok(total / weights.len() as f64)
}

/// Max-shifted softmax.
pub fn softmax<T: Float>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum = exps.iter().fold(T::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-parameter gradient buffers with the same layout as [`Model`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T = f32> {
    layers: Vec<LayerGrad<T>>,
}

#[derive(Debug, Clone, PartialEq)]
struct LayerGrad<T> {
    weights: Vec<T>,
    biases: Vec<T>,
}

impl<T: Float> Gradients<T> {
    pub fn zeros_like(model: &Model<T>) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![T::zero(); l.weights.len()],
                    biases: vec![T::zero(); l.biases.len()],
                })
                .collect(),
        }
    }

    /// Flat view in the order used by [`Model::param_mut`].
    pub fn flatten(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

/// Stochastic gradient descent with heavy-ball momentum.
///
/// `v ← μ·v + g`, `θ ← θ − η·v`.
#[derive(Debug, Clone)]
pub struct Sgd<T = f32> {
    learning_rate: T,
    momentum: T,
    velocity: Gradients<T>,
}

impl<T: Float> Sgd<T> {
    pub fn new(model: &Model<T>, learning_rate: T, momentum: T) -> Result<Self> {
        if !(learning_rate >= T::zero()) || !learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if !(momentum >= T::zero() && momentum < T::one()) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        Ok(Self {
            learning_rate,
            momentum,
            velocity: Gradients::zeros_like(model),
        })
    }

    pub fn learning_rate(&self) -> T {
        self.learning_rate
    }

    pub fn momentum(&self) -> T {
        self.momentum
    }

    pub fn velocity(&self) -> &Gradients<T> {
        &self.velocity
    }

    fn step(&mut self, model: &mut Model<T>, grads: &Gradients<T>) -> Result<()> {
        if self.velocity.layers.len() != model.layers.len() {
            return Err(Error::Shape("optimizer state does not match model".into()));
        }
        let mut velocity = self.velocity.clone();
        let mut params = model.layers.clone();
        for ((v, g), p) in velocity.layers.iter_mut().zip(&grads.layers).zip(params.iter_mut()) {
            if v.weights.len() != p.weights.len() || v.biases.len() != p.biases.len() {
                return Err(Error::Shape("optimizer state does not match model".into()));
            }
            for ((vi, &gi), pi) in v.weights.iter_mut().zip(&g.weights).zip(p.weights.iter_mut()) {
                *vi = self.momentum * *vi + gi;
                *pi = *pi - self.learning_rate * *vi;
            }
            for ((vi, &gi), pi) in v.biases.iter_mut().zip(&g.biases).zip(p.biases.iter_mut()) {
                *vi = self.momentum * *vi + gi;
                *pi = *pi - self.learning_rate * *vi;
            }
        }
        if !velocity.all_finite() || !params.iter().all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite())) {
            return Err(Error::Numerical("optimizer step produced non-finite parameters".into()));
        }
        self.velocity = velocity;
        model.layers = params;
        Ok(())
    }
}

/// Samples with one-hot targets and per-sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T = f32> {
    features: Matrix<T>,
    targets: Matrix<T>,
    weights: Vec<T>,
}

impl<T: Float + Default> Batch<T> {
    pub fn new(features: Matrix<T>, targets: Matrix<T>, weights: Vec<T>) -> Result<Self> {
        if features.rows() != targets.rows() || features.rows() != weights.len() {
            return Err(Error::Shape(format!(
                "{} feature rows, {} target rows, {} weights",
                features.rows(),
                targets.rows(),
                weights.len()
            )));
        }
        for (i, row) in targets.iter_rows().enumerate() {
            let ones = row.iter().filter(|&&v| v == T::one()).count();
            let zeros = row.iter().filter(|&&v| v == T::zero()).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(Error::Data(format!("target row {i} is not one-hot")));
            }
        }
        if let Some(i) = weights.iter().position(|&w| !(w >= T::zero()) || !w.is_finite()) {
            return Err(Error::Data(format!("sample weight {i} is negative or non-finite")));
        }
        Ok(Self {
            features,
            targets,
            weights,
        })
    }

    /// One-hot encodes `labels` over `num_classes` classes.
    pub fn from_labels(features: Matrix<T>, labels: &[usize], weights: Vec<T>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Data(format!("label {bad} out of range for {num_classes} classes")));
        }
        let mut targets = Matrix::zeros(labels.len(), num_classes);
        for (i, &l) in labels.iter().enumerate() {
            targets.row_mut(i)[l] = T::one();
        }
        Self::new(features, targets, weights)
    }
}

impl<T: Float> Batch<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn targets(&self) -> &Matrix<T> {
        &self.targets
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Promotes the batch to another scalar type.
    pub fn cast<U: Float + Default>(&self) -> Batch<U> {
        let conv = |m: &Matrix<T>| {
            Matrix::from_vec(m.rows(), m.cols(), m.as_slice().iter().map(|&v| cast(v)).collect())
                .expect("same shape")
        };
        Batch {
            features: conv(&self.features),
            targets: conv(&self.targets),
            weights: self.weights.iter().map(|&w| cast(w)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_row(v: &[f32]) -> Matrix<f32> {
        Matrix::from_rows(&[v]).unwrap()
    }

    #[test]
    fn init_shapes_and_zero_bias() {
        let m = Model::new(&[2, 2], 0).unwrap();
        assert_eq!(m.layers().len(), 1);
        assert_eq!(m.layers()[0].weights().len(), 4);
        assert_eq!(m.layers()[0].biases(), &[0.0, 0.0]);

        let big = Model::new(&[2048, 2], 7).unwrap();
        assert_eq!(big.layer_dims(), vec![2048, 2]);
        let limit = libm::sqrtf(6.0 / 2050.0);
        assert!(big.layers()[0].weights().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_is_deterministic() {
        assert_eq!(Model::new(&[4, 8, 3], 11).unwrap(), Model::new(&[4, 8, 3], 11).unwrap());
        assert_ne!(Model::new(&[4, 8, 3], 11).unwrap(), Model::new(&[4, 8, 3], 12).unwrap());
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(matches!(Model::new(&[], 0), Err(Error::Config(_))));
        assert!(matches!(Model::new(&[3], 0), Err(Error::Config(_))));
        assert!(matches!(Model::new(&[3, 0, 2], 0), Err(Error::Config(_))));
    }

    #[test]
    fn forward_examples() {
        let zero = Model::from_layers(
            vec![Layer::from_parts(3, 2, vec![0.0; 6], vec![0.0; 2]).unwrap()],
            0,
        )
        .unwrap();
        let s = zero.forward(&one_row(&[5.0, -1.0, 2.0])).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 0.0]);

        let ident = Model::from_layers(
            vec![Layer::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2]).unwrap()],
            0,
        )
        .unwrap();
        assert_eq!(ident.forward(&one_row(&[1.0, 0.0])).unwrap().as_slice(), &[1.0, 0.0]);

        let m = Model::new(&[4, 5, 2], 3).unwrap();
        let x = Matrix::from_rows(&[[0.1f32, 0.2, 0.3, 0.4], [1.0, -1.0, 0.5, 0.0], [3.0, 2.0, 1.0, 0.0]]).unwrap();
        let s = m.forward(&x).unwrap();
        assert_eq!((s.rows(), s.cols()), (3, 2));
        assert!(s.all_finite());

        assert!(matches!(m.forward(&one_row(&[1.0, 2.0])), Err(Error::Shape(_))));
    }

    #[test]
    fn output_layer_is_not_rectified() {
        let m = Model::from_layers(
            vec![Layer::from_parts(1, 1, vec![-2.0], vec![0.0]).unwrap()],
            0,
        )
        .unwrap();
        assert_eq!(m.forward_row(&[1.0]), vec![-2.0]);
    }

    #[test]
    fn mse_examples() {
        let t = |c: usize| {
            let mut m = Matrix::zeros(1, 2);
            m.row_mut(0)[c] = 1.0f32;
            m
        };
        assert_eq!(weighted_mse_loss(&one_row(&[1.0, 0.0]), &t(0), &[1.0]).unwrap(), 0.0);
        assert_eq!(weighted_mse_loss(&one_row(&[0.0, 0.0]), &t(0), &[1.0]).unwrap(), 1.0);
        assert_eq!(weighted_mse_loss(&one_row(&[0.0, 0.0]), &t(0), &[0.5]).unwrap(), 0.5);
        assert!(matches!(
            weighted_mse_loss(&one_row(&[0.0, 0.0]), &t(0), &[1.0, 1.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn mse_normalizes_by_count_not_weight_sum() {
        let scores = Matrix::from_rows(&[[0.0f32, 0.0], [1.0, 0.0]]).unwrap();
        let targets = Matrix::from_rows(&[[1.0f32, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(weighted_mse_loss(&scores, &targets, &[0.5, 1.0]).unwrap(), 0.25);
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0f64, 0.0]), vec![0.5, 0.5]);
        for c in [-50.0f64, 0.0, 3.5, 700.0] {
            for p in softmax(&[c, c, c]) {
                assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
            }
        }
        let p = softmax(&[1000.0f32, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn ce_examples() {
        let t = Matrix::from_rows(&[[1.0f32, 0.0]]).unwrap();
        let ce = softmax_ce_loss(&one_row(&[0.0, 0.0]), &t, &[1.0]).unwrap();
        assert_abs_diff_eq!(ce, core::f64::consts::LN_2, epsilon = 1e-12);
        let ce = softmax_ce_loss(&one_row(&[60.0, 0.0]), &t, &[1.0]).unwrap();
        assert!(ce < 1e-20);
        let two = Matrix::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        let s = Matrix::from_rows(&[[3.0f32, -1.0], [0.5, 0.1]]).unwrap();
        assert_eq!(softmax_ce_loss(&s, &two, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn zero_weight_batch_does_not_move_parameters() {
        let mut m = Model::new(&[3, 4, 2], 5).unwrap();
        let before = m.clone();
        let x = Matrix::from_rows(&[[0.3f32, -0.2, 1.0], [1.0, 1.0, 1.0]]).unwrap();
        let batch = Batch::from_labels(x, &[0, 1], vec![0.0, 0.0], 2).unwrap();
        let mut opt = Sgd::new(&m, 0.1, 0.9).unwrap();
        for kind in [LossKind::Mse, LossKind::Ce] {
            let (_, g) = m.loss_and_gradients(&batch, kind).unwrap();
            assert!(g.flatten().iter().all(|&v| v == 0.0));
            m.train_step(&batch, kind, &mut opt).unwrap();
        }
        assert_eq!(m, before);
    }

    #[test]
    fn batch_validation() {
        let x = Matrix::from_rows(&[[0.0f32, 1.0]]).unwrap();
        let bad_target = Matrix::from_rows(&[[0.5f32, 0.5]]).unwrap();
        assert!(Batch::new(x.clone(), bad_target, vec![1.0]).is_err());
        assert!(Batch::from_labels(x.clone(), &[2], vec![1.0], 2).is_err());
        assert!(Batch::from_labels(x.clone(), &[0], vec![-1.0], 2).is_err());
        assert!(Batch::from_labels(x, &[0, 1], vec![1.0], 2).is_err());
    }

    #[test]
    fn optimizer_rejects_bad_hyperparameters() {
        let m = Model::new(&[2, 2], 0).unwrap();
        assert!(Sgd::new(&m, -0.1, 0.9).is_err());
        assert!(Sgd::new(&m, 0.1, 1.0).is_err());
        assert!(Sgd::new(&m, f32::NAN, 0.0).is_err());
    }

    #[test]
    fn exploding_step_is_rejected_and_rolled_back() {
        let mut m = Model::new(&[1, 1], 0).unwrap();
        let x = Matrix::from_rows(&[[1.0e30f32]]).unwrap();
        let batch = Batch::from_labels(x, &[0], vec![1.0], 1).unwrap();
        let before = m.clone();
        let mut opt = Sgd::new(&m, 1.0, 0.0).unwrap();
        assert!(matches!(m.train_step(&batch, LossKind::Mse, &mut opt), Err(Error::Numerical(_))));
        assert_eq!(m, before);
    }
}
