//! Desk-scale continual learner.
//!
//! A single-head softmax classifier, optionally with hidden layers, trained by
//! plain mini-batch SGD on mean cross-entropy. Experience replay mixes
//! buffer samples into every mini-batch.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::buffer::ReplayBuffer;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// One affine block `x W + b`; `weight` is `inputs × outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

/// Gradients with the same block layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl ModelParams {
    /// Layer sizes `[input, hidden..., classes]`, weights drawn from
    /// `N(0, gain/fan_in)` (gain 2 for ReLU, 1 for tanh), zero biases.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        classes: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let dims = Self::dims_for(input_dim, hidden, classes)?;
        let gain = match activation {
            Activation::Relu => 2.0,
            Activation::Tanh => 1.0,
        };
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let scale = (gain / w[0] as f64).sqrt();
                Layer {
                    name: format!("block{i}"),
                    weight: Array2::from_shape_fn((w[0], w[1]), |_| {
                        scale * rng.sample::<f64, _>(StandardNormal)
                    }),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self { layers, activation })
    }

    pub fn zeros(
        input_dim: usize,
        hidden: &[usize],
        classes: usize,
        activation: Activation,
    ) -> Result<Self> {
        let dims = Self::dims_for(input_dim, hidden, classes)?;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer {
                name: format!("block{i}"),
                weight: Array2::zeros((w[0], w[1])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Self { layers, activation })
    }

    fn dims_for(input_dim: usize, hidden: &[usize], classes: usize) -> Result<Vec<usize>> {
        if input_dim == 0 || classes < 2 || hidden.contains(&0) {
            return Err(Error::config(format!(
                "bad model shape: input {input_dim}, hidden {hidden:?}, classes {classes}"
            )));
        }
        let mut dims = vec![input_dim];
        dims.extend_from_slice(hidden);
        dims.push(classes);
        Ok(dims)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weight.dim() == b.weight.dim() && a.bias.dim() == b.bias.dim())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Outputs of every block: hidden activations, then logits.
    pub fn activations(&self, x: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut outs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { outs[i - 1].view() };
            let mut z = input.dot(&layer.weight) + &layer.bias;
            if i < last {
                self.activation.apply(&mut z);
            }
            outs.push(z);
        }
        Ok(outs)
    }

    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.activations(x)?.pop().expect("at least one layer"))
    }

    /// Softmax probabilities and argmax class per row.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<(Vec<usize>, Array2<f64>)> {
        let probs = softmax_rows(&self.logits(x)?);
        let classes = probs
            .rows()
            .into_iter()
            .map(|r| argmax(r.iter().copied()))
            .collect();
        Ok((classes, probs))
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, y: &[usize]) -> Result<(f64, Gradients)> {
        if x.nrows() != y.len() || y.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|&&c| c >= self.classes()) {
            return Err(Error::ShapeMismatch(format!(
                "label {bad} out of range for {} outputs",
                self.classes()
            )));
        }
        let acts = self.activations(x)?;
        let probs = softmax_rows(acts.last().expect("logits"));
        let n = y.len() as f64;
        let loss = -y
            .iter()
            .enumerate()
            .map(|(i, &c)| probs[[i, c]].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / n;

        // dL/dlogits = (p - onehot) / n
        let mut delta = probs;
        for (i, &c) in y.iter().enumerate() {
            delta[[i, c]] -= 1.0;
        }
        delta /= n;

        let count = self.layers.len();
        let mut weights = vec![Array2::zeros((0, 0)); count];
        let mut biases = vec![Array1::zeros(0); count];
        for i in (0..count).rev() {
            let input = if i == 0 { x } else { acts[i - 1].view() };
            weights[i] = input.t().dot(&delta);
            biases[i] = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weight.t());
                let act = self.activation;
                Zip::from(&mut back)
                    .and(&acts[i - 1])
                    .for_each(|g, &a| *g *= act.derivative_from_output(a));
                delta = back;
            }
        }
        Ok((loss, Gradients { weights, biases }))
    }

    pub fn sgd_step(&mut self, grads: &Gradients, lr: f64) {
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grads.weights).zip(&grads.biases) {
            layer.weight.scaled_add(-lr, gw);
            layer.bias.scaled_add(-lr, gb);
        }
    }

    /// `alpha · self + (1 − alpha) · other`, block by block.
    pub fn interpolate(&self, other: &ModelParams, alpha: f64) -> Result<ModelParams> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(
                "cannot interpolate models of different shapes".into(),
            ));
        }
        let layers = self
            .layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| Layer {
                name: a.name.clone(),
                weight: &a.weight * alpha + &b.weight * (1.0 - alpha),
                bias: &a.bias * alpha + &b.bias * (1.0 - alpha),
            })
            .collect();
        Ok(ModelParams {
            layers,
            activation: self.activation,
        })
    }

    pub fn accuracy(&self, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
        if y.is_empty() {
            return Ok(0.0);
        }
        let (pred, _) = self.predict(x)?;
        let hits = pred.iter().zip(y).filter(|(p, t)| p == t).count();
        Ok(hits as f64 / y.len() as f64)
    }

    /// SHA-256 over block names, shapes and parameter bits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}", self.activation).as_bytes());
        for l in &self.layers {
            h.update(l.name.as_bytes());
            h.update((l.inputs() as u64).to_le_bytes());
            h.update((l.outputs() as u64).to_le_bytes());
            for v in l.weight.iter().chain(l.bias.iter()) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    out
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs_per_experience: usize,
    pub batch_size: usize,
    /// Fraction of each mini-batch drawn from the replay buffer.
    pub replay_mix: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            epochs_per_experience: 2,
            batch_size: 32,
            replay_mix: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::config(format!("lr must be finite and >= 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.replay_mix) {
            return Err(Error::config(format!(
                "replay_mix must lie in [0, 1], got {}",
                self.replay_mix
            )));
        }
        Ok(())
    }

    /// `(current, replay)` samples per mini-batch when replay is active.
    pub fn batch_split(&self) -> (usize, usize) {
        let replay = (self.replay_mix * self.batch_size as f64).ceil() as usize;
        let replay = replay.min(self.batch_size);
        ((self.batch_size - replay).max(1), replay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub steps: usize,
    pub mean_loss: f64,
}

/// Trains on one experience. With a buffer (experience replay) each
/// mini-batch holds `⌈replay_mix · batch⌉` buffer samples; the caller updates
/// the buffer afterwards.
pub fn train_on_experience<R: Rng + ?Sized>(
    params: &mut ModelParams,
    dataset: &LabeledDataset,
    instances: &[usize],
    buffer: Option<&ReplayBuffer>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainStats> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(Error::data("cannot train on an empty experience"));
    }
    let replaying = buffer.is_some_and(|b| !b.is_empty()) && cfg.replay_mix > 0.0;
    let (current, replay) = if replaying {
        cfg.batch_split()
    } else {
        (cfg.batch_size, 0)
    };

    let mut order = instances.to_vec();
    let mut steps = 0;
    let mut loss_sum = 0.0;
    for epoch in 0..cfg.epochs_per_experience {
        order.shuffle(rng);
        for (b, chunk) in order.chunks(current).enumerate() {
            let mut batch: Vec<usize> = chunk.to_vec();
            if replay > 0 {
                let buf = buffer.expect("replaying implies a buffer");
                batch.extend(buf.sample_batch(replay, rng).iter().map(|s| s.instance));
            }
            let (x, y) = dataset.gather(&batch);
            let (loss, grads) = params.loss_and_grad(x.view(), &y)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss {loss} at epoch {epoch}, batch {b} (lr {})",
                    cfg.lr
                )));
            }
            params.sgd_step(&grads, cfg.lr);
            loss_sum += loss;
            steps += 1;
        }
    }
    if !params.is_finite() {
        return Err(Error::Numerical("parameters became non-finite".into()));
    }
    Ok(TrainStats {
        steps,
        mean_loss: if steps == 0 { 0.0 } else { loss_sum / steps as f64 },
    })
}

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

/// Model snapshot tagged with the experience it was taken after
/// (`None` for the initialisation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub experience_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    pub params: ModelParams,
    pub digest: String,
}

pub fn snapshot(params: &ModelParams, experience_index: Option<usize>) -> Checkpoint {
    Checkpoint {
        format_version: CHECKPOINT_FORMAT_VERSION,
        experience_index,
        config_digest: None,
        params: params.clone(),
        digest: params.digest(),
    }
}

pub fn restore(checkpoint: &Checkpoint) -> Result<ModelParams> {
    if checkpoint.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Checkpoint {
            path: Default::default(),
            reason: format!("unsupported format version {}", checkpoint.format_version),
        });
    }
    let actual = checkpoint.params.digest();
    if actual != checkpoint.digest {
        return Err(Error::Checkpoint {
            path: Default::default(),
            reason: format!("digest mismatch: stored {}, computed {actual}", checkpoint.digest),
        });
    }
    Ok(checkpoint.params.clone())
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Reads and verifies a checkpoint file.
    pub fn load(path: &Path) -> Result<(Checkpoint, ModelParams)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Checkpoint {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
        let params = restore(&ckpt).map_err(|e| match e {
            Error::Checkpoint { reason, .. } => Error::Checkpoint {
                path: path.to_owned(),
                reason,
            },
            other => other,
        })?;
        Ok((ckpt, params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_synthetic_dataset, SyntheticSpec};
    use crate::rng::seeded;
    use ndarray::array;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
    }

    /// Central differences of the full loss w.r.t. every parameter.
    fn numeric_grad(p: &ModelParams, x: ArrayView2<f64>, y: &[usize]) -> Gradients {
        let h = 1e-6;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for li in 0..p.layers.len() {
            let mut gw = Array2::zeros(p.layers[li].weight.dim());
            for idx in ndarray::indices(p.layers[li].weight.dim()) {
                let mut plus = p.clone();
                plus.layers[li].weight[idx] += h;
                let mut minus = p.clone();
                minus.layers[li].weight[idx] -= h;
                gw[idx] = (plus.loss_and_grad(x, y).unwrap().0
                    - minus.loss_and_grad(x, y).unwrap().0)
                    / (2.0 * h);
            }
            let mut gb = Array1::zeros(p.layers[li].bias.dim());
            for k in 0..gb.len() {
                let mut plus = p.clone();
                plus.layers[li].bias[k] += h;
                let mut minus = p.clone();
                minus.layers[li].bias[k] -= h;
                gb[k] = (plus.loss_and_grad(x, y).unwrap().0
                    - minus.loss_and_grad(x, y).unwrap().0)
                    / (2.0 * h);
            }
            weights.push(gw);
            biases.push(gb);
        }
        Gradients { weights, biases }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = seeded(0);
        for (case, act) in [Activation::Tanh, Activation::Relu].into_iter().enumerate() {
            let p = ModelParams::init(3, &[4], 3, act, &mut rng).unwrap();
            let x = Array2::from_shape_fn((5, 3), |_| rng.sample::<f64, _>(StandardNormal));
            let y = vec![0, 1, 2, 1, case % 3];
            let (_, g) = p.loss_and_grad(x.view(), &y).unwrap();
            let n = numeric_grad(&p, x.view(), &y);
            for (a, b) in g.weights.iter().zip(&n.weights) {
                for (u, v) in a.iter().zip(b) {
                    assert!(rel_err(*u, *v) < 1e-4, "{u} vs {v}");
                }
            }
            for (a, b) in g.biases.iter().zip(&n.biases) {
                for (u, v) in a.iter().zip(b) {
                    assert!(rel_err(*u, *v) < 1e-4, "{u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let p = ModelParams::zeros(4, &[], 5, Activation::Relu).unwrap();
        let x = array![[1.0, -2.0, 3.0, 0.5]];
        let (_, probs) = p.predict(x.view()).unwrap();
        for v in probs.iter() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn logit_gradient_at_zero_is_p_minus_onehot() {
        // with a linear model and x = e_0, dL/dW[0, :] equals dL/dlogits
        let c = 4;
        let p = ModelParams::zeros(2, &[], c, Activation::Relu).unwrap();
        let x = array![[1.0, 0.0]];
        let (_, g) = p.loss_and_grad(x.view(), &[2]).unwrap();
        for k in 0..c {
            let expected = 1.0 / c as f64 - if k == 2 { 1.0 } else { 0.0 };
            assert!((g.weights[0][[0, k]] - expected).abs() < 1e-12);
            assert!((g.biases[0][k] - expected).abs() < 1e-12);
        }
        let n = numeric_grad(&p, x.view(), &[2]);
        for k in 0..c {
            assert!((n.biases[0][k] - g.biases[0][k]).abs() < 1e-5);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = seeded(1);
        let p = ModelParams::init(6, &[8], 7, Activation::Relu, &mut rng).unwrap();
        let x = Array2::from_shape_fn((20, 6), |_| 5.0 * rng.sample::<f64, _>(StandardNormal));
        let (_, probs) = p.predict(x.view()).unwrap();
        for row in probs.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let p = ModelParams::zeros(3, &[], 2, Activation::Relu).unwrap();
        assert!(p.predict(Array2::zeros((1, 4)).view()).is_err());
    }

    #[test]
    fn zero_lr_leaves_params_unchanged() {
        let data = make_synthetic_dataset(&SyntheticSpec::new(3, 20, 4, 0.2), &mut seeded(2)).unwrap();
        let mut rng = seeded(3);
        let mut p = ModelParams::init(4, &[5], 3, Activation::Relu, &mut rng).unwrap();
        let before = p.clone();
        let cfg = TrainConfig { lr: 0.0, ..TrainConfig::default() };
        let all: Vec<usize> = (0..data.train.len()).collect();
        train_on_experience(&mut p, &data.train, &all, None, &cfg, &mut rng).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = make_synthetic_dataset(&SyntheticSpec::new(2, 100, 2, 0.3), &mut seeded(4)).unwrap();
        let mut rng = seeded(5);
        let mut p = ModelParams::zeros(2, &[], 2, Activation::Relu).unwrap();
        let cfg = TrainConfig {
            lr: 0.5,
            epochs_per_experience: 20,
            batch_size: 16,
            replay_mix: 0.0,
        };
        let all: Vec<usize> = (0..data.train.len()).collect();
        train_on_experience(&mut p, &data.train, &all, None, &cfg, &mut rng).unwrap();
        let acc = p.accuracy(data.train.features(), data.train.labels()).unwrap();
        assert!(acc >= 0.99, "{acc}");
    }

    #[test]
    fn training_is_deterministic() {
        let data = make_synthetic_dataset(&SyntheticSpec::new(3, 30, 4, 0.5), &mut seeded(6)).unwrap();
        let run = || {
            let mut rng = seeded(7);
            let mut p = ModelParams::init(4, &[6], 3, Activation::Relu, &mut rng).unwrap();
            let all: Vec<usize> = (0..data.train.len()).collect();
            train_on_experience(&mut p, &data.train, &all, None, &TrainConfig::default(), &mut rng)
                .unwrap();
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_is_reported() {
        let data = make_synthetic_dataset(&SyntheticSpec::new(3, 30, 4, 0.5), &mut seeded(6)).unwrap();
        let mut rng = seeded(8);
        let mut p = ModelParams::init(4, &[6], 3, Activation::Relu, &mut rng).unwrap();
        let cfg = TrainConfig { lr: 1e300, ..TrainConfig::default() };
        let all: Vec<usize> = (0..data.train.len()).collect();
        let err = train_on_experience(&mut p, &data.train, &all, None, &cfg, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn checkpoint_round_trip_and_corruption() {
        let mut rng = seeded(9);
        let p = ModelParams::init(3, &[4], 3, Activation::Tanh, &mut rng).unwrap();
        let ck = snapshot(&p, Some(4));
        assert_eq!(restore(&ck).unwrap(), p);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        ck.save(&path).unwrap();
        let (back, params) = Checkpoint::load(&path).unwrap();
        assert_eq!(back.experience_index, Some(4));
        assert_eq!(params, p);

        let mut bad = ck.clone();
        bad.params.layers[0].bias[0] += 1.0;
        bad.save(&path).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Checkpoint { .. })));
    }

    #[test]
    fn interpolation_endpoints() {
        let mut rng = seeded(10);
        let a = ModelParams::init(3, &[4], 3, Activation::Relu, &mut rng).unwrap();
        let b = ModelParams::init(3, &[4], 3, Activation::Relu, &mut rng).unwrap();
        assert_eq!(a.interpolate(&b, 1.0).unwrap(), a);
        assert_eq!(a.interpolate(&b, 0.0).unwrap(), b);
        let c = ModelParams::init(3, &[5], 3, Activation::Relu, &mut rng).unwrap();
        assert!(a.interpolate(&c, 0.5).is_err());
    }
}
