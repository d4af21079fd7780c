use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::data::Dataset;
use super::mlp::{accuracy_from_logits, forward, softmax_rows};
use super::rng;
use crate::error::{Error, Result};
use crate::tensorio::{Checkpoint, LayerParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.1, momentum: 0.9, epochs: 50, batch_size: 32, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-layer `(dW, db)` of the mean cross-entropy loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(pub Vec<(Array2<f64>, Array1<f64>)>);

/// One scalar parameter of a checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamCoord {
    Weight { layer: usize, row: usize, col: usize },
    Bias { layer: usize, index: usize },
}

impl Gradients {
    pub fn get(&self, coord: ParamCoord) -> f64 {
        match coord {
            ParamCoord::Weight { layer, row, col } => self.0[layer].0[[row, col]],
            ParamCoord::Bias { layer, index } => self.0[layer].1[index],
        }
    }
}

/// Every coordinate of `ckpt`, layer by layer, weights (row-major) before biases.
pub fn all_coords(ckpt: &Checkpoint) -> Vec<ParamCoord> {
    let mut coords = Vec::new();
    for (layer, p) in ckpt.params().iter().enumerate() {
        let (rows, cols) = p.weight.dim();
        for row in 0..rows {
            for col in 0..cols {
                coords.push(ParamCoord::Weight { layer, row, col });
            }
        }
        coords.extend((0..p.bias.len()).map(|index| ParamCoord::Bias { layer, index }));
    }
    coords
}

fn check_labels(ckpt: &Checkpoint, labels: &[usize]) -> Result<()> {
    let c = ckpt.arch().n_classes();
    if let Some(bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::Validation(format!("label {bad} out of range for {c} classes")));
    }
    Ok(())
}

fn cross_entropy(logits: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &y) in logits.axis_iter(Axis(0)).zip(labels) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    total / labels.len() as f64
}

/// Mean softmax cross-entropy over `(x, labels)`.
pub fn mean_loss(ckpt: &Checkpoint, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
    check_labels(ckpt, labels)?;
    let pass = forward(ckpt, x)?;
    Ok(cross_entropy(pass.logits.view(), labels))
}

/// Loss and backpropagated gradients for one batch.
pub fn loss_and_gradients(ckpt: &Checkpoint, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
    check_labels(ckpt, labels)?;
    if x.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    let pass = forward(ckpt, x)?;
    let loss = cross_entropy(pass.logits.view(), labels);
    let batch = labels.len() as f64;

    let mut delta = softmax_rows(pass.logits.view());
    for (i, &y) in labels.iter().enumerate() {
        delta[[i, y]] -= 1.0;
    }
    delta /= batch;

    let params = ckpt.params();
    let mut grads = vec![(Array2::zeros((0, 0)), Array1::zeros(0)); params.len()];
    for k in (0..params.len()).rev() {
        let input = if k == 0 { x } else { pass.hidden[k - 1].view() };
        let dw = delta.t().dot(&input);
        let db = delta.sum_axis(Axis(0));
        if k > 0 {
            let mut upstream = delta.dot(&params[k].weight);
            ndarray::Zip::from(&mut upstream)
                .and(&pass.hidden[k - 1])
                .for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            delta = upstream;
        }
        grads[k] = (dw, db);
    }
    Ok((loss, Gradients(grads)))
}

fn nudge(ckpt: &Checkpoint, coord: ParamCoord, delta: f64) -> Checkpoint {
    ckpt.map_params(&ckpt.model_id, |k, p| {
        let mut p = p.clone();
        match coord {
            ParamCoord::Weight { layer, row, col } if layer == k => p.weight[[row, col]] += delta,
            ParamCoord::Bias { layer, index } if layer == k => p.bias[index] += delta,
            _ => {}
        }
        p
    })
}

/// Central finite difference of the mean loss along one coordinate.
pub fn numerical_gradient(ckpt: &Checkpoint, data: &Dataset, coord: ParamCoord, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let plus = mean_loss(&nudge(ckpt, coord, epsilon), data.x().view(), data.labels())?;
    let minus = mean_loss(&nudge(ckpt, coord, -epsilon), data.x().view(), data.labels())?;
    Ok((plus - minus) / (2.0 * epsilon))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean of the minibatch losses, weighted by batch size.
    pub loss: f64,
    /// Training-set accuracy after the epoch.
    pub accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
}

/// Minibatch SGD with heavy-ball momentum (`v ← μv + g`, `θ ← θ − ηv`).
///
/// Each epoch visits the data in a fresh permutation drawn from `cfg.seed`.
/// The update order is fixed, so the result is bit-reproducible.
pub fn train_sgd(ckpt: &Checkpoint, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_labels(ckpt, data.labels())?;
    let mut current = ckpt.clone();
    let mut velocity: Vec<(Array2<f64>, Array1<f64>)> = current
        .params()
        .iter()
        .map(|p| (Array2::zeros(p.weight.dim()), Array1::zeros(p.bias.len())))
        .collect();
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let x = data.x().select(Axis(0), chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| data.labels()[i]).collect();
            let (loss, grads) = loss_and_gradients(&current, x.view(), &labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch: batch_idx, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            for ((vw, vb), (gw, gb)) in velocity.iter_mut().zip(&grads.0) {
                vw.zip_mut_with(gw, |v, &g| *v = cfg.momentum * *v + g);
                vb.zip_mut_with(gb, |v, &g| *v = cfg.momentum * *v + g);
            }
            current = current.map_params(&current.model_id, |k, p| {
                let (vw, vb) = &velocity[k];
                LayerParams {
                    name: p.name.clone(),
                    weight: &p.weight - &(vw * cfg.learning_rate),
                    bias: &p.bias - &(vb * cfg.learning_rate),
                }
            });
        }
        let epoch_loss = epoch_loss / data.len() as f64;
        let logits = forward(&current, data.x().view())?.logits;
        if !logits.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { epoch, batch: order.len().div_ceil(cfg.batch_size), loss: f64::NAN });
        }
        log.push(EpochLog { epoch, loss: epoch_loss, accuracy: accuracy_from_logits(logits.view(), data.labels()) });
    }

    current.provenance.insert("train".to_string(), json!(cfg));
    current.provenance.insert("train_dataset".to_string(), json!(data.id));
    Ok(TrainOutcome { checkpoint: current, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toymodel::{init_mlp, make_blobs};
    use crate::tensorio::ArchSpec;
    use ndarray::array;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
    }

    #[test]
    fn analytic_matches_finite_differences() {
        let arch: ArchSpec = "4:6:5:3".parse().unwrap();
        let ckpt = init_mlp(&arch, 11).unwrap();
        let data = make_blobs(7, 4, 3, 1.0, 2).unwrap();
        let (_, grads) = loss_and_gradients(&ckpt, data.x().view(), data.labels()).unwrap();
        for coord in all_coords(&ckpt) {
            let num = numerical_gradient(&ckpt, &data, coord, 1e-5).unwrap();
            assert!(rel_err(grads.get(coord), num) <= 1e-4, "{coord:?}: {} vs {num}", grads.get(coord));
        }
    }

    #[test]
    fn zero_network_bias_gradient_is_residual_mean() {
        // Logits are 0, so p = 1/C and dL/db_c = 1/C - (fraction labelled c).
        let arch: ArchSpec = "2:3".parse().unwrap();
        let ckpt = init_mlp(&arch, 0).unwrap().map_params("zero", |_, p| LayerParams {
            name: p.name.clone(),
            weight: Array2::zeros(p.weight.dim()),
            bias: Array1::zeros(p.bias.len()),
        });
        let x = array![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let labels = vec![0, 0, 1, 2];
        let data = Dataset::new("sym", x, labels).unwrap();
        let (_, grads) = loss_and_gradients(&ckpt, data.x().view(), data.labels()).unwrap();
        let expected = [1.0 / 3.0 - 0.5, 1.0 / 3.0 - 0.25, 1.0 / 3.0 - 0.25];
        for (c, e) in expected.iter().enumerate() {
            let coord = ParamCoord::Bias { layer: 0, index: c };
            assert!((grads.get(coord) - e).abs() < 1e-15);
            assert!((numerical_gradient(&ckpt, &data, coord, 1e-5).unwrap() - e).abs() < 1e-9);
        }
    }

    #[test]
    fn dead_unit_has_flat_gradient() {
        let arch: ArchSpec = "2:2:2".parse().unwrap();
        let ckpt = init_mlp(&arch, 3).unwrap().map_params("dead", |k, p| {
            let mut p = p.clone();
            if k == 0 {
                p.bias[1] = -100.0;
            }
            p
        });
        let data = make_blobs(5, 2, 2, 0.5, 1).unwrap();
        let coord = ParamCoord::Weight { layer: 0, row: 1, col: 0 };
        assert!(numerical_gradient(&ckpt, &data, coord, 1e-5).unwrap().abs() < 1e-8);
    }

    #[test]
    fn vanishing_learning_rate_keeps_params() {
        let ckpt = init_mlp(&"3:5:2".parse().unwrap(), 4).unwrap();
        let data = make_blobs(10, 3, 2, 0.5, 4).unwrap();
        let cfg = TrainConfig { learning_rate: 1e-12, momentum: 0.9, epochs: 1, batch_size: 4, seed: 0 };
        let out = train_sgd(&ckpt, &data, &cfg).unwrap().checkpoint;
        for (a, b) in out.params().iter().zip(ckpt.params()) {
            assert!((&a.weight - &b.weight).iter().all(|d| d.abs() <= 1e-9));
            assert!((&a.bias - &b.bias).iter().all(|d| d.abs() <= 1e-9));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let ckpt = init_mlp(&"3:8:3".parse().unwrap(), 4).unwrap();
        let data = make_blobs(10, 3, 3, 0.5, 4).unwrap();
        let cfg = TrainConfig { epochs: 3, batch_size: 7, ..TrainConfig::default() };
        let a = train_sgd(&ckpt, &data, &cfg).unwrap();
        let b = train_sgd(&ckpt, &data, &cfg).unwrap();
        assert!(a.checkpoint.params_bits_eq(&b.checkpoint));
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn divergence_is_reported() {
        let ckpt = init_mlp(&"3:8:3".parse().unwrap(), 4).unwrap();
        let data = make_blobs(10, 3, 3, 50.0, 4).unwrap();
        let cfg = TrainConfig { learning_rate: 1e200, momentum: 0.0, epochs: 5, batch_size: 30, seed: 0 };
        assert!(matches!(train_sgd(&ckpt, &data, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { momentum: 1.0, ..TrainConfig::default() },
            TrainConfig { epochs: 0, ..TrainConfig::default() },
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}
