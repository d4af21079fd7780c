use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde_json::json;

use super::data::Dataset;
use super::rng;
use crate::error::{Error, Result};
use crate::tensorio::{ActivationSet, ArchSpec, Checkpoint, Layer, LayerParams, PredictionSet};

/// He-style uniform initialisation: weights in `±√(6 / fan_in)`, zero biases.
///
/// Weights are drawn layer by layer in row-major order from [`rng::seeded`].
pub fn init_mlp(arch: &ArchSpec, seed: u64) -> Result<Checkpoint> {
    arch.validate()?;
    let mut rng = rng::seeded(seed);
    let params = arch
        .layer_names()
        .into_iter()
        .zip(arch.weight_shapes())
        .map(|(name, (out, fan_in))| {
            let bound = (6.0 / fan_in as f64).sqrt();
            let weight = Array2::from_shape_simple_fn((out, fan_in), || (2.0 * rng::unit_f64(&mut rng) - 1.0) * bound);
            LayerParams { name, weight, bias: Array1::zeros(out) }
        })
        .collect();
    let provenance = BTreeMap::from([
        ("init".to_string(), json!("he_uniform")),
        ("prng".to_string(), json!(rng::PRNG_NAME)),
        ("seed".to_string(), json!(seed)),
    ]);
    Checkpoint::new(&format!("mlp-{arch}-seed{seed}"), arch.clone(), params, provenance)
}

/// Outputs of every layer for one batch of inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardPass {
    /// Post-ReLU outputs of the hidden layers, in order.
    pub hidden: Vec<Array2<f64>>,
    pub logits: Array2<f64>,
    layer_names: Vec<String>,
}

impl ForwardPass {
    pub fn probs(&self) -> Array2<f64> {
        softmax_rows(self.logits.view())
    }

    /// Hidden layers `h1..hk` plus `logits`.
    pub fn activation_set(&self, model_id: &str, dataset_id: &str) -> Result<ActivationSet> {
        let layers = self
            .hidden
            .iter()
            .chain(std::iter::once(&self.logits))
            .zip(&self.layer_names)
            .map(|(values, name)| Layer { name: name.clone(), values: values.clone() })
            .collect();
        ActivationSet::new(model_id, dataset_id, layers)
    }
}

pub fn forward(ckpt: &Checkpoint, x: ArrayView2<'_, f64>) -> Result<ForwardPass> {
    let arch = ckpt.arch();
    if x.ncols() != arch.input_dim {
        return Err(Error::Shape(format!(
            "inputs have {} features, {} expects {}",
            x.ncols(),
            arch,
            arch.input_dim
        )));
    }
    let params = ckpt.params();
    let mut hidden = Vec::with_capacity(params.len().saturating_sub(1));
    let mut current = x.to_owned();
    for (k, p) in params.iter().enumerate() {
        let mut z = current.dot(&p.weight.t());
        z += &p.bias;
        if k + 1 == params.len() {
            return Ok(ForwardPass { hidden, logits: z, layer_names: arch.layer_names() });
        }
        z.mapv_inplace(|v| v.max(0.0));
        hidden.push(z.clone());
        current = z;
    }
    unreachable!("a checkpoint has at least one layer")
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(row: ndarray::ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy_from_logits(logits: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
    let correct = logits
        .axis_iter(Axis(0))
        .zip(labels)
        .filter(|(row, &label)| argmax(row.view()) == label)
        .count();
    correct as f64 / labels.len() as f64
}

/// Fraction of rows whose argmax logit equals the label.
pub fn accuracy(ckpt: &Checkpoint, data: &Dataset) -> Result<f64> {
    let pass = forward(ckpt, data.x().view())?;
    Ok(accuracy_from_logits(pass.logits.view(), data.labels()))
}

pub fn predictions(ckpt: &Checkpoint, x: ArrayView2<'_, f64>, dataset_id: &str) -> Result<PredictionSet> {
    let probs = forward(ckpt, x)?.probs();
    PredictionSet::new(&ckpt.model_id, dataset_id, probs)
}

/// Activations of every layer, named `h1..hk, logits`.
pub fn capture_activations(ckpt: &Checkpoint, x: ArrayView2<'_, f64>, dataset_id: &str) -> Result<ActivationSet> {
    forward(ckpt, x)?.activation_set(&ckpt.model_id, dataset_id)
}
