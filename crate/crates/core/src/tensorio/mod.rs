//! On-disk data boundary: NPY arrays plus `manifest.json` directories for
//! activation sets, prediction sets and checkpoints.
//!
//! Every directory holds a manifest of the form
//!
//! ```json
//! {"format_version": 1, "model_id": "...", "dataset_id": "...",
//!  "kind": "activations", "layers": [{"name": "h1", "file": "h1.npy", "shape": [50, 8]}]}
//! ```
//!
//! Checkpoints additionally carry an `arch` object and list one entry per
//! parameter (`h1.weight`, `h1.bias`, ...). Loaded objects are immutable
//! values and can be shared across threads.

mod npy;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Component, Path};
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

pub use npy::{decode, encode, read_array, read_array_with, write_array, DType, ReadOptions, Tensor, TensorData, MAGIC};

use crate::error::{Error, Result};
use crate::fsutil;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestKind {
    Activations,
    Predictions,
    Checkpoint,
    Dataset,
}

impl fmt::Display for ManifestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ManifestKind::Activations => "activations",
            ManifestKind::Predictions => "predictions",
            ManifestKind::Checkpoint => "checkpoint",
            ManifestKind::Dataset => "dataset",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub file: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub model_id: String,
    pub dataset_id: String,
    pub kind: ManifestKind,
    pub layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch: Option<ArchSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub provenance: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(kind: ManifestKind, model_id: &str, dataset_id: &str) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            model_id: model_id.to_string(),
            dataset_id: dataset_id.to_string(),
            kind,
            layers: Vec::new(),
            arch: None,
            provenance: BTreeMap::new(),
        }
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "{}: format_version {} is not supported",
                path.display(),
                m.format_version
            )));
        }
        let mut seen = HashSet::new();
        for entry in &m.layers {
            if !seen.insert(entry.name.as_str()) {
                return Err(Error::Validation(format!("duplicate layer name {:?}", entry.name)));
            }
            let plain = Path::new(&entry.file)
                .components()
                .all(|c| matches!(c, Component::Normal(_)));
            if !plain || entry.file.is_empty() {
                return Err(Error::Validation(format!(
                    "layer file {:?} must be a relative path inside the directory",
                    entry.file
                )));
            }
        }
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fsutil::atomic_write(dir.join(MANIFEST_FILE), text.as_bytes())
    }

    fn expect_kind(&self, kind: ManifestKind, dir: &Path) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Validation(format!(
                "{}: expected a {kind} manifest, found {}",
                dir.display(),
                self.kind
            )));
        }
        Ok(())
    }

    /// Loads the array behind `entry` and checks it against the declared shape.
    fn load_entry(&self, dir: &Path, entry: &LayerEntry) -> Result<Tensor> {
        let path = dir.join(&entry.file);
        if !path.exists() {
            return Err(Error::Validation(format!(
                "manifest lists {:?} but {} is missing",
                entry.name,
                path.display()
            )));
        }
        let t = read_array(&path)?;
        if t.shape() != entry.shape.as_slice() {
            return Err(Error::Shape(format!(
                "{:?}: manifest declares {:?}, file holds {:?}",
                entry.name,
                entry.shape,
                t.shape()
            )));
        }
        Ok(t)
    }
}

fn write_matrix(dir: &Path, manifest: &mut Manifest, name: &str, m: &Array2<f64>) -> Result<()> {
    let file = format!("{name}.npy");
    write_array(&Tensor::from_matrix(m), dir.join(&file))?;
    manifest.layers.push(LayerEntry { name: name.to_string(), file, shape: m.shape().to_vec() });
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    #[default]
    Softmax,
}

/// Shape of a ReLU MLP: `input_dim`, then hidden widths, then the class count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub input_dim: usize,
    pub layer_dims: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub output: OutputKind,
}

impl ArchSpec {
    pub fn new(input_dim: usize, layer_dims: Vec<usize>) -> Result<Self> {
        let arch = ArchSpec {
            input_dim,
            layer_dims,
            activation: Activation::Relu,
            output: OutputKind::Softmax,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.is_empty() {
            return Err(Error::InvalidArgument("an architecture needs at least one layer".into()));
        }
        if self.input_dim == 0 || self.layer_dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("all dimensions must be >= 1 in {self}")));
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_dims.last().expect("validated arch has layers")
    }

    pub fn n_layers(&self) -> usize {
        self.layer_dims.len()
    }

    /// `h1`, ..., `hk` for hidden layers, then `logits`.
    pub fn layer_names(&self) -> Vec<String> {
        let k = self.layer_dims.len();
        (0..k)
            .map(|i| if i + 1 == k { "logits".to_string() } else { format!("h{}", i + 1) })
            .collect()
    }

    /// `(out, in)` weight shape of every layer.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        let mut fan_in = self.input_dim;
        self.layer_dims
            .iter()
            .map(|&out| {
                let shape = (out, fan_in);
                fan_in = out;
                shape
            })
            .collect()
    }
}

impl fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input_dim)?;
        for d in &self.layer_dims {
            write!(f, ":{d}")?;
        }
        Ok(())
    }
}

/// Parses `input:hidden...:classes`, e.g. `8:64:32:5`.
impl FromStr for ArchSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let dims = s
            .split(':')
            .map(|part| {
                part.trim().parse::<usize>().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "{s:?} is not of the form input:hidden...:classes (bad component {part:?})"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if dims.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "{s:?} needs at least an input and an output dimension"
            )));
        }
        ArchSpec::new(dims[0], dims[1..].to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub name: String,
    pub values: Array2<f64>,
}

/// Per-layer `N × D` activations of one model on one ordered set of inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationSet {
    pub model_id: String,
    pub dataset_id: String,
    layers: Vec<Layer>,
}

impl ActivationSet {
    pub fn new(model_id: &str, dataset_id: &str, layers: Vec<Layer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Validation("an activation set needs at least one layer".into()))?;
        let n = first.values.nrows();
        let mut seen = HashSet::new();
        for layer in &layers {
            if layer.values.nrows() != n {
                return Err(Error::Validation(format!(
                    "layer {:?} has {} samples, layer {:?} has {n}",
                    layer.name,
                    layer.values.nrows(),
                    first.name
                )));
            }
            if !seen.insert(layer.name.as_str()) {
                return Err(Error::Validation(format!("duplicate layer name {:?}", layer.name)));
            }
        }
        Ok(ActivationSet {
            model_id: model_id.to_string(),
            dataset_id: dataset_id.to_string(),
            layers,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.layers[0].values.nrows()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_names(&self) -> Vec<&str> {
        self.layers.iter().map(|l| l.name.as_str()).collect()
    }

    pub fn layer(&self, name: &str) -> Option<&Array2<f64>> {
        self.layers.iter().find(|l| l.name == name).map(|l| &l.values)
    }

    /// Loads a directory; arrays with more than two axes are flattened row-major to `N × D`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = Manifest::read(dir)?;
        manifest.expect_kind(ManifestKind::Activations, dir)?;
        let layers = manifest
            .layers
            .iter()
            .map(|entry| {
                let values = manifest.load_entry(dir, entry)?.to_matrix()?;
                Ok(Layer { name: entry.name.clone(), values })
            })
            .collect::<Result<Vec<_>>>()?;
        ActivationSet::new(&manifest.model_id, &manifest.dataset_id, layers)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        fsutil::atomic_dir(dir, |tmp| {
            let mut manifest = Manifest::new(ManifestKind::Activations, &self.model_id, &self.dataset_id);
            for layer in &self.layers {
                write_matrix(tmp, &mut manifest, &layer.name, &layer.values)?;
            }
            manifest.write(tmp)
        })
    }
}

pub fn load_activation_set(dir: impl AsRef<Path>) -> Result<ActivationSet> {
    ActivationSet::load(dir)
}

/// `N × C` class probabilities of one model on one ordered set of inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub model_id: String,
    pub dataset_id: String,
    probs: Array2<f64>,
}

pub const PROB_SUM_TOLERANCE: f64 = 1e-5;

impl PredictionSet {
    pub fn new(model_id: &str, dataset_id: &str, probs: Array2<f64>) -> Result<Self> {
        for (i, row) in probs.rows().into_iter().enumerate() {
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::Validation(format!("row {i} holds probability {bad} outside [0, 1]")));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                return Err(Error::Validation(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(PredictionSet { model_id: model_id.to_string(), dataset_id: dataset_id.to_string(), probs })
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    pub fn n_samples(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.probs.ncols()
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = Manifest::read(dir)?;
        manifest.expect_kind(ManifestKind::Predictions, dir)?;
        let [entry] = manifest.layers.as_slice() else {
            return Err(Error::Validation(format!(
                "{}: a predictions manifest lists exactly one array",
                dir.display()
            )));
        };
        let t = manifest.load_entry(dir, entry)?;
        if t.shape().len() != 2 {
            return Err(Error::Shape(format!("predictions must be N x C, got {:?}", t.shape())));
        }
        PredictionSet::new(&manifest.model_id, &manifest.dataset_id, t.to_matrix()?)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        fsutil::atomic_dir(dir, |tmp| {
            let mut manifest = Manifest::new(ManifestKind::Predictions, &self.model_id, &self.dataset_id);
            write_matrix(tmp, &mut manifest, "probs", &self.probs)?;
            manifest.write(tmp)
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub name: String,
    /// `out × in`; a layer computes `x · Wᵀ + b`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Architecture plus named parameters of a toy MLP.
///
/// Parameters are held as `f64`; `f32` files are widened exactly on load.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model_id: String,
    arch: ArchSpec,
    params: Vec<LayerParams>,
    pub provenance: BTreeMap<String, serde_json::Value>,
}

impl Checkpoint {
    pub fn new(
        model_id: &str,
        arch: ArchSpec,
        params: Vec<LayerParams>,
        provenance: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.n_layers() {
            return Err(Error::Shape(format!(
                "{arch} has {} layers, got {} parameter groups",
                arch.n_layers(),
                params.len()
            )));
        }
        for ((p, (out, fan_in)), name) in params.iter().zip(arch.weight_shapes()).zip(arch.layer_names()) {
            if p.name != name {
                return Err(Error::Shape(format!("expected layer {name:?}, found {:?}", p.name)));
            }
            if p.weight.dim() != (out, fan_in) || p.bias.len() != out {
                return Err(Error::Shape(format!(
                    "layer {name:?} must have weight {out}x{fan_in} and bias {out}, got {:?} and {}",
                    p.weight.dim(),
                    p.bias.len()
                )));
            }
            if !p.weight.iter().chain(p.bias.iter()).all(|x| x.is_finite()) {
                return Err(Error::Validation(format!("layer {name:?} holds non-finite parameters")));
            }
        }
        Ok(Checkpoint { model_id: model_id.to_string(), arch, params, provenance })
    }

    pub fn arch(&self) -> &ArchSpec {
        &self.arch
    }

    pub fn params(&self) -> &[LayerParams] {
        &self.params
    }

    /// Replaces every parameter group via `f`, keeping shapes fixed.
    pub(crate) fn map_params<F>(&self, model_id: &str, mut f: F) -> Checkpoint
    where
        F: FnMut(usize, &LayerParams) -> LayerParams,
    {
        let params: Vec<LayerParams> = self.params.iter().enumerate().map(|(i, p)| f(i, p)).collect();
        debug_assert!(params
            .iter()
            .zip(&self.params)
            .all(|(a, b)| a.weight.dim() == b.weight.dim() && a.bias.len() == b.bias.len()));
        Checkpoint {
            model_id: model_id.to_string(),
            arch: self.arch.clone(),
            params,
            provenance: self.provenance.clone(),
        }
    }

    /// Same architecture and bit-identical parameters.
    pub fn params_bits_eq(&self, other: &Checkpoint) -> bool {
        fn bits<'a>(it: impl Iterator<Item = &'a f64> + 'a) -> impl Iterator<Item = u64> + 'a {
            it.map(|x| x.to_bits())
        }
        self.arch == other.arch
            && self.params.iter().zip(&other.params).all(|(a, b)| {
                bits(a.weight.iter()).eq(bits(b.weight.iter())) && bits(a.bias.iter()).eq(bits(b.bias.iter()))
            })
    }

    pub fn n_weights(&self) -> usize {
        self.params.iter().map(|p| p.weight.len()).sum()
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = Manifest::read(dir)?;
        manifest.expect_kind(ManifestKind::Checkpoint, dir)?;
        let arch = manifest
            .arch
            .clone()
            .ok_or_else(|| Error::Validation(format!("{}: checkpoint manifest lacks 'arch'", dir.display())))?;
        arch.validate()?;
        let find = |name: &str| {
            manifest
                .layers
                .iter()
                .find(|e| e.name == name)
                .ok_or_else(|| Error::Validation(format!("checkpoint manifest lacks {name:?}")))
        };
        let mut params = Vec::with_capacity(arch.n_layers());
        for (name, (out, fan_in)) in arch.layer_names().into_iter().zip(arch.weight_shapes()) {
            let w = manifest.load_entry(dir, find(&format!("{name}.weight"))?)?;
            let b = manifest.load_entry(dir, find(&format!("{name}.bias"))?)?;
            if w.shape() != [out, fan_in] || b.shape() != [out] {
                return Err(Error::Shape(format!(
                    "layer {name:?} of {arch} needs weight [{out}, {fan_in}] and bias [{out}], files hold {:?} and {:?}",
                    w.shape(),
                    b.shape()
                )));
            }
            params.push(LayerParams {
                name,
                weight: w.to_matrix()?,
                bias: Array1::from(b.to_f64_vec()),
            });
        }
        if manifest.layers.len() != 2 * params.len() {
            return Err(Error::Validation(format!(
                "checkpoint manifest lists {} arrays, {arch} has {}",
                manifest.layers.len(),
                2 * params.len()
            )));
        }
        Checkpoint::new(&manifest.model_id, arch, params, manifest.provenance.clone())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        fsutil::atomic_dir(dir, |tmp| {
            let dataset_id = self
                .provenance
                .get("train_dataset")
                .and_then(|v| v.as_str())
                .unwrap_or("");
            let mut manifest = Manifest::new(ManifestKind::Checkpoint, &self.model_id, dataset_id);
            manifest.arch = Some(self.arch.clone());
            manifest.provenance = self.provenance.clone();
            for p in &self.params {
                write_matrix(tmp, &mut manifest, &format!("{}.weight", p.name), &p.weight)?;
                let file = format!("{}.bias.npy", p.name);
                write_array(&Tensor::from_vector(p.bias.as_slice().unwrap()), tmp.join(&file))?;
                manifest.layers.push(LayerEntry {
                    name: format!("{}.bias", p.name),
                    file,
                    shape: vec![p.bias.len()],
                });
            }
            manifest.write(tmp)
        })
    }
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<Checkpoint> {
    Checkpoint::load(dir)
}

pub fn save_checkpoint(ckpt: &Checkpoint, dir: impl AsRef<Path>) -> Result<()> {
    ckpt.save(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    fn write_layer(dir: &Path, name: &str, t: &Tensor) -> LayerEntry {
        let file = format!("{name}.npy");
        write_array(t, dir.join(&file)).unwrap();
        LayerEntry { name: name.into(), file, shape: t.shape().to_vec() }
    }

    fn ramp(shape: Vec<usize>) -> Tensor {
        let n = shape.iter().product();
        Tensor::from_f64(shape, (0..n).map(|i| i as f64 * 0.25).collect()).unwrap()
    }

    #[test]
    fn activation_set_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new(ManifestKind::Activations, "m", "d");
        m.layers.push(write_layer(dir.path(), "a", &ramp(vec![50, 8])));
        m.layers.push(write_layer(dir.path(), "b", &ramp(vec![50, 4])));
        m.write(dir.path()).unwrap();
        let set = load_activation_set(dir.path()).unwrap();
        assert_eq!(set.n_samples(), 50);
        assert_eq!(set.layer_names(), vec!["a", "b"]);
    }

    #[test]
    fn high_rank_layers_flatten() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new(ManifestKind::Activations, "m", "d");
        m.layers.push(write_layer(dir.path(), "conv", &ramp(vec![50, 4, 4])));
        m.write(dir.path()).unwrap();
        let set = load_activation_set(dir.path()).unwrap();
        let conv = set.layer("conv").unwrap();
        assert_eq!(conv.dim(), (50, 16));
        assert_eq!(conv[[1, 0]], 16.0 * 0.25);
    }

    #[test]
    fn inconsistent_sample_counts_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new(ManifestKind::Activations, "m", "d");
        m.layers.push(write_layer(dir.path(), "a", &ramp(vec![50, 2])));
        m.layers.push(write_layer(dir.path(), "b", &ramp(vec![49, 2])));
        m.write(dir.path()).unwrap();
        assert!(matches!(load_activation_set(dir.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn missing_file_and_duplicate_names_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new(ManifestKind::Activations, "m", "d");
        m.layers.push(write_layer(dir.path(), "a", &ramp(vec![5, 2])));
        m.layers.push(LayerEntry { name: "ghost".into(), file: "ghost.npy".into(), shape: vec![5, 2] });
        m.write(dir.path()).unwrap();
        assert!(load_activation_set(dir.path()).is_err());

        let mut m = Manifest::new(ManifestKind::Activations, "m", "d");
        let entry = write_layer(dir.path(), "a", &ramp(vec![5, 2]));
        m.layers = vec![entry.clone(), entry];
        m.write(dir.path()).unwrap();
        assert!(matches!(load_activation_set(dir.path()), Err(Error::Validation(_))));
    }

    #[test]
    fn manifest_wire_format() {
        let mut m = Manifest::new(ManifestKind::Checkpoint, "mlp", "blobs");
        m.arch = Some(ArchSpec::new(4, vec![8, 3]).unwrap());
        m.layers.push(LayerEntry { name: "h1.weight".into(), file: "h1.weight.npy".into(), shape: vec![8, 4] });
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["kind"], "checkpoint");
        assert_eq!(v["arch"]["input_dim"], 4);
        assert_eq!(v["arch"]["layer_dims"], serde_json::json!([8, 3]));
        assert_eq!(v["arch"]["activation"], "relu");
        assert_eq!(v["layers"][0]["shape"], serde_json::json!([8, 4]));

        // `output` may be omitted by other writers.
        let arch: ArchSpec =
            serde_json::from_str(r#"{"input_dim": 2, "layer_dims": [3], "activation": "relu"}"#).unwrap();
        assert_eq!(arch.output, OutputKind::Softmax);
    }

    fn mlp_4_8_3(fill: f64) -> Checkpoint {
        let arch = ArchSpec::new(4, vec![8, 3]).unwrap();
        let params = vec![
            LayerParams {
                name: "h1".into(),
                weight: Array::from_shape_fn((8, 4), |(i, j)| fill * (i as f64 - j as f64 / 3.0)),
                bias: Array1::from_elem(8, fill * 0.1),
            },
            LayerParams {
                name: "logits".into(),
                weight: Array::from_shape_fn((3, 8), |(i, j)| fill * (i * j) as f64 / 7.0),
                bias: Array1::from_elem(3, -fill),
            },
        ];
        Checkpoint::new("mlp", arch, params, BTreeMap::new()).unwrap()
    }

    #[test]
    fn checkpoint_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = mlp_4_8_3(1.0 / 3.0);
        save_checkpoint(&ckpt, dir.path().join("c")).unwrap();
        let back = load_checkpoint(dir.path().join("c")).unwrap();
        assert!(back.params_bits_eq(&ckpt));
        assert_eq!(back, ckpt);
    }

    #[test]
    fn zero_checkpoint_loads_as_zeros() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&mlp_4_8_3(0.0), dir.path()).unwrap();
        let back = load_checkpoint(dir.path()).unwrap();
        assert!(back.params().iter().all(|p| p.weight.iter().chain(p.bias.iter()).all(|&x| x == 0.0)));
    }

    #[test]
    fn checkpoint_shape_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&mlp_4_8_3(1.0), dir.path()).unwrap();
        // Replace h1.weight with an 8x5 array while the manifest still says 8x4.
        write_array(&ramp(vec![8, 5]), dir.path().join("h1.weight.npy")).unwrap();
        assert!(matches!(load_checkpoint(dir.path()), Err(Error::Shape(_))));
    }

    #[test]
    fn predictions_validate_rows() {
        let ok = Array2::from_shape_vec((2, 2), vec![0.25, 0.75, 1.0, 0.0]).unwrap();
        assert!(PredictionSet::new("m", "d", ok).is_ok());
        let bad = Array2::from_shape_vec((1, 2), vec![0.5, 0.4]).unwrap();
        assert!(PredictionSet::new("m", "d", bad).is_err());
        let neg = Array2::from_shape_vec((1, 2), vec![1.5, -0.5]).unwrap();
        assert!(PredictionSet::new("m", "d", neg).is_err());
    }

    #[test]
    fn arch_strings() {
        let a: ArchSpec = "8:64:32:5".parse().unwrap();
        assert_eq!(a.input_dim, 8);
        assert_eq!(a.layer_dims, vec![64, 32, 5]);
        assert_eq!(a.layer_names(), vec!["h1", "h2", "logits"]);
        assert_eq!(a.to_string(), "8:64:32:5");
        assert!("2::3".parse::<ArchSpec>().is_err());
        assert!("7".parse::<ArchSpec>().is_err());
        assert!("4:0:2".parse::<ArchSpec>().is_err());
    }
}
