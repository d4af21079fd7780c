use std::path::Path;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::rng;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::tensorio::{read_array, write_array, LayerEntry, Manifest, ManifestKind, Tensor};

/// Labelled inputs for accuracy evaluation and training.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub id: String,
    x: Array2<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(id: &str, x: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Validation("a dataset needs at least one sample".into()));
        }
        if x.nrows() != labels.len() {
            return Err(Error::Shape(format!("{} rows but {} labels", x.nrows(), labels.len())));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("dataset features must be finite".into()));
        }
        Ok(Dataset { id: id.to_string(), x, labels })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    /// One more than the largest label.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// CSV with header `x0,...,x{d-1},label`. The id is derived from the file's content.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(bytes.as_slice());
        let header = reader.headers()?.clone();
        let d = header.len().saturating_sub(1);
        let expected: Vec<String> = (0..d).map(|i| format!("x{i}")).chain(["label".to_string()]).collect();
        if d == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Validation(format!(
                "{}: header must be x0,...,x{{d-1}},label",
                path.display()
            )));
        }
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            for field in record.iter().take(d) {
                values.push(field.trim().parse::<f64>().map_err(|_| {
                    Error::Validation(format!("{}: row {row}: bad number {field:?}", path.display()))
                })?);
            }
            let label = &record[d];
            labels.push(label.trim().parse::<usize>().map_err(|_| {
                Error::Validation(format!("{}: row {row}: bad label {label:?}", path.display()))
            })?);
        }
        let x = Array2::from_shape_vec((labels.len(), d), values).map_err(|e| Error::Shape(e.to_string()))?;
        let id = format!("csv-{}", &hex::encode(Sha256::digest(&bytes))[..16]);
        Dataset::new(&id, x, labels)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let d = self.input_dim();
        let header: Vec<String> = (0..d).map(|i| format!("x{i}")).chain(["label".to_string()]).collect();
        w.write_record(&header)?;
        for (row, label) in self.x.rows().into_iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        fsutil::atomic_write(path, &bytes)
    }

    /// Directory with `X.npy`, `labels.npy` (integral `f64`) and a `dataset` manifest.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = Manifest::read(dir)?;
        if manifest.kind != ManifestKind::Dataset {
            return Err(Error::Validation(format!("{}: not a dataset manifest", dir.display())));
        }
        let file = |name: &str| -> Result<Tensor> {
            let entry = manifest
                .layers
                .iter()
                .find(|e| e.name == name)
                .ok_or_else(|| Error::Validation(format!("dataset manifest lacks {name:?}")))?;
            let t = read_array(dir.join(&entry.file))?;
            if t.shape() != entry.shape.as_slice() {
                return Err(Error::Shape(format!("{name}: manifest {:?}, file {:?}", entry.shape, t.shape())));
            }
            Ok(t)
        };
        let x = file("X")?;
        if x.shape().len() != 2 {
            return Err(Error::Shape(format!("X must be N x D, got {:?}", x.shape())));
        }
        let labels = file("labels")?
            .to_f64_vec()
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(Error::Validation(format!("label {v} is not a non-negative integer")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(&manifest.dataset_id, x.to_matrix()?, labels)
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        fsutil::atomic_dir(dir, |tmp| {
            let mut manifest = Manifest::new(ManifestKind::Dataset, "", &self.id);
            write_array(&Tensor::from_matrix(&self.x), tmp.join("X.npy"))?;
            manifest.layers.push(LayerEntry { name: "X".into(), file: "X.npy".into(), shape: self.x.shape().to_vec() });
            let labels: Vec<f64> = self.labels.iter().map(|&l| l as f64).collect();
            write_array(&Tensor::from_vector(&labels), tmp.join("labels.npy"))?;
            manifest.layers.push(LayerEntry { name: "labels".into(), file: "labels.npy".into(), shape: vec![labels.len()] });
            manifest.write(tmp)
        })
    }
}

/// Isotropic Gaussian clusters, `n_per_class` points per class.
///
/// Class means are seeded directions on the unit sphere scaled to radius
/// `4 · spread`; points add `N(0, spread²)` noise per coordinate. Rows are
/// ordered class by class.
pub fn make_blobs(n_per_class: usize, input_dim: usize, n_classes: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 || input_dim == 0 || n_classes == 0 {
        return Err(Error::InvalidArgument("blob counts and dimensions must be >= 1".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidArgument(format!("spread must be positive, got {spread}")));
    }
    let mut rng = rng::seeded(seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut means = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let dir = loop {
            let v: Vec<f64> = (0..input_dim).map(|_| gauss()).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|a| a / norm).collect::<Vec<_>>();
            }
        };
        means.push(dir);
    }
    let n = n_per_class * n_classes;
    let mut x = Array2::zeros((n, input_dim));
    let mut labels = Vec::with_capacity(n);
    for (class, mean) in means.iter().enumerate() {
        for k in 0..n_per_class {
            let row = class * n_per_class + k;
            for j in 0..input_dim {
                x[[row, j]] = 4.0 * spread * mean[j] + spread * gauss();
            }
            labels.push(class);
        }
    }
    let id = format!("blobs-n{n_per_class}-d{input_dim}-c{n_classes}-s{spread}-seed{seed}");
    Dataset::new(&id, x, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_deterministic() {
        let a = make_blobs(10, 2, 3, 0.5, 1).unwrap();
        let b = make_blobs(10, 2, 3, 0.5, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 30);
        assert_ne!(a.x(), make_blobs(10, 2, 3, 0.5, 2).unwrap().x());
    }

    #[test]
    fn single_class_blobs() {
        let d = make_blobs(7, 3, 1, 1.0, 0).unwrap();
        assert!(d.labels().iter().all(|&l| l == 0));
        assert!(make_blobs(7, 3, 1, 0.0, 0).is_err());
        assert!(make_blobs(0, 3, 1, 1.0, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = make_blobs(4, 3, 2, 0.7, 3).unwrap();
        let path = dir.path().join("d.csv");
        d.save_csv(&path).unwrap();
        let back = Dataset::load_csv(&path).unwrap();
        assert_eq!(back.x(), d.x());
        assert_eq!(back.labels(), d.labels());
        assert!(back.id.starts_with("csv-"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x0,x1,x2,label\n"));
    }

    #[test]
    fn array_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = make_blobs(4, 3, 2, 0.7, 3).unwrap();
        d.save_dir(dir.path().join("ds")).unwrap();
        assert_eq!(Dataset::load_dir(dir.path().join("ds")).unwrap(), d);
    }
}
