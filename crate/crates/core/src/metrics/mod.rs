//! Static-view similarity: CKA, Procrustes, JSD, Pearson and layer-by-layer
//! similarity matrices.
//!
//! All accumulation happens in `f64`. Every function here is pure, so the
//! cells of a similarity matrix are evaluated in parallel with results that
//! do not depend on scheduling.

mod cka;
mod divergence;
pub mod linalg;
mod procrustes;
mod stats;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cka::{center_columns, linear_cka};
pub use divergence::{jsd, predictive_similarity, JsdMode};
pub use procrustes::procrustes_similarity;
pub use stats::pearson;

use crate::error::{Error, Result};
use crate::tensorio::ActivationSet;

/// Raw scores may overshoot `[0, 1]` by this much from rounding before clamping.
pub const BOUND_SLACK: f64 = 1e-9;

pub(crate) fn bounded(raw: f64, what: &str) -> Result<f64> {
    if !raw.is_finite() || raw < -BOUND_SLACK || raw > 1.0 + BOUND_SLACK {
        return Err(Error::Degenerate(format!("{what} produced {raw}, outside [0, 1]")));
    }
    Ok(raw.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Cka,
    Procrustes,
}

impl MetricKind {
    pub fn compute(self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<MetricScore> {
        match self {
            MetricKind::Cka => linear_cka(x, y),
            MetricKind::Procrustes => procrustes_similarity(x, y),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Cka => "cka",
            MetricKind::Procrustes => "procrustes",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cka" => Ok(MetricKind::Cka),
            "procrustes" => Ok(MetricKind::Procrustes),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub value: f64,
    pub metric: MetricKind,
    pub n_samples: usize,
}

/// `L_A × L_B` grid of one metric between every pair of layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub metric: MetricKind,
    pub model_a: String,
    pub model_b: String,
    pub layers_a: Vec<String>,
    pub layers_b: Vec<String>,
    /// Row-major, `layers_a.len() × layers_b.len()`.
    pub scores: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(
        metric: MetricKind,
        model_a: &str,
        model_b: &str,
        layers_a: Vec<String>,
        layers_b: Vec<String>,
        scores: Vec<f64>,
    ) -> Result<Self> {
        if scores.len() != layers_a.len() * layers_b.len() {
            return Err(Error::Shape(format!(
                "{} scores for a {}x{} matrix",
                scores.len(),
                layers_a.len(),
                layers_b.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Validation(format!("similarity score {bad} outside [0, 1]")));
        }
        Ok(SimilarityMatrix {
            metric,
            model_a: model_a.to_string(),
            model_b: model_b.to_string(),
            layers_a,
            layers_b,
            scores,
        })
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.layers_a.len(), self.layers_b.len())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.layers_b.len() + j]
    }

    pub fn mean(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }

    /// Mean of the diagonal, defined when both sides list the same layers.
    pub fn matched_mean(&self) -> Option<f64> {
        if self.layers_a != self.layers_b || self.layers_a.is_empty() {
            return None;
        }
        let n = self.layers_a.len();
        Some((0..n).map(|i| self.get(i, i)).sum::<f64>() / n as f64)
    }

    /// CSV with a header row of `layers_b`; each row starts with its `layers_a` name.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.layers_b.iter().cloned());
        w.write_record(&header)?;
        for (i, name) in self.layers_a.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend((0..self.layers_b.len()).map(|j| self.get(i, j).to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

fn require_same_inputs(a: &ActivationSet, b: &ActivationSet) -> Result<()> {
    if a.dataset_id != b.dataset_id {
        return Err(Error::DatasetMismatch { a: a.dataset_id.clone(), b: b.dataset_id.clone() });
    }
    if a.n_samples() != b.n_samples() {
        return Err(Error::Shape(format!(
            "sample counts differ: {} vs {}",
            a.n_samples(),
            b.n_samples()
        )));
    }
    Ok(())
}

/// Every layer of `a` against every layer of `b`.
pub fn layerwise_similarity_matrix(
    a: &ActivationSet,
    b: &ActivationSet,
    metric: MetricKind,
) -> Result<SimilarityMatrix> {
    require_same_inputs(a, b)?;
    let (la, lb) = (a.layers(), b.layers());
    let scores = (0..la.len() * lb.len())
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / lb.len(), cell % lb.len());
            metric
                .compute(la[i].values.view(), lb[j].values.view())
                .map(|s| s.value)
                .map_err(|e| match e {
                    Error::Degenerate(msg) => {
                        Error::Degenerate(format!("{} vs {}: {msg}", la[i].name, lb[j].name))
                    }
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    SimilarityMatrix::new(
        metric,
        &a.model_id,
        &b.model_id,
        la.iter().map(|l| l.name.clone()).collect(),
        lb.iter().map(|l| l.name.clone()).collect(),
        scores,
    )
}

/// Per-layer scores for sets with identical layer lists, layer `i` against layer `i`.
///
/// Degenerate layers come back as `None`.
pub fn matched_layer_scores(
    a: &ActivationSet,
    b: &ActivationSet,
    metric: MetricKind,
) -> Result<Vec<Option<f64>>> {
    require_same_inputs(a, b)?;
    if a.layer_names() != b.layer_names() {
        return Err(Error::Validation(format!(
            "layer lists differ ({:?} vs {:?}); use the full similarity matrix",
            a.layer_names(),
            b.layer_names()
        )));
    }
    a.layers()
        .par_iter()
        .zip(b.layers().par_iter())
        .map(|(x, y)| match metric.compute(x.values.view(), y.values.view()) {
            Ok(s) => Ok(Some(s.value)),
            Err(Error::Degenerate(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Mean of the metric over matched layers.
pub fn mean_matched_layer_similarity(a: &ActivationSet, b: &ActivationSet, metric: MetricKind) -> Result<f64> {
    let scores = matched_layer_scores(a, b, metric)?;
    let defined = scores
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| Error::Degenerate(format!("layer {:?} has zero variance", a.layers()[i].name)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}
