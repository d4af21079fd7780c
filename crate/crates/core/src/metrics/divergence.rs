use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorio::{PredictionSet, PROB_SUM_TOLERANCE};

/// Entries down to this value are treated as rounding noise and clamped to 0.
const NEGATIVE_SLACK: f64 = -1e-9;

fn normalized(p: &[f64], which: &str) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|&&v| !v.is_finite() || v < NEGATIVE_SLACK) {
        return Err(Error::Validation(format!("{which} has invalid probability {bad}")));
    }
    let clamped: Vec<f64> = p.iter().map(|&v| v.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::Validation(format!("{which} sums to {sum}, not 1")));
    }
    Ok(clamped.into_iter().map(|v| v / sum).collect())
}

/// Jensen-Shannon divergence in bits, so the result lies in `[0, 1]`.
///
/// Inputs are renormalised after clamping tiny negatives; `0 · log 0 = 0`.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!("distribution lengths differ: {} vs {}", p.len(), q.len())));
    }
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty distributions".into()));
    }
    let p = normalized(p, "first distribution")?;
    let q = normalized(q, "second distribution")?;
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(&q) {
        let m = 0.5 * (a + b);
        let term = |v: f64| if v > 0.0 { v * (v / m).log2() } else { 0.0 };
        total += term(a) + term(b);
    }
    Ok((0.5 * total).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JsdMode {
    /// JSD between the two models' mean predictive distributions.
    #[default]
    MeanDist,
    /// Mean over samples of the per-sample JSD.
    PerSample,
}

impl std::str::FromStr for JsdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_dist" => Ok(JsdMode::MeanDist),
            "per_sample" => Ok(JsdMode::PerSample),
            other => Err(Error::InvalidArgument(format!(
                "unknown JSD mode {other:?} (expected mean_dist or per_sample)"
            ))),
        }
    }
}

/// Predictive similarity of two prediction dumps; 0 means identical behaviour.
///
/// `PerSample` is never below `MeanDist`: JSD is jointly convex.
pub fn predictive_similarity(a: &PredictionSet, b: &PredictionSet, mode: JsdMode) -> Result<f64> {
    if a.probs().dim() != b.probs().dim() {
        return Err(Error::Shape(format!(
            "prediction shapes differ: {:?} vs {:?}",
            a.probs().dim(),
            b.probs().dim()
        )));
    }
    if a.n_samples() == 0 {
        return Err(Error::InvalidArgument("no predictions to compare".into()));
    }
    match mode {
        JsdMode::MeanDist => {
            let ma = a.probs().mean_axis(Axis(0)).expect("non-empty");
            let mb = b.probs().mean_axis(Axis(0)).expect("non-empty");
            jsd(ma.as_slice().unwrap(), mb.as_slice().unwrap())
        }
        JsdMode::PerSample => {
            let mut total = 0.0;
            for (ra, rb) in a.probs().rows().into_iter().zip(b.probs().rows()) {
                total += jsd(&ra.to_vec(), &rb.to_vec())?;
            }
            Ok(total / a.n_samples() as f64)
        }
    }
}
