use serde::{Deserialize, Serialize};

use super::report::TriangleReport;
use crate::error::{Error, Result};
use crate::metrics::pearson;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScores {
    pub pair_id: String,
    pub static_score: f64,
    pub static_procrustes: f64,
    pub robustness_score: f64,
}

/// Correlation between the static and sparsity views across many pairs, plus
/// the pairs whose two static metrics disagree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossViewStats {
    pub n_pairs: usize,
    pub pearson_r: f64,
    pub threshold: f64,
    pub disagreements: Vec<String>,
    pub disagreement_rate: f64,
    pub pairs: Vec<PairScores>,
}

pub fn crossview_stats(reports: &[TriangleReport], threshold: f64) -> Result<CrossViewStats> {
    if reports.len() < 3 {
        return Err(Error::Validation(format!("cross-view statistics need at least 3 pairs, got {}", reports.len())));
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
    }
    let pairs = reports
        .iter()
        .map(|r| {
            let robustness_score = r.derived.robustness_score.ok_or_else(|| {
                Error::Degenerate(format!("pair {} has no defined sparsity similarity", r.pair_id()))
            })?;
            Ok(PairScores {
                pair_id: r.pair_id(),
                static_score: r.derived.static_score,
                static_procrustes: r.derived.static_procrustes,
                robustness_score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = pairs.iter().map(|p| p.static_score).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.robustness_score).collect();
    let pearson_r = pearson(&xs, &ys)?;
    let disagreements: Vec<String> = pairs
        .iter()
        .filter(|p| (p.static_score - p.static_procrustes).abs() > threshold)
        .map(|p| p.pair_id.clone())
        .collect();
    Ok(CrossViewStats {
        n_pairs: pairs.len(),
        pearson_r,
        threshold,
        disagreement_rate: disagreements.len() as f64 / pairs.len() as f64,
        disagreements,
        pairs,
    })
}
