use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pruning::{prune, validate_levels};
use crate::tensorio::{Checkpoint, LayerParams};
use crate::toymodel::{accuracy, Dataset};

/// `θ(α) = θ_a + α(θ_b − θ_a)`, parameter by parameter.
///
/// `α = 0` and `α = 1` return exact copies of the endpoints.
pub fn interpolate(a: &Checkpoint, b: &Checkpoint, alpha: f64) -> Result<Checkpoint> {
    if a.arch() != b.arch() {
        return Err(Error::LmcNotApplicable(format!(
            "architectures differ ({} vs {})",
            a.arch(),
            b.arch()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(a.clone());
    }
    if alpha == 1.0 {
        return Ok(b.clone());
    }
    let id = format!("lerp({}, {}, {alpha})", a.model_id, b.model_id);
    Ok(a.map_params(&id, |k, p| {
        let q = &b.params()[k];
        let mut weight = p.weight.clone();
        weight.zip_mut_with(&q.weight, |x, &y| *x += alpha * (y - *x));
        let mut bias = p.bias.clone();
        bias.zip_mut_with(&q.bias, |x, &y| *x += alpha * (y - *x));
        LayerParams { name: p.name.clone(), weight, bias }
    }))
}

/// Accuracy along the straight weight-space path between two models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmcCurve {
    pub alphas: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub acc_a: f64,
    pub acc_b: f64,
}

impl LmcCurve {
    pub fn new(alphas: Vec<f64>, accuracies: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 || alphas.len() != accuracies.len() {
            return Err(Error::InvalidArgument(format!(
                "a curve needs >= 2 matching points, got {} alphas and {} accuracies",
                alphas.len(),
                accuracies.len()
            )));
        }
        if alphas[0] != 0.0 || *alphas.last().unwrap() != 1.0 || alphas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("alphas must increase from 0 to 1".into()));
        }
        if accuracies.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidArgument("accuracies must lie in [0, 1]".into()));
        }
        Ok(LmcCurve { acc_a: accuracies[0], acc_b: *accuracies.last().unwrap(), alphas, accuracies })
    }
}

/// `n` evenly spaced points `i / (n − 1)`; the last is exactly 1.
pub fn alpha_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 alphas, got {n}")));
    }
    Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect())
}

pub fn lmc_curve(a: &Checkpoint, b: &Checkpoint, data: &Dataset, n_alphas: usize) -> Result<LmcCurve> {
    let alphas = alpha_grid(n_alphas)?;
    let accuracies = alphas
        .par_iter()
        .map(|&alpha| accuracy(&interpolate(a, b, alpha)?, data))
        .collect::<Result<Vec<_>>>()?;
    LmcCurve::new(alphas, accuracies)
}

/// Largest accuracy shortfall below the straight line between the endpoint
/// accuracies, floored at 0.
pub fn barrier_height(curve: &LmcCurve) -> f64 {
    curve
        .alphas
        .iter()
        .zip(&curve.accuracies)
        .map(|(&alpha, &acc)| curve.acc_a + alpha * (curve.acc_b - curve.acc_a) - acc)
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfLmcPoint {
    pub sparsity: f64,
    pub barrier: f64,
    pub curve: LmcCurve,
}

/// Barrier between a model and its own pruned variant at each sparsity level.
pub fn self_lmc_under_pruning(ckpt: &Checkpoint, data: &Dataset, levels: &[f64], n_alphas: usize) -> Result<Vec<SelfLmcPoint>> {
    validate_levels(levels)?;
    levels
        .iter()
        .map(|&s| {
            let curve = lmc_curve(ckpt, &prune(ckpt, s)?, data, n_alphas)?;
            Ok(SelfLmcPoint { sparsity: s, barrier: barrier_height(&curve), curve })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorio::ArchSpec;
    use crate::toymodel::{init_mlp, make_blobs};
    use ndarray::{array, Array1};
    use std::collections::BTreeMap;

    fn scalar(w: f64) -> Checkpoint {
        let arch = ArchSpec::new(1, vec![1]).unwrap();
        let params = vec![LayerParams { name: "logits".into(), weight: array![[w]], bias: Array1::zeros(1) }];
        Checkpoint::new("s", arch, params, BTreeMap::new()).unwrap()
    }

    #[test]
    fn interpolation_arithmetic_and_endpoints() {
        let (a, b) = (scalar(2.0), scalar(6.0));
        assert_eq!(interpolate(&a, &b, 0.25).unwrap().params()[0].weight[[0, 0]], 3.0);
        assert!(interpolate(&a, &b, 0.0).unwrap().params_bits_eq(&a));
        assert!(interpolate(&a, &b, 1.0).unwrap().params_bits_eq(&b));
        assert!(interpolate(&a, &a, 0.5).unwrap().params_bits_eq(&a));
        assert!(interpolate(&a, &b, 1.5).is_err());
    }

    #[test]
    fn different_architectures_are_not_connectable() {
        let a = init_mlp(&"3:4:2".parse().unwrap(), 0).unwrap();
        let b = init_mlp(&"3:5:2".parse().unwrap(), 0).unwrap();
        assert!(matches!(interpolate(&a, &b, 0.5), Err(Error::LmcNotApplicable(_))));
    }

    #[test]
    fn barrier_examples() {
        let flat = LmcCurve::new(alpha_grid(5).unwrap(), vec![0.7; 5]).unwrap();
        assert_eq!(barrier_height(&flat), 0.0);
        let dip = LmcCurve::new(alpha_grid(3).unwrap(), vec![0.9, 0.5, 0.9]).unwrap();
        assert!((barrier_height(&dip) - 0.4).abs() < 1e-15);
        // A path above the baseline has no barrier.
        let bump = LmcCurve::new(alpha_grid(3).unwrap(), vec![0.5, 0.9, 0.5]).unwrap();
        assert_eq!(barrier_height(&bump), 0.0);
    }

    #[test]
    fn curves_with_identical_endpoints_are_flat() {
        let ckpt = init_mlp(&"3:6:3".parse().unwrap(), 2).unwrap();
        let data = make_blobs(10, 3, 3, 0.5, 1).unwrap();
        let curve = lmc_curve(&ckpt, &ckpt, &data, 6).unwrap();
        let acc = accuracy(&ckpt, &data).unwrap();
        assert!(curve.accuracies.iter().all(|&a| a == acc));
        assert_eq!(barrier_height(&curve), 0.0);

        let two = lmc_curve(&ckpt, &init_mlp(&"3:6:3".parse().unwrap(), 3).unwrap(), &data, 2).unwrap();
        assert_eq!(two.alphas, vec![0.0, 1.0]);
    }

    #[test]
    fn self_lmc_starts_at_zero() {
        let ckpt = init_mlp(&"3:6:3".parse().unwrap(), 2).unwrap();
        let data = make_blobs(10, 3, 3, 0.5, 1).unwrap();
        let points = self_lmc_under_pruning(&ckpt, &data, &[0.0, 0.3, 0.6], 5).unwrap();
        assert_eq!(points.len(), 3);
        assert_eq!(points[0].barrier, 0.0);
    }
}
