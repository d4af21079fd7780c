//! Global magnitude pruning and the sparsity sweep.
//!
//! Weights of all layers compete jointly; biases are never pruned. The zero
//! count at sparsity `s` is `round(s · P)` (half away from zero) over the `P`
//! prunable weights, and ties in magnitude are broken by (layer index,
//! row-major position), lower first. Because that order is total and fixed,
//! masks at increasing sparsity are nested.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::linear_cka;
use crate::tensorio::{ActivationSet, Checkpoint, LayerParams};
use crate::toymodel::{accuracy, capture_activations, Dataset};

/// Per-layer keep masks (`true` = keep) for one sparsity level.
#[derive(Clone, Debug, PartialEq)]
pub struct PruneMask {
    pub keep: Vec<Array2<bool>>,
    pub sparsity: f64,
    /// Number of prunable weights `P`.
    pub target_param_count: usize,
    pub zeroed_count: usize,
}

pub fn zero_count(sparsity: f64, prunable: usize) -> usize {
    (sparsity * prunable as f64).round() as usize
}

pub fn global_magnitude_mask(ckpt: &Checkpoint, sparsity: f64) -> Result<PruneMask> {
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::InvalidArgument(format!("sparsity must lie in [0, 1], got {sparsity}")));
    }
    let params = ckpt.params();
    let total = ckpt.n_weights();
    let zeroed = zero_count(sparsity, total);

    // (magnitude, layer, flat position); the last two make the order total.
    let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
    for (layer, p) in params.iter().enumerate() {
        order.extend(p.weight.iter().enumerate().map(|(pos, w)| (w.abs(), layer, pos)));
    }
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut keep: Vec<Array2<bool>> = params.iter().map(|p| Array2::from_elem(p.weight.dim(), true)).collect();
    for &(_, layer, pos) in &order[..zeroed] {
        let cols = keep[layer].ncols();
        keep[layer][[pos / cols, pos % cols]] = false;
    }
    Ok(PruneMask { keep, sparsity, target_param_count: total, zeroed_count: zeroed })
}

/// Zeroes the masked weights; everything else is copied bit for bit.
pub fn apply_mask(ckpt: &Checkpoint, mask: &PruneMask) -> Result<Checkpoint> {
    let params = ckpt.params();
    if mask.keep.len() != params.len() || mask.keep.iter().zip(params).any(|(m, p)| m.dim() != p.weight.dim()) {
        return Err(Error::Shape("mask does not match the checkpoint's weight shapes".into()));
    }
    let id = if mask.zeroed_count == 0 {
        ckpt.model_id.clone()
    } else {
        format!("{}@sparsity{}", ckpt.model_id, mask.sparsity)
    };
    Ok(ckpt.map_params(&id, |k, p| {
        let mut weight = p.weight.clone();
        weight.zip_mut_with(&mask.keep[k], |w, &keep| {
            if !keep {
                *w = 0.0;
            }
        });
        LayerParams { name: p.name.clone(), weight, bias: p.bias.clone() }
    }))
}

/// `apply_mask(ckpt, global_magnitude_mask(ckpt, s))`.
pub fn prune(ckpt: &Checkpoint, sparsity: f64) -> Result<Checkpoint> {
    apply_mask(ckpt, &global_magnitude_mask(ckpt, sparsity)?)
}

/// Sparsity levels must start at 0, increase strictly and stay within `[0, 1]`.
pub fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.first() != Some(&0.0) {
        return Err(Error::InvalidArgument("sparsity levels must start at 0".into()));
    }
    if levels.windows(2).any(|w| !(w[0] < w[1])) || levels.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidArgument(format!("sparsity levels must increase strictly within [0, 1]: {levels:?}")));
    }
    Ok(())
}

/// Unlabelled inputs on which activations are extracted.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub id: String,
    pub x: Array2<f64>,
}

impl From<&Dataset> for Probe {
    fn from(d: &Dataset) -> Self {
        Probe { id: d.id.clone(), x: d.x().clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerLayerCurves {
    pub layers_a: Vec<String>,
    pub layers_b: Vec<String>,
    /// `[level][layer]`, pruned vs unpruned.
    pub self_sim_a: Vec<Vec<Option<f64>>>,
    pub self_sim_b: Vec<Vec<Option<f64>>>,
    /// `[level][layer]` between the two pruned models; absent when layers do not match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_sim: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepFlags {
    /// Layer lists differ, so `cross_sim` is the mean of the full CKA matrix.
    pub cross_sim_fallback: bool,
    /// Similarity cells left undefined by zero-variance activations.
    pub degenerate_cells: usize,
}

/// Accuracies and CKA similarities of two models pruned to each sparsity level.
///
/// Undefined similarities (zero-variance activations) are `None` and are left
/// out of the layer means.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparsitySweepResult {
    pub levels: Vec<f64>,
    pub acc_a: Vec<f64>,
    pub acc_b: Vec<f64>,
    pub self_sim_a: Vec<Option<f64>>,
    pub self_sim_b: Vec<Option<f64>>,
    pub cross_sim: Vec<Option<f64>>,
    pub per_layer: PerLayerCurves,
    pub flags: SweepFlags,
}

impl SparsitySweepResult {
    /// One row per level; undefined values are empty cells.
    pub fn to_csv(&self) -> Result<String> {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["level", "acc_a", "acc_b", "self_sim_a", "self_sim_b", "cross_sim"])?;
        for i in 0..self.levels.len() {
            w.write_record([
                self.levels[i].to_string(),
                self.acc_a[i].to_string(),
                self.acc_b[i].to_string(),
                cell(self.self_sim_a[i]),
                cell(self.self_sim_b[i]),
                cell(self.cross_sim[i]),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub(crate) fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

fn cka_or_missing(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<Option<f64>> {
    match linear_cka(x, y) {
        Ok(s) => Ok(Some(s.value)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn matched_cka(a: &ActivationSet, b: &ActivationSet) -> Result<Vec<Option<f64>>> {
    a.layers()
        .iter()
        .zip(b.layers())
        .map(|(x, y)| cka_or_missing(x.values.view(), y.values.view()))
        .collect()
}

fn full_cka(a: &ActivationSet, b: &ActivationSet) -> Result<Vec<Option<f64>>> {
    let mut cells = Vec::with_capacity(a.layers().len() * b.layers().len());
    for x in a.layers() {
        for y in b.layers() {
            cells.push(cka_or_missing(x.values.view(), y.values.view())?);
        }
    }
    Ok(cells)
}

struct LevelOutcome {
    acc_a: f64,
    acc_b: f64,
    self_a: Vec<Option<f64>>,
    self_b: Vec<Option<f64>>,
    cross_layers: Option<Vec<Option<f64>>>,
    cross: Option<f64>,
    degenerate: usize,
}

/// Prunes both models to every level and tracks accuracy on `eval` plus
/// self- and cross-model CKA on `probe` activations.
///
/// `eval` and `probe` are separate inputs on purpose; nothing here substitutes one for the other.
pub fn sparsity_sweep(
    ckpt_a: &Checkpoint,
    ckpt_b: &Checkpoint,
    eval: &Dataset,
    probe: &Probe,
    levels: &[f64],
) -> Result<SparsitySweepResult> {
    validate_levels(levels)?;
    let orig_a = capture_activations(ckpt_a, probe.x.view(), &probe.id)?;
    let orig_b = capture_activations(ckpt_b, probe.x.view(), &probe.id)?;
    let matched = orig_a.layer_names() == orig_b.layer_names();

    let outcomes = levels
        .par_iter()
        .map(|&s| -> Result<LevelOutcome> {
            let pa = prune(ckpt_a, s)?;
            let pb = prune(ckpt_b, s)?;
            let acts_a = capture_activations(&pa, probe.x.view(), &probe.id)?;
            let acts_b = capture_activations(&pb, probe.x.view(), &probe.id)?;
            let self_a = matched_cka(&orig_a, &acts_a)?;
            let self_b = matched_cka(&orig_b, &acts_b)?;
            let (cross_layers, cross_cells) = if matched {
                let cells = matched_cka(&acts_a, &acts_b)?;
                (Some(cells.clone()), cells)
            } else {
                (None, full_cka(&acts_a, &acts_b)?)
            };
            let degenerate = [&self_a, &self_b, &cross_cells]
                .iter()
                .map(|v| v.iter().filter(|c| c.is_none()).count())
                .sum();
            Ok(LevelOutcome {
                acc_a: accuracy(&pa, eval)?,
                acc_b: accuracy(&pb, eval)?,
                cross: mean_defined(&cross_cells),
                self_a,
                self_b,
                cross_layers,
                degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut result = SparsitySweepResult {
        levels: levels.to_vec(),
        per_layer: PerLayerCurves {
            layers_a: orig_a.layer_names().iter().map(|s| s.to_string()).collect(),
            layers_b: orig_b.layer_names().iter().map(|s| s.to_string()).collect(),
            cross_sim: matched.then(Vec::new),
            ..PerLayerCurves::default()
        },
        flags: SweepFlags { cross_sim_fallback: !matched, degenerate_cells: 0 },
        ..SparsitySweepResult::default()
    };
    for o in outcomes {
        result.acc_a.push(o.acc_a);
        result.acc_b.push(o.acc_b);
        result.self_sim_a.push(mean_defined(&o.self_a));
        result.self_sim_b.push(mean_defined(&o.self_b));
        result.cross_sim.push(o.cross);
        result.per_layer.self_sim_a.push(o.self_a);
        result.per_layer.self_sim_b.push(o.self_b);
        if let (Some(curves), Some(layers)) = (result.per_layer.cross_sim.as_mut(), o.cross_layers) {
            curves.push(layers);
        }
        result.flags.degenerate_cells += o.degenerate;
    }
    Ok(result)
}

/// Mean matched-layer CKA between a model and its pruned self, per level.
pub fn self_similarity_curve(ckpt: &Checkpoint, probe: &Probe, levels: &[f64]) -> Result<Vec<Option<f64>>> {
    validate_levels(levels)?;
    let orig = capture_activations(ckpt, probe.x.view(), &probe.id)?;
    levels
        .par_iter()
        .map(|&s| {
            let pruned = capture_activations(&prune(ckpt, s)?, probe.x.view(), &probe.id)?;
            Ok(mean_defined(&matched_cka(&orig, &pruned)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricKind;
    use crate::tensorio::ArchSpec;
    use crate::toymodel::{init_mlp, make_blobs};
    use ndarray::array;
    use std::collections::BTreeMap;

    fn tiny(weights: Array2<f64>) -> Checkpoint {
        let (out, fan_in) = weights.dim();
        let arch = ArchSpec::new(fan_in, vec![out]).unwrap();
        let params = vec![LayerParams { name: "logits".into(), weight: weights, bias: ndarray::Array1::from_elem(out, 0.5) }];
        Checkpoint::new("tiny", arch, params, BTreeMap::new()).unwrap()
    }

    #[test]
    fn half_sparsity_zeroes_smallest_magnitudes() {
        let ckpt = tiny(array![[0.1, -0.5], [0.3, -0.2]]);
        let pruned = prune(&ckpt, 0.5).unwrap();
        assert_eq!(pruned.params()[0].weight, array![[0.0, -0.5], [0.3, 0.0]]);
        assert_eq!(global_magnitude_mask(&ckpt, 0.5).unwrap().zeroed_count, 2);
    }

    #[test]
    fn extremes() {
        let ckpt = init_mlp(&"3:4:2".parse().unwrap(), 1).unwrap();
        let none = global_magnitude_mask(&ckpt, 0.0).unwrap();
        assert_eq!(none.zeroed_count, 0);
        assert!(apply_mask(&ckpt, &none).unwrap().params_bits_eq(&ckpt));

        let all = prune(&ckpt, 1.0).unwrap();
        assert!(all.params().iter().all(|p| p.weight.iter().all(|&w| w == 0.0)));
        for (a, b) in all.params().iter().zip(ckpt.params()) {
            assert_eq!(a.bias, b.bias);
        }
        assert!(global_magnitude_mask(&ckpt, 1.5).is_err());
    }

    #[test]
    fn ties_break_by_position() {
        let ckpt = tiny(array![[0.2, -0.2, 0.2], [0.2, 0.1, -0.2]]);
        let mask = global_magnitude_mask(&ckpt, 0.5).unwrap();
        // 0.1 first, then the 0.2-magnitude weights in row-major order.
        assert_eq!(mask.keep[0], array![[false, false, true], [true, false, true]]);
    }

    #[test]
    fn mismatched_mask_rejected() {
        let a = init_mlp(&"3:4:2".parse().unwrap(), 1).unwrap();
        let b = init_mlp(&"3:5:2".parse().unwrap(), 1).unwrap();
        let mask = global_magnitude_mask(&a, 0.3).unwrap();
        assert!(matches!(apply_mask(&b, &mask), Err(Error::Shape(_))));
    }

    #[test]
    fn level_validation() {
        assert!(validate_levels(&[0.0, 0.5, 0.9]).is_ok());
        assert!(validate_levels(&[0.1, 0.5]).is_err());
        assert!(validate_levels(&[0.0, 0.5, 0.5]).is_err());
        assert!(validate_levels(&[0.0, 1.2]).is_err());
        assert!(validate_levels(&[]).is_err());
    }

    #[test]
    fn zero_level_anchors() {
        let arch: ArchSpec = "4:12:8:3".parse().unwrap();
        let a = init_mlp(&arch, 1).unwrap();
        let b = init_mlp(&arch, 2).unwrap();
        let eval = make_blobs(20, 4, 3, 0.5, 0).unwrap();
        let probe = Probe::from(&make_blobs(10, 4, 3, 0.5, 99).unwrap());
        let sweep = sparsity_sweep(&a, &b, &eval, &probe, &[0.0]).unwrap();
        assert_eq!(sweep.self_sim_a, vec![Some(1.0)]);
        assert_eq!(sweep.self_sim_b, vec![Some(1.0)]);
        assert_eq!(sweep.acc_a[0].to_bits(), accuracy(&a, &eval).unwrap().to_bits());
        let static_mean = crate::metrics::mean_matched_layer_similarity(
            &capture_activations(&a, probe.x.view(), &probe.id).unwrap(),
            &capture_activations(&b, probe.x.view(), &probe.id).unwrap(),
            MetricKind::Cka,
        )
        .unwrap();
        assert_eq!(sweep.cross_sim[0], Some(static_mean));

        let same = sparsity_sweep(&a, &a, &eval, &probe, &[0.0, 0.3, 0.6, 1.0]).unwrap();
        for (s, v) in same.levels.iter().zip(&same.cross_sim) {
            assert!(v.is_none() || *v == Some(1.0), "level {s}: {v:?}");
        }
        // Every weight gone: activations are constant, so similarity is undefined.
        assert_eq!(*same.cross_sim.last().unwrap(), None);
        assert!(same.flags.degenerate_cells > 0);
    }

    #[test]
    fn mismatched_architectures_fall_back() {
        let a = init_mlp(&"4:12:3".parse().unwrap(), 1).unwrap();
        let b = init_mlp(&"4:6:6:3".parse().unwrap(), 2).unwrap();
        let eval = make_blobs(10, 4, 3, 0.5, 0).unwrap();
        let probe = Probe::from(&make_blobs(10, 4, 3, 0.5, 99).unwrap());
        let sweep = sparsity_sweep(&a, &b, &eval, &probe, &[0.0, 0.5]).unwrap();
        assert!(sweep.flags.cross_sim_fallback);
        assert!(sweep.per_layer.cross_sim.is_none());
        assert_eq!(sweep.cross_sim.len(), 2);
        let csv = sweep.to_csv().unwrap();
        assert!(csv.starts_with("level,acc_a,acc_b,self_sim_a,self_sim_b,cross_sim\n"));
    }
}
