mod common;

use std::collections::BTreeMap;

use common::*;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use trisim::pruning::{apply_mask, global_magnitude_mask, prune, zero_count};
use trisim::tensorio::{ArchSpec, Checkpoint, LayerParams};
use trisim::toymodel::init_mlp;

const SHAPES: [&str; 5] = ["2:3", "4:8:3", "8:32:16:5", "3:1:1:2", "16:64:64:10"];

fn zeros(c: &Checkpoint) -> usize {
    c.params().iter().map(|p| p.weight.iter().filter(|w| **w == 0.0).count()).sum()
}

/// A checkpoint whose weights are drawn from a handful of magnitudes with random signs.
fn quantised(arch: &str, seed: u64, levels: usize) -> Checkpoint {
    let arch: ArchSpec = arch.parse().unwrap();
    let mut r = rng(seed);
    let params = arch
        .layer_names()
        .into_iter()
        .zip(arch.weight_shapes())
        .map(|(name, (out, fan_in))| {
            use rand::Rng;
            let weight = Array2::from_shape_simple_fn((out, fan_in), || {
                let m = (1 + r.random_range(0..levels)) as f64 * 0.25;
                if r.random::<bool>() { m } else { -m }
            });
            LayerParams { name, weight, bias: Array1::from_elem(out, 0.5) }
        })
        .collect();
    Checkpoint::new("q", arch, params, BTreeMap::new()).unwrap()
}

#[test]
fn zeroed_count_is_exact_on_every_level_and_shape() {
    for (i, arch) in SHAPES.iter().enumerate() {
        let c = init_mlp(&arch.parse().unwrap(), i as u64).unwrap();
        let p = c.n_weights();
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let mask = global_magnitude_mask(&c, s).unwrap();
            let expected = (s * p as f64).round() as usize;
            assert_eq!(mask.zeroed_count, expected);
            assert_eq!(zero_count(s, p), expected);
            assert_eq!(zeros(&apply_mask(&c, &mask).unwrap()), expected, "{arch} at {s}");
        }
    }
}

#[test]
fn masks_nest_with_duplicated_magnitudes() {
    for (i, arch) in SHAPES.iter().enumerate() {
        let c = quantised(arch, i as u64, 3);
        let masks: Vec<_> = (0..=100).map(|k| global_magnitude_mask(&c, k as f64 / 100.0).unwrap()).collect();
        for w in masks.windows(2) {
            for (lo, hi) in w[0].keep.iter().zip(&w[1].keep) {
                assert!(lo.iter().zip(hi).all(|(&a, &b)| a || !b), "{arch}: a pruned weight came back");
            }
        }
        assert_eq!(zeros(&prune(&c, 1.0).unwrap()), c.n_weights());
    }
}

#[test]
fn pruned_weights_are_the_smallest() {
    let c = quantised("4:8:3", 3, 4);
    let mask = global_magnitude_mask(&c, 0.37).unwrap();
    let (mut max_pruned, mut min_kept) = (0.0f64, f64::INFINITY);
    for (p, keep) in c.params().iter().zip(&mask.keep) {
        for (w, &k) in p.weight.iter().zip(keep) {
            if k { min_kept = min_kept.min(w.abs()) } else { max_pruned = max_pruned.max(w.abs()) }
        }
    }
    assert!(max_pruned <= min_kept);
}

#[test]
fn biases_survive_full_sparsity() {
    let c = quantised("4:8:3", 1, 2);
    let p = prune(&c, 1.0).unwrap();
    for (a, b) in c.params().iter().zip(p.params()) {
        assert_eq!(a.bias, b.bias);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn apply_mask_is_idempotent(arch in 0usize..5, seed in any::<u64>(), s in 0.0..=1.0f64) {
        let c = init_mlp(&SHAPES[arch].parse().unwrap(), seed).unwrap();
        let mask = global_magnitude_mask(&c, s).unwrap();
        let once = apply_mask(&c, &mask).unwrap();
        let twice = apply_mask(&once, &mask).unwrap();
        prop_assert!(once.params_bits_eq(&twice));
        prop_assert!(prune(&once, s).unwrap().params_bits_eq(&once));
    }

    #[test]
    fn zero_sparsity_is_bit_identical(arch in 0usize..5, seed in any::<u64>()) {
        let c = init_mlp(&SHAPES[arch].parse().unwrap(), seed).unwrap();
        let p = prune(&c, 0.0).unwrap();
        prop_assert!(p.params_bits_eq(&c));
        prop_assert_eq!(p.model_id, c.model_id);
    }

    #[test]
    fn out_of_range_sparsity_is_rejected(s in prop_oneof![-10.0..-1e-12f64, 1.0000001..10.0f64]) {
        let c = init_mlp(&"2:3".parse().unwrap(), 0).unwrap();
        prop_assert!(global_magnitude_mask(&c, s).is_err());
    }
}
