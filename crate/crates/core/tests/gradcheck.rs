use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trisim::tensorio::{ArchSpec, Checkpoint, LayerParams};
use trisim::toymodel::{all_coords, loss_and_gradients, make_blobs, mean_loss, numerical_gradient};

/// `|a − n| / max(|a|, |n|)`, with agreement below 1e-9 in absolute terms counted as exact.
fn relative_error(a: f64, n: f64) -> f64 {
    let diff = (a - n).abs();
    if diff < 1e-9 { 0.0 } else { diff / a.abs().max(n.abs()) }
}

/// Random weights and biases, so pre-activations stay off the ReLU kink.
fn random_mlp(r: &mut ChaCha8Rng, arch: ArchSpec) -> Checkpoint {
    let params = arch
        .layer_names()
        .into_iter()
        .zip(arch.weight_shapes())
        .map(|(name, (out, fan_in))| LayerParams {
            name,
            weight: Array2::from_shape_simple_fn((out, fan_in), || r.random_range(-1.0..1.0)),
            bias: Array1::from_shape_simple_fn(out, || r.random_range(-0.5..0.5)),
        })
        .collect();
    Checkpoint::new("random", arch, params, BTreeMap::new()).unwrap()
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(31);
    for case in 0..20u64 {
        let input = r.random_range(2..=5);
        let classes = r.random_range(2..=4);
        let mut dims: Vec<usize> = (0..r.random_range(0..=2)).map(|_| r.random_range(2..=6)).collect();
        dims.push(classes);
        let arch = ArchSpec::new(input, dims).unwrap();
        let ckpt = random_mlp(&mut r, arch.clone());
        let data = make_blobs(4, input, classes, 1.0, case).unwrap();
        let (loss, grads) = loss_and_gradients(&ckpt, data.x().view(), data.labels()).unwrap();
        assert_eq!(loss, mean_loss(&ckpt, data.x().view(), data.labels()).unwrap());
        let mut worst = 0.0f64;
        for coord in all_coords(&ckpt) {
            let numeric = numerical_gradient(&ckpt, &data, coord, 1e-6).unwrap();
            worst = worst.max(relative_error(grads.get(coord), numeric));
        }
        assert!(worst <= 1e-4, "case {case} ({arch}): relative error {worst:e}");
    }
}
