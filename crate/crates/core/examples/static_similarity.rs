//! Layer-by-layer CKA and Procrustes between two freshly trained toy MLPs.

use trisim::metrics::{layerwise_similarity_matrix, MetricKind};
use trisim::toymodel::{capture_activations, init_mlp, make_blobs, train_sgd, TrainConfig};

fn main() -> trisim::Result<()> {
    let data = make_blobs(50, 4, 3, 0.5, 0)?;
    let probe = make_blobs(20, 4, 3, 0.5, 1)?;
    let arch = "4:32:16:3".parse()?;
    let mut acts = Vec::new();
    for seed in [1, 2] {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        let model = train_sgd(&init_mlp(&arch, seed)?, &data, &cfg)?.checkpoint;
        acts.push(capture_activations(&model, probe.x().view(), &probe.id)?);
    }
    for kind in [MetricKind::Cka, MetricKind::Procrustes] {
        let m = layerwise_similarity_matrix(&acts[0], &acts[1], kind)?;
        println!("{kind:?} (rows: seed 1, columns: seed 2)");
        for i in 0..m.dim().0 {
            let row: Vec<String> = (0..m.dim().1).map(|j| format!("{:.3}", m.get(i, j))).collect();
            println!("  {:<7} {}", m.layers_a[i], row.join("  "));
        }
        println!("  matched mean {:.4}", m.matched_mean().unwrap());
    }
    Ok(())
}
