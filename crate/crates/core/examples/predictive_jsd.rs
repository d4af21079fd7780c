//! Predictive similarity of two models with different architectures.

use trisim::metrics::{predictive_similarity, JsdMode};
use trisim::toymodel::{init_mlp, make_blobs, predictions, train_sgd, TrainConfig};

fn main() -> trisim::Result<()> {
    let data = make_blobs(50, 4, 3, 0.5, 0)?;
    let eval = make_blobs(30, 4, 3, 0.5, 9)?;
    let mut preds = Vec::new();
    for (arch, seed) in [("4:16:3", 1), ("4:32:16:3", 2)] {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        let model = train_sgd(&init_mlp(&arch.parse()?, seed)?, &data, &cfg)?.checkpoint;
        preds.push(predictions(&model, eval.x().view(), &eval.id)?);
    }
    for mode in [JsdMode::MeanDist, JsdMode::PerSample] {
        println!("{mode:?}: JSD {:.6} bits", predictive_similarity(&preds[0], &preds[1], mode)?);
    }
    Ok(())
}
