//! Accuracy along the linear path between two independently trained models.

use trisim::toymodel::{init_mlp, make_blobs, train_sgd, TrainConfig};
use trisim::triangle::{barrier_height, lmc_curve};

fn main() -> trisim::Result<()> {
    let data = make_blobs(60, 4, 3, 0.5, 0)?;
    let arch = "4:32:3".parse()?;
    let mut models = Vec::new();
    for seed in [1, 2] {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        models.push(train_sgd(&init_mlp(&arch, seed)?, &data, &cfg)?.checkpoint);
    }
    let curve = lmc_curve(&models[0], &models[1], &data, 21)?;
    for (alpha, acc) in curve.alphas.iter().zip(&curve.accuracies) {
        println!("alpha {alpha:.2}  accuracy {acc:.3}  {}", "#".repeat((acc * 40.0) as usize));
    }
    println!("barrier {:.4}", barrier_height(&curve));
    println!("self barrier {:.4}", barrier_height(&lmc_curve(&models[0], &models[0], &data, 21)?));
    Ok(())
}
