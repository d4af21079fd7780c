//! Trains a toy MLP on Gaussian blobs and checks a few gradients numerically.

use trisim::toymodel::{all_coords, init_mlp, loss_and_gradients, make_blobs, numerical_gradient, train_sgd, TrainConfig};

fn main() -> trisim::Result<()> {
    let data = make_blobs(100, 8, 5, 0.3, 0)?;
    let arch = "8:64:32:5".parse()?;
    let init = init_mlp(&arch, 1)?;

    let (_, grads) = loss_and_gradients(&init, data.x().view(), data.labels())?;
    for coord in all_coords(&init).into_iter().step_by(997).take(5) {
        let numeric = numerical_gradient(&init, &data, coord, 1e-6)?;
        println!("{coord:?}: analytic {:+.8} numeric {numeric:+.8}", grads.get(coord));
    }

    let outcome = train_sgd(&init, &data, &TrainConfig { epochs: 30, seed: 1, ..TrainConfig::default() })?;
    for e in outcome.log.iter().step_by(5) {
        println!("epoch {:>2}: loss {:.4} accuracy {:.3}", e.epoch, e.loss, e.accuracy);
    }
    let dir = std::env::temp_dir().join("trisim-train-toy");
    outcome.checkpoint.save(&dir)?;
    println!("saved {} to {}", outcome.checkpoint.model_id, dir.display());
    Ok(())
}
