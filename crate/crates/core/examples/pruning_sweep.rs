//! Global magnitude pruning of two models, with self-LMC against the pruned copies.

use trisim::pruning::{sparsity_sweep, Probe};
use trisim::toymodel::{init_mlp, make_blobs, train_sgd, TrainConfig};
use trisim::triangle::self_lmc_under_pruning;

fn main() -> trisim::Result<()> {
    let data = make_blobs(60, 8, 5, 0.3, 0)?;
    let probe = Probe::from(&make_blobs(20, 8, 5, 0.3, 100)?);
    let arch = "8:32:16:5".parse()?;
    let mut models = Vec::new();
    for seed in [1, 2] {
        let cfg = TrainConfig { seed, ..TrainConfig::default() };
        models.push(train_sgd(&init_mlp(&arch, seed)?, &data, &cfg)?.checkpoint);
    }
    let levels: Vec<f64> = (0..=9).map(|i| i as f64 / 10.0).collect();
    let sweep = sparsity_sweep(&models[0], &models[1], &data, &probe, &levels)?;
    let self_lmc = self_lmc_under_pruning(&models[0], &data, &levels, 11)?;
    println!("{:>5} {:>7} {:>7} {:>9} {:>9} {:>9} {:>9}", "s", "acc_a", "acc_b", "self_a", "self_b", "cross", "barrier");
    let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    for (i, s) in levels.iter().enumerate() {
        println!(
            "{s:>5.1} {:>7.3} {:>7.3} {:>9} {:>9} {:>9} {:>9.4}",
            sweep.acc_a[i],
            sweep.acc_b[i],
            show(sweep.self_sim_a[i]),
            show(sweep.self_sim_b[i]),
            show(sweep.cross_sim[i]),
            self_lmc[i].barrier
        );
    }
    print!("{}", sweep.to_csv()?);
    Ok(())
}
