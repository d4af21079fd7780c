//! Correlation of static and sparsity similarity across a small model zoo.

use trisim::plot::{crossview_chart, FigureOptions};
use trisim::pruning::Probe;
use trisim::toymodel::{init_mlp, make_blobs, train_sgd, TrainConfig};
use trisim::triangle::{build_triangle_report, crossview_stats, TriangleConfig, DEFAULT_DISAGREEMENT_THRESHOLD};

fn main() -> trisim::Result<()> {
    let data = make_blobs(40, 4, 3, 0.5, 0)?;
    let probe = Probe::from(&make_blobs(15, 4, 3, 0.5, 1)?);
    let zoo = [("4:16:3", 1), ("4:16:3", 2), ("4:32:3", 3), ("4:32:16:3", 4), ("4:32:16:3", 5)];
    let mut models = Vec::new();
    for (arch, seed) in zoo {
        let cfg = TrainConfig { seed, epochs: 20, ..TrainConfig::default() };
        models.push(train_sgd(&init_mlp(&arch.parse()?, seed)?, &data, &cfg)?.checkpoint);
    }
    let cfg = TriangleConfig { levels: vec![0.0, 0.2, 0.4, 0.6], n_alphas: 5, ..TriangleConfig::default() };
    let mut reports = Vec::new();
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            reports.push(build_triangle_report(&models[i], &models[j], &data, &probe, &cfg)?);
        }
    }
    let stats = crossview_stats(&reports, DEFAULT_DISAGREEMENT_THRESHOLD)?;
    for p in &stats.pairs {
        println!("{:<40} static {:.4} procrustes {:.4} robustness {:.4}", p.pair_id, p.static_score, p.static_procrustes, p.robustness_score);
    }
    println!("{} pairs, Pearson r {:.4}, disagreements {:?}", stats.n_pairs, stats.pearson_r, stats.disagreements);
    let path = std::env::temp_dir().join("trisim-crossview.svg");
    std::fs::write(&path, crossview_chart(&stats, &FigureOptions::default())).map_err(|e| trisim::Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}
