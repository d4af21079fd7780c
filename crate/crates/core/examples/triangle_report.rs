//! Full three-panel report for one pair, written as JSON with its SVG figures.

use trisim::cli::{figures, Document};
use trisim::plot::FigureOptions;
use trisim::pruning::Probe;
use trisim::toymodel::{init_mlp, make_blobs, train_sgd, TrainConfig};
use trisim::triangle::{build_triangle_report, TriangleConfig};

fn main() -> trisim::Result<()> {
    let data = make_blobs(60, 4, 3, 0.5, 0)?;
    let probe = Probe::from(&make_blobs(20, 4, 3, 0.5, 1)?);
    let a = train_sgd(&init_mlp(&"4:32:16:3".parse()?, 1)?, &data, &TrainConfig { seed: 1, ..TrainConfig::default() })?;
    let b = train_sgd(&init_mlp(&"4:32:16:3".parse()?, 2)?, &data, &TrainConfig { seed: 2, ..TrainConfig::default() })?;
    let report = build_triangle_report(&a.checkpoint, &b.checkpoint, &data, &probe, &TriangleConfig::default())?;

    let d = &report.derived;
    println!("pair {}", report.pair_id());
    println!("static (CKA) {:.4}, static (Procrustes) {:.4}", d.static_score, d.static_procrustes);
    println!("functional {} barrier {:?}", report.functional.kind(), report.functional.barrier());
    println!("robustness {:?}, disagreement {}", d.robustness_score, d.disagreement);

    let dir = std::env::temp_dir().join("trisim-triangle-report");
    std::fs::create_dir_all(&dir).map_err(|e| trisim::Error::io(&dir, e))?;
    let doc = Document::new("triangle", serde_json::json!({}), Default::default(), &report);
    let json = doc.to_json()?;
    std::fs::write(dir.join("report.json"), &json).map_err(|e| trisim::Error::io(&dir, e))?;
    let figs = figures(&serde_json::from_str(&json)?, &FigureOptions::default())?;
    for (name, svg) in figs {
        std::fs::write(dir.join(&name), svg).map_err(|e| trisim::Error::io(&dir, e))?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
