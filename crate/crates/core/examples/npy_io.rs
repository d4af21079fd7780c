//! Writes an activation set to a tensor directory and reads it back.

use ndarray::Array2;
use trisim::tensorio::{read_array, ActivationSet, Layer, Manifest, Tensor};

fn main() -> trisim::Result<()> {
    let dir = std::env::temp_dir().join("trisim-npy-io");
    let layers = vec![
        Layer { name: "h1".into(), values: Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64) },
        Layer { name: "h2".into(), values: Array2::from_shape_fn((4, 2), |(i, j)| i as f64 - j as f64) },
    ];
    ActivationSet::new("demo-model", "demo-data", layers)?.save(&dir)?;

    let manifest = Manifest::read(&dir)?;
    for entry in &manifest.layers {
        let t: Tensor = read_array(dir.join(&entry.file))?;
        println!("{:>4} {:<10} shape {:?} dtype {:?}", entry.name, entry.file, t.shape(), t.dtype());
    }
    let back = ActivationSet::load(&dir)?;
    println!("{} samples, layers {:?}", back.n_samples(), back.layer_names());
    Ok(())
}
