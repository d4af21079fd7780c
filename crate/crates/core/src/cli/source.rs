use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensorio::{Manifest, MANIFEST_FILE};
use crate::toymodel::{make_blobs, Dataset};

/// Where a dataset comes from: generated blobs, a CSV file or a dataset directory.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Blobs { n_per_class: usize, spread: f64, seed: u64 },
    Csv(PathBuf),
    Dir(PathBuf),
}

impl DataSource {
    /// Parses the `N,SPREAD[,SEED]` part of a blobs source.
    pub fn blobs(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        let bad = || Error::InvalidArgument(format!("expected N,SPREAD[,SEED], got {spec:?}"));
        if !(2..=3).contains(&parts.len()) {
            return Err(bad());
        }
        let n_per_class = parts[0].parse().map_err(|_| bad())?;
        let spread: f64 = parts[1].parse().map_err(|_| bad())?;
        let seed = parts.get(2).map(|s| s.parse()).transpose().map_err(|_| bad())?.unwrap_or(0);
        if n_per_class == 0 || !(spread > 0.0 && spread.is_finite()) {
            return Err(bad());
        }
        Ok(DataSource::Blobs { n_per_class, spread, seed })
    }

    /// Blobs need the model's input width and class count; files carry their own.
    pub fn load(&self, input_dim: usize, n_classes: usize) -> Result<Dataset> {
        match self {
            DataSource::Blobs { n_per_class, spread, seed } => {
                make_blobs(*n_per_class, input_dim, n_classes, *spread, *seed)
            }
            DataSource::Csv(p) => Dataset::load_csv(p),
            DataSource::Dir(p) => Dataset::load_dir(p),
        }
    }
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("blobs:") {
            return DataSource::blobs(rest);
        }
        let path = PathBuf::from(s);
        if path.is_dir() {
            Ok(DataSource::Dir(path))
        } else {
            Ok(DataSource::Csv(path))
        }
    }
}

/// SHA-256 over the features (little-endian f64) and labels of a dataset.
pub fn dataset_digest(d: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((d.len() as u64).to_le_bytes());
    h.update((d.input_dim() as u64).to_le_bytes());
    for v in d.x().iter() {
        h.update(v.to_le_bytes());
    }
    for &l in d.labels() {
        h.update((l as u64).to_le_bytes());
    }
    format!("sha256:{}", hex::encode(h.finalize()))
}

/// SHA-256 of a file or a directory.
///
/// A directory with a manifest is hashed over the manifest and the files it
/// lists, so logs and figures stored beside the arrays do not count. Other
/// directories are hashed over every file (relative path and bytes, in sorted
/// path order).
pub fn path_digest(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut files = Vec::new();
        if path.join(MANIFEST_FILE).is_file() {
            files.push(PathBuf::from(MANIFEST_FILE));
            files.extend(Manifest::read(path)?.layers.iter().map(|l| PathBuf::from(&l.file)));
        } else {
            collect_files(path, path, &mut files)?;
        }
        files.sort();
        for rel in files {
            let bytes = fs::read(path.join(&rel)).map_err(|e| Error::io(path.join(&rel), e))?;
            h.update(rel.to_string_lossy().as_bytes());
            h.update([0]);
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
    } else {
        h.update(fs::read(path).map_err(|e| Error::io(path, e))?);
    }
    Ok(format!("sha256:{}", hex::encode(h.finalize())))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if entry.file_name().to_string_lossy().starts_with('.') {
            continue;
        }
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).expect("walk stays under root").to_path_buf());
        }
    }
    Ok(())
}

/// `START:STOP:STEP`, inclusive of both ends, values rounded to 12 decimals.
pub(crate) fn parse_grid(spec: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("expected START:STOP:STEP, got {spec:?}"))?;
    let [start, stop, step] = parts[..] else {
        return Err(format!("expected START:STOP:STEP, got {spec:?}"));
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(format!("grid {spec:?} needs STEP > 0 and STOP >= START"));
    }
    let n = ((stop - start) / step).round();
    if (start + n * step - stop).abs() > 1e-9 * step.max(1.0) || n > 1e6 {
        return Err(format!("grid {spec:?}: STOP is not START plus a whole number of steps"));
    }
    Ok((0..=n as usize).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Either a point count or a `0:1:STEP` grid.
pub(crate) fn parse_alphas(spec: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = spec.trim().parse::<usize>() {
        return if n >= 2 { Ok(n) } else { Err(format!("need at least 2 alphas, got {n}")) };
    }
    let grid = parse_grid(spec)?;
    if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 || grid.len() < 2 {
        return Err(format!("alpha grid {spec:?} must run from 0 to 1"));
    }
    Ok(grid.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:0.9:0.1").unwrap(), (0..10).map(|i| i as f64 / 10.0).collect::<Vec<_>>());
        assert_eq!(parse_grid("0:0:0.1").unwrap(), vec![0.0]);
        assert!(parse_grid("0:1:0.3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert_eq!(parse_alphas("11").unwrap(), 11);
        assert_eq!(parse_alphas("0:1:0.25").unwrap(), 5);
        assert!(parse_alphas("1").is_err());
        assert!(parse_alphas("0:0.5:0.1").is_err());
    }

    #[test]
    fn sources() {
        assert_eq!(
            "blobs:100,0.4".parse::<DataSource>().unwrap(),
            DataSource::Blobs { n_per_class: 100, spread: 0.4, seed: 0 }
        );
        assert_eq!(
            DataSource::blobs("5,1,9").unwrap(),
            DataSource::Blobs { n_per_class: 5, spread: 1.0, seed: 9 }
        );
        assert!(DataSource::blobs("5").is_err());
        assert!(DataSource::blobs("0,1").is_err());
        assert!(DataSource::blobs("5,-1").is_err());
        assert_eq!("x.csv".parse::<DataSource>().unwrap(), DataSource::Csv("x.csv".into()));
    }

    #[test]
    fn digests_track_content() {
        let a = make_blobs(3, 2, 2, 1.0, 0).unwrap();
        let b = make_blobs(3, 2, 2, 1.0, 1).unwrap();
        assert_eq!(dataset_digest(&a), dataset_digest(&a.clone()));
        assert_ne!(dataset_digest(&a), dataset_digest(&b));

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f"), b"x").unwrap();
        let d1 = path_digest(dir.path()).unwrap();
        fs::write(dir.path().join(".hidden"), b"ignored").unwrap();
        assert_eq!(d1, path_digest(dir.path()).unwrap());
        fs::write(dir.path().join("f"), b"y").unwrap();
        assert_ne!(d1, path_digest(dir.path()).unwrap());

        let ckpt = crate::toymodel::init_mlp(&"2:3:2".parse().unwrap(), 0).unwrap();
        ckpt.save(dir.path().join("c")).unwrap();
        let before = path_digest(&dir.path().join("c")).unwrap();
        fs::write(dir.path().join("c/train_log.json"), b"{}").unwrap();
        assert_eq!(before, path_digest(&dir.path().join("c")).unwrap());
    }
}
