use crate::error::{Error, Result};

/// Pearson correlation via a single streaming pass over co-moments.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 points, got {}", x.len())));
    }
    let (mut mean_x, mut mean_y) = (0.0, 0.0);
    let (mut m2_x, mut m2_y, mut co) = (0.0, 0.0, 0.0);
    for (k, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (k + 1) as f64;
        let dx = a - mean_x;
        let dy = b - mean_y;
        mean_x += dx / n;
        mean_y += dy / n;
        m2_x += dx * (a - mean_x);
        m2_y += dy * (b - mean_y);
        co += dx * (b - mean_y);
    }
    if !(m2_x > 0.0 && m2_y > 0.0) {
        return Err(Error::Degenerate("correlation of a constant series is undefined".into()));
    }
    Ok((co / (m2_x * m2_y).sqrt()).clamp(-1.0, 1.0))
}
