use ndarray::{Array2, ArrayView2, Axis};

use super::{bounded, MetricKind, MetricScore};
use crate::error::{Error, Result};

/// Centered norms at or below this fraction of the raw norm count as zero variance.
///
/// A constant column centres to rounding residue of order 1e-16 relative to
/// its magnitude; anything that small carries no geometry.
const DEGENERATE_RELATIVE_NORM: f64 = 1e-12;

/// Subtracts each column's mean, accumulating in `f64`.
///
/// A second pass removes the residual mean left by rounding in the first.
pub fn center_columns(x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("centering needs at least 2 samples, got {n}")));
    }
    let mut out = x.to_owned();
    for _ in 0..2 {
        let means = out.sum_axis(Axis(0)) / n as f64;
        out -= &means;
    }
    Ok(out)
}

pub(crate) fn check_pair(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::Shape(format!(
            "sample counts differ: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {}", x.nrows())));
    }
    Ok(())
}

pub(crate) fn frobenius(x: ArrayView2<'_, f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Centres `x` and rejects it if nothing but rounding residue remains.
pub(crate) fn centered_nondegenerate(x: ArrayView2<'_, f64>, which: &str) -> Result<Array2<f64>> {
    let xc = center_columns(x)?;
    let raw = frobenius(x);
    let centered = frobenius(xc.view());
    if centered <= DEGENERATE_RELATIVE_NORM * raw || centered == 0.0 {
        return Err(Error::Degenerate(format!("{which} has zero variance after centering")));
    }
    Ok(xc)
}

fn frobenius_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| u * v).sum()
}

/// Linear CKA: `‖YcᵀXc‖²_F / (‖XcᵀXc‖_F · ‖YcᵀYc‖_F)`.
///
/// Evaluated in feature space when the feature counts are small relative to
/// N and through the N×N linear Gram matrices otherwise; the two forms are
/// algebraically identical.
pub fn linear_cka(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<MetricScore> {
    check_pair(x, y)?;
    let xc = centered_nondegenerate(x, "first input")?;
    let yc = centered_nondegenerate(y, "second input")?;
    let n = x.nrows();

    let (cross, self_x, self_y) = if x.ncols() + y.ncols() <= n {
        let kxy = xc.t().dot(&yc);
        let kxx = xc.t().dot(&xc);
        let kyy = yc.t().dot(&yc);
        (frobenius_inner(&kxy, &kxy), frobenius_inner(&kxx, &kxx), frobenius_inner(&kyy, &kyy))
    } else {
        let k = xc.dot(&xc.t());
        let l = yc.dot(&yc.t());
        (frobenius_inner(&k, &l), frobenius_inner(&k, &k), frobenius_inner(&l, &l))
    };
    let denom = (self_x * self_y).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("CKA normaliser is zero or overflows".into()));
    }
    Ok(MetricScore {
        value: bounded(cross / denom, "cka")?,
        metric: MetricKind::Cka,
        n_samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn centering_small_cases() {
        let c = center_columns(array![[1.0], [3.0]].view()).unwrap();
        assert_eq!(c, array![[-1.0], [1.0]]);
        assert!(center_columns(array![[1.0, 2.0]].view()).is_err());

        let already = array![[-1.5, 2.0], [0.5, -1.0], [1.0, -1.0]];
        let again = center_columns(already.view()).unwrap();
        assert!((&again - &already).iter().all(|d| d.abs() <= 1e-12));
    }

    #[test]
    fn self_similarity_is_exactly_one() {
        let x = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.0], [-2.0, 1.0]];
        assert_eq!(linear_cka(x.view(), x.view()).unwrap().value, 1.0);
        // Gram-matrix route (more features than samples).
        let wide = array![[1.0, 2.0, 0.0], [0.5, -1.0, 2.0]];
        assert_eq!(linear_cka(wide.view(), wide.view()).unwrap().value, 1.0);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let x = array![[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        let constant = array![[0.7], [0.7], [0.7]];
        assert!(matches!(linear_cka(x.view(), constant.view()), Err(Error::Degenerate(_))));
        let zeros = Array2::<f64>::zeros((3, 2));
        assert!(matches!(linear_cka(zeros.view(), x.view()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn sample_count_mismatch() {
        let x = Array2::<f64>::zeros((3, 2));
        let y = Array2::<f64>::zeros((4, 2));
        assert!(matches!(linear_cka(x.view(), y.view()), Err(Error::Shape(_))));
    }
}
