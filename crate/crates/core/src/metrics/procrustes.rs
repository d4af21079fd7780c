use ndarray::ArrayView2;

use super::cka::{centered_nondegenerate, check_pair, frobenius};
use super::linalg::{row_space_factor, singular_values};
use super::{bounded, MetricKind, MetricScore};
use crate::error::{Error, Result};

/// Orthogonal-Procrustes similarity `‖XcᵀYc‖_* / (‖Xc‖_F ‖Yc‖_F)`.
///
/// The nuclear norm equals the best achievable `trace(Qᵀ XcᵀYc)` over
/// orthogonal `Q`, so 1 means `Yc` is a scaled rotation/reflection of `Xc`.
/// Unequal widths behave as if the narrower side were zero-padded: padding
/// adds only zero singular values.
pub fn procrustes_similarity(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<MetricScore> {
    check_pair(x, y)?;
    let xc = centered_nondegenerate(x, "first input")?;
    let yc = centered_nondegenerate(y, "second input")?;
    let denom = frobenius(xc.view()) * frobenius(yc.view());
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("Procrustes normaliser is zero or overflows".into()));
    }
    let lx = row_space_factor(xc.view());
    let ly = row_space_factor(yc.view());
    let cross = lx.t().dot(&ly);
    let nuclear: f64 = singular_values(cross.view()).iter().sum();
    Ok(MetricScore {
        value: bounded(nuclear / denom, "procrustes")?,
        metric: MetricKind::Procrustes,
        n_samples: x.nrows(),
    })
}
