//! Small dense kernels for the Procrustes score: one-sided Jacobi singular
//! values and a Householder reduction of wide matrices.

use ndarray::{s, Array2, ArrayView2};

const MAX_SWEEPS: usize = 80;

/// Singular values of `a` (any shape), unordered.
///
/// One-sided Jacobi (Hestenes): columns are rotated pairwise until mutually
/// orthogonal, at which point their norms are the singular values. Accurate
/// to a few ulps of the largest singular value, including exact zeros.
pub fn singular_values(a: ArrayView2<'_, f64>) -> Vec<f64> {
    // Orthogonalise along the shorter side.
    let mut work = if a.ncols() <= a.nrows() { a.to_owned() } else { a.t().to_owned() };
    let cols = work.ncols();
    let rows = work.nrows();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let (u, v) = (work[[r, p]], work[[r, q]]);
                    alpha += u * u;
                    beta += v * v;
                    gamma += u * v;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let (u, v) = (work[[r, p]], work[[r, q]]);
                    work[[r, p]] = c * u - s * v;
                    work[[r, q]] = s * u + c * v;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..cols)
        .map(|j| work.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Returns `L` with `x = L · B` for some `B` with orthonormal rows.
///
/// When `x` (N×D) is wider than tall, `L` is the N×N lower-triangular factor
/// from a Householder QR of `xᵀ`; otherwise `x` itself is returned. Products
/// `xᵀy` then share nonzero singular values with `Lxᵀ Ly`.
pub fn row_space_factor(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    if d <= n {
        return x.to_owned();
    }
    // Householder QR of xᵀ (d×n, d > n): xᵀ = Q R, so x = Rᵀ Qᵀ.
    let mut a = x.t().to_owned();
    for k in 0..n {
        let norm = a.slice(s![k.., k]).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[[k, k]] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a.slice(s![k.., k]).to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * a[[k + i, j]]).sum();
            let f = 2.0 * dot / vnorm2;
            for (i, vi) in v.iter().enumerate() {
                a[[k + i, j]] -= f * vi;
            }
        }
    }
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            l[[j, i]] = a[[i, j]];
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_singular_values() {
        let mut sv = singular_values(array![[3.0, 0.0], [0.0, -2.0], [0.0, 0.0]].view());
        sv.sort_by(f64::total_cmp);
        assert_eq!(sv, vec![2.0, 3.0]);
    }

    #[test]
    fn rank_one_has_one_nonzero_value() {
        let a = array![[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]];
        let mut sv = singular_values(a.view());
        sv.sort_by(f64::total_cmp);
        assert!(sv[0].abs() < 1e-14);
        assert!((sv[1] - 70f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn factor_preserves_gram() {
        let x = array![[1.0, 2.0, 0.5, -1.0], [0.0, 1.0, 3.0, 2.0]];
        let l = row_space_factor(x.view());
        assert_eq!(l.dim(), (2, 2));
        let g1 = x.dot(&x.t());
        let g2 = l.dot(&l.t());
        assert!((&g1 - &g2).iter().all(|d| d.abs() < 1e-12));
    }
}
