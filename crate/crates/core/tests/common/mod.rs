//! Reference implementations written independently of the library: explicit
//! centering matrices, nalgebra SVDs and textbook two-pass statistics.
#![allow(dead_code)]

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// `H = I − 11ᵀ/n`.
fn centering(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64)
}

fn hsic(k: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    let h = centering(k.nrows());
    (k * &h * l * &h).trace()
}

/// CKA from linear Gram matrices: `HSIC(K, L) / sqrt(HSIC(K, K) HSIC(L, L))`.
pub fn cka_oracle(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let (x, y) = (to_na(x), to_na(y));
    let k = &x * x.transpose();
    let l = &y * y.transpose();
    hsic(&k, &l) / (hsic(&k, &k) * hsic(&l, &l)).sqrt()
}

/// `max_Q tr(Qᵀ XcᵀYc)` over orthogonal `Q` equals the nuclear norm of
/// `XcᵀYc`, taken here from nalgebra's singular values, over `‖Xc‖_F ‖Yc‖_F`.
pub fn procrustes_oracle(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let h = centering(x.nrows());
    let xc = &h * to_na(x);
    let yc = &h * to_na(y);
    let m = xc.transpose() * &yc;
    m.singular_values().sum() / (xc.norm() * yc.norm())
}

/// Base-2 JSD by the defining formula with natural logs.
pub fn jsd_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut kl_p = 0.0;
    let mut kl_q = 0.0;
    for i in 0..p.len() {
        let m = (p[i] + q[i]) / 2.0;
        if p[i] > 0.0 {
            kl_p += p[i] * (p[i].ln() - m.ln());
        }
        if q[i] > 0.0 {
            kl_q += q[i] * (q[i].ln() - m.ln());
        }
    }
    (kl_p + kl_q) / 2.0 / std::f64::consts::LN_2
}

/// Two-pass textbook Pearson correlation.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Largest drop below the chord between the endpoint accuracies, floored at 0.
pub fn barrier_oracle(alphas: &[f64], accs: &[f64]) -> f64 {
    let (a, b) = (accs[0], accs[accs.len() - 1]);
    let mut best = 0.0f64;
    for i in 0..alphas.len() {
        let chord = (1.0 - alphas[i]) * a + alphas[i] * b;
        if chord - accs[i] > best {
            best = chord - accs[i];
        }
    }
    best
}

/// A random point of the probability simplex, with some exact zeros.
pub fn simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k)
        .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Haar-distributed orthogonal matrix from the QR of a Gaussian matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Array2<f64> {
    let g = to_na(&gaussian(rng, d, d));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&r.diagonal().map(|v| if v < 0.0 { -1.0 } else { 1.0 }));
    from_na(&(q * signs))
}
