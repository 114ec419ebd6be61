//! Seeded pseudo-random inputs for sampling-based checks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matcore::{Matrix, C64};

pub const DEFAULT_SEED: u64 = 0x5eed_d11a;

pub type SampleRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn gaussian_real<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn hermitian<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let g = gaussian_complex(rng, n, n);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase fix.
pub fn unitary<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let qr = gaussian_complex(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for z in out.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    out
}

/// Positive weights summing to one, bounded away from zero.
pub fn faithful_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Real matrix with spectral norm `scale` (or below, if `scale` is random).
pub fn real_contraction<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    let g = gaussian_real(rng, rows, cols);
    let norm = g.clone().svd(false, false).singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    if norm == 0.0 {
        return g;
    }
    g * (scale / norm)
}

pub fn real_symmetric_contraction<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    let g = gaussian_real(rng, n, n);
    let s = (&g + g.transpose()) * 0.5;
    let norm = s.clone().symmetric_eigen().eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    if norm == 0.0 {
        return s;
    }
    s * (scale / norm)
}
