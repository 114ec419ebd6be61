//! Dense complex matrix substrate.
//!
//! Everything in the crate is expressed through [`Matrix`], a dense
//! column-major `nalgebra` matrix of double-precision complex numbers.
//! Residuals are always Frobenius norms.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{precondition, shape, size, Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Environment variable overriding [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "DILATION_LAB_DIM_CAP";
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Largest row (or column) count any constructed operator may have.
pub fn dim_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(DIM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&v: &usize| v > 0)
            .unwrap_or(DEFAULT_DIM_CAP)
    })
}

pub(crate) fn check_dim(dim: usize, what: &str) -> Result<()> {
    let cap = dim_cap();
    if dim > cap {
        return Err(size(format!("{what}: dimension {dim} exceeds cap {cap}")));
    }
    Ok(())
}

/// Numerical thresholds shared by every certification routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Residual threshold for identities that hold exactly in exact arithmetic.
    pub num: f64,
    /// Eigenvalues above `-psd` count as nonnegative.
    pub psd: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            num: 1e-9,
            psd: 1e-10,
            rank: 1e-10,
        }
    }
}

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

/// The matrix unit `e_{ij}` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    m[(i, j)] = c(1.0);
    m
}

pub fn from_real(m: &DMatrix<f64>) -> Matrix {
    m.map(c)
}

/// Real part, failing if any imaginary part exceeds `tol`.
pub fn to_real(m: &Matrix, tol: f64) -> Result<DMatrix<f64>> {
    let worst = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst > tol {
        return Err(precondition(format!(
            "expected a real matrix, imaginary part {worst:e}"
        )));
    }
    Ok(m.map(|z| z.re))
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}

pub fn trace(m: &Matrix) -> C64 {
    m.diagonal().sum()
}

/// Hilbert-Schmidt pairing `tr(a* b)`.
pub fn hs_inner(a: &Matrix, b: &Matrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &Matrix, b: &Matrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn hermiticity_residual(m: &Matrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_dim(a.nrows() * b.nrows(), "tensor product rows")?;
    check_dim(a.ncols() * b.ncols(), "tensor product columns")?;
    Ok(a.kronecker(b))
}

/// Left-to-right Kronecker product of all factors; `[]` gives `[[1]]`.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a Matrix>) -> Result<Matrix> {
    let mut acc = Matrix::identity(1, 1);
    for f in factors {
        acc = tensor_product(&acc, f)?;
    }
    Ok(acc)
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r, c0), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back in ascending order, with the eigenvectors as the
/// matching columns of a unitary matrix.
pub fn eig_hermitian(a: &Matrix, tol: &Tolerances) -> Result<(Vec<f64>, Matrix)> {
    if !a.is_square() {
        return Err(shape(format!("eig_hermitian: {}x{} not square", a.nrows(), a.ncols())));
    }
    let res = hermiticity_residual(a);
    if res > tol.num {
        return Err(shape(format!("eig_hermitian: input not Hermitian (residual {res:e})")));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

pub fn min_eigenvalue(a: &Matrix, tol: &Tolerances) -> Result<f64> {
    let (w, _) = eig_hermitian(a, tol)?;
    Ok(w.first().copied().unwrap_or(0.0))
}

/// `V diag(f(w)) V*` for a Hermitian `a = V diag(w) V*`.
pub fn hermitian_function(a: &Matrix, tol: &Tolerances, f: impl Fn(f64) -> C64) -> Result<Matrix> {
    let (w, v) = eig_hermitian(a, tol)?;
    let mut scaled = v.clone();
    for (k, &wk) in w.iter().enumerate() {
        let fk = f(wk);
        for z in scaled.column_mut(k).iter_mut() {
            *z *= fk;
        }
    }
    Ok(scaled * v.adjoint())
}

/// Positive square root of a PSD matrix.
///
/// Eigenvalues in `[-tol.psd, 0)` are clamped to zero.
pub fn hermitian_sqrt(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let (w, _) = eig_hermitian(a, tol)?;
    if let Some(&min) = w.first() {
        if min < -tol.psd {
            return Err(Error::NotPsd(min));
        }
    }
    hermitian_function(a, tol, |x| c(x.max(0.0).sqrt()))
}

/// Minimum-norm least-squares solution of `gram · c = rhs` for a PSD `gram`.
///
/// Directions with eigenvalue magnitude at most `tol.rank · λ_max` are
/// treated as the kernel.
pub fn solve_psd(gram: &Matrix, rhs: &Vector, tol: &Tolerances) -> Result<Vector> {
    if !gram.is_square() || gram.nrows() != rhs.len() {
        return Err(shape(format!(
            "solve_psd: gram {}x{} vs rhs {}",
            gram.nrows(),
            gram.ncols(),
            rhs.len()
        )));
    }
    let (w, v) = eig_hermitian(gram, tol)?;
    let top = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let cut = tol.rank * top;
    let proj = v.adjoint() * rhs;
    let mut coeffs = Vector::zeros(rhs.len());
    for (k, &wk) in w.iter().enumerate() {
        if wk.abs() > cut && top > 0.0 {
            coeffs[k] = proj[k] / wk;
        }
    }
    Ok(v * coeffs)
}

/// Orthonormal basis for the column span of `a`, rank decided by the
/// relative singular-value cutoff `tol.rank`.
pub fn orthonormal_columns(a: &Matrix, tol: &Tolerances) -> Matrix {
    let n = a.nrows();
    if a.ncols() == 0 || n == 0 {
        return Matrix::zeros(n, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    if top <= 0.0 {
        return Matrix::zeros(n, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol.rank * top)
        .collect();
    let mut out = Matrix::zeros(n, keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        out.set_column(dst, &u.column(k));
    }
    out
}

/// Orthogonal projection onto the column span of `a`.
pub fn range_projection(a: &Matrix, tol: &Tolerances) -> Matrix {
    let q = orthonormal_columns(a, tol);
    &q * q.adjoint()
}

/// Column-major vectorization.
pub fn vec_of(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Matrix {
    Matrix::from_column_slice(rows, cols, v.as_slice())
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0, |a, &s| a.max(s))
}

pub fn real_spectral_norm(m: &DMatrix<f64>) -> f64 {
    spectral_norm(&from_real(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rm(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        from_real(&DMatrix::from_row_slice(rows, cols, data))
    }

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let a = rm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = tensor_product(&identity(2), &a).unwrap();
        assert_eq!(k, direct_sum(&[a.clone(), a]));
    }

    #[test]
    fn kron_of_flips() {
        let x = rm(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let k = tensor_product(&x, &x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c(want));
            }
        }
    }

    #[test]
    fn kron_with_scalar_one() {
        let a = rm(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(tensor_product(&a, &identity(1)).unwrap(), a);
    }

    #[test]
    fn kron_respects_cap() {
        let big = identity(DEFAULT_DIM_CAP.min(dim_cap()) / 2 + 1);
        assert!(matches!(tensor_product(&big, &identity(2)), Err(Error::Size(_))));
    }

    #[test]
    fn sqrt_scalar() {
        let tol = Tolerances::default();
        let r = hermitian_sqrt(&rm(1, 1, &[4.0]), &tol).unwrap();
        assert!((r[(0, 0)] - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_two_by_two() {
        let tol = Tolerances::default();
        let a = rm(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let b = hermitian_sqrt(&a, &tol).unwrap();
        assert!((&b * &b - &a).norm() < 1e-12);
        // eigenvectors (1,1)/√2 -> √3 and (1,-1)/√2 -> 1
        let s = 3f64.sqrt();
        let want = rm(2, 2, &[(s + 1.0) / 2.0, (s - 1.0) / 2.0, (s - 1.0) / 2.0, (s + 1.0) / 2.0]);
        assert!((b - want).norm() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let tol = Tolerances::default();
        match hermitian_sqrt(&rm(2, 2, &[1.0, 2.0, 2.0, 1.0]), &tol) {
            Err(Error::NotPsd(m)) => assert!((m + 1.0).abs() < 1e-12),
            other => panic!("expected NotPsd, got {other:?}"),
        }
    }

    #[test]
    fn eig_examples() {
        let tol = Tolerances::default();
        let (w, _) = eig_hermitian(&rm(2, 2, &[3.0, 0.0, 0.0, 1.0]), &tol).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 3.0).abs() < 1e-14);
        let (w, v) = eig_hermitian(&rm(2, 2, &[0.0, 1.0, 1.0, 0.0]), &tol).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        assert!((v.adjoint() * &v - identity(2)).norm() < 1e-12);
        let (w, v) = eig_hermitian(&rm(1, 1, &[1.0]), &tol).unwrap();
        assert_eq!(w, vec![1.0]);
        assert!((v[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let tol = Tolerances::default();
        assert!(matches!(
            eig_hermitian(&rm(2, 2, &[0.0, 1.0, 0.0, 0.0]), &tol),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn solve_psd_examples() {
        let tol = Tolerances::default();
        let v = Vector::from_vec(vec![c(1.0), c(-2.0)]);
        let s = solve_psd(&identity(2), &v, &tol).unwrap();
        assert!((s - &v).norm() < 1e-14);

        let s = solve_psd(&rm(2, 2, &[2.0, 0.0, 0.0, 0.0]), &Vector::from_vec(vec![c(4.0), c(0.0)]), &tol).unwrap();
        assert!((s - Vector::from_vec(vec![c(2.0), c(0.0)])).norm() < 1e-12);

        let s = solve_psd(&rm(2, 2, &[1.0, 1.0, 1.0, 1.0]), &Vector::from_vec(vec![c(2.0), c(2.0)]), &tol).unwrap();
        assert!((s - Vector::from_vec(vec![c(1.0), c(1.0)])).norm() < 1e-12);
    }

    #[test]
    fn solve_psd_shape_error() {
        let tol = Tolerances::default();
        assert!(matches!(
            solve_psd(&identity(2), &Vector::zeros(3), &tol),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn orthonormal_columns_rank() {
        let tol = Tolerances::default();
        let a = rm(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        let q = orthonormal_columns(&a, &tol);
        assert_eq!(q.ncols(), 2);
        assert!((q.adjoint() * &q - identity(2)).norm() < 1e-12);
    }
}
