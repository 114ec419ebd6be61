//! Schur multipliers `x ↦ (t_ij x_ij)` and the real Hilbert space their
//! symbol defines.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{precondition, shape, Error, Result};
use crate::matcore::{self, c, Matrix, Tolerances, C64};
use crate::sample;
use crate::state::MarkovMap;

/// The coefficient matrix `(t_ij)` of a Schur multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurSymbol {
    coeffs: Matrix,
}

impl SchurSymbol {
    pub fn new(coeffs: Matrix) -> Result<Self> {
        if !coeffs.is_square() || coeffs.nrows() == 0 {
            return Err(shape(format!(
                "symbol must be a nonempty square matrix, got {}x{}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if !matcore::is_finite(&coeffs) {
            return Err(precondition("symbol has non-finite entries"));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &DMatrix<f64>) -> Result<Self> {
        Self::new(matcore::from_real(coeffs))
    }

    /// Builds a real symbol from rows; panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != n * n {
            return Err(shape("symbol rows are ragged"));
        }
        Self::from_real(&DMatrix::from_row_slice(n, n, &flat))
    }

    /// Symbol of the identity map.
    pub fn all_ones(n: usize) -> Self {
        Self { coeffs: Matrix::from_element(n, n, c(1.0)) }
    }

    /// Symbol of the diagonal conditional expectation.
    pub fn identity(n: usize) -> Self {
        Self { coeffs: matcore::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.coeffs[(i, j)]
    }

    pub fn transpose(&self) -> Self {
        Self { coeffs: self.coeffs.transpose() }
    }

    /// Real coefficients, if the symbol is real within `tol`.
    pub fn real_coeffs(&self, tol: f64) -> Result<DMatrix<f64>> {
        matcore::to_real(&self.coeffs, tol)
    }

    /// Symbol of `M_T^k`, the entrywise `k`-th power.
    pub fn power(&self, k: usize) -> Self {
        Self { coeffs: self.coeffs.map(|z| z.powu(k as u32)) }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        apply_multiplier(self, x)
    }

    pub fn to_markov_map(&self) -> MarkovMap {
        let n = self.dim();
        // Diagonal superoperator: vec index j*n+i carries t_ij.
        let diag = nalgebra::DVector::from_iterator(
            n * n,
            (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| self.coeffs[(i, j)]),
        );
        MarkovMap::from_superoperator(n, Matrix::from_diagonal(&diag)).expect("n² × n² by construction")
    }

    /// `Σ w_k T_k`, the symbol of the convex combination of multipliers.
    pub fn convex_combination(symbols: &[SchurSymbol], weights: &[f64]) -> Result<Self> {
        check_weights(weights, symbols.len())?;
        let n = symbols[0].dim();
        if symbols.iter().any(|s| s.dim() != n) {
            return Err(shape("convex combination of symbols of different sizes"));
        }
        let mut acc = Matrix::zeros(n, n);
        for (s, &w) in symbols.iter().zip(weights) {
            acc += s.coeffs.scale(w);
        }
        Self::new(acc)
    }
}

pub(crate) fn check_weights(weights: &[f64], count: usize) -> Result<()> {
    if weights.len() != count || count == 0 {
        return Err(precondition(format!("{} weights for {count} terms", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(precondition("convex weights must be strictly positive"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(precondition(format!("convex weights sum to {total}")));
    }
    Ok(())
}

/// Entrywise product `t_ij · x_ij`.
pub fn apply_multiplier(symbol: &SchurSymbol, x: &Matrix) -> Result<Matrix> {
    let n = symbol.dim();
    if x.shape() != (n, n) {
        return Err(shape(format!(
            "multiplier of size {n} applied to a {}x{} matrix",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(symbol.coeffs.component_mul(x))
}

/// Symbol of `M_a ∘ M_b`.
pub fn compose_symbols(a: &SchurSymbol, b: &SchurSymbol) -> Result<SchurSymbol> {
    if a.dim() != b.dim() {
        return Err(shape(format!("composing symbols of sizes {} and {}", a.dim(), b.dim())));
    }
    SchurSymbol::new(a.coeffs.component_mul(&b.coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolReport {
    pub unital: bool,
    pub psd: bool,
    pub self_adjoint: bool,
    /// Smallest eigenvalue of the symbol, or `-inf` when it is not Hermitian.
    pub min_eigenvalue: f64,
    /// Complete positivity of `M_T` decided independently from its Choi matrix.
    pub choi_cp: bool,
}

impl SymbolReport {
    pub fn dilatable(&self) -> bool {
        self.unital && self.psd && self.self_adjoint
    }
}

pub fn certify_symbol(symbol: &SchurSymbol, tol: &Tolerances) -> SymbolReport {
    let t = symbol.coeffs();
    let n = symbol.dim();
    let unital = (0..n).all(|i| (t[(i, i)] - c(1.0)).norm() <= tol.num);
    let self_adjoint = (t - t.transpose()).norm() <= tol.num
        && t.iter().all(|z| z.im.abs() <= tol.num);
    let min_eigenvalue = if matcore::hermiticity_residual(t) <= tol.num {
        matcore::min_eigenvalue(t, tol).unwrap_or(f64::NEG_INFINITY)
    } else {
        f64::NEG_INFINITY
    };
    let psd = min_eigenvalue >= -tol.psd;

    let choi = symbol.to_markov_map().choi();
    let choi_cp = matcore::hermiticity_residual(&choi) <= tol.num
        && matcore::min_eigenvalue(&choi, tol).is_ok_and(|m| m >= -tol.psd);

    SymbolReport { unital, psd, self_adjoint, min_eigenvalue, choi_cp }
}

/// The real Hilbert space `ℓ_{2,T}`: row `i` of `embedding` holds the
/// coordinates of the class of `e_i` in an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSpace {
    embedding: DMatrix<f64>,
}

impl GramSpace {
    /// Wraps an explicit embedding (rows are the generator vectors).
    pub fn from_embedding(embedding: DMatrix<f64>) -> Self {
        Self { embedding }
    }

    /// `ℝ^d` with its standard basis as generators.
    pub fn standard(d: usize) -> Self {
        Self { embedding: DMatrix::identity(d, d) }
    }

    pub fn rank(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn generator_count(&self) -> usize {
        self.embedding.nrows()
    }

    pub fn embedding(&self) -> &DMatrix<f64> {
        &self.embedding
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.embedding.row(i).iter().copied().collect()
    }

    /// `embedding · embeddingᵀ`, which reproduces the symbol.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.embedding * self.embedding.transpose()
    }
}

/// Quotient of `(ℝ^n, ⟨·,·⟩_T)` by its kernel, realized through the
/// eigendecomposition `T = V Λ Vᵀ` truncated at `tol.rank · λ_max`.
pub fn build_gram_space(symbol: &SchurSymbol, tol: &Tolerances) -> Result<GramSpace> {
    let report = certify_symbol(symbol, tol);
    if !report.self_adjoint {
        return Err(precondition("Gram space needs a real symmetric symbol"));
    }
    if !report.psd {
        return Err(Error::NotPsd(report.min_eigenvalue));
    }
    let t = symbol.real_coeffs(tol.num)?;
    let sym = (&t + t.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, &x| m.max(x));
    let mut keep: Vec<usize> = (0..t.nrows())
        .filter(|&k| eig.eigenvalues[k] > tol.rank * top)
        .collect();
    // Largest first, for a stable basis ordering.
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let n = t.nrows();
    let mut embedding = DMatrix::zeros(n, keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            embedding[(i, dst)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    Ok(GramSpace { embedding })
}

/// Unital real symmetric PSD symbol: Gram matrix of `n` random unit vectors
/// in `ℝ^rank`.
pub fn random_unital_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> SchurSymbol {
    let mut v = sample::gaussian_real(rng, n, rank.max(1));
    for mut row in v.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let g = &v * v.transpose();
    let g = (&g + g.transpose()) * 0.5;
    let mut s = SchurSymbol::from_real(&g).expect("square finite");
    for i in 0..n {
        s.coeffs[(i, i)] = c(1.0);
    }
    s
}

/// Unit-diagonal real symmetric symbol with off-diagonal entries uniform in
/// `[-spread, spread]`; PSD or not depending on the draw.
pub fn random_unital_symmetric<R: Rng>(rng: &mut R, n: usize, spread: f64) -> SchurSymbol {
    let mut t = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = spread * (2.0 * rng.random::<f64>() - 1.0);
            t[(i, j)] = v;
            t[(j, i)] = v;
        }
    }
    SchurSymbol::from_real(&t).expect("square finite")
}
