//! Faithful states with diagonal density, their modular group, and
//! certification of Markov maps against them.

use serde::Serialize;

use crate::error::{precondition, shape, Result};
use crate::matcore::{self, c, matrix_unit, Matrix, Tolerances, C64};

/// Modular-group sample points used when no others are requested.
pub const DEFAULT_T_SAMPLES: [f64; 2] = [0.3, 1.0];

/// The state `x ↦ Σ λ_i x_ii` with density `D = diag(λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState {
    weights: Vec<f64>,
}

impl DiagonalState {
    pub fn new(weights: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if weights.is_empty() {
            return Err(precondition("state needs at least one weight"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(precondition(format!("state weight {w} is not strictly positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol.num {
            return Err(precondition(format!("state weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// The normalized trace on `M_n`.
    pub fn tracial(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn density(&self) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.weights.iter().map(|&w| c(w)),
        ))
    }

    /// `φ(x) = tr(D x)`.
    pub fn expect(&self, x: &Matrix) -> C64 {
        self.weights.iter().enumerate().map(|(i, &w)| x[(i, i)] * w).sum()
    }

    fn check(&self, x: &Matrix, what: &str) -> Result<()> {
        let n = self.dim();
        if x.nrows() != n || x.ncols() != n {
            return Err(shape(format!(
                "{what}: {}x{} matrix against a state of dimension {n}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }
}

/// `σ_t(x) = D^{-it} x D^{it}`, evaluated entrywise as `(λ_i/λ_j)^{-it} x_ij`.
pub fn modular_conjugate(state: &DiagonalState, x: &Matrix, t: f64) -> Result<Matrix> {
    state.check(x, "modular_conjugate")?;
    let lam = state.weights();
    Ok(Matrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        let phase = -t * (lam[i] / lam[j]).ln();
        x[(i, j)] * C64::from_polar(1.0, phase)
    }))
}

/// GNS form `tr(D x* y)`.
pub fn gns_inner(state: &DiagonalState, x: &Matrix, y: &Matrix) -> Result<C64> {
    state.check(x, "gns_inner")?;
    state.check(y, "gns_inner")?;
    let n = state.dim();
    let mut acc = C64::new(0.0, 0.0);
    for (i, &w) in state.weights().iter().enumerate() {
        // (x* y)_ii = Σ_k conj(x_ki) y_ki
        let mut d = C64::new(0.0, 0.0);
        for k in 0..n {
            d += x[(k, i)].conj() * y[(k, i)];
        }
        acc += d * w;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    #[default]
    Unchecked,
    Holds,
    Fails,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

/// Certification outcome, with the residual behind each verdict.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MarkovFlags {
    pub unital: Verdict,
    pub cp: Verdict,
    pub state_preserving: Verdict,
    pub modular_intertwining: Verdict,
    /// `‖u(1) − 1‖_F`
    pub unital_residual: f64,
    /// Smallest eigenvalue of the Choi matrix.
    pub choi_min_eigenvalue: f64,
    /// `max |φ(u(e_ij)) − φ(e_ij)|`
    pub state_residual: f64,
    /// `max ‖u(σ_t(e_ij)) − σ_t(u(e_ij))‖_F` over the sampled `t`.
    pub modular_residual: f64,
}

impl MarkovFlags {
    pub fn all_hold(&self) -> bool {
        self.unital.holds()
            && self.cp.holds()
            && self.state_preserving.holds()
            && self.modular_intertwining.holds()
    }
}

/// A linear map on `M_n`, stored as the `n² × n²` matrix acting on
/// column-major vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMap {
    dim: usize,
    superop: Matrix,
    flags: MarkovFlags,
}

impl MarkovMap {
    pub fn from_superoperator(dim: usize, superop: Matrix) -> Result<Self> {
        let n2 = dim * dim;
        if superop.nrows() != n2 || superop.ncols() != n2 {
            return Err(shape(format!(
                "superoperator {}x{} for dimension {dim}",
                superop.nrows(),
                superop.ncols()
            )));
        }
        Ok(Self { dim, superop, flags: MarkovFlags::default() })
    }

    /// Tabulates `f` on the matrix units.
    pub fn from_fn(dim: usize, f: impl Fn(&Matrix) -> Matrix) -> Self {
        let n2 = dim * dim;
        let mut superop = Matrix::zeros(n2, n2);
        for j in 0..dim {
            for i in 0..dim {
                let image = f(&matrix_unit(dim, i, j));
                assert_eq!(image.shape(), (dim, dim), "map must preserve the dimension");
                superop.set_column(j * dim + i, &matcore::vec_of(&image));
            }
        }
        Self { dim, superop, flags: MarkovFlags::default() }
    }

    /// Like [`MarkovMap::from_fn`] for fallible maps.
    pub fn try_from_fn(dim: usize, mut f: impl FnMut(&Matrix) -> Result<Matrix>) -> Result<Self> {
        let n2 = dim * dim;
        let mut superop = Matrix::zeros(n2, n2);
        for j in 0..dim {
            for i in 0..dim {
                let image = f(&matrix_unit(dim, i, j))?;
                if image.shape() != (dim, dim) {
                    return Err(shape("map must preserve the dimension"));
                }
                superop.set_column(j * dim + i, &matcore::vec_of(&image));
            }
        }
        Ok(Self { dim, superop, flags: MarkovFlags::default() })
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_superoperator(dim, matcore::identity(dim * dim)).expect("square by construction")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn superoperator(&self) -> &Matrix {
        &self.superop
    }

    pub fn flags(&self) -> &MarkovFlags {
        &self.flags
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(shape(format!(
                "applying a map on M_{} to a {}x{} matrix",
                self.dim,
                x.nrows(),
                x.ncols()
            )));
        }
        let v = &self.superop * matcore::vec_of(x);
        Ok(matcore::unvec(&v, self.dim, self.dim))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MarkovMap) -> Result<MarkovMap> {
        if self.dim != other.dim {
            return Err(shape("composing maps of different dimensions"));
        }
        MarkovMap::from_superoperator(self.dim, &self.superop * &other.superop)
    }

    /// `Σ_ij e_ij ⊗ u(e_ij)`.
    pub fn choi(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n * n, n * n);
        for j in 0..n {
            for i in 0..n {
                let col = self.superop.column(j * n + i);
                for b in 0..n {
                    for a in 0..n {
                        out[(i * n + a, j * n + b)] = col[b * n + a];
                    }
                }
            }
        }
        out
    }
}

/// Evaluates the four Markov conditions for `map` against `state`.
///
/// Failures land in the flags; only a dimension mismatch is an error.
pub fn certify_markov(
    map: &MarkovMap,
    state: &DiagonalState,
    t_samples: &[f64],
    tol: &Tolerances,
) -> Result<MarkovMap> {
    let n = map.dim();
    if n != state.dim() {
        return Err(shape(format!(
            "map on M_{n} certified against a state of dimension {}",
            state.dim()
        )));
    }
    let mut flags = MarkovFlags::default();

    let one = matcore::identity(n);
    flags.unital_residual = (map.apply(&one)? - &one).norm();
    flags.unital = Verdict::from_bool(flags.unital_residual <= tol.num);

    let choi = map.choi();
    // A non-Hermitian Choi matrix already rules out complete positivity.
    let herm = matcore::hermiticity_residual(&choi);
    flags.choi_min_eigenvalue = if herm > tol.num {
        f64::NEG_INFINITY
    } else {
        matcore::min_eigenvalue(&choi, tol)?
    };
    flags.cp = Verdict::from_bool(flags.choi_min_eigenvalue >= -tol.psd);

    let mut state_res = 0.0_f64;
    let mut modular_res = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let e = matrix_unit(n, i, j);
            let image = map.apply(&e)?;
            state_res = state_res.max((state.expect(&image) - state.expect(&e)).norm());
            for &t in t_samples {
                let lhs = map.apply(&modular_conjugate(state, &e, t)?)?;
                let rhs = modular_conjugate(state, &image, t)?;
                modular_res = modular_res.max((lhs - rhs).norm());
            }
        }
    }
    flags.state_residual = state_res;
    flags.state_preserving = Verdict::from_bool(state_res <= tol.num);
    flags.modular_residual = modular_res;
    flags.modular_intertwining = Verdict::from_bool(modular_res <= tol.num);

    Ok(MarkovMap { flags, ..map.clone() })
}

/// The map `u★` with `φ(x u(y)) = φ(u★(x) y)` for all `x, y`.
///
/// Pairing both sides against matrix units gives
/// `u★(e_ab)_{lk} = (λ_a / λ_l) · u(e_kl)_{ba}`.
pub fn star_adjoint(map: &MarkovMap, state: &DiagonalState) -> Result<MarkovMap> {
    let n = map.dim();
    if n != state.dim() {
        return Err(shape(format!(
            "map on M_{n} paired with a state of dimension {}",
            state.dim()
        )));
    }
    let lam = state.weights();
    let images: Vec<Matrix> = (0..n * n)
        .map(|k| matcore::unvec(&map.superoperator().column(k).into_owned(), n, n))
        .collect();
    // images[l * n + k] = u(e_kl)
    Ok(MarkovMap::from_fn(n, |x| {
        let mut out = Matrix::zeros(n, n);
        for b in 0..n {
            for a in 0..n {
                let coeff = x[(a, b)];
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                for l in 0..n {
                    for k in 0..n {
                        out[(l, k)] += coeff * images[l * n + k][(b, a)] * (lam[a] / lam[l]);
                    }
                }
            }
        }
        out
    }))
}
