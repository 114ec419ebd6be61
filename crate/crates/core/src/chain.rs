//! The truncated Markov chain `M_n ⊗ Cl(ℓ_{2,T})^{⊗N}` of a Schur
//! multiplier: embeddings `J_q`, the shift `β`, past and future
//! expectations, and the Rota identity.

use serde::Serialize;

use crate::condexp::{word_closure, Expectation, SubalgebraBasis};
use crate::error::{precondition, shape, Error, Result};
use crate::fock::FermionRep;
use crate::matcore::{self, c, Matrix, Tolerances};
use crate::schur::{build_gram_space, certify_symbol, SchurSymbol};
use crate::state::DiagonalState;

/// Truncated chain of depth `N`: ambient `M_n ⊗ M_{2^r}^{⊗N}` with state
/// `φ ⊗ τ^{⊗N}`.
#[derive(Debug, Clone)]
pub struct ChainSpace {
    symbol: SchurSymbol,
    state: DiagonalState,
    rep: FermionRep,
    depth: usize,
    /// `ω(e_i) ω(e_j)` indexed `i * n + j`.
    pairs: Vec<Matrix>,
    tol: Tolerances,
}

impl ChainSpace {
    pub fn new(symbol: &SchurSymbol, state: &DiagonalState, depth: usize, tol: &Tolerances) -> Result<Self> {
        if depth == 0 {
            return Err(precondition("chain depth must be at least 1"));
        }
        Self::build(symbol, state, depth, tol)
    }

    /// Depth 0 is the input algebra itself, used as the source of `β^N`.
    fn build(symbol: &SchurSymbol, state: &DiagonalState, depth: usize, tol: &Tolerances) -> Result<Self> {
        let n = symbol.dim();
        if state.dim() != n {
            return Err(shape(format!("symbol of size {n} with a state on M_{}", state.dim())));
        }
        let report = certify_symbol(symbol, tol);
        if !(report.self_adjoint && report.unital) {
            return Err(precondition("chain needs a unital real symmetric symbol"));
        }
        if !report.psd {
            return Err(Error::NotPsd(report.min_eigenvalue));
        }
        let rep = FermionRep::new(&build_gram_space(symbol, tol)?)?;
        let leg = rep.fock_dim();
        let total = (0..depth).try_fold(n, |acc, _| acc.checked_mul(leg));
        match total {
            Some(d) => matcore::check_dim(d, "chain ambient space")?,
            None => return Err(crate::error::size("chain ambient dimension overflows")),
        }
        let gens: Vec<Matrix> = (0..n).map(|i| rep.generator(i)).collect();
        let pairs = (0..n * n).map(|k| &gens[k / n] * &gens[k % n]).collect();
        Ok(Self { symbol: symbol.clone(), state: state.clone(), rep, depth, pairs, tol: *tol })
    }

    /// The same chain truncated at another depth.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        Self::build(&self.symbol, &self.state, depth, &self.tol)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn input_dim(&self) -> usize {
        self.symbol.dim()
    }

    pub fn rank(&self) -> usize {
        self.rep.rank()
    }

    pub fn leg_dim(&self) -> usize {
        self.rep.fock_dim()
    }

    fn tail_dim(&self, legs: usize) -> usize {
        self.leg_dim().pow(legs as u32)
    }

    pub fn ambient_dim(&self) -> usize {
        self.input_dim() * self.tail_dim(self.depth)
    }

    pub fn symbol(&self) -> &SchurSymbol {
        &self.symbol
    }

    /// Diagonal of `D ⊗ (1/2^r)^{⊗N}`.
    pub fn ambient_weights(&self) -> Vec<f64> {
        let tail = self.tail_dim(self.depth);
        self.state
            .weights()
            .iter()
            .flat_map(|&l| std::iter::repeat_n(l / tail as f64, tail))
            .collect()
    }

    pub fn density(&self) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.ambient_dim(),
            self.ambient_weights().into_iter().map(c),
        ))
    }

    pub fn ambient_state(&self, z: &Matrix) -> crate::C64 {
        let w = self.ambient_weights();
        (0..z.nrows()).map(|i| z[(i, i)] * w[i]).sum()
    }

    /// `J_q(e_ij) = e_ij ⊗ (ω(e_i)ω(e_j))^{⊗q} ⊗ 1^{⊗(N−q)}`.
    pub fn embed_unit(&self, q: usize, i: usize, j: usize) -> Result<Matrix> {
        let n = self.input_dim();
        if q > self.depth {
            return Err(precondition(format!("J_{q} beyond chain depth {}", self.depth)));
        }
        if i >= n || j >= n {
            return Err(shape("matrix unit index out of range"));
        }
        let w = &self.pairs[i * n + j];
        let mut factors = vec![matcore::matrix_unit(n, i, j)];
        factors.extend(std::iter::repeat_n(w.clone(), q));
        let one = matcore::identity(self.tail_dim(self.depth - q));
        factors.push(one);
        matcore::tensor_all(factors.iter())
    }

    /// `J_q(x)`, extended linearly from matrix units.
    pub fn embed(&self, q: usize, x: &Matrix) -> Result<Matrix> {
        let n = self.input_dim();
        if x.shape() != (n, n) {
            return Err(shape("J_q applied to an operator of the wrong size"));
        }
        let big = self.ambient_dim();
        let mut out = Matrix::zeros(big, big);
        for i in 0..n {
            for j in 0..n {
                if x[(i, j)] != crate::C64::new(0.0, 0.0) {
                    out += self.embed_unit(q, i, j)? * x[(i, j)];
                }
            }
        }
        Ok(out)
    }

    fn unit_images(&self, q: usize) -> Result<Vec<Matrix>> {
        let n = self.input_dim();
        (0..n * n).map(|k| self.embed_unit(q, k / n, k % n)).collect()
    }

    /// Algebra generated by `J_q` for `q` in `range`.
    pub fn generated(&self, range: std::ops::RangeInclusive<usize>) -> Result<SubalgebraBasis> {
        let mut gens = Vec::new();
        for q in range {
            gens.extend(self.unit_images(q)?);
        }
        word_closure(self.ambient_dim(), &gens, None)
    }

    /// `E_{n]}`, onto the algebra generated by `J_0, …, J_n`.
    pub fn past(&self, n: usize) -> Result<Expectation> {
        if n > self.depth {
            return Err(precondition(format!("past index {n} beyond depth {}", self.depth)));
        }
        Expectation::new(&self.density(), &self.generated(0..=n)?, &self.tol)
    }

    /// `E_{[n}`, onto the algebra generated by `J_n, …, J_N`.
    pub fn future(&self, n: usize) -> Result<Expectation> {
        if n > self.depth {
            return Err(precondition(format!("future index {n} beyond depth {}", self.depth)));
        }
        Expectation::new(&self.density(), &self.generated(n..=self.depth)?, &self.tol)
    }

    /// `(E_{n]}, E_{[n})`.
    pub fn expectations(&self, n: usize) -> Result<(Expectation, Expectation)> {
        Ok((self.past(n)?, self.future(n)?))
    }

    /// `β(x) = d_1 S(x) d_1` from the depth `N−1` chain into this one; `S`
    /// inserts an identity leg in front of the fermion legs.
    pub fn beta(&self, x: &Matrix) -> Result<Matrix> {
        if self.depth == 0 {
            return Err(precondition("β maps into a chain of positive depth"));
        }
        let n = self.input_dim();
        let f = self.leg_dim();
        let rest = self.tail_dim(self.depth - 1);
        if x.shape() != (n * rest, n * rest) {
            return Err(shape("β expects an element of the chain one level shallower"));
        }
        let big = self.ambient_dim();
        let mut out = Matrix::zeros(big, big);
        let gens: Vec<Matrix> = (0..n).map(|i| self.rep.generator(i)).collect();
        // block (i, j) of d_1 S(x) d_1 is ω(e_i)ω(e_j) ⊗ x_ij
        for i in 0..n {
            for j in 0..n {
                let block = x.view((i * rest, j * rest), (rest, rest));
                let w = &gens[i] * &gens[j];
                for a in 0..f {
                    for b in 0..f {
                        let z = w[(a, b)];
                        if z == crate::C64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut dst = out.view_mut(((i * f + a) * rest, (j * f + b) * rest), (rest, rest));
                        dst += block * z;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `β^q`: from depth `N − q` into this chain.
    pub fn beta_power(&self, q: usize, x: &Matrix) -> Result<Matrix> {
        if q > self.depth {
            return Err(precondition("β power beyond chain depth"));
        }
        let mut y = x.clone();
        for k in (self.depth - q + 1)..=self.depth {
            y = self.with_depth(k)?.beta(&y)?;
        }
        Ok(y)
    }
}

/// Worst residual over the input matrix units of each embedding property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub unital: f64,
    pub multiplicative: f64,
    pub adjoint: f64,
    pub state: f64,
}

impl EmbeddingReport {
    pub fn max_residual(&self) -> f64 {
        self.unital.max(self.multiplicative).max(self.adjoint).max(self.state)
    }
}

/// `J_q` is a unital state-preserving *-homomorphism.
pub fn verify_embedding(chain: &ChainSpace, q: usize) -> Result<EmbeddingReport> {
    let n = chain.input_dim();
    let units = chain.unit_images(q)?;
    let mut rep = EmbeddingReport { unital: 0.0, multiplicative: 0.0, adjoint: 0.0, state: 0.0 };
    let one = chain.embed(q, &matcore::identity(n))?;
    rep.unital = (one - matcore::identity(chain.ambient_dim())).norm();
    for i in 0..n {
        for j in 0..n {
            let u = &units[i * n + j];
            rep.adjoint = rep.adjoint.max((u.adjoint() - &units[j * n + i]).norm());
            let want = if i == j { chain.state.weights()[i] } else { 0.0 };
            rep.state = rep.state.max((chain.ambient_state(u) - c(want)).norm());
            for k in 0..n {
                for l in 0..n {
                    let prod = u * &units[k * n + l];
                    let resid = if j == k { (prod - &units[i * n + l]).norm() } else { prod.norm() };
                    rep.multiplicative = rep.multiplicative.max(resid);
                }
            }
        }
    }
    Ok(rep)
}

/// `max_{ij} ‖β(J_q(e_ij)) − J_{q+1}(e_ij)‖_F` with `J_q` taken at depth
/// `N − 1` and `J_{q+1}` in this chain, plus `‖β(1) − 1‖_F`.
pub fn verify_beta_embedding(chain: &ChainSpace, q: usize) -> Result<f64> {
    if q + 1 > chain.depth {
        return Err(precondition("need q + 1 ≤ N"));
    }
    let n = chain.input_dim();
    let shallow = chain.with_depth(chain.depth - 1)?;
    let one = matcore::identity(shallow.ambient_dim());
    let mut worst = (chain.beta(&one)? - matcore::identity(chain.ambient_dim())).norm();
    for i in 0..n {
        for j in 0..n {
            let lhs = chain.beta(&shallow.embed_unit(q, i, j)?)?;
            worst = worst.max((lhs - chain.embed_unit(q + 1, i, j)?).norm());
        }
    }
    Ok(worst)
}

/// Residuals of the three Markov-chain identities for one `(n, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovReport {
    /// `E_{n]} ∘ J_q = J_n ∘ T^{q−n}`
    pub past: f64,
    /// `E_{[n} ∘ J_0 = J_n ∘ T^n`
    pub future: f64,
    /// `E_{n+q]} ∘ β^q = β^q ∘ E_{n]}` (when `n + q ≤ N`)
    pub shift: Option<f64>,
}

impl MarkovReport {
    pub fn max_residual(&self) -> f64 {
        self.past.max(self.future).max(self.shift.unwrap_or(0.0))
    }
}

pub fn verify_markov_property(chain: &ChainSpace, n: usize, q: usize) -> Result<MarkovReport> {
    if n > q || q > chain.depth {
        return Err(precondition(format!("need 0 ≤ n ≤ q ≤ N, got n={n}, q={q}, N={}", chain.depth)));
    }
    let dim = chain.input_dim();
    let past_e = chain.past(n)?;
    let future_e = chain.future(n)?;
    let (mut past, mut future) = (0.0_f64, 0.0_f64);
    for i in 0..dim {
        for j in 0..dim {
            let t = chain.symbol.get(i, j);
            let lhs = past_e.apply(&chain.embed_unit(q, i, j)?)?;
            let rhs = chain.embed_unit(n, i, j)? * t.powu((q - n) as u32);
            past = past.max((lhs - rhs).norm());

            let lhs = future_e.apply(&chain.embed_unit(0, i, j)?)?;
            let rhs = chain.embed_unit(n, i, j)? * t.powu(n as u32);
            future = future.max((lhs - rhs).norm());
        }
    }
    let shift = if n + q <= chain.depth { Some(verify_shift(chain, n, q)?) } else { None };
    Ok(MarkovReport { past, future, shift })
}

/// `max ‖E_{n+q]}(β^q(x)) − β^q(E_{n]}(x))‖_F` over a basis of the chain
/// algebra at depth `N − q`.
pub fn verify_shift(chain: &ChainSpace, n: usize, q: usize) -> Result<f64> {
    if n + q > chain.depth {
        return Err(precondition("need n + q ≤ N"));
    }
    let shallow_depth = chain.depth - q;
    let shallow = chain.with_depth(shallow_depth)?;
    let e_small = shallow.past(n)?;
    let e_big = chain.past(n + q)?;
    let algebra = shallow.generated(0..=shallow_depth)?;
    let mut worst = 0.0_f64;
    for x in algebra.basis() {
        let lhs = e_big.apply(&chain.beta_power(q, x)?)?;
        let rhs = chain.beta_power(q, &e_small.apply(x)?)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// `max_{ij} ‖J_0(T^{2n}(e_ij)) − E_{0]}(E_{[n}(J_0(e_ij)))‖_F`.
pub fn verify_rota(chain: &ChainSpace, n: usize) -> Result<f64> {
    if n == 0 || n > chain.depth {
        return Err(precondition(format!("Rota index must satisfy 1 ≤ n ≤ N, got n={n}, N={}", chain.depth)));
    }
    let dim = chain.input_dim();
    let e0 = chain.past(0)?;
    let en = chain.future(n)?;
    let mut worst = 0.0_f64;
    for i in 0..dim {
        for j in 0..dim {
            let j0 = chain.embed_unit(0, i, j)?;
            let lhs = &j0 * chain.symbol.get(i, j).powu(2 * n as u32);
            let rhs = e0.apply(&en.apply(&j0)?)?;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}
