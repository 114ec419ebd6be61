//! q-Fock spaces over finite-dimensional real Hilbert spaces.
//!
//! For `-1 < q < 1` only Fock-level objects are built (Gram matrices and
//! creation operators on a particle-capped space). At `q = -1` the full
//! fermion algebra is realized on the `2^r`-dimensional antisymmetric Fock
//! space with basis `e_S`, `S ⊆ {0..r}` encoded as a bitmask, where
//! `e_S = f_{i_1} ∧ ... ∧ f_{i_k}` for `i_1 < ... < i_k`.

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{precondition, shape, size, Error, Result};
use crate::matcore::{self, c, Matrix, Tolerances, Vector, C64};
use crate::schur::GramSpace;
use crate::state::MarkovMap;

/// Longest word `q_gram` will expand (`8! = 40320` permutations).
pub const MAX_WORD_LEN: usize = 8;
/// Largest base dimension of a fermion representation.
pub const FERMION_RANK_CAP: usize = 12;
/// Default particle cap of a truncated q-Fock space.
pub const DEFAULT_PARTICLE_CAP: usize = 4;

/// A simple tensor `k_1 ⊗ ... ⊗ k_n`; the empty word is the vacuum.
#[derive(Debug, Clone, PartialEq)]
pub struct QWord {
    dim: usize,
    letters: Vec<Vec<f64>>,
}

impl QWord {
    pub fn vacuum(dim: usize) -> Self {
        Self { dim, letters: Vec::new() }
    }

    pub fn new(dim: usize, letters: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = letters.iter().find(|l| l.len() != dim) {
            return Err(shape(format!("letter of length {} in a word over ℝ^{dim}", bad.len())));
        }
        Ok(Self { dim, letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn letters(&self) -> &[Vec<f64>] {
        &self.letters
    }
}

/// `l(e)`: prepends `e` to the word.
pub fn creation_apply(word: &QWord, e: &[f64]) -> Result<QWord> {
    if e.len() != word.dim {
        return Err(shape(format!("creating a vector of length {} on words over ℝ^{}", e.len(), word.dim)));
    }
    let mut letters = Vec::with_capacity(word.len() + 1);
    letters.push(e.to_vec());
    letters.extend(word.letters.iter().cloned());
    Ok(QWord { dim: word.dim, letters })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inversions(perm: &[usize]) -> i32 {
    let mut count = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                count += 1;
            }
        }
    }
    count
}

fn check_q(q: f64) -> Result<()> {
    if !(-1.0..1.0).contains(&q) {
        return Err(precondition(format!("q = {q} outside [-1, 1)")));
    }
    Ok(())
}

/// Gram matrix of `words` under the q-deformed inner product
/// `Σ_σ q^{inv(σ)} Π_i ⟨k_i, h_{σ(i)}⟩`. Words of different lengths are
/// orthogonal.
pub fn q_gram(words: &[QWord], q: f64) -> Result<Matrix> {
    check_q(q)?;
    if let Some(w) = words.iter().find(|w| w.len() > MAX_WORD_LEN) {
        return Err(size(format!("word of length {} exceeds {MAX_WORD_LEN}", w.len())));
    }
    if let Some(w) = words.first() {
        if words.iter().any(|v| v.dim != w.dim) {
            return Err(shape("words over different base spaces"));
        }
    }
    let n = words.len();
    let mut g = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let value = q_inner(&words[a], &words[b], q);
            g[(a, b)] = c(value);
            g[(b, a)] = c(value);
        }
    }
    Ok(g)
}

fn q_inner(k: &QWord, h: &QWord, q: f64) -> f64 {
    if k.len() != h.len() {
        return 0.0;
    }
    let n = k.len();
    if n == 0 {
        return 1.0;
    }
    let pairing: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dot(&k.letters[i], &h.letters[j])).collect())
        .collect();
    (0..n)
        .permutations(n)
        .map(|perm| {
            let prod: f64 = perm.iter().enumerate().map(|(i, &s)| pairing[i][s]).product();
            q.powi(inversions(&perm)) * prod
        })
        .sum()
}

#[inline]
fn below(mask: usize, k: usize) -> u32 {
    (mask & ((1usize << k) - 1)).count_ones()
}

#[inline]
fn parity_sign(count: u32) -> f64 {
    if count % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Fermion (`q = -1`) algebra over `ℓ_{2,T}` realized on `Λ(ℝ^r)`.
#[derive(Debug, Clone)]
pub struct FermionRep {
    rank: usize,
    creation: Vec<Matrix>,
    fields: Vec<Matrix>,
    generators: DMatrix<f64>,
}

impl FermionRep {
    pub fn new(space: &GramSpace) -> Result<Self> {
        let r = space.rank();
        if r > FERMION_RANK_CAP {
            return Err(size(format!("fermion rank {r} exceeds {FERMION_RANK_CAP}")));
        }
        let dim = 1usize << r;
        matcore::check_dim(dim, "fermion Fock space")?;
        let creation: Vec<Matrix> = (0..r)
            .map(|k| {
                let mut l = Matrix::zeros(dim, dim);
                for s in 0..dim {
                    if s & (1 << k) == 0 {
                        l[(s | (1 << k), s)] = c(parity_sign(below(s, k)));
                    }
                }
                l
            })
            .collect();
        let fields = creation.iter().map(|l| l + l.adjoint()).collect();
        Ok(Self { rank: r, creation, fields, generators: space.embedding().clone() })
    }

    /// Fermions over `ℝ^d` with the standard basis as generators.
    pub fn standard(d: usize) -> Result<Self> {
        Self::new(&GramSpace::standard(d))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn fock_dim(&self) -> usize {
        1 << self.rank
    }

    /// `l(f_k)`.
    pub fn creation(&self, k: usize) -> &Matrix {
        &self.creation[k]
    }

    /// `ω(f_k) = l(f_k) + l(f_k)*`.
    pub fn field(&self, k: usize) -> &Matrix {
        &self.fields[k]
    }

    fn check_vec(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.rank {
            return Err(shape(format!("vector of length {} in a rank-{} space", v.len(), self.rank)));
        }
        Ok(())
    }

    /// `l(v) = Σ_k v_k l(f_k)`.
    pub fn creation_of(&self, v: &[f64]) -> Result<Matrix> {
        self.check_vec(v)?;
        let mut acc = Matrix::zeros(self.fock_dim(), self.fock_dim());
        for (k, &vk) in v.iter().enumerate() {
            acc += self.creation[k].scale(vk);
        }
        Ok(acc)
    }

    /// `ω(v) = Σ_k v_k ω(f_k)`.
    pub fn omega(&self, v: &[f64]) -> Result<Matrix> {
        self.check_vec(v)?;
        let mut acc = Matrix::zeros(self.fock_dim(), self.fock_dim());
        for (k, &vk) in v.iter().enumerate() {
            acc += self.fields[k].scale(vk);
        }
        Ok(acc)
    }

    pub fn generator_count(&self) -> usize {
        self.generators.nrows()
    }

    /// Coordinates of the `i`-th generator of the underlying Gram space.
    pub fn generator_vector(&self, i: usize) -> Vec<f64> {
        self.generators.row(i).iter().copied().collect()
    }

    /// `ω(e_i)` for the `i`-th generator.
    pub fn generator(&self, i: usize) -> Matrix {
        self.omega(&self.generator_vector(i)).expect("generator rows have rank length")
    }

    pub fn vacuum(&self) -> Vector {
        let mut v = Vector::zeros(self.fock_dim());
        v[0] = c(1.0);
        v
    }

    /// `τ(x) = ⟨Ω, xΩ⟩`.
    pub fn vacuum_state(&self, x: &Matrix) -> C64 {
        x[(0, 0)]
    }

    /// `x·Ω`.
    pub fn apply_to_vacuum(&self, x: &Matrix) -> Vector {
        x.column(0).into_owned()
    }

    /// `‖l(f)* l(e) + l(e) l(f)* − ⟨f,e⟩ 1‖_F`.
    pub fn car_residual(&self, e: &[f64], f: &[f64]) -> Result<f64> {
        let le = self.creation_of(e)?;
        let lf = self.creation_of(f)?;
        let lhs = lf.adjoint() * &le + &le * lf.adjoint();
        Ok((lhs - matcore::identity(self.fock_dim()).scale(dot(f, e))).norm())
    }

    /// `ω(f_k) e_S = (−1)^{#{j ∈ S : j < k}} e_{S △ {k}}`.
    fn field_on_basis(k: usize, mask: usize) -> (f64, usize) {
        (parity_sign(below(mask, k)), mask ^ (1 << k))
    }

    /// Sparse form of `W_S`: entry `t` is `(row, sign)` of the single
    /// nonzero in column `t`.
    fn wick_entries(&self, subset: usize) -> Vec<(usize, f64)> {
        let letters: Vec<usize> = (0..self.rank).filter(|k| subset & (1 << k) != 0).collect();
        (0..self.fock_dim())
            .map(|t| {
                let (mut sign, mut mask) = (1.0, t);
                for &k in letters.iter().rev() {
                    let (s, m) = Self::field_on_basis(k, mask);
                    sign *= s;
                    mask = m;
                }
                (mask, sign)
            })
            .collect()
    }

    /// The ordered Wick word `W_S = ω(f_{i_1}) ⋯ ω(f_{i_k})`, a signed
    /// permutation matrix.
    pub fn wick_word(&self, subset: usize) -> Matrix {
        let dim = self.fock_dim();
        let mut w = Matrix::zeros(dim, dim);
        for (t, (row, sign)) in self.wick_entries(subset).into_iter().enumerate() {
            w[(row, t)] = c(sign);
        }
        w
    }

    /// The unique `x` in the span of ordered Wick words with `x·Ω = xi`.
    ///
    /// In the orthonormal wedge basis `W_S Ω = ±e_S`, so the graded
    /// triangular system is diagonal.
    pub fn wick_inverse(&self, xi: &Vector) -> Result<Matrix> {
        let dim = self.fock_dim();
        if xi.len() != dim {
            return Err(shape(format!("Fock vector of length {} for dimension {dim}", xi.len())));
        }
        let mut x = Matrix::zeros(dim, dim);
        for s in 0..dim {
            if xi[s] == C64::new(0.0, 0.0) {
                continue;
            }
            let entries = self.wick_entries(s);
            let (lead_row, lead_sign) = entries[0];
            if lead_row != s {
                return Err(Error::Internal(format!("Wick word {s:#b} has no leading term")));
            }
            let coeff = xi[s] * lead_sign;
            for (t, (row, sign)) in entries.into_iter().enumerate() {
                x[(row, t)] += coeff * sign;
            }
        }
        Ok(x)
    }

    /// Trace-preserving conditional expectation of `M_{2^r}` onto the
    /// Clifford algebra spanned by the Wick words.
    pub fn clifford_expectation(&self, x: &Matrix) -> Result<Matrix> {
        let dim = self.fock_dim();
        if x.shape() != (dim, dim) {
            return Err(shape("clifford_expectation: wrong size"));
        }
        let coords = self.wick_coordinates(x);
        let mut out = Matrix::zeros(dim, dim);
        for s in 0..dim {
            if coords[s] == C64::new(0.0, 0.0) {
                continue;
            }
            for (t, (row, sign)) in self.wick_entries(s).into_iter().enumerate() {
                out[(row, t)] += coords[s] * sign;
            }
        }
        Ok(out)
    }

    /// Coordinates of a Clifford element in the Wick basis, `τ(W_S* x)`.
    pub fn wick_coordinates(&self, x: &Matrix) -> Vector {
        let dim = self.fock_dim();
        Vector::from_iterator(
            dim,
            (0..dim).map(|s| {
                let sum: C64 = self
                    .wick_entries(s)
                    .into_iter()
                    .enumerate()
                    .map(|(t, (row, sign))| x[(row, t)] * sign)
                    .sum();
                sum / dim as f64
            }),
        )
    }
}

/// `⊕_k Λ^k T` on wedge bases: the `(S', S)` entry is `det T[S', S]`.
pub fn exterior_power(t: &DMatrix<f64>) -> Result<Matrix> {
    let (rows, cols) = t.shape();
    if rows > FERMION_RANK_CAP || cols > FERMION_RANK_CAP {
        return Err(size("exterior power beyond the fermion rank cap"));
    }
    let (dout, din) = (1usize << rows, 1usize << cols);
    let mut out = Matrix::zeros(dout, din);
    for s in 0..din {
        let cs: Vec<usize> = (0..cols).filter(|k| s & (1 << k) != 0).collect();
        for sp in 0..dout {
            if sp.count_ones() as usize != cs.len() {
                continue;
            }
            let rs: Vec<usize> = (0..rows).filter(|k| sp & (1 << k) != 0).collect();
            let sub = DMatrix::from_fn(rs.len(), cs.len(), |a, b| t[(rs[a], cs[b])]);
            out[(sp, s)] = c(if rs.is_empty() { 1.0 } else { sub.determinant() });
        }
    }
    Ok(out)
}

/// Second quantization `Γ(T): Γ_{-1}(K) → Γ_{-1}(L)` of a real contraction.
#[derive(Debug, Clone)]
pub struct SecondQuantized {
    rep_in: FermionRep,
    rep_out: FermionRep,
    fock_map: Matrix,
    wick_matrix: std::cell::OnceCell<Matrix>,
}

/// Builds `Γ(T)(x) = ω_L^{-1}(F(T)·xΩ)` where `F(T) = ⊕ Λ^k T`.
pub fn second_quantize(
    rep_in: &FermionRep,
    rep_out: &FermionRep,
    t: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<SecondQuantized> {
    if t.shape() != (rep_out.rank(), rep_in.rank()) {
        return Err(shape(format!(
            "contraction {}x{} between ranks {} and {}",
            t.nrows(),
            t.ncols(),
            rep_in.rank(),
            rep_out.rank()
        )));
    }
    let norm = matcore::real_spectral_norm(t);
    if norm > 1.0 + tol.num {
        return Err(precondition(format!("not a contraction: norm {norm}")));
    }
    let fock_map = exterior_power(t)?;
    Ok(SecondQuantized {
        rep_in: rep_in.clone(),
        rep_out: rep_out.clone(),
        fock_map,
        wick_matrix: std::cell::OnceCell::new(),
    })
}

impl SecondQuantized {
    /// Fock-level map `F(T)`.
    pub fn fock_map(&self) -> &Matrix {
        &self.fock_map
    }

    /// Matrix of `Γ(T)` in the Wick-word bases of the two algebras,
    /// computed on first use.
    pub fn wick_matrix(&self) -> &Matrix {
        self.wick_matrix.get_or_init(|| {
            let din = self.rep_in.fock_dim();
            let mut wick = Matrix::zeros(self.rep_out.fock_dim(), din);
            for s in 0..din {
                let image = self.apply(&self.rep_in.wick_word(s)).expect("Wick words have the input size");
                wick.set_column(s, &self.rep_out.wick_coordinates(&image));
            }
            wick
        })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let din = self.rep_in.fock_dim();
        if x.shape() != (din, din) {
            return Err(shape("Γ(T) applied to an operator of the wrong size"));
        }
        let xi = &self.fock_map * self.rep_in.apply_to_vacuum(x);
        self.rep_out.wick_inverse(&xi)
    }

    /// `Γ(self) ∘ Γ(other)` in Wick coordinates.
    pub fn compose_wick(&self, other: &SecondQuantized) -> Result<Matrix> {
        if other.rep_out.rank() != self.rep_in.rank() {
            return Err(shape("composing second quantizations with mismatched ranks"));
        }
        Ok(self.wick_matrix() * other.wick_matrix())
    }

    /// `Γ(T) ∘ E_Cl` as a map on all of `M_{2^r}` (endomorphisms only).
    ///
    /// Complete positivity of this extension is equivalent to complete
    /// positivity of `Γ(T)` on the Clifford algebra.
    pub fn to_markov_map(&self) -> Result<MarkovMap> {
        if self.rep_in.rank() != self.rep_out.rank() {
            return Err(shape("only endomorphisms extend to a map on one matrix algebra"));
        }
        let dim = self.rep_in.fock_dim();
        MarkovMap::try_from_fn(dim, |x| self.apply(&self.rep_in.clifford_expectation(x)?))
    }
}

/// Particle-capped q-Fock space over `ℝ^d` for `-1 < q < 1`, in the basis of
/// words in the standard basis (degree by degree, lexicographic).
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    d: usize,
    q: f64,
    cap: usize,
    offsets: Vec<usize>,
    gram: DMatrix<f64>,
}

impl TruncatedFock {
    pub fn new(d: usize, q: f64, cap: usize) -> Result<Self> {
        check_q(q)?;
        if q <= -1.0 {
            return Err(precondition("q = -1 uses FermionRep"));
        }
        if cap > MAX_WORD_LEN {
            return Err(size(format!("particle cap {cap} exceeds {MAX_WORD_LEN}")));
        }
        let mut offsets = vec![0];
        for k in 0..=cap {
            offsets.push(offsets[k] + d.pow(k as u32));
        }
        let total = offsets[cap + 1];
        matcore::check_dim(total, "truncated Fock space")?;
        let mut gram = DMatrix::zeros(total, total);
        for k in 0..=cap {
            let words: Vec<QWord> = (0..d.pow(k as u32)).map(|idx| Self::word_of(d, k, idx)).collect();
            let block = q_gram(&words, q)?;
            for a in 0..words.len() {
                for b in 0..words.len() {
                    gram[(offsets[k] + a, offsets[k] + b)] = block[(a, b)].re;
                }
            }
        }
        Ok(Self { d, q, cap, offsets, gram })
    }

    fn word_of(d: usize, k: usize, mut idx: usize) -> QWord {
        let mut letters = vec![vec![0.0; d]; k];
        for pos in (0..k).rev() {
            letters[pos][idx % d] = 1.0;
            idx /= d;
        }
        QWord { dim: d, letters }
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.cap + 1]
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `l(e)` in the word basis; degree `cap` is sent to zero.
    pub fn creation(&self, e: &[f64]) -> Result<DMatrix<f64>> {
        if e.len() != self.d {
            return Err(shape("creation vector has the wrong length"));
        }
        let mut l = DMatrix::zeros(self.dim(), self.dim());
        for k in 0..self.cap {
            let block = self.d.pow(k as u32);
            for idx in 0..block {
                for (a, &ea) in e.iter().enumerate() {
                    // prepending letter a: new index a·d^k + idx
                    l[(self.offsets[k + 1] + a * block + idx, self.offsets[k] + idx)] += ea;
                }
            }
        }
        Ok(l)
    }

    /// Adjoint of `l(f)` for the q-inner product, `G⁻¹ l(f)ᵀ G`.
    pub fn annihilation(&self, f: &[f64]) -> Result<DMatrix<f64>> {
        let l = self.creation(f)?;
        let ginv = self
            .gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Internal("q-Gram matrix is singular".into()))?;
        Ok(ginv * l.transpose() * &self.gram)
    }

    /// `‖l(f)* l(e) − q l(e) l(f)* − ⟨f,e⟩ 1‖_F` on degrees below the cap,
    /// measured in an orthonormal basis.
    pub fn relation_residual(&self, e: &[f64], f: &[f64]) -> Result<f64> {
        let le = self.creation(e)?;
        let lf_star = self.annihilation(f)?;
        let r = &lf_star * &le - (&le * &lf_star) * self.q
            - DMatrix::identity(self.dim(), self.dim()) * dot(f, e);
        let tol = Tolerances::default();
        let g = matcore::from_real(&self.gram);
        let half = matcore::hermitian_sqrt(&g, &tol)?;
        let half_inv = matcore::hermitian_function(&g, &tol, |x| c(1.0 / x.max(f64::MIN_POSITIVE).sqrt()))?;
        let ortho = &half * matcore::from_real(&r) * half_inv;
        let keep = self.offsets[self.cap];
        Ok(ortho.view((0, 0), (keep, keep)).norm())
    }
}

/// Where a q-relation is checked.
#[derive(Debug, Clone, Copy)]
pub enum QSpace<'a> {
    Fermion(&'a FermionRep),
    Truncated(&'a TruncatedFock),
}

pub fn verify_q_relation(space: QSpace<'_>, e: &[f64], f: &[f64]) -> Result<f64> {
    match space {
        QSpace::Fermion(rep) => rep.car_residual(e, f),
        QSpace::Truncated(fock) => fock.relation_residual(e, f),
    }
}
