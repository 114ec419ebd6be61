//! Markov dilations `(M̃, φ̃, π, ρ)` with `ρ = s π(·) s` for a symmetry `s`
//! in the centralizer of `φ̃`, and their numerical verification.

use rand::Rng;
use serde::Serialize;

use crate::condexp::{word_closure, SubalgebraBasis};
use crate::error::{precondition, shape, Error, Result};
use crate::fock::FermionRep;
use crate::matcore::{self, c, Matrix, Tolerances, C64};
use crate::sample;
use crate::schur::{build_gram_space, certify_symbol, SchurSymbol};
use crate::state::{star_adjoint, DiagonalState};

/// Number of random pairs added to the exhaustive basis-pair checks.
pub const DEFAULT_RANDOM_PAIRS: usize = 20;

/// The algebra being dilated, as a subspace of `M_n` with a linear basis.
#[derive(Debug, Clone)]
pub enum InputAlgebra {
    /// `M_n` with matrix units `e_ij`, indexed `i * n + j`.
    Full(usize),
    /// Span of the left-regular unitaries `λ(g)` on `ℓ²(G)`; the
    /// coordinate of `λ(g)` in `x` is `x[g, e]`.
    Group { elements: Vec<Matrix>, identity: usize },
}

impl InputAlgebra {
    pub fn dim(&self) -> usize {
        match self {
            InputAlgebra::Full(n) => *n,
            InputAlgebra::Group { elements, .. } => elements.len(),
        }
    }

    pub fn basis_len(&self) -> usize {
        match self {
            InputAlgebra::Full(n) => n * n,
            InputAlgebra::Group { elements, .. } => elements.len(),
        }
    }

    pub fn basis_element(&self, k: usize) -> Matrix {
        match self {
            InputAlgebra::Full(n) => matcore::matrix_unit(*n, k / n, k % n),
            InputAlgebra::Group { elements, .. } => elements[k].clone(),
        }
    }

    /// Coordinates of `x` in the basis; exact on the algebra.
    pub fn coords(&self, x: &Matrix) -> Vec<C64> {
        match self {
            InputAlgebra::Full(n) => (0..n * n).map(|k| x[(k / n, k % n)]).collect(),
            InputAlgebra::Group { elements, identity } => {
                (0..elements.len()).map(|g| x[(g, *identity)]).collect()
            }
        }
    }

    pub fn from_coords(&self, coords: &[C64]) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (k, z) in coords.iter().enumerate() {
            match self {
                InputAlgebra::Full(_) => out[(k / n, k % n)] += *z,
                InputAlgebra::Group { elements, .. } => out += &elements[k] * *z,
            }
        }
        out
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> Matrix {
        let z = sample::gaussian_complex(rng, self.basis_len(), 1);
        self.from_coords(z.as_slice())
    }
}

/// Finite-dimensional Markov dilation with diagonal densities.
#[derive(Debug, Clone)]
pub struct DilationBundle {
    input: InputAlgebra,
    input_weights: Vec<f64>,
    ambient_weights: Vec<f64>,
    symmetry: Matrix,
    pi_images: Vec<Matrix>,
    /// Fermion parity `±1` on each ambient basis vector, when meaningful.
    grading: Option<Vec<f64>>,
    /// Nonzero entries `(i, j, s_ij)` of the symmetry.
    sparse_symmetry: Vec<(usize, usize, C64)>,
}

fn diag_times(w: &[f64], x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= c(w[i]);
    }
    out
}

fn weighted_trace(w: &[f64], x: &Matrix) -> C64 {
    w.iter().enumerate().map(|(i, &wi)| x[(i, i)] * wi).sum()
}

/// `D^{-it} x D^{it}` for a diagonal density with weights `w`.
fn diag_modular(w: &[f64], x: &Matrix, t: f64) -> Matrix {
    Matrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        x[(i, j)] * C64::from_polar(1.0, -t * (w[i] / w[j]).ln())
    })
}

impl DilationBundle {
    /// Assembles a bundle, checking shapes and that both densities are
    /// faithful states.
    pub fn new(
        input: InputAlgebra,
        input_weights: Vec<f64>,
        ambient_weights: Vec<f64>,
        symmetry: Matrix,
        pi_images: Vec<Matrix>,
        grading: Option<Vec<f64>>,
    ) -> Result<Self> {
        let big = ambient_weights.len();
        if input_weights.len() != input.dim() {
            return Err(shape("input weights do not match the input algebra"));
        }
        if symmetry.shape() != (big, big) {
            return Err(shape("symmetry does not match the ambient dimension"));
        }
        if pi_images.len() != input.basis_len() || pi_images.iter().any(|p| p.shape() != (big, big)) {
            return Err(shape("π images do not match the input basis"));
        }
        if grading.as_ref().is_some_and(|g| g.len() != big) {
            return Err(shape("grading does not match the ambient dimension"));
        }
        for w in [&input_weights, &ambient_weights] {
            let total: f64 = w.iter().sum();
            if w.iter().any(|&x| !(x > 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(precondition("densities must be faithful states"));
            }
        }
        let sparse_symmetry = (0..big)
            .flat_map(|j| (0..big).map(move |i| (i, j)))
            .filter(|&(i, j)| symmetry[(i, j)] != C64::new(0.0, 0.0))
            .map(|(i, j)| (i, j, symmetry[(i, j)]))
            .collect();
        Ok(Self { input, input_weights, ambient_weights, symmetry, pi_images, grading, sparse_symmetry })
    }

    /// `z s`, using the sparsity of `s`.
    pub fn times_symmetry(&self, z: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(z.nrows(), self.ambient_dim());
        for &(i, j, v) in &self.sparse_symmetry {
            out.column_mut(j).axpy(v, &z.column(i), c(1.0));
        }
        out
    }

    /// `s z s`.
    pub fn conjugate_by_symmetry(&self, z: &Matrix) -> Matrix {
        // s is self-adjoint, so s·y = (y*·s)*.
        self.times_symmetry(&self.times_symmetry(z).adjoint()).adjoint()
    }

    pub fn input(&self) -> &InputAlgebra {
        &self.input
    }

    pub fn input_dim(&self) -> usize {
        self.input.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_weights.len()
    }

    pub fn input_density(&self) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.input_weights.len(),
            self.input_weights.iter().map(|&w| c(w)),
        ))
    }

    pub fn ambient_density(&self) -> Matrix {
        Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.ambient_weights.len(),
            self.ambient_weights.iter().map(|&w| c(w)),
        ))
    }

    pub fn ambient_weights(&self) -> &[f64] {
        &self.ambient_weights
    }

    pub fn symmetry(&self) -> &Matrix {
        &self.symmetry
    }

    pub fn pi_images(&self) -> &[Matrix] {
        &self.pi_images
    }

    pub fn grading(&self) -> Option<&[f64]> {
        self.grading.as_deref()
    }

    /// `φ(x)` on the input algebra.
    pub fn input_state(&self, x: &Matrix) -> C64 {
        weighted_trace(&self.input_weights, x)
    }

    /// `φ̃(z)` on the ambient algebra.
    pub fn ambient_state(&self, z: &Matrix) -> C64 {
        weighted_trace(&self.ambient_weights, z)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        let n = self.input.dim();
        if x.shape() != (n, n) {
            return Err(shape(format!("input {}x{} for an algebra in M_{n}", x.nrows(), x.ncols())));
        }
        Ok(())
    }

    pub fn pi(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let big = self.ambient_dim();
        let mut out = Matrix::zeros(big, big);
        for (img, z) in self.pi_images.iter().zip(self.input.coords(x)) {
            if z != C64::new(0.0, 0.0) {
                out += img * z;
            }
        }
        Ok(out)
    }

    /// `ρ(x) = s π(x) s`.
    pub fn rho(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.conjugate_by_symmetry(&self.pi(x)?))
    }

    /// `(‖s − s*‖_F, ‖s² − 1‖_F, ‖[s, D̃]‖_F)`.
    pub fn symmetry_residuals(&self) -> (f64, f64, f64) {
        let s = &self.symmetry;
        let big = self.ambient_dim();
        let herm = (s - s.adjoint()).norm();
        let square = (s * s - matcore::identity(big)).norm();
        let comm = Matrix::from_fn(big, big, |i, j| s[(i, j)] * (self.ambient_weights[j] - self.ambient_weights[i]));
        (herm, square, comm.norm())
    }

    /// `max ‖π(x) − ρ(x)‖_F` over the input basis.
    pub fn pi_rho_gap(&self) -> f64 {
        self.pi_images
            .iter()
            .map(|p| (p - self.conjugate_by_symmetry(p)).norm())
            .fold(0.0, f64::max)
    }

    /// Basis of the algebra generated by `π` and `ρ` of the input basis.
    pub fn generated_algebra(&self, cap: Option<usize>) -> Result<SubalgebraBasis> {
        let mut gens = self.pi_images.clone();
        gens.extend(self.pi_images.iter().map(|p| self.conjugate_by_symmetry(p)));
        word_closure(self.ambient_dim(), &gens, cap)
    }

    /// Largest odd component `‖z − γ(z)‖_F / 2` of the generated algebra's
    /// basis, where `γ` is the parity automorphism.
    pub fn odd_part_residual(&self, cap: Option<usize>) -> Result<f64> {
        let g = self
            .grading
            .as_ref()
            .ok_or_else(|| precondition("bundle carries no fermion grading"))?;
        let alg = self.generated_algebra(cap)?;
        Ok(alg
            .basis()
            .iter()
            .map(|z| {
                let flipped = Matrix::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * (g[i] * g[j]));
                (z - flipped).norm() / 2.0
            })
            .fold(0.0, f64::max))
    }
}

/// Dilation of a positive self-adjoint unital Schur multiplier: ambient
/// `M_n ⊗ Cl(ℓ_{2,T})` with state `φ ⊗ τ`, `π(x) = x ⊗ 1` and
/// `s = d = Σ_i e_ii ⊗ ω(e_i)`.
pub fn build_dilation(symbol: &SchurSymbol, state: &DiagonalState, tol: &Tolerances) -> Result<DilationBundle> {
    let n = symbol.dim();
    if state.dim() != n {
        return Err(shape(format!("symbol of size {n} with a state on M_{}", state.dim())));
    }
    let report = certify_symbol(symbol, tol);
    if !report.self_adjoint {
        return Err(precondition("dilation needs a real symmetric symbol"));
    }
    if !report.unital {
        return Err(precondition("dilation needs a unit diagonal"));
    }
    if !report.psd {
        return Err(Error::NotPsd(report.min_eigenvalue));
    }
    let space = build_gram_space(symbol, tol)?;
    let rep = FermionRep::new(&space)?;
    let f = rep.fock_dim();
    matcore::check_dim(n * f, "Schur dilation ambient space")?;

    let mut d = Matrix::zeros(n * f, n * f);
    for i in 0..n {
        let w = rep.generator(i);
        d.view_mut((i * f, i * f), (f, f)).copy_from(&w);
    }
    let ambient_weights = state
        .weights()
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l / f as f64, f))
        .collect();
    let one = matcore::identity(f);
    let pi_images = (0..n * n)
        .map(|k| matcore::tensor_product(&matcore::matrix_unit(n, k / n, k % n), &one))
        .collect::<Result<Vec<_>>>()?;
    let parity: Vec<f64> = (0..f).map(|s: usize| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let grading = (0..n).flat_map(|_| parity.iter().copied()).collect();
    DilationBundle::new(
        InputAlgebra::Full(n),
        state.weights().to_vec(),
        ambient_weights,
        d,
        pi_images,
        Some(grading),
    )
}

/// `max |φ(u(x) y) − φ̃(π(x) ρ(y))|` over all basis pairs and `random_pairs`
/// random pairs from the input algebra.
pub fn verify_factorization<R: Rng>(
    bundle: &DilationBundle,
    map: &dyn Fn(&Matrix) -> Result<Matrix>,
    random_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    let k = bundle.input.basis_len();
    let basis: Vec<Matrix> = (0..k).map(|i| bundle.input.basis_element(i)).collect();
    let images: Vec<Matrix> = basis.iter().map(map).collect::<Result<_>>()?;
    let lhs_left: Vec<Matrix> = images.iter().map(|u| diag_times(&bundle.input_weights, u)).collect();
    let rhs_left: Vec<Matrix> = bundle.pi_images.iter().map(|p| diag_times(&bundle.ambient_weights, p)).collect();
    let rhs_right: Vec<Matrix> = bundle.pi_images.iter().map(|p| bundle.conjugate_by_symmetry(p)).collect();

    let mut worst = 0.0_f64;
    for a in 0..k {
        for b in 0..k {
            let lhs = matcore::trace_of_product(&lhs_left[a], &basis[b]);
            let rhs = matcore::trace_of_product(&rhs_left[a], &rhs_right[b]);
            worst = worst.max((lhs - rhs).norm());
        }
    }
    for _ in 0..random_pairs {
        let x = bundle.input.random_element(rng);
        let y = bundle.input.random_element(rng);
        let lhs = bundle.input_state(&(map(&x)? * &y));
        let left = diag_times(&bundle.ambient_weights, &bundle.pi(&x)?);
        let rhs = matcore::trace_of_product(&left, &bundle.rho(&y)?);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// [`verify_factorization`] for the Schur multiplier `M_T`.
pub fn verify_schur_factorization<R: Rng>(
    bundle: &DilationBundle,
    symbol: &SchurSymbol,
    random_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    verify_factorization(bundle, &|x: &Matrix| symbol.apply(x), random_pairs, rng)
}

/// Worst violation of each Markov-morphism property, over `π` and `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MorphismReport {
    pub unital: f64,
    pub multiplicative: f64,
    pub adjoint: f64,
    pub state: f64,
    pub modular: f64,
}

impl MorphismReport {
    pub fn max_residual(&self) -> f64 {
        self.unital.max(self.multiplicative).max(self.adjoint).max(self.state).max(self.modular)
    }
}

pub fn verify_morphism_markov<R: Rng>(
    bundle: &DilationBundle,
    t_samples: &[f64],
    random_pairs: usize,
    rng: &mut R,
) -> Result<MorphismReport> {
    let n = bundle.input_dim();
    let big = bundle.ambient_dim();
    let mut rep = MorphismReport { unital: 0.0, multiplicative: 0.0, adjoint: 0.0, state: 0.0, modular: 0.0 };
    let maps: [&dyn Fn(&Matrix) -> Result<Matrix>; 2] = [&|x| bundle.pi(x), &|x| bundle.rho(x)];
    for f in maps {
        rep.unital = rep.unital.max((f(&matcore::identity(n))? - matcore::identity(big)).norm());
        for k in 0..bundle.input.basis_len() {
            let b = bundle.input.basis_element(k);
            let fb = f(&b)?;
            rep.state = rep.state.max((bundle.ambient_state(&fb) - bundle.input_state(&b)).norm());
            for &t in t_samples {
                let lhs = f(&diag_modular(&bundle.input_weights, &b, t))?;
                let rhs = diag_modular(&bundle.ambient_weights, &fb, t);
                rep.modular = rep.modular.max((lhs - rhs).norm());
            }
        }
        for _ in 0..random_pairs {
            let x = bundle.input.random_element(rng);
            let y = bundle.input.random_element(rng);
            let (fx, fy) = (f(&x)?, f(&y)?);
            rep.multiplicative = rep.multiplicative.max((f(&(&x * &y))? - &fx * &fy).norm());
            rep.adjoint = rep.adjoint.max((f(&x.adjoint())? - fx.adjoint()).norm());
        }
    }
    Ok(rep)
}

/// `max |φ(T★(y) x) − φ̃(ρ(y) π(x))|`, with `T★` computed from the
/// multiplier by GNS duality.
pub fn star_swap_check<R: Rng>(
    bundle: &DilationBundle,
    symbol: &SchurSymbol,
    state: &DiagonalState,
    random_pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    let star = star_adjoint(&symbol.to_markov_map(), state)?;
    let n = bundle.input_dim();
    let mut worst = 0.0_f64;
    let mut pairs: Vec<(Matrix, Matrix)> = Vec::new();
    for a in 0..n * n {
        for b in 0..n * n {
            pairs.push((bundle.input.basis_element(a), bundle.input.basis_element(b)));
        }
    }
    for _ in 0..random_pairs {
        pairs.push((bundle.input.random_element(rng), bundle.input.random_element(rng)));
    }
    for (x, y) in pairs {
        let lhs = bundle.input_state(&(star.apply(&y)? * &x));
        let rhs = bundle.ambient_state(&(bundle.rho(&y)? * bundle.pi(&x)?));
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Direct sum `⊕ M̃_i` with state `⊕ w_i φ̃_i`, dilating `Σ w_i u_i`.
pub fn convex_combination_dilation(bundles: &[DilationBundle], weights: &[f64]) -> Result<DilationBundle> {
    let first = bundles.first().ok_or_else(|| precondition("no bundles to combine"))?;
    if weights.len() != bundles.len() {
        return Err(precondition("one weight per bundle required"));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w > 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(precondition("weights must be positive and sum to 1"));
    }
    for b in bundles {
        if b.input.dim() != first.input.dim()
            || b.input.basis_len() != first.input.basis_len()
            || b.input_weights != first.input_weights
        {
            return Err(precondition("bundles must share the input algebra and state"));
        }
    }
    let ambient_weights = bundles
        .iter()
        .zip(weights)
        .flat_map(|(b, &w)| b.ambient_weights.iter().map(move |&a| a * w))
        .collect();
    let symmetry = matcore::direct_sum(&bundles.iter().map(|b| b.symmetry.clone()).collect::<Vec<_>>());
    let pi_images = (0..first.input.basis_len())
        .map(|k| matcore::direct_sum(&bundles.iter().map(|b| b.pi_images[k].clone()).collect::<Vec<_>>()))
        .collect();
    let grading = bundles
        .iter()
        .map(|b| b.grading.clone())
        .collect::<Option<Vec<_>>>()
        .map(|gs| gs.concat());
    DilationBundle::new(
        first.input.clone(),
        first.input_weights.clone(),
        ambient_weights,
        symmetry,
        pi_images,
        grading,
    )
}
