//! Generated *-subalgebras of `M_n` and state-preserving conditional
//! expectations onto them.

use rand::Rng;
use serde::Serialize;

use crate::error::{precondition, shape, size, Error, Result};
use crate::matcore::{self, c, Matrix, Tolerances, Vector, C64};
use crate::sample;
use crate::state::DEFAULT_T_SAMPLES;

/// Relative norm below which a candidate is considered inside the span.
const SPAN_CUTOFF: f64 = 1e-8;

/// Hilbert-Schmidt orthonormal basis of a unital *-subalgebra of `M_n`.
#[derive(Debug, Clone)]
pub struct SubalgebraBasis {
    dim: usize,
    basis: Vec<Matrix>,
}

impl SubalgebraBasis {
    /// Ambient matrix size.
    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the subalgebra as a vector space.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    /// Hilbert-Schmidt orthogonal projection onto the span.
    pub fn project(&self, z: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.dim, self.dim);
        for b in &self.basis {
            out += b * matcore::hs_inner(b, z);
        }
        out
    }

    /// `‖z − P(z)‖_F`.
    pub fn distance(&self, z: &Matrix) -> f64 {
        (z - self.project(z)).norm()
    }

    /// Worst distance of a product of two basis elements from the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in &self.basis {
            for b in &self.basis {
                worst = worst.max(self.distance(&(a * b)));
            }
            worst = worst.max(self.distance(&a.adjoint()));
        }
        worst
    }

    /// A random element `Σ c_k b_k` with complex Gaussian coefficients.
    pub fn random_element<R: Rng>(&self, rng: &mut R) -> Matrix {
        let coeffs = sample::gaussian_complex(rng, self.basis.len(), 1);
        let mut out = Matrix::zeros(self.dim, self.dim);
        for (b, z) in self.basis.iter().zip(coeffs.iter()) {
            out += b * *z;
        }
        out
    }

    /// Orthonormalizes `z` against the basis and appends it if it is new.
    fn try_push(&mut self, z: &Matrix) -> bool {
        let scale = z.norm();
        if scale == 0.0 {
            return false;
        }
        let mut r = z.clone();
        for _ in 0..2 {
            let p = self.project(&r);
            r -= p;
        }
        let rn = r.norm();
        if rn <= SPAN_CUTOFF * scale {
            return false;
        }
        self.basis.push(r.unscale(rn));
        true
    }
}

/// Span of all words in `generators` and their adjoints, plus the identity.
///
/// `cap` bounds the basis size (default `n²`).
pub fn word_closure(dim: usize, generators: &[Matrix], cap: Option<usize>) -> Result<SubalgebraBasis> {
    if let Some(g) = generators.iter().find(|g| g.shape() != (dim, dim)) {
        return Err(shape(format!("generator {}x{} in M_{dim}", g.nrows(), g.ncols())));
    }
    let cap = cap.unwrap_or(dim * dim);
    let mut gens: Vec<Matrix> = Vec::with_capacity(2 * generators.len());
    for g in generators {
        gens.push(g.clone());
        if matcore::hermiticity_residual(g) > 0.0 {
            gens.push(g.adjoint());
        }
    }

    let mut alg = SubalgebraBasis { dim, basis: Vec::new() };
    let mut frontier = Vec::new();
    for z in std::iter::once(matcore::identity(dim)).chain(gens.iter().cloned()) {
        if alg.try_push(&z) {
            frontier.push(alg.basis.len() - 1);
        }
    }
    // A span containing 1 that is stable under right multiplication by the
    // generators contains every word.
    while let Some(k) = frontier.pop() {
        for g in &gens {
            let prod = &alg.basis[k] * g;
            if alg.try_push(&prod) {
                if alg.basis.len() > cap {
                    return Err(size(format!("subalgebra exceeds basis cap {cap}")));
                }
                frontier.push(alg.basis.len() - 1);
            }
        }
    }
    if alg.basis.len() > cap {
        return Err(size(format!("subalgebra exceeds basis cap {cap}")));
    }
    Ok(alg)
}

/// `ρ^{-it} x ρ^{it}` for a faithful density.
fn modular_flow(density: &Matrix, eig: &Option<(Vec<f64>, Matrix)>, x: &Matrix, t: f64) -> Matrix {
    match eig {
        None => {
            let d = density.diagonal();
            Matrix::from_fn(x.nrows(), x.ncols(), |i, j| {
                x[(i, j)] * C64::from_polar(1.0, -t * (d[i].re / d[j].re).ln())
            })
        }
        Some((w, v)) => {
            let phases = |s: f64| {
                let mut m = v.clone();
                for (k, &wk) in w.iter().enumerate() {
                    let p = C64::from_polar(1.0, s * wk.ln());
                    for z in m.column_mut(k).iter_mut() {
                        *z *= p;
                    }
                }
                m * v.adjoint()
            };
            phases(-t) * x * phases(t)
        }
    }
}

fn is_diagonal(m: &Matrix) -> bool {
    m.iter().enumerate().all(|(k, z)| k % (m.nrows() + 1) == 0 || *z == C64::new(0.0, 0.0))
}

/// The conditional expectation onto a subalgebra preserving a faithful
/// state, with the GNS Gram system prepared once.
#[derive(Debug, Clone)]
pub struct Expectation {
    density: Matrix,
    diagonal: bool,
    algebra: SubalgebraBasis,
    gram: Matrix,
    tol: Tolerances,
}

impl Expectation {
    pub fn new(density: &Matrix, algebra: &SubalgebraBasis, tol: &Tolerances) -> Result<Self> {
        let n = algebra.ambient_dim();
        if density.shape() != (n, n) {
            return Err(shape(format!("density {}x{} in M_{n}", density.nrows(), density.ncols())));
        }
        let diagonal = is_diagonal(density);
        let (w, eig) = if diagonal {
            (density.diagonal().iter().map(|z| z.re).collect::<Vec<_>>(), None)
        } else {
            let (w, v) = matcore::eig_hermitian(density, tol)?;
            (w.clone(), Some((w, v)))
        };
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > tol.psd) {
            return Err(precondition(format!("density is not faithful (min eigenvalue {min:e})")));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > tol.num * n as f64 {
            return Err(precondition(format!("density has trace {total}")));
        }

        let mut worst = 0.0_f64;
        for b in algebra.basis() {
            for &t in &DEFAULT_T_SAMPLES {
                worst = worst.max(algebra.distance(&modular_flow(density, &eig, b, t)));
            }
        }
        if worst > tol.num {
            return Err(Error::NotExpectation(worst));
        }

        let mut e = Self {
            density: density.clone(),
            diagonal,
            algebra: algebra.clone(),
            gram: Matrix::zeros(0, 0),
            tol: *tol,
        };
        let weighted: Vec<Matrix> = algebra.basis().iter().map(|b| e.times_density(b)).collect();
        let k = algebra.len();
        e.gram = Matrix::from_fn(k, k, |a, b| matcore::hs_inner(&algebra.basis()[a], &weighted[b]));
        Ok(e)
    }

    fn times_density(&self, x: &Matrix) -> Matrix {
        if self.diagonal {
            let mut out = x.clone();
            for (j, mut col) in out.column_iter_mut().enumerate() {
                col *= self.density[(j, j)];
            }
            out
        } else {
            x * &self.density
        }
    }

    pub fn algebra(&self) -> &SubalgebraBasis {
        &self.algebra
    }

    pub fn density(&self) -> &Matrix {
        &self.density
    }

    /// `tr(ρ x)`.
    pub fn state(&self, x: &Matrix) -> C64 {
        matcore::trace_of_product(&self.density, x)
    }

    /// The unique `E(x)` in the algebra with `tr(ρ a* E(x)) = tr(ρ a* x)`
    /// for every `a` in the algebra.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let n = self.algebra.ambient_dim();
        if x.shape() != (n, n) {
            return Err(shape(format!("expectation on M_{n} applied to {}x{}", x.nrows(), x.ncols())));
        }
        let xr = self.times_density(x);
        let rhs = Vector::from_iterator(
            self.algebra.len(),
            self.algebra.basis().iter().map(|b| matcore::hs_inner(b, &xr)),
        );
        let coeffs = matcore::solve_psd(&self.gram, &rhs, &self.tol)?;
        let mut out = Matrix::zeros(n, n);
        for (b, z) in self.algebra.basis().iter().zip(coeffs.iter()) {
            out += b * *z;
        }
        Ok(out)
    }
}

pub fn conditional_expectation(
    density: &Matrix,
    algebra: &SubalgebraBasis,
    x: &Matrix,
    tol: &Tolerances,
) -> Result<Matrix> {
    Expectation::new(density, algebra, tol)?.apply(x)
}

/// Largest observed violation of each conditional-expectation property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub idempotence: f64,
    pub bimodule: f64,
    /// `max(0, −λ_min(E(x*x)))`
    pub positivity: f64,
    pub state: f64,
}

impl ExpectationReport {
    pub fn max_residual(&self) -> f64 {
        self.idempotence.max(self.bimodule).max(self.positivity).max(self.state)
    }
}

pub fn verify_expectation<R: Rng>(
    density: &Matrix,
    algebra: &SubalgebraBasis,
    samples: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<ExpectationReport> {
    let e = Expectation::new(density, algebra, tol)?;
    let n = algebra.ambient_dim();
    let mut report = ExpectationReport { idempotence: 0.0, bimodule: 0.0, positivity: 0.0, state: 0.0 };
    for _ in 0..samples {
        let x = sample::gaussian_complex(rng, n, n);
        let ex = e.apply(&x)?;
        report.idempotence = report.idempotence.max((e.apply(&ex)? - &ex).norm());

        let a = algebra.random_element(rng);
        let b = algebra.random_element(rng);
        let lhs = e.apply(&(&a * &x * &b))?;
        report.bimodule = report.bimodule.max((lhs - &a * &ex * &b).norm());

        let exx = e.apply(&(x.adjoint() * &x))?;
        let herm = (&exx + exx.adjoint()).scale(0.5);
        let loose = Tolerances { num: f64::INFINITY, ..*tol };
        let min = matcore::min_eigenvalue(&herm, &loose)?;
        report.positivity = report.positivity.max((-min).max(0.0));

        report.state = report.state.max((e.state(&ex) - e.state(&x)).norm());
    }
    Ok(report)
}

/// Density `ρ` of the normalized trace on `M_n`.
pub fn tracial_density(n: usize) -> Matrix {
    matcore::identity(n) * c(1.0 / n as f64)
}
