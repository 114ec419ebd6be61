//! Finite groups, positive-definite functions and the crossed-product
//! dilation of Fourier multipliers `λ(g) ↦ t_g λ(g)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::dilation::{verify_factorization, DilationBundle, InputAlgebra};
use crate::error::{precondition, shape, size, Error, Result};
use crate::fock::{exterior_power, FermionRep};
use crate::matcore::{self, c, Matrix, Tolerances};
use crate::sample;
use crate::schur::{build_gram_space, certify_symbol, GramSpace, SchurSymbol, SymbolReport};

pub const MAX_GROUP_ORDER: usize = 24;

/// A finite group given by its Cayley table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

impl FiniteGroup {
    /// Validates a multiplication table `table[g][h] = gh`.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let m = table.len();
        if m == 0 {
            return Err(precondition("empty group table"));
        }
        if m > MAX_GROUP_ORDER {
            return Err(size(format!("group order {m} exceeds {MAX_GROUP_ORDER}")));
        }
        if table.iter().any(|row| row.len() != m || row.iter().any(|&x| x >= m)) {
            return Err(precondition("group table must be square with entries below the order"));
        }
        for k in 0..m {
            let mut row_seen = vec![false; m];
            let mut col_seen = vec![false; m];
            for j in 0..m {
                row_seen[table[k][j]] = true;
                col_seen[table[j][k]] = true;
            }
            if row_seen.contains(&false) || col_seen.contains(&false) {
                return Err(precondition("group table is not a Latin square"));
            }
        }
        let identity = (0..m)
            .find(|&e| (0..m).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| precondition("group table has no identity"))?;
        for a in 0..m {
            for b in 0..m {
                for x in 0..m {
                    if table[table[a][b]][x] != table[a][table[b][x]] {
                        return Err(precondition(format!("group table is not associative at ({a},{b},{x})")));
                    }
                }
            }
        }
        let inverse = (0..m)
            .map(|g| (0..m).find(|&h| table[g][h] == identity).expect("Latin square row hits identity"))
            .collect();
        Ok(Self { table, inverse, identity })
    }

    pub fn cyclic(m: usize) -> Result<Self> {
        Self::from_table((0..m).map(|a| (0..m).map(|b| (a + b) % m).collect()).collect())
    }

    /// Dihedral group of order `2m`; element `k + m·b` is `r^k s^b`.
    pub fn dihedral(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(precondition("dihedral group needs m ≥ 1"));
        }
        let n = 2 * m;
        let table = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| {
                        let (a, b) = (x % m, x / m);
                        let (cc, d) = (y % m, y / m);
                        let k = if b == 0 { (a + cc) % m } else { (a + m - cc) % m };
                        k + m * ((b + d) % 2)
                    })
                    .collect()
            })
            .collect();
        Self::from_table(table)
    }

    /// Permutations of three points under composition `(στ)(i) = σ(τ(i))`.
    pub fn s3() -> Result<Self> {
        let perms: Vec<[usize; 3]> =
            vec![[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("closed under composition");
        let table = perms
            .iter()
            .map(|s| perms.iter().map(|t| index([s[t[0]], s[t[1]], s[t[2]]])).collect())
            .collect();
        Self::from_table(table)
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }
}

/// Left-regular representation: `λ(g) δ_h = δ_{gh}`.
pub fn build_group_algebra(group: &FiniteGroup) -> Vec<Matrix> {
    let m = group.order();
    (0..m)
        .map(|g| {
            let mut l = Matrix::zeros(m, m);
            for h in 0..m {
                l[(group.mul(g, h), h)] = c(1.0);
            }
            l
        })
        .collect()
}

/// Coefficients `t_g` of the Fourier multiplier `λ(g) ↦ t_g λ(g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSymbol {
    group: FiniteGroup,
    coeffs: Vec<f64>,
}

impl FourierSymbol {
    pub fn new(group: FiniteGroup, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != group.order() {
            return Err(shape(format!("{} coefficients for a group of order {}", coeffs.len(), group.order())));
        }
        if coeffs.iter().any(|t| !t.is_finite()) {
            return Err(precondition("symbol coefficients must be finite"));
        }
        Ok(Self { group, coeffs })
    }

    /// `t = δ_e`.
    pub fn identity_indicator(group: FiniteGroup) -> Self {
        let mut coeffs = vec![0.0; group.order()];
        coeffs[group.identity()] = 1.0;
        Self { group, coeffs }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(t_{h⁻¹g})_{h,g}`, the Gram matrix of `ℓ_{2,t}`.
    pub fn gram_symbol(&self) -> SchurSymbol {
        let g = &self.group;
        let m = g.order();
        let t = DMatrix::from_fn(m, m, |h, k| self.coeffs[g.mul(g.inv(h), k)]);
        SchurSymbol::from_real(&t).expect("finite square")
    }

    /// `(t_{ab⁻¹})_{a,b}`: the Schur multiplier on `M_m` whose restriction
    /// to the group algebra is the Fourier multiplier.
    pub fn regular_schur_symbol(&self) -> SchurSymbol {
        let g = &self.group;
        let m = g.order();
        let t = DMatrix::from_fn(m, m, |a, b| self.coeffs[g.mul(a, g.inv(b))]);
        SchurSymbol::from_real(&t).expect("finite square")
    }

    /// `Σ_g t_g x[g, e] λ(g)` on the span of the `λ(g)`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let m = self.group.order();
        if x.shape() != (m, m) {
            return Err(shape("Fourier multiplier applied to an operator of the wrong size"));
        }
        let e = self.group.identity();
        let mut out = Matrix::zeros(m, m);
        for g in 0..m {
            let z = x[(g, e)] * self.coeffs[g];
            for h in 0..m {
                out[(self.group.mul(g, h), h)] += z;
            }
        }
        Ok(out)
    }
}

/// Positive definiteness, `t_e = 1` and `t_g = t_{g⁻¹}`, read off the Gram
/// symbol.
pub fn certify_posdef(symbol: &FourierSymbol, tol: &Tolerances) -> SymbolReport {
    certify_symbol(&symbol.gram_symbol(), tol)
}

/// A random unital positive-definite function: a convex mix of a diagonal
/// coefficient `⟨ξ, λ(g) ξ⟩` of a random real unit vector and `δ_e`.
pub fn random_posdef<R: Rng>(rng: &mut R, group: &FiniteGroup) -> FourierSymbol {
    let m = group.order();
    let mut xi = sample::gaussian_real(rng, m, 1);
    xi /= xi.norm();
    let mix = 0.5 * rng.random::<f64>();
    let coeffs = (0..m)
        .map(|g| {
            let diag: f64 = (0..m).map(|h| xi[group.mul(g, h)] * xi[h]).sum();
            let delta = if g == group.identity() { 1.0 } else { 0.0 };
            (1.0 - mix) * diag + mix * delta
        })
        .collect();
    FourierSymbol { group: group.clone(), coeffs }
}

/// The crossed-product dilation on `Λ(ℓ_{2,t}) ⊗ ℓ²(G)`.
#[derive(Debug, Clone)]
pub struct CrossedDilation {
    bundle: DilationBundle,
    rep: FermionRep,
    space: GramSpace,
    actions: Vec<DMatrix<f64>>,
    fock_actions: Vec<Matrix>,
}

impl CrossedDilation {
    pub fn bundle(&self) -> &DilationBundle {
        &self.bundle
    }

    pub fn fermions(&self) -> &FermionRep {
        &self.rep
    }

    pub fn gram_space(&self) -> &GramSpace {
        &self.space
    }

    /// `α(g)` on `ℓ_{2,t}` in the orthonormal basis.
    pub fn action(&self, g: usize) -> &DMatrix<f64> {
        &self.actions[g]
    }

    /// `F(α(g))`, the Fock-space unitary implementing `α(g)`.
    pub fn fock_action(&self, g: usize) -> &Matrix {
        &self.fock_actions[g]
    }

    /// `max_{g,h} ‖π(λ(g)) (ω(ĥ)⊗1) π(λ(g))* − ω(ĝh)⊗1‖_F`.
    ///
    /// With `π(λ(g)) = F(α(g)) ⊗ λ(g)` the conjugation acts on the Fock
    /// factor only, so the ambient norm is `√m` times the Fock norm.
    pub fn covariance_residual(&self, group: &FiniteGroup) -> Result<f64> {
        let m = group.order();
        let fields: Vec<Matrix> = (0..m).map(|h| self.rep.generator(h)).collect();
        let mut worst = 0.0_f64;
        for g in 0..m {
            let u = &self.fock_actions[g];
            for h in 0..m {
                let lhs = u * &fields[h] * u.adjoint();
                worst = worst.max((lhs - &fields[group.mul(g, h)]).norm());
            }
        }
        Ok(worst * (m as f64).sqrt())
    }

    /// `max |⟨Ω⊗δ_e, z Ω⊗δ_e⟩ − φ̃(z)|` over `z = π(λ(g))ρ(λ(h))`: the
    /// vector state and the normalized trace agree on the crossed product.
    pub fn vector_state_residual(&self, group: &FiniteGroup) -> Result<f64> {
        let m = group.order();
        let e = group.identity();
        let b = &self.bundle;
        let scale = c(1.0 / b.ambient_dim() as f64);
        let rho: Vec<Matrix> = b.pi_images().iter().map(|p| b.conjugate_by_symmetry(p)).collect();
        let mut worst = 0.0_f64;
        for g in 0..m {
            let pg = &b.pi_images()[g];
            let row = pg.row(e);
            for rh in &rho {
                let vec_state = (row * rh.column(e))[(0, 0)];
                let trace_state = matcore::trace_of_product(pg, rh) * scale;
                worst = worst.max((vec_state - trace_state).norm());
            }
        }
        Ok(worst)
    }
}

/// Builds `π(λ(g)) = F(α(g)) ⊗ λ(g)` and `W = ω(ê) ⊗ 1` with the normalized
/// trace on `M_{2^r} ⊗ M_m`.
pub fn build_crossed_dilation(symbol: &FourierSymbol, tol: &Tolerances) -> Result<CrossedDilation> {
    let group = &symbol.group;
    let m = group.order();
    let report = certify_posdef(symbol, tol);
    if !report.self_adjoint {
        return Err(precondition("symbol must satisfy t_g = t_{g⁻¹} ∈ ℝ"));
    }
    if !report.unital {
        return Err(precondition("symbol must satisfy t_e = 1"));
    }
    if !report.psd {
        return Err(Error::NotPsd(report.min_eigenvalue));
    }
    let space = build_gram_space(&symbol.gram_symbol(), tol)?;
    let rep = FermionRep::new(&space)?;
    let f = rep.fock_dim();
    matcore::check_dim(f * m, "crossed product ambient space")?;

    // α(g) ĥ = (gh)^: solve E α(g)ᵀ = P_g E in least squares.
    let emb = space.embedding();
    let normal = (emb.transpose() * emb)
        .try_inverse()
        .ok_or_else(|| Error::Internal("Gram embedding lost full column rank".into()))?;
    let left_inverse = normal * emb.transpose();
    let actions: Vec<DMatrix<f64>> = (0..m)
        .map(|g| {
            let moved = DMatrix::from_fn(m, emb.ncols(), |h, k| emb[(group.mul(g, h), k)]);
            (&left_inverse * moved).transpose()
        })
        .collect();

    let regular = build_group_algebra(group);
    let fock_actions = actions.iter().map(exterior_power).collect::<Result<Vec<_>>>()?;
    let pi_images = fock_actions
        .iter()
        .zip(&regular)
        .map(|(u, l)| matcore::tensor_product(u, l))
        .collect::<Result<Vec<_>>>()?;
    let w = matcore::tensor_product(&rep.generator(group.identity()), &matcore::identity(m))?;
    let big = f * m;
    let parity: Vec<f64> = (0..f)
        .flat_map(|s: usize| std::iter::repeat_n(if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }, m))
        .collect();
    let bundle = DilationBundle::new(
        InputAlgebra::Group { elements: regular, identity: group.identity() },
        vec![1.0 / m as f64; m],
        vec![1.0 / big as f64; big],
        w,
        pi_images,
        Some(parity),
    )?;
    Ok(CrossedDilation { bundle, rep, space, actions, fock_actions })
}

/// Residuals of the Fourier dilation identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierReport {
    /// `max_{g,h} |φ̃(π(λ(g))ρ(λ(h))) − δ_{gh,e} t_g|`
    pub group_pairs: f64,
    /// Factorization over basis pairs plus random combinations.
    pub factorization: f64,
}

impl FourierReport {
    pub fn max_residual(&self) -> f64 {
        self.group_pairs.max(self.factorization)
    }
}

pub fn verify_fourier_identity<R: Rng>(
    dilation: &CrossedDilation,
    symbol: &FourierSymbol,
    random_pairs: usize,
    rng: &mut R,
) -> Result<FourierReport> {
    let group = &symbol.group;
    let m = group.order();
    let b = &dilation.bundle;
    let rho: Vec<Matrix> = b.pi_images().iter().map(|p| b.conjugate_by_symmetry(p)).collect();
    let mut group_pairs = 0.0_f64;
    for g in 0..m {
        let left: Matrix = &b.pi_images()[g] * c(1.0 / b.ambient_dim() as f64);
        for (h, rh) in rho.iter().enumerate() {
            let lhs = matcore::trace_of_product(&left, rh);
            let want = if group.mul(g, h) == group.identity() { symbol.coeffs[g] } else { 0.0 };
            group_pairs = group_pairs.max((lhs - c(want)).norm());
        }
    }
    let factorization = verify_factorization(b, &|x: &Matrix| symbol.apply(x), random_pairs, rng)?;
    Ok(FourierReport { group_pairs, factorization })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::seeded;
    use crate::state::{certify_markov, DiagonalState, DEFAULT_T_SAMPLES};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn builtin_groups_validate() {
        assert_eq!(FiniteGroup::cyclic(5).unwrap().order(), 5);
        assert_eq!(FiniteGroup::s3().unwrap().order(), 6);
        let d4 = FiniteGroup::dihedral(4).unwrap();
        assert_eq!(d4.order(), 8);
        // S3 is not abelian
        let s3 = FiniteGroup::s3().unwrap();
        assert!((0..6).any(|a| (0..6).any(|b| s3.mul(a, b) != s3.mul(b, a))));
        assert!(FiniteGroup::cyclic(25).is_err());
    }

    #[test]
    fn bad_tables_rejected() {
        assert!(FiniteGroup::from_table(vec![vec![0, 1], vec![0, 1]]).is_err());
        // Latin square without associativity
        let t = vec![vec![0, 1, 2], vec![1, 0, 2], vec![2, 2, 0]];
        assert!(FiniteGroup::from_table(t).is_err());
        let quasi = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(FiniteGroup::from_table(quasi), Err(Error::Precondition(_))));
    }

    #[test]
    fn regular_representation() {
        let g = FiniteGroup::s3().unwrap();
        let l = build_group_algebra(&g);
        assert_eq!(l[g.identity()], matcore::identity(6));
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(&l[a] * &l[b], l[g.mul(a, b)]);
            }
            let tau = l[a][(g.identity(), g.identity())];
            assert_eq!(tau, c(if a == g.identity() { 1.0 } else { 0.0 }));
        }
        let z2 = build_group_algebra(&FiniteGroup::cyclic(2).unwrap());
        assert_eq!(z2[1], Matrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]));
    }

    #[test]
    fn posdef_examples() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let good = FourierSymbol::new(z2.clone(), vec![1.0, 0.5]).unwrap();
        assert!(certify_posdef(&good, &tol()).psd);
        let bad = FourierSymbol::new(z2.clone(), vec![1.0, 1.5]).unwrap();
        let r = certify_posdef(&bad, &tol());
        assert!(!r.psd);
        assert!((r.min_eigenvalue + 0.5).abs() < 1e-12);
        assert!(certify_posdef(&FourierSymbol::identity_indicator(z2), &tol()).psd);
    }

    #[test]
    fn z2_worked_case() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let sym = FourierSymbol::new(z2.clone(), vec![1.0, 0.5]).unwrap();
        let dil = build_crossed_dilation(&sym, &tol()).unwrap();
        let b = dil.bundle();
        let l = build_group_algebra(&z2);
        let v = b.ambient_state(&(b.pi(&l[1]).unwrap() * b.rho(&l[1]).unwrap()));
        assert!((v - c(0.5)).norm() < 1e-12);
        let r = verify_fourier_identity(&dil, &sym, 5, &mut seeded(50)).unwrap();
        assert!(r.max_residual() < 1e-9);
    }

    #[test]
    fn crossed_structure() {
        let mut rng = seeded(51);
        for group in [FiniteGroup::cyclic(4).unwrap(), FiniteGroup::s3().unwrap()] {
            let sym = random_posdef(&mut rng, &group);
            let dil = build_crossed_dilation(&sym, &tol()).unwrap();
            let (h, s, cm) = dil.bundle().symmetry_residuals();
            assert!(h < 1e-12 && s < 1e-12 && cm < 1e-12);
            assert!(dil.covariance_residual(&group).unwrap() < 1e-9);
            assert!(dil.vector_state_residual(&group).unwrap() < 1e-12);
            let r = verify_fourier_identity(&dil, &sym, 5, &mut rng).unwrap();
            assert!(r.max_residual() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn identity_indicator_dilates_the_trace_projection() {
        let g = FiniteGroup::cyclic(3).unwrap();
        let sym = FourierSymbol::identity_indicator(g.clone());
        let dil = build_crossed_dilation(&sym, &tol()).unwrap();
        assert_eq!(dil.gram_space().rank(), 3);
        let r = verify_fourier_identity(&dil, &sym, 5, &mut seeded(52)).unwrap();
        assert!(r.max_residual() < 1e-9);
    }

    #[test]
    fn fourier_multiplier_is_markov() {
        let mut rng = seeded(53);
        let g = FiniteGroup::dihedral(3).unwrap();
        let sym = random_posdef(&mut rng, &g);
        let schur = sym.regular_schur_symbol();
        let map = certify_markov(&schur.to_markov_map(), &DiagonalState::tracial(6), &DEFAULT_T_SAMPLES, &tol()).unwrap();
        assert!(map.flags().all_hold());
        let x = InputAlgebra::Group { elements: build_group_algebra(&g), identity: g.identity() }
            .random_element(&mut rng);
        assert!((schur.apply(&x).unwrap() - sym.apply(&x).unwrap()).norm() < 1e-12);
    }
}
