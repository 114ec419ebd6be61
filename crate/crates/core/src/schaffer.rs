//! Unitary dilations of a real symmetric contraction `T` on `K = ℝ^m`: the
//! one-step Halmos symmetry and a cyclic-window Schäffer unitary, with the
//! second-quantized Rota and factorization identities built on them.

use nalgebra::DMatrix;

use crate::error::{precondition, shape, size, Result};
use crate::fock::{second_quantize, FermionRep, FERMION_RANK_CAP};
use crate::matcore::{self, Matrix, Tolerances};

fn check_symmetric_contraction(t: &DMatrix<f64>, tol: &Tolerances) -> Result<()> {
    if !t.is_square() || t.nrows() == 0 {
        return Err(shape("contraction must be a nonempty square matrix"));
    }
    if (t - t.transpose()).norm() > tol.num {
        return Err(precondition("contraction must be symmetric"));
    }
    let norm = matcore::real_spectral_norm(t);
    if norm > 1.0 + tol.num {
        return Err(precondition(format!("not a contraction: norm {norm}")));
    }
    Ok(())
}

/// `√(1 − T²)`.
fn defect(t: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let m = t.nrows();
    let one_minus = DMatrix::identity(m, m) - t * t;
    let root = matcore::hermitian_sqrt(&matcore::from_real(&one_minus), tol)?;
    Ok(root.map(|z| z.re))
}

/// `[[T, D], [D, −T]]` with `D = √(1 − T²)`: a symmetry on `K ⊕ K`.
pub fn halmos(t: &DMatrix<f64>, tol: &Tolerances) -> Result<DMatrix<f64>> {
    check_symmetric_contraction(t, tol)?;
    let m = t.nrows();
    let d = defect(t, tol)?;
    let mut u = DMatrix::zeros(2 * m, 2 * m);
    u.view_mut((0, 0), (m, m)).copy_from(t);
    u.view_mut((0, m), (m, m)).copy_from(&d);
    u.view_mut((m, 0), (m, m)).copy_from(&d);
    u.view_mut((m, m), (m, m)).copy_from(&(-t));
    Ok(u)
}

/// Unitary on slots `−W..W` (each a copy of `K`, `K` itself at slot 0):
/// the Halmos block routes slots `(0, −1)` into `(0, 1)` and every other
/// slot shifts right, with slot `W` wrapping to `−W`.
#[derive(Debug, Clone)]
pub struct SchafferDilation {
    t: DMatrix<f64>,
    window: usize,
    unitary: DMatrix<f64>,
}

pub fn build_schaffer(t: &DMatrix<f64>, window: usize, tol: &Tolerances) -> Result<SchafferDilation> {
    check_symmetric_contraction(t, tol)?;
    if window == 0 {
        return Err(precondition("window must be at least 1"));
    }
    let m = t.nrows();
    let slots = 2 * window + 1;
    matcore::check_dim(m * slots, "dilation window")?;
    let d = defect(t, tol)?;
    let w = window as isize;
    let pos = |slot: isize| (slot + w) as usize * m;
    let mut u = DMatrix::zeros(m * slots, m * slots);
    let eye = DMatrix::<f64>::identity(m, m);
    for src in -w..=w {
        match src {
            0 => {
                u.view_mut((pos(0), pos(0)), (m, m)).copy_from(t);
                u.view_mut((pos(1), pos(0)), (m, m)).copy_from(&d);
            }
            -1 => {
                u.view_mut((pos(0), pos(-1)), (m, m)).copy_from(&d);
                u.view_mut((pos(1), pos(-1)), (m, m)).copy_from(&(-t));
            }
            _ => {
                let dst = if src == w { -w } else { src + 1 };
                u.view_mut((pos(dst), pos(src)), (m, m)).copy_from(&eye);
            }
        }
    }
    Ok(SchafferDilation { t: t.clone(), window, unitary: u })
}

impl SchafferDilation {
    pub fn base_dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn unitary(&self) -> &DMatrix<f64> {
        &self.unitary
    }

    pub fn contraction(&self) -> &DMatrix<f64> {
        &self.t
    }

    /// Isometric inclusion of `K` as slot 0.
    pub fn inclusion(&self) -> DMatrix<f64> {
        let m = self.base_dim();
        let mut e = DMatrix::zeros(self.dim(), m);
        e.view_mut((self.window * m, 0), (m, m)).fill_with_identity();
        e
    }

    /// `‖U*U − 1‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        (self.unitary.transpose() * &self.unitary - DMatrix::identity(n, n)).norm()
    }

    /// `max_{k ≤ kmax} ‖P U^k|_K − T^k‖_F`.
    pub fn strong_dilation_residual(&self, kmax: usize) -> Result<f64> {
        if kmax > 2 * self.window {
            return Err(precondition(format!("powers beyond 2W = {} wrap around the window", 2 * self.window)));
        }
        let e = self.inclusion();
        let m = self.base_dim();
        let mut uk = e.clone();
        let mut tk = DMatrix::<f64>::identity(m, m);
        let mut worst = (e.transpose() * &uk - &tk).norm();
        for _ in 0..kmax {
            uk = &self.unitary * uk;
            tk = &self.t * tk;
            worst = worst.max((e.transpose() * &uk - &tk).norm());
        }
        Ok(worst)
    }

    /// Orthogonal projection onto `span{U^l K : n ≤ l ≤ n + L}`.
    pub fn span_projection(&self, n: usize, l: usize, tol: &Tolerances) -> Result<DMatrix<f64>> {
        if n + l > 2 * self.window {
            return Err(precondition(format!("n + L = {} exceeds 2W = {}", n + l, 2 * self.window)));
        }
        let m = self.base_dim();
        let mut cols = DMatrix::zeros(self.dim(), m * (l + 1));
        let mut uk = self.inclusion();
        for _ in 0..n {
            uk = &self.unitary * uk;
        }
        for k in 0..=l {
            cols.view_mut((0, k * m), (self.dim(), m)).copy_from(&uk);
            uk = &self.unitary * uk;
        }
        let p = matcore::range_projection(&matcore::from_real(&cols), tol);
        Ok(p.map(|z| z.re))
    }
}

/// `‖P P_n P|_K − T^{2n}‖_F` with `P_n` the projection onto
/// `span{U^l K : n ≤ l ≤ n + L}`.
pub fn verify_ppnp(dil: &SchafferDilation, n: usize, l: usize, tol: &Tolerances) -> Result<f64> {
    let pn = dil.span_projection(n, l, tol)?;
    let e = dil.inclusion();
    let t2n = dil.t.pow(2 * n as u32);
    Ok((e.transpose() * pn * e - t2n).norm())
}

/// `max_S ‖Γ(P)(Γ(P_n)(J(W_S))) − J(Γ(T)^{2n}(W_S))‖_F` over the Wick basis
/// of `Γ(K)`, with `J = Γ(ι)` and the window space as `L`.
pub fn verify_rota_secondquant(t: &DMatrix<f64>, window: usize, n: usize, tol: &Tolerances) -> Result<f64> {
    let dil = build_schaffer(t, window, tol)?;
    if dil.dim() > FERMION_RANK_CAP {
        return Err(size(format!("window space of dimension {} exceeds {FERMION_RANK_CAP}", dil.dim())));
    }
    if n > 2 * window {
        return Err(precondition("n must not exceed 2W"));
    }
    let m = dil.base_dim();
    let rep_k = FermionRep::standard(m)?;
    let rep_l = FermionRep::standard(dil.dim())?;
    let iota = dil.inclusion();
    let j = second_quantize(&rep_k, &rep_l, &iota, tol)?;
    let p = &iota * iota.transpose();
    let e_hat = second_quantize(&rep_l, &rep_l, &p, tol)?;
    let pn = dil.span_projection(n, 2 * window - n, tol)?;
    let e_n = second_quantize(&rep_l, &rep_l, &pn, tol)?;
    let gamma_t = second_quantize(&rep_k, &rep_k, t, tol)?;
    let mut worst = 0.0_f64;
    for s in 0..rep_k.fock_dim() {
        let x = rep_k.wick_word(s);
        let lhs = e_hat.apply(&e_n.apply(&j.apply(&x)?)?)?;
        let mut y = x;
        for _ in 0..2 * n {
            y = gamma_t.apply(&y)?;
        }
        worst = worst.max((lhs - j.apply(&y)?).norm());
    }
    Ok(worst)
}

/// `max |τ_K(Γ(T)(x) y) − τ_L(π(x) ρ(y))|` over Wick basis pairs, with
/// `L = K ⊕ K`, `U` the Halmos symmetry, `π = Γ(ι)` and `ρ = Γ(U*) ∘ π`.
pub fn verify_gamma_factorization(t: &DMatrix<f64>, tol: &Tolerances) -> Result<f64> {
    let m = t.nrows();
    if m > 2 {
        return Err(size("factorization check limited to dim K ≤ 2"));
    }
    let u = halmos(t, tol)?;
    let rep_k = FermionRep::standard(m)?;
    let rep_l = FermionRep::standard(2 * m)?;
    let mut iota = DMatrix::zeros(2 * m, m);
    iota.view_mut((0, 0), (m, m)).fill_with_identity();
    let pi = second_quantize(&rep_k, &rep_l, &iota, tol)?;
    let gamma_u = second_quantize(&rep_l, &rep_l, &u.transpose(), tol)?;
    let gamma_t = second_quantize(&rep_k, &rep_k, t, tol)?;
    let words: Vec<Matrix> = (0..rep_k.fock_dim()).map(|s| rep_k.wick_word(s)).collect();
    let pis: Vec<Matrix> = words.iter().map(|x| pi.apply(x)).collect::<Result<_>>()?;
    let rhos: Vec<Matrix> = pis.iter().map(|p| gamma_u.apply(p)).collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for (a, x) in words.iter().enumerate() {
        let tx = gamma_t.apply(x)?;
        for (b, y) in words.iter().enumerate() {
            let lhs = rep_k.vacuum_state(&(&tx * y));
            let rhs = rep_l.vacuum_state(&(&pis[a] * &rhos[b]));
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}
