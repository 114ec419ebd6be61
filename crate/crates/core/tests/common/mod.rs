//! Independent reference computations shared by the integration targets.
//! Nothing here calls into the library's numerical routines.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type Cm = DMatrix<Complex64>;

pub fn unit(n: usize, i: usize, j: usize) -> Cm {
    let mut m = Cm::zeros(n, n);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

/// Entrywise product written as an explicit double loop.
pub fn hadamard(t: &Cm, x: &Cm) -> Cm {
    let mut out = Cm::zeros(x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            out[(i, j)] = t[(i, j)] * x[(i, j)];
        }
    }
    out
}

/// `Σ_i w_i x_ii`
pub fn diag_state(weights: &[f64], x: &Cm) -> Complex64 {
    weights.iter().enumerate().map(|(i, &w)| x[(i, i)] * w).sum()
}

/// All permutations of `0..n` with their signs, by Heap's algorithm.
pub fn signed_permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn heap(k: usize, a: &mut Vec<usize>, sign: &mut f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if k <= 1 {
            out.push((a.clone(), *sign));
            return;
        }
        for i in 0..k {
            heap(k - 1, a, sign, out);
            if i + 1 < k {
                if k % 2 == 0 {
                    a.swap(i, k - 1);
                } else {
                    a.swap(0, k - 1);
                }
                *sign = -*sign;
            }
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    let mut out = Vec::new();
    heap(n, &mut a, &mut sign, &mut out);
    out
}

/// Elementary tensor `v_1 ⊗ ⋯ ⊗ v_k` as a flat vector in `(ℝ^d)^{⊗k}`.
pub fn elementary_tensor(letters: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for v in letters {
        assert_eq!(v.len(), d);
        let mut next = Vec::with_capacity(out.len() * d);
        for a in &out {
            for b in v {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

/// `Σ_σ sgn(σ) P_σ v` on `(ℝ^d)^{⊗k}`, permuting tensor slots.
pub fn antisymmetrize(v: &[f64], d: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    let mut digits = vec![0usize; k];
    for (idx, &val) in v.iter().enumerate() {
        if val == 0.0 {
            continue;
        }
        let mut rest = idx;
        for slot in (0..k).rev() {
            digits[slot] = rest % d;
            rest /= d;
        }
        for (perm, sign) in signed_permutations(k) {
            let target = perm.iter().fold(0, |acc, &p| acc * d + digits[p]);
            out[target] += sign * val;
        }
    }
    out
}

/// Gram matrix of words under `⟨u, Σ_σ sgn(σ) P_σ v⟩` in the full tensor
/// algebra; words of different length are orthogonal.
pub fn antisymmetric_gram(words: &[Vec<Vec<f64>>], d: usize) -> DMatrix<f64> {
    let n = words.len();
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if words[a].len() != words[b].len() {
                continue;
            }
            let k = words[a].len();
            let u = elementary_tensor(&words[a], d);
            let v = antisymmetrize(&elementary_tensor(&words[b], d), d, k);
            g[(a, b)] = u.iter().zip(&v).map(|(x, y)| x * y).sum();
        }
    }
    g
}

/// Determinant by cofactor expansion; fine for the tiny sizes used here.
pub fn det(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    (0..n)
        .map(|j| {
            let minor = m.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[(0, j)] * det(&minor)
        })
        .sum()
}

/// `tr_B` on `M_a ⊗ M_b` written with explicit index sums.
pub fn partial_trace_second(z: &Cm, a: usize, b: usize) -> Cm {
    let mut out = Cm::zeros(a, a);
    for i in 0..a {
        for j in 0..a {
            for k in 0..b {
                out[(i, j)] += z[(i * b + k, j * b + k)];
            }
        }
    }
    out
}

/// Smallest eigenvalue of a real symmetric matrix by Jacobi rotations.
pub fn jacobi_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min)
}
