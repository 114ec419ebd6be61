//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary (`harness = false`) so the lines always
//! reach the console.

mod common;

use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use common::{antisymmetric_gram, det, diag_state, hadamard, unit, Cm};
use dilation_lab::chain::{verify_markov_property, verify_rota, ChainSpace};
use dilation_lab::dilation::{
    build_dilation, convex_combination_dilation, star_swap_check, verify_factorization, DilationBundle,
};
use dilation_lab::fock::{q_gram, second_quantize, FermionRep, QWord};
use dilation_lab::fourier::{build_crossed_dilation, random_posdef, verify_fourier_identity, FiniteGroup};
use dilation_lab::sample::{self, seeded, SampleRng};
use dilation_lab::schaffer::{build_schaffer, verify_gamma_factorization, verify_ppnp, verify_rota_secondquant};
use dilation_lab::schur::{certify_symbol, random_unital_psd, random_unital_symmetric, SchurSymbol};
use dilation_lab::state::{certify_markov, star_adjoint, DiagonalState, MarkovMap, DEFAULT_T_SAMPLES};
use dilation_lab::{Result, Tolerances};

const RANDOM_PAIRS: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn bound(what: &str, value: f64, tol: f64) -> Self {
        Self { pass: value.is_finite() && value <= tol, detail: format!("{what} = {value:.3e} (tol {tol:.0e})") }
    }

    fn and(self, other: Outcome) -> Self {
        Self { pass: self.pass && other.pass, detail: format!("{}; {}", self.detail, other.detail) }
    }
}

/// Symmetry residuals of every bundle built during the run.
#[derive(Default)]
struct BundleLog {
    count: usize,
    worst: f64,
}

impl BundleLog {
    fn record(&mut self, bundle: &DilationBundle) {
        let (h, s, c) = bundle.symmetry_residuals();
        self.count += 1;
        self.worst = self.worst.max(h).max(s).max(c);
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn random_state(rng: &mut SampleRng, n: usize) -> Result<DiagonalState> {
    DiagonalState::new(sample::faithful_weights(rng, n), &tol())
}

fn criterion_1(log: &mut BundleLog) -> Result<Outcome> {
    let mut rng = seeded(1);
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let n = [2, 3, 4][k % 3];
        let rank = 1 + (k / 3) % n;
        let symbol = random_unital_psd(&mut rng, n, rank);
        let state = random_state(&mut rng, n)?;
        let bundle = build_dilation(&symbol, &state, &tol())?;
        log.record(&bundle);
        let coeffs = symbol.coeffs().clone();
        let oracle = |x: &Cm| Ok(hadamard(&coeffs, x));
        worst = worst.max(verify_factorization(&bundle, &oracle, RANDOM_PAIRS, &mut rng)?);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome::bound("max factorization residual", worst, 1e-9).and(Outcome::bound("runtime s", secs, 10.0)))
}

fn criterion_2(log: &BundleLog) -> Outcome {
    let mut out = Outcome::bound("max symmetry residual", log.worst, 1e-12);
    out.detail = format!("{} over {} bundles", out.detail, log.count);
    out.pass &= log.count > 0;
    out
}

fn criterion_3() -> Result<Outcome> {
    let mut rng = seeded(3);
    let (mut car, mut trace) = (0.0_f64, 0.0_f64);
    for r in 1..=4 {
        let rep = FermionRep::standard(r)?;
        let id = Cm::identity(rep.fock_dim(), rep.fock_dim());
        for _ in 0..10 {
            let e: Vec<f64> = sample::gaussian_real(&mut rng, r, 1).iter().copied().collect();
            let f: Vec<f64> = sample::gaussian_real(&mut rng, r, 1).iter().copied().collect();
            let ef: f64 = e.iter().zip(&f).map(|(a, b)| a * b).sum();
            car = car.max(rep.car_residual(&e, &f)?);
            let (we, wf) = (rep.omega(&e)?, rep.omega(&f)?);
            let anti = &we * &wf + &wf * &we - &id * cplx(2.0 * ef);
            car = car.max(anti.norm());
            trace = trace.max((rep.vacuum_state(&(&we * &wf)) - cplx(ef)).norm());
        }
    }
    let out = Outcome::bound("CAR residual", car, 1e-12).and(Outcome::bound("τ(ω(e)ω(f)) residual", trace, 1e-12));

    let mut min_eig = f64::INFINITY;
    for d in 1..=3 {
        let words = all_basis_words(d, 4);
        let qwords: Vec<QWord> = words.iter().map(|w| QWord::new(d, w.clone())).collect::<Result<_>>()?;
        for q in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            let g = q_gram(&qwords, q)?;
            min_eig = min_eig.min(dilation_lab::matcore::min_eigenvalue(&g, &tol())?);
        }
    }
    let psd = Outcome { pass: min_eig >= -1e-10, detail: format!("q-Gram min eigenvalue = {min_eig:.3e} (≥ -1e-10)") };

    let mut anti = 0.0_f64;
    for d in 1..=3 {
        let mut words = all_basis_words(d, 3);
        for len in 1..=3 {
            for _ in 0..4 {
                words.push((0..len).map(|_| sample::gaussian_real(&mut rng, d, 1).iter().copied().collect()).collect());
            }
        }
        let qwords: Vec<QWord> = words.iter().map(|w| QWord::new(d, w.clone())).collect::<Result<_>>()?;
        let g = q_gram(&qwords, -1.0)?;
        let oracle = antisymmetric_gram(&words, d);
        for a in 0..words.len() {
            for b in 0..words.len() {
                anti = anti.max((g[(a, b)] - cplx(oracle[(a, b)])).norm());
            }
        }
        // Same-length entries also equal det⟨u_i, v_j⟩.
        for a in 0..words.len() {
            for b in 0..words.len() {
                if words[a].len() == words[b].len() {
                    let k = words[a].len();
                    let pairing = DMatrix::from_fn(k, k, |i, j| {
                        words[a][i].iter().zip(&words[b][j]).map(|(x, y)| x * y).sum::<f64>()
                    });
                    anti = anti.max((oracle[(a, b)] - det(&pairing)).abs());
                }
            }
        }
    }
    Ok(out.and(psd).and(Outcome::bound("q=-1 vs antisymmetrization", anti, 1e-12)))
}

/// Every word of length `≤ max_len` in the standard basis of `ℝ^d`.
fn all_basis_words(d: usize, max_len: usize) -> Vec<Vec<Vec<f64>>> {
    let basis = |i: usize| {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    };
    let mut words: Vec<Vec<Vec<f64>>> = vec![vec![]];
    let mut layer: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| (0..d).map(move |i| w.iter().copied().chain([i]).collect::<Vec<_>>()))
            .collect();
        words.extend(layer.iter().map(|w| w.iter().map(|&i| basis(i)).collect()));
    }
    words
}

fn criterion_4() -> Result<Outcome> {
    let mut rng = seeded(4);
    let (mut agree, mut psd_count) = (0, 0);
    for k in 0..100 {
        let n = 2 + k % 3;
        let symbol = if k % 2 == 0 {
            random_unital_psd(&mut rng, n, 1 + k % n)
        } else {
            random_unital_symmetric(&mut rng, n, 1.2)
        };
        let report = certify_symbol(&symbol, &tol());
        let choi = MarkovMap::from_fn(n, |x| hadamard(symbol.coeffs(), x)).choi();
        let choi_cp = dilation_lab::matcore::min_eigenvalue(&choi, &tol())? >= -tol().psd;
        if report.psd == report.choi_cp && report.choi_cp == choi_cp {
            agree += 1;
        }
        psd_count += usize::from(report.psd);
    }
    Ok(Outcome {
        pass: agree == 100 && psd_count > 0 && psd_count < 100,
        detail: format!("{agree}/100 verdicts agree ({psd_count} PSD, {} not)", 100 - psd_count),
    })
}

fn half_symbol() -> Result<SchurSymbol> {
    SchurSymbol::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]])
}

fn criterion_5() -> Result<Outcome> {
    let chain = ChainSpace::new(&half_symbol()?, &DiagonalState::tracial(2), 3, &tol())?;
    let (mut markov, mut shift, mut shifts) = (0.0_f64, 0.0_f64, 0);
    for q in 0..=3 {
        for n in 0..=q {
            let rep = verify_markov_property(&chain, n, q)?;
            markov = markov.max(rep.past).max(rep.future);
            if let Some(s) = rep.shift {
                shift = shift.max(s);
                shifts += 1;
            }
        }
    }
    let mut out = Outcome::bound("past/future residual", markov, 1e-9).and(Outcome::bound("shift residual", shift, 1e-9));
    out.detail = format!("{} over {shifts} shift pairs", out.detail);
    Ok(out)
}

fn criterion_6() -> Result<Outcome> {
    let symbol = half_symbol()?;
    let chain = ChainSpace::new(&symbol, &DiagonalState::tracial(2), 2, &tol())?;
    let rota = verify_rota(&chain, 1)?.max(verify_rota(&chain, 2)?);

    let j0 = chain.embed_unit(0, 0, 1)?;
    let rhs = chain.past(0)?.apply(&chain.future(1)?.apply(&j0)?)?;
    let expected = 0.5_f64.powi(2);
    let spot = (rhs - &j0 * cplx(expected)).norm();
    let mut out = Outcome::bound("Rota residual", rota, 1e-9).and(Outcome::bound("spot residual", spot, 1e-9));
    out.detail = format!("{}; spot value {expected}", out.detail);
    Ok(out)
}

/// Fourier multiplier from the group table: `Σ x_g λ(g) ↦ Σ t_g x_g λ(g)`,
/// with `x_g` read off the column of the identity element.
fn fourier_oracle(group: &FiniteGroup, coeffs: &[f64], x: &Cm) -> Cm {
    let m = group.order();
    let e = group.identity();
    let mut out = Cm::zeros(m, m);
    for g in 0..m {
        let xg = x[(g, e)];
        for h in 0..m {
            out[(group.mul(g, h), h)] += xg * coeffs[g];
        }
    }
    out
}

fn criterion_7(log: &mut BundleLog) -> Result<Outcome> {
    let mut rng = seeded(7);
    let mut groups: Vec<(String, FiniteGroup)> =
        (1..=6).map(|m| Ok((format!("Z{m}"), FiniteGroup::cyclic(m)?))).collect::<Result<_>>()?;
    groups.push(("S3".into(), FiniteGroup::s3()?));
    let (mut pairs, mut fact, mut count) = (0.0_f64, 0.0_f64, 0);
    for (_, group) in &groups {
        for _ in 0..20 {
            let symbol = random_posdef(&mut rng, group);
            let dil = build_crossed_dilation(&symbol, &tol())?;
            log.record(dil.bundle());
            let rep = verify_fourier_identity(&dil, &symbol, 0, &mut rng)?;
            pairs = pairs.max(rep.group_pairs);
            let coeffs = symbol.coeffs().to_vec();
            let oracle = |x: &Cm| Ok(fourier_oracle(group, &coeffs, x));
            fact = fact.max(verify_factorization(dil.bundle(), &oracle, RANDOM_PAIRS, &mut rng)?);
            count += 1;
        }
    }
    let mut out = Outcome::bound("δ_{gh,e} t_g residual", pairs, 1e-9).and(Outcome::bound("factorization", fact, 1e-9));
    out.detail = format!("{} over {count} symbols", out.detail);
    Ok(out)
}

fn real_contraction(rng: &mut SampleRng, m: usize) -> DMatrix<f64> {
    sample::real_contraction(rng, m, m, 0.95)
}

fn symmetric_contraction(rng: &mut SampleRng, m: usize) -> DMatrix<f64> {
    sample::real_symmetric_contraction(rng, m, 0.95)
}

fn criterion_8() -> Result<Outcome> {
    let mut rng = seeded(8);
    let (mut unitary, mut strong, mut ppnp) = (0.0_f64, 0.0_f64, 0.0_f64);
    for m in 1..=2 {
        for w in 1..=6 {
            let t = symmetric_contraction(&mut rng, m);
            let dil = build_schaffer(&t, w, &tol())?;
            unitary = unitary.max(dil.unitarity_residual());
            // oracle: compress U^k by explicit slicing of the window blocks
            let mut uk = DMatrix::<f64>::identity(dil.dim(), dil.dim());
            let mut tk = DMatrix::<f64>::identity(m, m);
            let e = dil.inclusion();
            for k in 0..=2 * w {
                if k > 0 {
                    uk = dil.unitary() * uk;
                    tk = &t * tk;
                }
                strong = strong.max((e.transpose() * &uk * &e - &tk).norm());
            }
            for n in 0..=2 {
                ppnp = ppnp.max(verify_ppnp(&dil, n, 2 * w - n, &tol())?);
            }
        }
    }
    Ok(Outcome::bound("‖U*U − I‖", unitary, 1e-12)
        .and(Outcome::bound("PU^k|K − T^k", strong, 1e-10))
        .and(Outcome::bound("P P_n P − T^2n", ppnp, 1e-9)))
}

fn criterion_9() -> Result<Outcome> {
    let mut rng = seeded(9);
    let mut exact = true;
    let (mut mult, mut choi_min, mut fact) = (0.0_f64, f64::INFINITY, 0.0_f64);
    for r in 1..=3 {
        let rep = FermionRep::standard(r)?;
        let id = second_quantize(&rep, &rep, &DMatrix::identity(r, r), &tol())?;
        let dim = rep.fock_dim();
        exact &= *id.wick_matrix() == Cm::identity(dim, dim);
        exact &= *id.fock_map() == Cm::identity(dim, dim);
        for s in 0..dim {
            let w = rep.wick_word(s);
            exact &= id.apply(&w)? == w;
        }
        for _ in 0..3 {
            let s = real_contraction(&mut rng, r);
            let t = real_contraction(&mut rng, r);
            let gs = second_quantize(&rep, &rep, &s, &tol())?;
            let gt = second_quantize(&rep, &rep, &t, &tol())?;
            let gst = second_quantize(&rep, &rep, &(&s * &t), &tol())?;
            mult = mult.max((gs.wick_matrix() * gt.wick_matrix() - gst.wick_matrix()).norm());
            for k in 0..dim {
                let w = rep.wick_word(k);
                mult = mult.max((gs.apply(&gt.apply(&w)?)? - gst.apply(&w)?).norm());
            }
            let choi = gt.to_markov_map()?.choi();
            choi_min = choi_min.min(dilation_lab::matcore::min_eigenvalue(&choi, &tol())?);
        }
    }
    for m in 1..=2 {
        for _ in 0..3 {
            fact = fact.max(verify_gamma_factorization(&symmetric_contraction(&mut rng, m), &tol())?);
        }
    }
    let t = symmetric_contraction(&mut rng, 1);
    let rota = verify_rota_secondquant(&t, 2, 1, &tol())?.max(verify_rota_secondquant(&t, 2, 2, &tol())?);
    Ok(Outcome { pass: exact, detail: format!("Γ(Id) = Id exactly: {exact}") }
        .and(Outcome::bound("Γ(S)Γ(T) − Γ(ST)", mult, 1e-9))
        .and(Outcome { pass: choi_min >= -1e-9, detail: format!("Choi min eigenvalue = {choi_min:.3e} (≥ -1e-9)") })
        .and(Outcome::bound("Γ-factorization", fact, 1e-9))
        .and(Outcome::bound("second-quantized Rota", rota, 1e-9)))
}

fn criterion_10(log: &mut BundleLog) -> Result<Outcome> {
    let mut rng = seeded(10);
    let mut transpose = 0.0_f64;
    for n in 2..=4 {
        let coeffs = sample::gaussian_complex(&mut rng, n, n);
        let state = random_state(&mut rng, n)?;
        let map = MarkovMap::from_fn(n, |x| hadamard(&coeffs, x));
        let star = star_adjoint(&map, &state)?;
        for i in 0..n {
            for j in 0..n {
                let image = star.apply(&unit(n, i, j))?;
                let want = unit(n, i, j) * coeffs[(j, i)];
                transpose = transpose.max((image - want).norm());
            }
        }
    }

    let (mut swap, mut convex) = (0.0_f64, 0.0_f64);
    for k in 0..6 {
        let n = 2 + k % 3;
        let state = random_state(&mut rng, n)?;
        let a = random_unital_psd(&mut rng, n, n);
        let b = random_unital_psd(&mut rng, n, 1);
        let da = build_dilation(&a, &state, &tol())?;
        let db = build_dilation(&b, &state, &tol())?;
        log.record(&da);
        log.record(&db);
        swap = swap.max(star_swap_check(&da, &a, &state, RANDOM_PAIRS, &mut rng)?);

        // φ(M_T★(y) x) against the oracle T★ = M_{Tᵀ}, paired by hand
        for i in 0..n {
            for j in 0..n {
                for p in 0..n {
                    for q in 0..n {
                        let (x, y) = (unit(n, i, j), unit(n, p, q));
                        let lhs = diag_state(state.weights(), &(hadamard(&a.coeffs().transpose(), &y) * &x));
                        let rhs = da.ambient_state(&(da.rho(&y)? * da.pi(&x)?));
                        swap = swap.max((lhs - rhs).norm());
                    }
                }
            }
        }

        let w = 0.3;
        let combined = convex_combination_dilation(&[da, db], &[w, 1.0 - w])?;
        log.record(&combined);
        let coeffs = a.coeffs() * cplx(w) + b.coeffs() * cplx(1.0 - w);
        let oracle = |x: &Cm| Ok(hadamard(&coeffs, x));
        convex = convex.max(verify_factorization(&combined, &oracle, RANDOM_PAIRS, &mut rng)?);
        let flags = certify_markov(&MarkovMap::from_fn(n, |x| hadamard(&coeffs, x)), &state, &DEFAULT_T_SAMPLES, &tol())?;
        convex = if flags.flags().all_hold() { convex } else { f64::INFINITY };
    }
    Ok(Outcome::bound("★ symbol vs transpose", transpose, 1e-12)
        .and(Outcome::bound("star-swap", swap, 1e-9))
        .and(Outcome::bound("convex combination", convex, 1e-9)))
}

fn criterion_11() -> Result<Outcome> {
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/symbol_2x2.json");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_dilation-lab"))
            .args(["check-schur", fixture, "--seed", "7"])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    let codes = (a.status.code(), b.status.code());
    let identical = a.stdout == b.stdout && !a.stdout.is_empty();
    Ok(Outcome {
        pass: codes == (Some(0), Some(0)) && identical,
        detail: format!("exit codes {:?}/{:?}, byte-identical reports: {identical}", codes.0, codes.1),
    })
}

fn main() {
    let mut log = BundleLog::default();
    let mut results: Vec<(&str, Result<Outcome>)> = Vec::new();
    results.push(("C1  Schur factorization", criterion_1(&mut log)));
    results.push(("C3  CAR / q-Fock", criterion_3()));
    results.push(("C4  CP equivalence", criterion_4()));
    results.push(("C5  chain Markov properties", criterion_5()));
    results.push(("C6  Rota identity", criterion_6()));
    results.push(("C7  Fourier multipliers", criterion_7(&mut log)));
    results.push(("C8  Schäffer dilation", criterion_8()));
    results.push(("C9  second quantization", criterion_9()));
    results.push(("C10 ★-involution", criterion_10(&mut log)));
    results.push(("C11 CLI determinism", criterion_11()));
    // symmetry residuals are gathered from the bundles of C1, C7 and C10
    results.insert(1, ("C2  symmetry / centralizer", Ok(criterion_2(&log))));

    let mut failures = 0;
    for (name, result) in results {
        let outcome = result.unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        failures += usize::from(!outcome.pass);
        println!("{} {name}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.detail);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
