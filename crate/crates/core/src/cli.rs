//! Verification suites behind the `dilation-lab` binary: JSON inputs,
//! residual reports and exit codes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{verify_beta_embedding, verify_embedding, verify_markov_property, verify_rota, ChainSpace};
use crate::dilation::{build_dilation, star_swap_check, verify_morphism_markov, verify_schur_factorization};
use crate::error::{precondition, shape, Result};
use crate::fock::{second_quantize, FermionRep};
use crate::fourier::{build_crossed_dilation, certify_posdef, verify_fourier_identity, FiniteGroup, FourierSymbol};
use crate::matcore::{self, Matrix, Tolerances, C64};
use crate::sample::{self, DEFAULT_SEED};
use crate::schaffer::{build_schaffer, halmos, verify_gamma_factorization, verify_ppnp, verify_rota_secondquant};
use crate::schur::{certify_symbol, SchurSymbol};
use crate::state::{certify_markov, DiagonalState, DEFAULT_T_SAMPLES};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_DEPTH: usize = 2;
pub const DEFAULT_STEPS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckSchur,
    Rota,
    Fourier,
    Secondquant,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    /// Overrides the numerical tolerance used for every residual check.
    pub tol: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub depth: usize,
    /// Overrides the window given in a contraction file.
    pub window: Option<usize>,
    pub steps: usize,
    /// Record wall-clock time; otherwise `duration_ms` is 0 so that reports
    /// are byte-identical across runs.
    pub timing: bool,
}

impl RunConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: input.into(),
            tol: None,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            depth: DEFAULT_DEPTH,
            window: None,
            steps: DEFAULT_STEPS,
            timing: false,
        }
    }

    fn tolerances(&self) -> Result<Tolerances> {
        let mut tol = Tolerances::default();
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(precondition("--tol must be positive"));
            }
            tol.num = t;
        }
        Ok(tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub pass: bool,
    pub seed: u64,
    pub duration_ms: u64,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check, then the verdict.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            out.push_str(&format!("{mark} {:<32} {:>12.3e} (tol {:.0e})\n", c.name, c.residual, c.tol));
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        out
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, residual: f64, tol: f64) -> bool {
        let pass = residual.is_finite() && residual <= tol;
        // JSON has no NaN; a non-finite residual is reported as infinite.
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        self.0.push(Check { name: name.into(), residual, tol, pass });
        pass
    }

    fn all_pass(&self) -> bool {
        self.0.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymbolFile {
    symbol: Vec<Vec<Entry>>,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GroupSpec {
    Name(String),
    Table { table: Vec<Vec<usize>> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    group: GroupSpec,
    t: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContractionFile {
    matrix: Vec<Vec<f64>>,
    window: usize,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| precondition(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| precondition(format!("cannot parse {}: {e}", path.display())))
}

fn square_rows<T>(rows: &[Vec<T>], what: &str) -> Result<usize> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(shape(format!("{what} must be a nonempty square matrix")));
    }
    Ok(n)
}

/// Parses a symbol file into a symbol and the state it acts against.
pub fn parse_symbol_file(path: &Path, tol: &Tolerances) -> Result<(SchurSymbol, DiagonalState)> {
    let file: SymbolFile = read_json(path)?;
    let n = square_rows(&file.symbol, "symbol")?;
    let coeffs = Matrix::from_fn(n, n, |i, j| match file.symbol[i][j] {
        Entry::Real(x) => C64::new(x, 0.0),
        Entry::Complex([re, im]) => C64::new(re, im),
    });
    let symbol = SchurSymbol::new(coeffs)?;
    if file.weights.len() != n {
        return Err(shape(format!("{} weights for a {n}x{n} symbol", file.weights.len())));
    }
    let state = DiagonalState::new(file.weights, tol)?;
    Ok((symbol, state))
}

pub fn parse_group(spec: &str) -> Result<FiniteGroup> {
    let bad = || precondition(format!("unknown group '{spec}'"));
    match spec.split_once(':') {
        None if spec == "s3" => FiniteGroup::s3(),
        Some(("cyclic", m)) => FiniteGroup::cyclic(m.parse().map_err(|_| bad())?),
        Some(("dihedral", m)) => FiniteGroup::dihedral(m.parse().map_err(|_| bad())?),
        _ => Err(bad()),
    }
}

pub fn parse_group_file(path: &Path) -> Result<FourierSymbol> {
    let file: GroupFile = read_json(path)?;
    let group = match file.group {
        GroupSpec::Name(s) => parse_group(&s)?,
        GroupSpec::Table { table } => FiniteGroup::from_table(table)?,
    };
    FourierSymbol::new(group, file.t)
}

pub fn parse_contraction_file(path: &Path) -> Result<(DMatrix<f64>, usize)> {
    let file: ContractionFile = read_json(path)?;
    let m = square_rows(&file.matrix, "matrix")?;
    let t = DMatrix::from_fn(m, m, |i, j| file.matrix[i][j]);
    if t.iter().any(|x| !x.is_finite()) {
        return Err(precondition("matrix entries must be finite"));
    }
    Ok((t, file.window))
}

fn symbol_checks(checks: &mut Checks, symbol: &SchurSymbol, tol: &Tolerances) -> bool {
    let n = symbol.dim();
    let report = certify_symbol(symbol, tol);
    let coeffs = symbol.coeffs();
    let unital = (0..n).map(|i| (coeffs[(i, i)] - C64::new(1.0, 0.0)).norm()).fold(0.0, f64::max);
    let asym = (coeffs - coeffs.transpose()).norm() + coeffs.iter().map(|z| z.im.abs()).sum::<f64>();
    let mut ok = checks.push("symbol_unital", unital, tol.num);
    ok &= checks.push("symbol_self_adjoint", asym, tol.num);
    ok &= checks.push("symbol_psd", (-report.min_eigenvalue).max(0.0), tol.psd);
    checks.push("cp_matches_psd", if report.choi_cp == report.psd { 0.0 } else { 1.0 }, 0.0);
    ok
}

pub fn run_check_schur(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let tol = config.tolerances()?;
    let (symbol, state) = parse_symbol_file(&config.input, &tol)?;
    let mut rng = sample::seeded(config.seed);
    let mut checks = Checks::default();
    let dilatable = symbol_checks(&mut checks, &symbol, &tol);

    let map = certify_markov(&symbol.to_markov_map(), &state, &DEFAULT_T_SAMPLES, &tol)?;
    let flags = map.flags();
    checks.push("markov_unital", flags.unital_residual, tol.num);
    checks.push("markov_cp", (-flags.choi_min_eigenvalue).max(0.0), tol.psd);
    checks.push("markov_state", flags.state_residual, tol.num);
    checks.push("markov_modular", flags.modular_residual, tol.num);

    if dilatable {
        let bundle = build_dilation(&symbol, &state, &tol)?;
        let (h, s, c) = bundle.symmetry_residuals();
        checks.push("symmetry_self_adjoint", h, tol.num);
        checks.push("symmetry_square", s, tol.num);
        checks.push("symmetry_centralizer", c, tol.num);
        let fact = verify_schur_factorization(&bundle, &symbol, config.samples, &mut rng)?;
        checks.push("factorization", fact, tol.num);
        let morph = verify_morphism_markov(&bundle, &DEFAULT_T_SAMPLES, config.samples, &mut rng)?;
        checks.push("morphism_unital", morph.unital, tol.num);
        checks.push("morphism_multiplicative", morph.multiplicative, tol.num);
        checks.push("morphism_adjoint", morph.adjoint, tol.num);
        checks.push("morphism_state", morph.state, tol.num);
        checks.push("morphism_modular", morph.modular, tol.num);
        let swap = star_swap_check(&bundle, &symbol, &state, config.samples, &mut rng)?;
        checks.push("star_swap", swap, tol.num);
    }
    Ok(finish(checks, config, start))
}

pub fn run_rota(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let tol = config.tolerances()?;
    let (symbol, state) = parse_symbol_file(&config.input, &tol)?;
    let (depth, n) = (config.depth, config.steps);
    if depth == 0 {
        return Err(precondition("--depth must be at least 1"));
    }
    if n == 0 || n > depth {
        return Err(precondition(format!("--steps must satisfy 1 ≤ n ≤ depth, got n={n}, depth={depth}")));
    }
    let mut checks = Checks::default();
    if !symbol_checks(&mut checks, &symbol, &tol) {
        return Ok(finish(checks, config, start));
    }
    let chain = ChainSpace::new(&symbol, &state, depth, &tol)?;
    for q in 0..=depth {
        checks.push(format!("embedding_J{q}"), verify_embedding(&chain, q)?.max_residual(), tol.num);
    }
    for q in 0..depth {
        checks.push(format!("beta_J{q}"), verify_beta_embedding(&chain, q)?, tol.num);
    }
    for q in 0..=depth {
        for k in 0..=q {
            let r = verify_markov_property(&chain, k, q)?;
            checks.push(format!("markov_past_n{k}_q{q}"), r.past, tol.num);
            checks.push(format!("markov_future_n{k}_q{q}"), r.future, tol.num);
            if let Some(s) = r.shift {
                checks.push(format!("markov_shift_n{k}_q{q}"), s, tol.num);
            }
        }
    }
    checks.push(format!("rota_n{n}"), verify_rota(&chain, n)?, tol.num);
    Ok(finish(checks, config, start))
}

pub fn run_fourier(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let tol = config.tolerances()?;
    let symbol = parse_group_file(&config.input)?;
    let mut rng = sample::seeded(config.seed);
    let mut checks = Checks::default();
    let report = certify_posdef(&symbol, &tol);
    let group = symbol.group();
    let t = symbol.coeffs();
    let unital = (t[group.identity()] - 1.0).abs();
    let asym = (0..group.order()).map(|g| (t[g] - t[group.inv(g)]).abs()).fold(0.0, f64::max);
    let mut ok = checks.push("posdef_unital", unital, tol.num);
    ok &= checks.push("posdef_self_adjoint", asym, tol.num);
    ok &= checks.push("posdef_psd", (-report.min_eigenvalue).max(0.0), tol.psd);
    if ok {
        let regular = certify_markov(
            &symbol.regular_schur_symbol().to_markov_map(),
            &DiagonalState::tracial(group.order()),
            &DEFAULT_T_SAMPLES,
            &tol,
        )?;
        let flags = regular.flags();
        let markov = flags
            .unital_residual
            .max((-flags.choi_min_eigenvalue).max(0.0))
            .max(flags.state_residual)
            .max(flags.modular_residual);
        checks.push("multiplier_markov", markov, tol.num);
        let dil = build_crossed_dilation(&symbol, &tol)?;
        let (h, s, c) = dil.bundle().symmetry_residuals();
        checks.push("symmetry_self_adjoint", h, tol.num);
        checks.push("symmetry_square", s, tol.num);
        checks.push("symmetry_centralizer", c, tol.num);
        checks.push("covariance", dil.covariance_residual(group)?, tol.num);
        checks.push("vector_state_trace", dil.vector_state_residual(group)?, tol.num);
        let r = verify_fourier_identity(&dil, &symbol, config.samples, &mut rng)?;
        checks.push("fourier_group_pairs", r.group_pairs, tol.num);
        checks.push("fourier_factorization", r.factorization, tol.num);
    }
    Ok(finish(checks, config, start))
}

pub fn run_secondquant(config: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let tol = config.tolerances()?;
    let (t, file_window) = parse_contraction_file(&config.input)?;
    let window = config.window.unwrap_or(file_window);
    let n = config.steps;
    if n > window {
        return Err(precondition(format!("--steps {n} exceeds the window {window}")));
    }
    let dil = build_schaffer(&t, window, &tol)?;
    let m = dil.base_dim();
    let mut checks = Checks::default();
    checks.push("unitarity", dil.unitarity_residual(), tol.num);
    checks.push("strong_dilation", dil.strong_dilation_residual(2 * window)?, tol.num);
    for k in 0..=n {
        checks.push(format!("ppnp_n{k}"), verify_ppnp(&dil, k, 2 * window - k, &tol)?, tol.num);
    }
    let u = halmos(&t, &tol)?;
    checks.push("halmos_symmetry", (&u * &u - DMatrix::identity(2 * m, 2 * m)).norm(), tol.num);

    if m <= 3 {
        let rep = FermionRep::standard(m)?;
        let gamma = second_quantize(&rep, &rep, &t, &tol)?;
        let square = second_quantize(&rep, &rep, &(&t * &t), &tol)?;
        let mult = (gamma.compose_wick(&gamma)? - square.wick_matrix()).norm();
        checks.push("gamma_multiplicative", mult, tol.num);
        let choi_min = matcore::min_eigenvalue(&gamma.to_markov_map()?.choi(), &tol)?;
        checks.push("gamma_cp", (-choi_min).max(0.0), tol.num);
    }
    if m <= 2 {
        checks.push("gamma_factorization", verify_gamma_factorization(&t, &tol)?, tol.num);
    }
    if dil.dim() <= crate::fock::FERMION_RANK_CAP {
        checks.push(format!("rota_secondquant_n{n}"), verify_rota_secondquant(&t, window, n, &tol)?, tol.num);
    }
    Ok(finish(checks, config, start))
}

fn finish(checks: Checks, config: &RunConfig, start: Instant) -> Report {
    let duration_ms = if config.timing { start.elapsed().as_millis() as u64 } else { 0 };
    Report { pass: checks.all_pass(), checks: checks.0, seed: config.seed, duration_ms }
}

pub fn run(config: &RunConfig) -> Result<Report> {
    match config.command {
        Command::CheckSchur => run_check_schur(config),
        Command::Rota => run_rota(config),
        Command::Fourier => run_fourier(config),
        Command::Secondquant => run_secondquant(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names() {
        assert_eq!(parse_group("cyclic:4").unwrap().order(), 4);
        assert_eq!(parse_group("dihedral:3").unwrap().order(), 6);
        assert_eq!(parse_group("s3").unwrap().order(), 6);
        for bad in ["cyclic", "cyclic:x", "klein", ""] {
            assert!(parse_group(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn nan_residual_fails_and_serializes() {
        let mut checks = Checks::default();
        assert!(checks.push("ok", 0.0, 1e-9));
        assert!(!checks.push("nan", f64::NAN, 1e-9));
        assert!(!checks.all_pass());
        let report = Report { pass: false, checks: checks.0, seed: 1, duration_ms: 0 };
        assert_eq!(report.exit_code(), EXIT_FAIL);
        assert!(report.summary().contains("2 checks, 1 failed"));
    }

    #[test]
    fn report_round_trips_through_json() {
        let report = Report {
            checks: vec![Check { name: "a".into(), residual: 1e-15, tol: 1e-9, pass: true }],
            pass: true,
            seed: 3,
            duration_ms: 0,
        };
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["checks"][0]["name"], "a");
        assert_eq!(v["seed"], 3);
        assert_eq!(report.exit_code(), EXIT_PASS);
    }

    #[test]
    fn fixture_check_schur_passes() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/symbol_2x2.json");
        let report = run(&RunConfig::new(Command::CheckSchur, path)).unwrap();
        assert!(report.pass, "{}", report.summary());
    }
}
