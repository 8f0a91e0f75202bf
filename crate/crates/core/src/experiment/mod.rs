//! Hypothesis gating and predicted-versus-empirical experiments.

mod report;

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counting::{count_values, CountMode, CountOptions, DEFAULT_LATTICE_BUDGET};
use crate::error::{Error, Result};
use crate::integral::{li_f, li_joint};
use crate::local::{euler_product, fixed_prime_divisors, EulerOptions, EulerProductEstimate, DEFAULT_LOCAL_BUDGET};
use crate::poly::{
    default_sigma_primes, gcd, heuristic_irreducibility, parse_polynomial, separability_check, singular_dimension_estimate,
    Irreducibility, MultiPoly, Separability, SigmaEstimate,
};
use crate::region::{certify_lower_bound, eval_rational, Certification, RationalBox, CERTIFY_MAX_BOXES};

pub use report::{emit_report, write_report, ReportFormat, CSV_COLUMNS};

/// Primes tried by the irreducibility heuristic.
const IRREDUCIBILITY_PRIMES: [u64; 14] = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

/// Primes used for each singular-locus estimate.
const SIGMA_PRIMES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaOverride {
    One(u32),
    Each(Vec<u32>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative accuracy requested from the logarithmic integral.
    pub quadrature: f64,
    /// `verify` fails when `|ratio - 1|` exceeds this at the largest `P`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quadrature: 1e-9,
            ratio: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Lattice points per count.
    pub lattice: u64,
    /// Residue points per Euler factor or singular-locus count.
    pub local: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            lattice: DEFAULT_LATTICE_BUDGET as u64,
            local: DEFAULT_LOCAL_BUDGET as u64,
        }
    }
}

/// One JSON document driving an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub polynomials: Vec<String>,
    #[serde(rename = "box")]
    pub region: RationalBox,
    pub mode: CountMode,
    #[serde(rename = "P_grid")]
    pub p_grid: Vec<u64>,
    pub euler_cutoff: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_override: Option<SigmaOverride>,
    #[serde(default)]
    pub force: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Treat polynomials the heuristic cannot decide as irreducible.
    #[serde(default)]
    pub assume_irreducible: bool,
    #[serde(default)]
    pub budgets: Budgets,
}

/// A validated configuration with its polynomials parsed.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ExperimentConfig,
    pub polys: Vec<MultiPoly>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the configuration and parses its polynomials.
    pub fn validate(self) -> Result<Problem> {
        let cfg = |m: String| Error::Config(m);
        let n = self.region.dim();
        if self.polynomials.is_empty() {
            return Err(cfg("no polynomials given".into()));
        }
        if self.mode != CountMode::Joint && self.polynomials.len() != 1 {
            return Err(cfg(format!(
                "mode {:?} takes exactly one polynomial, got {}",
                self.mode,
                self.polynomials.len()
            )));
        }
        let polys = self
            .polynomials
            .iter()
            .map(|s| {
                let f = parse_polynomial(s, n).map_err(|e| cfg(format!("polynomial `{s}`: {e}")))?;
                f.require_nonconstant().map_err(|e| cfg(format!("polynomial `{s}`: {e}")))?;
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        if self.p_grid.is_empty() || self.p_grid.contains(&0) {
            return Err(cfg("P_grid must be a non-empty list of positive integers".into()));
        }
        if self.euler_cutoff < 2 {
            return Err(cfg(format!("euler_cutoff must be at least 2, got {}", self.euler_cutoff)));
        }
        if !(self.tolerances.quadrature > 0.0 && self.tolerances.quadrature < 1.0) {
            return Err(cfg(format!(
                "tolerances.quadrature must lie in (0, 1), got {}",
                self.tolerances.quadrature
            )));
        }
        if let Some(r) = self.tolerances.ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(cfg(format!("tolerances.ratio must be positive, got {r}")));
            }
        }
        if self.threads == Some(0) {
            return Err(cfg("threads must be positive".into()));
        }
        if let Some(SigmaOverride::Each(v)) = &self.sigma_override {
            if v.len() != polys.len() {
                return Err(cfg(format!(
                    "sigma_override has {} entries for {} polynomials",
                    v.len(),
                    polys.len()
                )));
            }
        }
        for s in self.sigma_values() {
            SigmaEstimate::user_supplied(s, n).map_err(|e| cfg(e.to_string()))?;
        }
        Ok(Problem { config: self, polys })
    }

    /// The user-supplied sigma per polynomial; empty when none was given.
    pub fn sigma_values(&self) -> Vec<u32> {
        match &self.sigma_override {
            None => vec![],
            Some(SigmaOverride::One(s)) => vec![*s; self.polynomials.len()],
            Some(SigmaOverride::Each(v)) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: CheckStatus,
    /// Whether the check gates the experiment; the others are informational.
    pub required: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub mode: CountMode,
    pub checks: Vec<HypothesisCheck>,
    /// Singular-locus dimension per polynomial; `None` when no estimate was
    /// possible within the budget.
    pub sigma_used: Vec<Option<SigmaEstimate>>,
}

impl HypothesisReport {
    /// True when every required check passed.
    pub fn satisfied(&self) -> bool {
        self.checks.iter().all(|c| !c.required || c.status == CheckStatus::Pass)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: impl Into<String>, status: CheckStatus, required: bool, detail: impl Into<String>) -> HypothesisCheck {
    HypothesisCheck {
        name: name.into(),
        status,
        required,
        detail: detail.into(),
    }
}

fn pass_if(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

/// Minimum of `n - sigma` for the prime-value asymptotic:
/// `max(4, (d - 1) 2^(d - 1) + 1)`.
pub fn prime_variable_threshold(d: u32) -> u128 {
    let d = d as u128;
    4u128.max((d - 1) * (1u128 << (d - 1).min(100)) + 1)
}

/// The square-free asymptotic needs `3 (n - sigma) > max(3, (d - 1) 2^d)`.
pub fn squarefree_variable_condition(n_minus_sigma: u32, d: u32) -> bool {
    let d = d as u128;
    3 * n_minus_sigma as u128 > 3u128.max((d - 1) * (1u128 << d.min(100)))
}

fn sigma_for(f: &MultiPoly, supplied: Option<u32>, budget: u128) -> (Option<SigmaEstimate>, String) {
    let n = f.n_vars();
    if let Some(s) = supplied {
        return match SigmaEstimate::user_supplied(s, n) {
            Ok(e) => (Some(e), String::new()),
            Err(e) => (None, e.to_string()),
        };
    }
    let f0 = f.top_degree_part();
    let primes = default_sigma_primes(&f0, budget, SIGMA_PRIMES);
    if primes.is_empty() {
        return (None, format!("no prime p with p^{n} within the local budget {budget}"));
    }
    match singular_dimension_estimate(&f0, &primes, budget) {
        Ok(e) => (Some(e), String::new()),
        Err(e) => (None, e.to_string()),
    }
}

fn sigma_detail(s: &SigmaEstimate) -> String {
    match s.method {
        crate::poly::SigmaMethod::UserSupplied => format!("sigma = {} (user supplied)", s.value),
        crate::poly::SigmaMethod::ModPEstimated => format!(
            "sigma = {} (estimated mod {:?}{})",
            s.value,
            s.witness_primes,
            if s.disagreement { ", primes disagree" } else { "" }
        ),
    }
}

/// `f0 > threshold` on the box.
fn positivity_check(name: &str, f0: &MultiPoly, b: &RationalBox, threshold: i64) -> HypothesisCheck {
    let t = BigRational::from_integer(BigInt::from(threshold));
    match certify_lower_bound(f0, b, &t, CERTIFY_MAX_BOXES) {
        Certification::Certified { lower_bound } => {
            check(name, CheckStatus::Pass, true, format!("f0 >= {lower_bound} > {threshold} on the box"))
        }
        Certification::Violated { witness } => check(
            name,
            CheckStatus::Fail,
            true,
            format!(
                "f0 = {} at ({})",
                eval_rational(f0, &witness),
                witness.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", ")
            ),
        ),
        Certification::Inconclusive => check(name, CheckStatus::Unknown, true, "bisection budget exhausted"),
    }
}

fn irreducibility_check(name: &str, f: &MultiPoly, assume: bool) -> HypothesisCheck {
    match heuristic_irreducibility(f, &IRREDUCIBILITY_PRIMES) {
        Ok(Irreducibility::Irreducible) => check(name, CheckStatus::Pass, true, "irreducible (certified mod p)"),
        Ok(Irreducibility::Reducible) => check(name, CheckStatus::Fail, true, "a rational factor was found"),
        Ok(Irreducibility::Unknown) if assume => {
            check(name, CheckStatus::Pass, true, "undecided by the heuristic; assumed by configuration")
        }
        Ok(Irreducibility::Unknown) => check(
            name,
            CheckStatus::Unknown,
            true,
            "undecided by the heuristic; set assume_irreducible to proceed",
        ),
        Err(e) => check(name, CheckStatus::Unknown, true, e.to_string()),
    }
}

/// Informational: is some `p | f(x)` for every integer `x`?
fn fixed_divisor_check(f: &MultiPoly, budget: u128) -> HypothesisCheck {
    const NAME: &str = "no-fixed-prime-divisor";
    let content = f.content();
    if !content.is_one() {
        return check(NAME, CheckStatus::Fail, false, format!("every value is divisible by the content {content}"));
    }
    let d = f.degree().unwrap_or(0) as u64;
    let n = f.n_vars() as u32;
    if crate::arith::sat_pow(d.max(2), n) > budget {
        return check(NAME, CheckStatus::Unknown, false, "p^n exceeds the local budget for some p <= deg f");
    }
    match fixed_prime_divisors(f) {
        Ok(ps) if ps.is_empty() => check(NAME, CheckStatus::Pass, false, "no prime p <= deg f divides every value"),
        Ok(ps) => check(NAME, CheckStatus::Fail, false, format!("every value is divisible by {ps:?}")),
        Err(e) => check(NAME, CheckStatus::Unknown, false, e.to_string()),
    }
}

/// Informational: `f` takes some positive value on `R^n`.
fn positive_values_check(f: &MultiPoly, box_positive: bool) -> HypothesisCheck {
    const NAME: &str = "takes-positive-values";
    if box_positive {
        return check(NAME, CheckStatus::Pass, false, "implied by positivity of f0 on the box");
    }
    let n = f.n_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9051);
    for scale in [1i64, 10, 1000, 1_000_000] {
        for _ in 0..64 {
            let x: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.random_range(-scale..=scale))).collect();
            if let Ok(v) = f.evaluate_int(&x) {
                if v.is_positive() {
                    let shown = x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
                    return check(NAME, CheckStatus::Pass, false, format!("f({shown}) = {v}"));
                }
            }
        }
    }
    check(NAME, CheckStatus::Unknown, false, "no positive value found at sampled points")
}

/// Evaluates every hypothesis relevant to `mode`. Never fails: problems
/// become report entries.
pub fn check_hypotheses(
    polys: &[MultiPoly],
    b: &RationalBox,
    mode: CountMode,
    sigma_override: Option<&[u32]>,
    assume_irreducible: bool,
    local_budget: u128,
) -> HypothesisReport {
    let mut checks = Vec::new();
    let mut sigma_used = Vec::new();
    for (i, f) in polys.iter().enumerate() {
        let (s, why) = sigma_for(f, sigma_override.and_then(|v| v.get(i).copied()), local_budget);
        if s.is_none() && mode != CountMode::Joint {
            checks.push(check("sigma", CheckStatus::Unknown, true, why));
        }
        sigma_used.push(s);
    }
    let n = b.dim() as u32;
    match mode {
        CountMode::Prime => {
            let f = &polys[0];
            let d = f.degree().unwrap_or(0);
            if let Some(s) = &sigma_used[0] {
                let need = prime_variable_threshold(d);
                let have = (n - s.value) as u128;
                checks.push(check(
                    "variable-count",
                    pass_if(have >= need),
                    true,
                    format!("n - sigma = {have}, need >= {need}; {}", sigma_detail(s)),
                ));
            }
            let positivity = positivity_check("box-positivity", &f.top_degree_part(), b, 0);
            let box_positive = positivity.status == CheckStatus::Pass;
            checks.push(positivity);
            checks.push(irreducibility_check("irreducible", f, assume_irreducible));
            checks.push(fixed_divisor_check(f, local_budget));
            checks.push(positive_values_check(f, box_positive));
        }
        CountMode::SquareFree => {
            let f = &polys[0];
            let d = f.degree().unwrap_or(0);
            if let Some(s) = &sigma_used[0] {
                let have = n - s.value;
                let rhs = 3u128.max((d as u128 - 1) * (1u128 << d.min(100)));
                checks.push(check(
                    "variable-count",
                    pass_if(squarefree_variable_condition(have, d)),
                    true,
                    format!("3 (n - sigma) = {}, need > {rhs}; {}", 3 * have, sigma_detail(s)),
                ));
            }
            let sep = separability_check(f);
            checks.push(check(
                "separable",
                pass_if(sep == Separability::Separable),
                true,
                match sep {
                    Separability::Separable => "no repeated factor",
                    Separability::NotSeparable => "f has a repeated factor",
                },
            ));
        }
        CountMode::Joint => {
            for (i, f) in polys.iter().enumerate() {
                let k = i + 1;
                checks.push(irreducibility_check(&format!("irreducible-{k}"), f, assume_irreducible));
                checks.push(positivity_check(&format!("box-above-one-{k}"), &f.top_degree_part(), b, 1));
            }
            let mut repeated = None;
            'outer: for i in 0..polys.len() {
                if separability_check(&polys[i]) == Separability::NotSeparable {
                    repeated = Some(format!("polynomial {} has a repeated factor", i + 1));
                    break;
                }
                for j in i + 1..polys.len() {
                    if !gcd(&polys[i], &polys[j]).is_constant() {
                        repeated = Some(format!("polynomials {} and {} share a factor", i + 1, j + 1));
                        break 'outer;
                    }
                }
            }
            checks.push(check(
                "no-repeated-factors",
                pass_if(repeated.is_none()),
                true,
                repeated.unwrap_or_else(|| "the product is separable".into()),
            ));
            let product = polys.iter().skip(1).fold(polys[0].clone(), |acc, f| &acc * f);
            checks.push(fixed_divisor_check(&product, local_budget));
        }
    }
    HypothesisReport {
        mode,
        checks,
        sigma_used,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    #[serde(rename = "P")]
    pub p: u64,
    pub lattice_points: Option<u128>,
    pub empirical: Option<u128>,
    pub predicted: Option<f64>,
    pub ratio: Option<f64>,
    pub euler_value: Option<f64>,
    pub euler_tail: Option<f64>,
    pub li_value: Option<f64>,
    pub li_error: Option<f64>,
    /// Values whose status could not be decided (square-free mode).
    pub unknown: u64,
    pub probable_primes: u64,
    /// Why the row was aborted, if it was.
    pub error: Option<String>,
    pub budget_exceeded: bool,
}

impl ExperimentRow {
    fn empty(p: u64) -> Self {
        ExperimentRow {
            p,
            lattice_points: None,
            empirical: None,
            predicted: None,
            ratio: None,
            euler_value: None,
            euler_tail: None,
            li_value: None,
            li_error: None,
            unknown: 0,
            probable_primes: 0,
            error: None,
            budget_exceeded: false,
        }
    }

    fn abort(&mut self, e: &Error) {
        self.budget_exceeded |= matches!(e, Error::BudgetExceeded { .. });
        self.error = Some(e.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub version: String,
    pub hypotheses: HypothesisReport,
    /// No rows were computed because a required check did not pass.
    pub gated: bool,
    /// Hypotheses were forced, or the Euler tail is only heuristic.
    pub heuristic: bool,
    pub euler: Option<EulerProductEstimate>,
    pub euler_error: Option<String>,
    pub rows: Vec<ExperimentRow>,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    pub fn budget_exceeded(&self) -> bool {
        self.rows.iter().any(|r| r.budget_exceeded)
    }

    /// `|ratio - 1|` at the largest `P` with a ratio.
    pub fn final_deviation(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.ratio).map(|r| (r - 1.0).abs())
    }
}

/// Runs the experiment described by `config`: hypothesis checks, the Euler
/// product, and for each `P` (ascending) the exact count, the archimedean
/// factor and their comparison.
pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let problem = config.validate()?;
    let cfg = &problem.config;
    let polys = &problem.polys;
    let b = &cfg.region;
    let local_budget = cfg.budgets.local as u128;
    let sigmas_in = cfg.sigma_values();
    let hypotheses = check_hypotheses(
        polys,
        b,
        cfg.mode,
        (!sigmas_in.is_empty()).then_some(&sigmas_in[..]),
        cfg.assume_irreducible,
        local_budget,
    );
    let satisfied = hypotheses.satisfied();
    let mut report = ExperimentReport {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        gated: !satisfied && !cfg.force,
        heuristic: !satisfied,
        hypotheses,
        euler: None,
        euler_error: None,
        rows: vec![],
        wall_time_secs: 0.0,
    };
    if report.gated {
        report.wall_time_secs = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    // An unknown sigma is replaced by the worst case n - 1.
    let n = b.dim() as u32;
    let sigmas: Vec<u32> = report
        .hypotheses
        .sigma_used
        .iter()
        .map(|s| s.as_ref().map_or(n - 1, |s| s.value))
        .collect();
    let euler_opts = EulerOptions {
        budget: local_budget,
        // The joint product is conjectural anyway; its convergence is not
        // gated on the variable count.
        force: cfg.force || cfg.mode == CountMode::Joint,
        threads: cfg.threads,
    };
    let euler = match euler_product(polys, cfg.mode, cfg.euler_cutoff, &sigmas, &euler_opts) {
        Ok((mut est, _)) => {
            if est.tail_bound.is_some_and(|t| !t.is_finite()) {
                est.tail_bound = None;
            }
            report.heuristic |= est.heuristic || est.exponent_fitted;
            Some(est)
        }
        Err(e) => {
            report.euler_error = Some(e.to_string());
            None
        }
    };
    report.euler = euler.clone();

    let count_opts = CountOptions {
        threads: cfg.threads,
        budget: cfg.budgets.lattice as u128,
    };
    let mut grid = cfg.p_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    for &p in &grid {
        let mut row = ExperimentRow::empty(p);
        if let Some(est) = &euler {
            row.euler_value = Some(est.value);
            row.euler_tail = est.tail_bound;
        }
        match count_values(polys, b, p, cfg.mode, &count_opts) {
            Ok(c) => {
                row.lattice_points = Some(c.lattice_points);
                row.empirical = Some(c.count);
                row.unknown = c.unknown;
                row.probable_primes = c.probable_primes;
            }
            Err(e) => {
                row.abort(&e);
                report.rows.push(row);
                continue;
            }
        }
        let normaliser = match cfg.mode {
            CountMode::SquareFree => row.lattice_points.map(|l| l as f64),
            _ => {
                let pf = p as f64;
                let scale = b.volume_f64() * pf.powi(n as i32);
                let tol = (cfg.tolerances.quadrature * scale).max(f64::MIN_POSITIVE);
                let li = if cfg.mode == CountMode::Prime {
                    li_f(&polys[0], b, pf, tol)
                } else {
                    li_joint(polys, b, pf, tol)
                };
                match li {
                    Ok(q) => {
                        row.li_value = Some(q.value);
                        row.li_error = Some(q.abs_error_estimate);
                        Some(q.value)
                    }
                    Err(e) => {
                        row.abort(&e);
                        None
                    }
                }
            }
        };
        if let (Some(eu), Some(norm)) = (&euler, normaliser) {
            let predicted = eu.value * norm;
            row.predicted = Some(predicted);
            if predicted > 0.0 {
                row.ratio = row.empirical.map(|c| c as f64 / predicted);
            }
        } else if row.error.is_none() {
            row.error = report.euler_error.clone();
        }
        report.rows.push(row);
    }
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    fn polys(texts: &[&str], n: usize) -> Vec<MultiPoly> {
        texts.iter().map(|t| parse_polynomial(t, n).unwrap()).collect()
    }

    fn status(r: &HypothesisReport, name: &str) -> CheckStatus {
        r.check(name).unwrap_or_else(|| panic!("no check {name}")).status
    }

    #[test]
    fn thresholds() {
        assert_eq!(prime_variable_threshold(1), 4);
        assert_eq!(prime_variable_threshold(2), 4);
        assert_eq!(prime_variable_threshold(3), 9);
        assert_eq!(prime_variable_threshold(4), 25);
        assert!(squarefree_variable_condition(2, 2));
        assert!(!squarefree_variable_condition(1, 2));
        assert!(!squarefree_variable_condition(1, 1));
        assert!(squarefree_variable_condition(2, 1));
        // 3 (n - sigma) > 16 for cubics.
        assert!(!squarefree_variable_condition(5, 3));
        assert!(squarefree_variable_condition(6, 3));
    }

    #[test]
    fn config_defaults_and_errors() {
        let c = config(r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [100], "euler_cutoff": 100}"#);
        assert_eq!(c.tolerances, Tolerances::default());
        assert!(!c.force && c.threads.is_none() && c.sigma_override.is_none());
        assert!(c.clone().validate().is_ok());
        let sq = config(r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "squarefree", "P_grid": [1], "euler_cutoff": 2, "sigma_override": 0}"#);
        assert_eq!(sq.mode, CountMode::SquareFree);
        assert_eq!(sq.sigma_override, Some(SigmaOverride::One(0)));

        for bad in [
            r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [100], "euler_cutoff": 100, "colour": 1}"#,
            r#"{"polynomials": ["x1"], "box": [[3, 2]], "mode": "prime", "P_grid": [100], "euler_cutoff": 100}"#,
            r#"{"polynomials": ["x1"], "mode": "prime", "P_grid": [100], "euler_cutoff": 100}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
        for bad in [
            r#"{"polynomials": ["x2"], "box": [[2, 3]], "mode": "prime", "P_grid": [100], "euler_cutoff": 100}"#,
            r#"{"polynomials": ["x1", "x1+2"], "box": [[2, 3]], "mode": "prime", "P_grid": [100], "euler_cutoff": 100}"#,
            r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [], "euler_cutoff": 100}"#,
            r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [10], "euler_cutoff": 1}"#,
            r#"{"polynomials": ["7"], "box": [[2, 3]], "mode": "prime", "P_grid": [10], "euler_cutoff": 10}"#,
            r#"{"polynomials": ["x1", "x1+2"], "box": [[2, 3]], "mode": "joint", "P_grid": [10], "euler_cutoff": 10, "sigma_override": [0]}"#,
            r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [10], "euler_cutoff": 10, "sigma_override": 1}"#,
        ] {
            assert!(matches!(config(bad).validate(), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn hypothesis_examples() {
        let b4 = RationalBox::cube(4, 1, 2).unwrap();
        let r = check_hypotheses(&polys(&["x1^2+x2^2+x3^2+x4^2"], 4), &b4, CountMode::Prime, Some(&[0]), false, 1 << 24);
        assert_eq!(status(&r, "variable-count"), CheckStatus::Pass);
        assert_eq!(status(&r, "box-positivity"), CheckStatus::Pass);
        assert_eq!(status(&r, "irreducible"), CheckStatus::Pass);
        assert!(r.satisfied());

        let b2 = RationalBox::cube(2, 1, 2).unwrap();
        let f = polys(&["x1^2+x2^2"], 2);
        let r = check_hypotheses(&f, &b2, CountMode::Prime, Some(&[0]), false, 1 << 24);
        assert_eq!(status(&r, "variable-count"), CheckStatus::Fail);
        assert!(!r.satisfied());
        let r = check_hypotheses(&f, &b2, CountMode::SquareFree, Some(&[0]), false, 1 << 24);
        assert_eq!(status(&r, "variable-count"), CheckStatus::Pass);
        assert_eq!(status(&r, "separable"), CheckStatus::Pass);
        assert!(r.satisfied());

        // x1^2 + x1 is always even: a fixed divisor, reported but not gating.
        let r = check_hypotheses(&polys(&["x1^2+x1+2*x2"], 2), &b2, CountMode::Prime, None, false, 1 << 24);
        let c = r.check("no-fixed-prime-divisor").unwrap();
        assert_eq!(c.status, CheckStatus::Fail);
        assert!(!c.required && c.detail.contains('2'));
    }

    #[test]
    fn sigma_is_estimated_when_not_supplied() {
        let b = RationalBox::cube(3, 1, 2).unwrap();
        let r = check_hypotheses(&polys(&["x1*x2*x3"], 3), &b, CountMode::SquareFree, None, false, 1 << 24);
        let s = r.sigma_used[0].as_ref().unwrap();
        assert_eq!(s.method, crate::poly::SigmaMethod::ModPEstimated);
        // grad(x1 x2 x3) vanishes on the three coordinate lines.
        assert_eq!(s.value, 1);
        assert!(r.check("variable-count").unwrap().detail.contains("estimated"));
    }

    #[test]
    fn positivity_and_reducibility_failures() {
        let b = RationalBox::from_integers(&[(1, 2), (1, 2), (1, 2), (3, 4)]).unwrap();
        let r = check_hypotheses(&polys(&["x1^2+x2^2+x3^2-x4^2"], 4), &b, CountMode::Prime, Some(&[0]), false, 1 << 24);
        assert_eq!(status(&r, "box-positivity"), CheckStatus::Fail);
        let b = RationalBox::cube(4, 1, 2).unwrap();
        let r = check_hypotheses(&polys(&["x1^2-x2^2+x3^2+x4^2+x1*x3"], 4), &b, CountMode::Prime, Some(&[0]), false, 1 << 24);
        assert_ne!(status(&r, "box-positivity"), CheckStatus::Pass);
        let r = check_hypotheses(&polys(&["x1^2-x2^2"], 4), &b, CountMode::Prime, Some(&[0]), false, 1 << 24);
        assert_eq!(status(&r, "irreducible"), CheckStatus::Fail);
        let b1 = RationalBox::from_integers(&[(2, 3)]).unwrap();
        let r = check_hypotheses(&polys(&["x1^2"], 1), &b1, CountMode::SquareFree, Some(&[0]), false, 1 << 24);
        assert_eq!(status(&r, "separable"), CheckStatus::Fail);
    }

    #[test]
    fn joint_checks() {
        let b = RationalBox::from_integers(&[(2, 3)]).unwrap();
        let r = check_hypotheses(&polys(&["x1", "x1+2"], 1), &b, CountMode::Joint, None, false, 1 << 24);
        assert!(r.satisfied(), "{r:?}");
        let r = check_hypotheses(&polys(&["x1", "2*x1"], 1), &b, CountMode::Joint, None, false, 1 << 24);
        assert_eq!(status(&r, "no-repeated-factors"), CheckStatus::Fail);
        let half = RationalBox::from_integers(&[(1, 3)]).unwrap();
        let r = check_hypotheses(&polys(&["x1", "x1+2"], 1), &half, CountMode::Joint, None, false, 1 << 24);
        assert_eq!(status(&r, "box-above-one-1"), CheckStatus::Fail);
        // x1 (x1 + 1) is always even.
        let r = check_hypotheses(&polys(&["x1", "x1+1"], 1), &b, CountMode::Joint, None, false, 1 << 24);
        assert_eq!(status(&r, "no-fixed-prime-divisor"), CheckStatus::Fail);
    }

    const PRIME_X1: &str = r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [10000, 1000], "euler_cutoff": 100}"#;

    #[test]
    fn unforced_failure_gates_every_row() {
        let r = run_experiment(config(PRIME_X1)).unwrap();
        assert!(r.gated && r.heuristic && r.rows.is_empty() && r.euler.is_none());
        assert_eq!(status(&r.hypotheses, "variable-count"), CheckStatus::Fail);
    }

    #[test]
    fn forced_prime_run() {
        let mut c = config(PRIME_X1);
        c.force = true;
        let r = run_experiment(c).unwrap();
        assert!(!r.gated && r.heuristic);
        assert_eq!(r.rows.iter().map(|row| row.p).collect::<Vec<_>>(), vec![1000, 10000]);
        // pi(30000) - pi(19999) and pi(3000) - pi(1999).
        assert_eq!(r.rows[0].empirical, Some(127));
        assert_eq!(r.rows[1].empirical, Some(983));
        for row in &r.rows {
            assert_eq!(row.euler_value, Some(1.0));
            let predicted = row.predicted.unwrap();
            assert_eq!(predicted, row.li_value.unwrap());
            let ratio = row.ratio.unwrap();
            let want = row.empirical.unwrap() as f64 / predicted;
            assert!((ratio - want).abs() <= 1e-12 * want);
            assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
        }
    }

    #[test]
    fn squarefree_density_run() {
        let c = config(
            r#"{"polynomials": ["x1"], "box": [[1, 2]], "mode": "square-free", "P_grid": [100000], "euler_cutoff": 10000, "force": true}"#,
        );
        let r = run_experiment(c).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.lattice_points, Some(100_001));
        assert!(row.li_value.is_none());
        let density = row.empirical.unwrap() as f64 / 100_001.0;
        assert!((density - 6.0 / std::f64::consts::PI.powi(2)).abs() < 5e-3);
        assert!((row.ratio.unwrap() - 1.0).abs() < 5e-3);
    }

    #[test]
    fn budget_errors_abort_rows_only() {
        let mut c = config(PRIME_X1);
        c.force = true;
        c.p_grid = vec![10, 1_000_000];
        c.budgets.lattice = 50_000;
        let r = run_experiment(c).unwrap();
        assert!(r.rows[0].error.is_none() && r.rows[0].empirical == Some(2));
        assert!(r.rows[1].budget_exceeded && r.rows[1].empirical.is_none());
        assert!(r.budget_exceeded());
    }

    #[test]
    fn reports_in_every_format() {
        let mut c = config(PRIME_X1);
        c.force = true;
        c.p_grid = vec![100, 1000, 10000];
        let r = run_experiment(c).unwrap();

        let mut csv = Vec::new();
        emit_report(&r, ReportFormat::Csv, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert!(lines[1].starts_with("100,101,"));

        let mut json = Vec::new();
        emit_report(&r, ReportFormat::Json, &mut json).unwrap();
        let back: ExperimentReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, r);

        let mut plot = Vec::new();
        emit_report(&r, ReportFormat::PlotData, &mut plot).unwrap();
        let text = String::from_utf8(plot).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 3);
        let first: Vec<f64> = data[0].split(' ').map(|v| v.parse().unwrap()).collect();
        assert!((first[0] - 100f64.ln()).abs() < 1e-15 && first[1] == r.rows[0].ratio.unwrap());

        let gated = run_experiment(config(PRIME_X1)).unwrap();
        let mut plot = Vec::new();
        emit_report(&gated, ReportFormat::PlotData, &mut plot).unwrap();
        assert!(String::from_utf8(plot).unwrap().lines().all(|l| l.starts_with("# ")));
        assert_eq!("plot-data".parse::<ReportFormat>().unwrap(), ReportFormat::PlotData);
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn csv_quotes_per_rfc_4180() {
        let mut c = config(PRIME_X1);
        c.force = true;
        c.p_grid = vec![10];
        let mut r = run_experiment(c).unwrap();
        r.config.polynomials = vec!["x1, \"quoted\"".into()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_report(&r, ReportFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(write_report(&r, ReportFormat::Csv, &dir.path().join("missing/r.csv")).is_err());
    }
}
