//! Point counts modulo `p` and `p^2`, and the Euler products assembled from
//! them.

mod fixed;
pub(crate) mod sweep;

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fixed::Fixed;

use crate::arith::{is_prime_small, prime_or_prime_square, primes_up_to, sat_pow};
use crate::counting::CountMode;
use crate::error::{Error, Result};
use crate::poly::MultiPoly;
use sweep::sweep_mod;

/// Default cap on residue-space points per local count.
pub const DEFAULT_LOCAL_BUDGET: u128 = 100_000_000;

/// `#{x ∈ (Z/mZ)^n : f(x) ≡ 0 (mod m)}` for `m = p` or `m = p^2`, by
/// exhaustive enumeration.
pub fn count_zeros_mod(f: &MultiPoly, modulus: u64, budget: u128) -> Result<u128> {
    f.require_nonconstant()?;
    if prime_or_prime_square(modulus).is_none() {
        return Err(Error::InvalidModulus(modulus));
    }
    zero_count(std::slice::from_ref(f), modulus, budget)
}

/// Points of `(Z/mZ)^n` where at least one of `polys` vanishes, i.e. the
/// zeros of their product, counted in a single sweep.
pub fn union_zero_count(polys: &[MultiPoly], modulus: u64, budget: u128) -> Result<u128> {
    if prime_or_prime_square(modulus).is_none() {
        return Err(Error::InvalidModulus(modulus));
    }
    zero_count(polys, modulus, budget)
}

fn zero_count(polys: &[MultiPoly], m: u64, budget: u128) -> Result<u128> {
    sweep_mod(
        polys,
        m,
        m,
        budget,
        true,
        || 0u128,
        |acc, v| {
            if v.contains(&0) {
                *acc += 1;
            }
        },
        |a, b| a + b,
    )
}

/// `#{x mod p^2 : f(x) ≡ 0}` from a sweep over `F_p^n` only.
///
/// A zero `r` of `f` mod `p` with `∇f(r) ≢ 0` lifts to exactly `p^(n-1)`
/// zeros mod `p^2`; a singular zero lifts to `p^n` of them when
/// `f(r) ≡ 0 (mod p^2)` and to none otherwise. The cost is `p^n` rather
/// than `p^(2n)`.
pub fn lifted_zero_count_p2(f: &MultiPoly, p: u64, budget: u128) -> Result<u128> {
    f.require_nonconstant()?;
    if !is_prime_small(p) {
        return Err(Error::InvalidModulus(p));
    }
    let n = f.n_vars() as u32;
    let mut polys = vec![f.clone()];
    polys.extend(f.gradient());
    let regular = sat_pow(p, n - 1);
    let singular = sat_pow(p, n);
    sweep_mod(
        &polys,
        p * p,
        p,
        budget,
        true,
        || 0u128,
        |acc, v| {
            if v[0] % p != 0 {
                return;
            }
            if v[1..].iter().any(|g| g % p != 0) {
                *acc += regular;
            } else if v[0] == 0 {
                *acc += singular;
            }
        },
        |a, b| a + b,
    )
}

/// Primes `p <= deg f` dividing `f(x)` for every integer `x`. No larger
/// prime can have this property for a primitive `f`.
pub fn fixed_prime_divisors(f: &MultiPoly) -> Result<Vec<u64>> {
    let d = f.require_nonconstant()?;
    let content = f.content();
    if !content.is_one() {
        return Err(Error::NonPrimitive(content));
    }
    let n = f.n_vars() as u32;
    let mut out = Vec::new();
    for p in primes_up_to(d as u64) {
        let all = sat_pow(p, n);
        if count_zeros_mod(f, p, all)? == all {
            out.push(p);
        }
    }
    Ok(out)
}

/// One Euler factor, kept as an exact rational.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFactor {
    pub p: u64,
    pub value: BigRational,
    /// `#{x ∈ F_p^n : f(x) = 0}` (of the product, in joint mode).
    pub n_p: Option<u128>,
    /// `#{x ∈ (Z/p^2)^n : f(x) = 0}`.
    pub n_p2: Option<u128>,
}

impl LocalFactor {
    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `(1 - N_p / p^n) / (1 - 1/p)`.
pub fn prime_euler_factor(f: &MultiPoly, p: u64, budget: u128) -> Result<LocalFactor> {
    joint_euler_factor(std::slice::from_ref(f), p, budget)
}

/// `(1 - N_p / p^n) / (1 - 1/p)^r`, with `N_p` counting zeros of the
/// product of the `r` polynomials.
pub fn joint_euler_factor(polys: &[MultiPoly], p: u64, budget: u128) -> Result<LocalFactor> {
    for f in polys {
        f.require_nonconstant()?;
    }
    if !is_prime_small(p) {
        return Err(Error::InvalidModulus(p));
    }
    let n = polys[0].n_vars() as u32;
    let np = union_zero_count(polys, p, budget)?;
    let one = BigRational::one();
    let euler = (&one - ratio(1, p as u128)).pow(polys.len() as i32);
    Ok(LocalFactor {
        p,
        value: (one - ratio(np, sat_pow(p, n))) / euler,
        n_p: Some(np),
        n_p2: None,
    })
}

/// `1 - N_{p^2} / p^(2n)`, with `N_{p^2}` obtained by lifting zeros mod `p`.
pub fn squarefree_euler_factor(f: &MultiPoly, p: u64, budget: u128) -> Result<LocalFactor> {
    let n = f.n_vars() as u32;
    let np2 = lifted_zero_count_p2(f, p, budget)?;
    let den = (p as u128).checked_pow(2 * n).ok_or_else(|| Error::budget("p^(2n)", u128::MAX, u128::MAX))?;
    Ok(LocalFactor {
        p,
        value: BigRational::one() - ratio(np2, den),
        n_p: None,
        n_p2: Some(np2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerOptions {
    /// Residue points allowed per factor; primes beyond it are left to the
    /// tail bound.
    pub budget: u128,
    /// Compute below the convergence threshold, labelling the result
    /// heuristic.
    pub force: bool,
    pub threads: Option<usize>,
}

impl Default for EulerOptions {
    fn default() -> Self {
        EulerOptions {
            budget: DEFAULT_LOCAL_BUDGET,
            force: false,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerProductEstimate {
    pub mode: CountMode,
    /// Partial product over `p <= effective_cutoff`.
    pub value: f64,
    /// The same product to 40 significant digits.
    pub value_digits: String,
    pub cutoff: u64,
    /// Largest prime actually included; below `cutoff` when the per-factor
    /// budget ran out.
    pub effective_cutoff: u64,
    pub num_factors: usize,
    /// Bound on `|full product - value|`; `None` when the factors do not
    /// decay fast enough for any bound.
    pub tail_bound: Option<f64>,
    pub decay_exponent: f64,
    /// Constant `C` in `|factor - 1| <= C p^-e`, fit on the last factors.
    pub tail_constant: f64,
    /// The decay exponent was fitted to the factors rather than implied by
    /// the singular-locus dimension.
    pub exponent_fitted: bool,
    /// Convergence hypotheses were not met and the product was forced.
    pub heuristic: bool,
}

/// Number of trailing factors used to calibrate the tail constant.
const TAIL_WINDOW: usize = 10;

/// Truncated Euler product for `mode`, with a tail estimate.
///
/// `sigmas[i]` is the singular-locus dimension of the top-degree part of
/// `polys[i]`. The tail is `|value| · expm1(C · X^(1-e) / (e-1))` for cutoff
/// `X`, which bounds the remaining factors whenever
/// `|factor - 1| <= C p^-e` holds beyond the cutoff.
pub fn euler_product(
    polys: &[MultiPoly],
    mode: CountMode,
    cutoff: u64,
    sigmas: &[u32],
    opts: &EulerOptions,
) -> Result<(EulerProductEstimate, Vec<LocalFactor>)> {
    if cutoff < 2 {
        return Err(Error::InvalidArgument(format!("Euler cutoff must be at least 2, got {cutoff}")));
    }
    if polys.is_empty() || sigmas.len() != polys.len() {
        return Err(Error::InvalidArgument("one sigma value is needed per polynomial".into()));
    }
    if mode != CountMode::Joint && polys.len() != 1 {
        return Err(Error::InvalidArgument("a single polynomial is expected".into()));
    }
    let n = polys[0].n_vars();
    for f in polys {
        f.require_nonconstant()?;
        if f.n_vars() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.n_vars() });
        }
    }
    let mut heuristic = false;
    if mode != CountMode::SquareFree {
        if let Some(s) = sigmas.iter().find(|&&s| (n as i64 - s as i64) < 3) {
            if !opts.force {
                return Err(Error::HypothesisViolated(format!(
                    "the product converges only for n - sigma >= 3, have n = {n}, sigma = {s}"
                )));
            }
            heuristic = true;
        }
    }

    let primes: Vec<u64> = primes_up_to(cutoff)
        .into_iter()
        .take_while(|&p| sat_pow(p, n as u32) <= opts.budget)
        .collect();
    if primes.is_empty() {
        return Err(Error::budget("Euler factor at p = 2", sat_pow(2, n as u32), opts.budget));
    }
    let factor = |&p: &u64| match mode {
        CountMode::Prime => prime_euler_factor(&polys[0], p, opts.budget),
        CountMode::SquareFree => squarefree_euler_factor(&polys[0], p, opts.budget),
        CountMode::Joint => joint_euler_factor(polys, p, opts.budget),
    };
    let factors: Vec<Result<LocalFactor>> = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| primes.par_iter().map(factor).collect()),
        None => primes.par_iter().map(factor).collect(),
    };
    let factors: Vec<LocalFactor> = factors.into_iter().collect::<Result<_>>()?;

    let mut product = Fixed::one();
    for lf in &factors {
        product = product.mul(&Fixed::from_rational(&lf.value));
    }
    let value = product.to_f64();

    let mut e = match mode {
        CountMode::SquareFree => 2.0,
        _ => sigmas
            .iter()
            .map(|&s| ((n as f64 - s as f64) / 2.0).min(2.0))
            .fold(f64::INFINITY, f64::min),
    };
    let mut exponent_fitted = false;
    let last = &factors[factors.len().saturating_sub(TAIL_WINDOW)..];
    let deviation = |lf: &LocalFactor| (lf.value_f64() - 1.0).abs();
    let all_exact = last.iter().all(|lf| lf.value.is_one());
    if !all_exact && e <= 1.0 {
        if let Some(fit) = fit_decay(&factors) {
            e = fit;
            exponent_fitted = true;
        }
    }
    let x = *primes.last().unwrap();
    let c = last
        .iter()
        .map(|lf| deviation(lf) * (lf.p as f64).powf(e))
        .fold(0.0, f64::max);
    let tail_bound = if c == 0.0 {
        Some(0.0)
    } else if e > 1.0 {
        let s = (x as f64).powf(1.0 - e) / (e - 1.0);
        Some(value.abs() * (c * s).exp_m1())
    } else {
        None
    };
    let heuristic = heuristic || exponent_fitted;
    Ok((
        EulerProductEstimate {
            mode,
            value,
            value_digits: product.to_decimal(40),
            cutoff,
            effective_cutoff: x,
            num_factors: factors.len(),
            tail_bound,
            decay_exponent: e,
            tail_constant: c,
            exponent_fitted,
            heuristic,
        },
        factors,
    ))
}

/// Least-squares slope of `-log|factor - 1|` against `log p` over the last
/// twenty nontrivial factors.
fn fit_decay(factors: &[LocalFactor]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = factors
        .iter()
        .rev()
        .filter(|lf| !lf.value.is_one() && lf.value.is_positive())
        .take(2 * TAIL_WINDOW)
        .map(|lf| ((lf.p as f64).ln(), (lf.value_f64() - 1.0).abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Writes `p, N_p, N_p2, factor` rows.
pub fn write_factors_csv<W: Write>(factors: &[LocalFactor], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "N_p", "N_p2", "factor"])?;
    for lf in factors {
        let opt = |v: Option<u128>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            lf.p.to_string(),
            opt(lf.n_p),
            opt(lf.n_p2),
            format!("{:.17e}", lf.value_f64()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
