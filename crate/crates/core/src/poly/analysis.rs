//! Structural checks on polynomials: singular-locus dimension estimate and
//! a one-sided irreducibility heuristic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gcd::{exact_div, repeated_factor};
use super::modp::{eval_terms_mod, restrict_to_line};
use super::MultiPoly;
use crate::arith::{is_prime_small, sat_pow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMethod {
    UserSupplied,
    ModPEstimated,
}

/// Dimension of the affine singular locus of a form, with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub value: u32,
    pub method: SigmaMethod,
    pub witness_primes: Vec<u64>,
    /// Per-prime point counts of the gradient locus, aligned with `witness_primes`.
    #[serde(default)]
    pub locus_counts: Vec<u64>,
    /// True when the per-prime estimates did not all agree.
    #[serde(default)]
    pub disagreement: bool,
}

impl SigmaEstimate {
    pub fn user_supplied(value: u32, n_vars: usize) -> Result<Self> {
        if n_vars == 0 || value as usize > n_vars - 1 {
            return Err(Error::InvalidArgument(format!(
                "sigma must lie in [0, {}], got {value}",
                n_vars.saturating_sub(1)
            )));
        }
        Ok(SigmaEstimate {
            value,
            method: SigmaMethod::UserSupplied,
            witness_primes: vec![],
            locus_counts: vec![],
            disagreement: false,
        })
    }
}

/// Estimates the dimension of `{grad f0 = 0}` from point counts over F_p.
///
/// An affine cone of dimension `s` has about `p^s` points over F_p, so each
/// prime votes `round(log N_p / log p)`. An empty locus counts as 0.
/// Ties between votes resolve to the larger value.
pub fn singular_dimension_estimate(f0: &MultiPoly, primes: &[u64], budget: u128) -> Result<SigmaEstimate> {
    f0.require_nonconstant()?;
    if !f0.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    if primes.is_empty() {
        return Err(Error::InvalidArgument("empty prime list".into()));
    }
    let n = f0.n_vars();
    let grad: Vec<MultiPoly> = f0.gradient().into_iter().filter(|g| !g.is_zero()).collect();
    let mut votes = Vec::with_capacity(primes.len());
    let mut counts = Vec::with_capacity(primes.len());
    for &p in primes {
        if !is_prime_small(p) {
            return Err(Error::InvalidArgument(format!("{p} is not prime")));
        }
        let pb = BigInt::from(p);
        if let Some(g) = grad.iter().find(|g| g.content().is_multiple_of(&pb)) {
            return Err(Error::InvalidArgument(format!(
                "prime {p} divides the content of the partial derivative {g}"
            )));
        }
        let needed = sat_pow(p, n as u32);
        if needed > budget {
            return Err(Error::budget(format!("gradient locus mod {p}"), needed, budget));
        }
        let reduced: Vec<Vec<(Vec<u32>, u64)>> = grad.iter().map(|g| g.reduce_mod(p)).collect();
        let mut point = vec![0u64; n];
        let mut count = 0u64;
        loop {
            if reduced.iter().all(|g| eval_terms_mod(g, &point, p) == 0) {
                count += 1;
            }
            if !odometer(&mut point, p) {
                break;
            }
        }
        let vote = if count == 0 {
            0
        } else {
            ((count as f64).ln() / (p as f64).ln()).round() as u32
        };
        votes.push(vote.min(n as u32 - 1));
        counts.push(count);
    }
    let disagreement = votes.iter().any(|&v| v != votes[0]);
    let value = majority(&votes);
    Ok(SigmaEstimate {
        value,
        method: SigmaMethod::ModPEstimated,
        witness_primes: primes.to_vec(),
        locus_counts: counts,
        disagreement,
    })
}

fn majority(votes: &[u32]) -> u32 {
    let mut best = (0usize, 0u32);
    for &v in votes {
        let c = votes.iter().filter(|&&w| w == v).count();
        if c > best.0 || (c == best.0 && v > best.1) {
            best = (c, v);
        }
    }
    best.1
}

/// Advances `point` through `[0, p)^n` in lexicographic order.
pub(crate) fn odometer(point: &mut [u64], p: u64) -> bool {
    for x in point.iter_mut().rev() {
        *x += 1;
        if *x < p {
            return true;
        }
        *x = 0;
    }
    false
}

/// Work cap per prime for the default singular-locus estimate.
pub const SIGMA_WORK: u128 = 1 << 22;

/// Default primes for the singular-locus estimate: the largest primes with
/// `p^n <= min(budget, SIGMA_WORK)` that exceed `deg`, and do not divide any
/// partial derivative's content. Large primes keep constant factors in
/// `N_p ≍ c p^s` from biasing the rounded exponent.
pub fn default_sigma_primes(f0: &MultiPoly, budget: u128, how_many: usize) -> Vec<u64> {
    let n = f0.n_vars() as u32;
    let d = f0.degree().unwrap_or(1) as u64;
    let grad: Vec<MultiPoly> = f0.gradient().into_iter().filter(|g| !g.is_zero()).collect();
    let cap = budget.min(SIGMA_WORK);
    let mut top = d.max(2) + 1;
    while sat_pow(top + 1, n) <= cap {
        top += 1;
    }
    let mut out = Vec::new();
    let mut p = top;
    while out.len() < how_many && p > d.max(2) {
        if sat_pow(p, n) <= cap && is_prime_small(p) && !grad.iter().any(|g| g.content().is_multiple_of(&BigInt::from(p))) {
            out.push(p);
        }
        p -= 1;
    }
    out.reverse();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Irreducibility {
    Irreducible,
    Reducible,
    Unknown,
}

const LINES_PER_PRIME: usize = 64;

/// One-sided irreducibility test over Q.
///
/// `Irreducible` is certain: `f mod p` keeps its total degree and some line
/// restriction of it has full degree and is irreducible over F_p. `Reducible`
/// is certain: a repeated factor or a small linear factor was found.
/// Everything else is `Unknown`.
pub fn heuristic_irreducibility(f: &MultiPoly, primes: &[u64]) -> Result<Irreducibility> {
    let d = f.require_nonconstant()?;
    let f = f.primitive_part();
    if d == 1 {
        return Ok(Irreducibility::Irreducible);
    }
    if repeated_factor(&f).is_some() {
        return Ok(Irreducibility::Reducible);
    }
    let n = f.n_vars();
    let top = f.top_degree_part();
    for &p in primes {
        if !is_prime_small(p) {
            continue;
        }
        if top.reduce_mod(p).is_empty() {
            // Degree drops mod p; the criterion does not apply.
            continue;
        }
        let reduced = f.reduce_mod(p);
        let mut rng = ChaCha8Rng::seed_from_u64(p ^ 0x5eed);
        for attempt in 0..LINES_PER_PRIME {
            let (base, dir): (Vec<u64>, Vec<u64>) = if attempt < n {
                // Coordinate lines through a random point first.
                let base = (0..n).map(|_| rng.random_range(0..p)).collect();
                let mut dir = vec![0; n];
                dir[attempt] = 1;
                (base, dir)
            } else {
                (
                    (0..n).map(|_| rng.random_range(0..p)).collect(),
                    (0..n).map(|_| rng.random_range(0..p)).collect(),
                )
            };
            let g = restrict_to_line(&reduced, &base, &dir, p);
            if g.degree() == Some(d as usize) && g.is_irreducible() {
                return Ok(Irreducibility::Irreducible);
            }
        }
    }
    if find_linear_factor(&f).is_some() {
        return Ok(Irreducibility::Reducible);
    }
    Ok(Irreducibility::Unknown)
}

/// Searches for a factor `c0 + sum c_i x_i` with coefficients in `[-2, 2]`.
/// Only attempted for at most four variables.
pub fn find_linear_factor(f: &MultiPoly) -> Option<MultiPoly> {
    let n = f.n_vars();
    if n > 4 || f.degree()? < 2 {
        return None;
    }
    let mut coeffs = vec![-2i64; n + 1];
    loop {
        let linear_part_nonzero = coeffs[1..].iter().any(|&c| c != 0);
        let first_nonzero_positive = coeffs[1..].iter().find(|&&c| c != 0).is_some_and(|&c| c > 0);
        let g = coeffs.iter().fold(0i64, |acc, &c| acc.gcd(&c));
        if linear_part_nonzero && first_nonzero_positive && g == 1 {
            let mut terms = vec![(vec![0; n], BigInt::from(coeffs[0]))];
            for i in 0..n {
                let mut e = vec![0; n];
                e[i] = 1;
                terms.push((e, BigInt::from(coeffs[i + 1])));
            }
            let cand = MultiPoly::from_terms(n, terms).expect("dimensions match");
            if let Some(q) = exact_div(f, &cand) {
                if !q.is_constant() || !q.constant_term().abs().is_one() {
                    return Some(cand);
                }
            }
        }
        // Next coefficient tuple in [-2, 2]^(n+1).
        let mut i = 0;
        loop {
            if i > n {
                return None;
            }
            coeffs[i] += 1;
            if coeffs[i] <= 2 {
                break;
            }
            coeffs[i] = -2;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn p(s: &str, n: usize) -> MultiPoly {
        parse_polynomial(s, n).unwrap()
    }

    /// Brute-force count of the gradient locus over F_p^n.
    fn brute_locus(f: &MultiPoly, p: i64) -> u64 {
        let n = f.n_vars();
        let grad = f.gradient();
        let mut count = 0;
        let total = (p as u64).pow(n as u32);
        for idx in 0..total {
            let mut x = Vec::with_capacity(n);
            let mut r = idx as i64;
            for _ in 0..n {
                x.push(r % p);
                r /= p;
            }
            if grad
                .iter()
                .all(|g| g.evaluate_i64(&x).unwrap().mod_floor(&BigInt::from(p)) == BigInt::from(0))
            {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn four_squares_is_nonsingular() {
        let f = p("x1^2+x2^2+x3^2+x4^2", 4);
        assert_eq!(brute_locus(&f, 3), 1);
        assert_eq!(brute_locus(&f, 5), 1);
        let s = singular_dimension_estimate(&f, &[3, 5], 1 << 20).unwrap();
        assert_eq!(s.value, 0);
        assert_eq!(s.locus_counts, vec![1, 1]);
        assert!(!s.disagreement);
        assert_eq!(s.method, SigmaMethod::ModPEstimated);
    }

    #[test]
    fn cusp_form_has_one_dimensional_locus() {
        let f = p("x1*x2^2", 2);
        assert_eq!(brute_locus(&f, 5), 5);
        let s = singular_dimension_estimate(&f, &[5], 1 << 20).unwrap();
        assert_eq!(s.value, 1);
        assert_eq!(s.locus_counts, vec![5]);
    }

    #[test]
    fn linear_form_has_empty_locus() {
        let s = singular_dimension_estimate(&p("x1", 1), &[3], 100).unwrap();
        assert_eq!(s.value, 0);
        assert_eq!(s.locus_counts, vec![0]);
    }

    #[test]
    fn estimate_errors() {
        let f = p("x1^2+x2^2", 2);
        assert!(matches!(
            singular_dimension_estimate(&f, &[], 100),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            singular_dimension_estimate(&f, &[101], 100),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(
            singular_dimension_estimate(&f, &[2], 100),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(
            singular_dimension_estimate(&p("x1^2+x2", 2), &[3], 100),
            Err(Error::NotHomogeneous)
        );
    }

    #[test]
    fn sigma_user_supplied_bounds() {
        assert!(SigmaEstimate::user_supplied(3, 4).is_ok());
        assert!(SigmaEstimate::user_supplied(4, 4).is_err());
    }

    #[test]
    fn irreducibility_examples() {
        assert_eq!(
            heuristic_irreducibility(&p("x1^2+x2^2", 2), &[3]).unwrap(),
            Irreducibility::Irreducible
        );
        assert_eq!(
            heuristic_irreducibility(&p("x1^2-x2^2", 2), &[3, 5, 7]).unwrap(),
            Irreducibility::Reducible
        );
        assert_eq!(
            heuristic_irreducibility(&p("x1^2+x2^2+x3^2+x4^2", 4), &[3]).unwrap(),
            Irreducibility::Irreducible
        );
        assert_eq!(
            heuristic_irreducibility(&p("(x1+x2)^2", 2), &[3]).unwrap(),
            Irreducibility::Reducible
        );
        assert_eq!(
            heuristic_irreducibility(&p("x1 + 7", 1), &[]).unwrap(),
            Irreducibility::Irreducible
        );
    }

    #[test]
    fn irreducibility_falls_back_to_unknown() {
        // x^4 + 1 is irreducible over Q but reducible modulo every prime, and
        // a product of two quadratics has no small linear factor.
        assert_eq!(
            heuristic_irreducibility(&p("x1^4+1", 1), &[3, 5, 7, 11, 13]).unwrap(),
            Irreducibility::Unknown
        );
        assert_eq!(
            heuristic_irreducibility(&p("(x1^2+x2^2+1)*(x1^2+2*x2^2+3)", 2), &[]).unwrap(),
            Irreducibility::Unknown
        );
    }
}
