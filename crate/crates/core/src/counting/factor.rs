//! Square-free testing: trial division, then Pollard–Brent rho on whatever
//! cofactor survives.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::primality::{is_prime_u64, primality_biguint, Primality};
use crate::arith::{gcd_u64, icbrt, isqrt, mul_mod, small_primes};

/// Trial division never goes past this bound.
pub const TRIAL_LIMIT: u64 = 1_000_000;

/// Rho iterations allowed per big cofactor before giving up.
pub const RHO_BUDGET: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SquareFreeness {
    SquareFree,
    NotSquareFree,
    /// The factorisation budget ran out.
    Unknown,
}

impl SquareFreeness {
    fn from_bool(b: bool) -> Self {
        if b {
            SquareFreeness::SquareFree
        } else {
            SquareFreeness::NotSquareFree
        }
    }
}

/// `0` is not square-free; `m` and `-m` share a verdict.
pub fn is_squarefree(m: &BigInt) -> SquareFreeness {
    match m.magnitude().to_u64() {
        Some(v) => SquareFreeness::from_bool(is_squarefree_u64(v)),
        None => squarefree_biguint(m.magnitude()),
    }
}

pub fn is_squarefree_u64(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut n = n;
    let limit = TRIAL_LIMIT.min(icbrt(n) + 1);
    for &p in small_primes() {
        if p > limit || p * p * p > n {
            break;
        }
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
    }
    cofactor_squarefree_u64(n, limit)
}

/// `n` has no prime factor up to `limit`.
fn cofactor_squarefree_u64(n: u64, limit: u64) -> bool {
    if n == 1 || is_prime_u64(n) {
        return true;
    }
    let r = isqrt(n);
    if r * r == n {
        return false;
    }
    // Composite, not a square, and too small for three factors above the
    // trial bound: a product of two distinct primes.
    if (limit as u128 + 1).pow(3) > n as u128 {
        return true;
    }
    let mut factors = Vec::new();
    factor_u64(n, &mut factors);
    factors.sort_unstable();
    factors.windows(2).all(|w| w[0] != w[1])
}

/// Full factorisation by rho; `n > 1`.
fn factor_u64(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    let r = isqrt(n);
    if r * r == n {
        factor_u64(r, out);
        factor_u64(r, out);
        return;
    }
    let mut c = 1;
    loop {
        if let Some(d) = brent_u64(n, c) {
            factor_u64(d, out);
            factor_u64(n / d, out);
            return;
        }
        c += 1;
    }
}

/// One Pollard–Brent attempt with `x -> x^2 + c`; a nontrivial divisor or
/// `None` if the walk closed up.
fn brent_u64(n: u64, c: u64) -> Option<u64> {
    if n % 2 == 0 {
        return Some(2);
    }
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let m = 128;
    let (mut y, mut r, mut q, mut g) = (2u64, 1u64, 1u64, 1u64);
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..m.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = gcd_u64(q, n);
            k += m;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = gcd_u64(x.abs_diff(ys), n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn squarefree_biguint(n: &BigUint) -> SquareFreeness {
    let mut n = n.clone();
    let limit = TRIAL_LIMIT.min(n.cbrt().to_u64().unwrap_or(u64::MAX).saturating_add(1));
    for &p in small_primes() {
        if p > limit {
            break;
        }
        let (q, r) = n.div_rem(&BigUint::from(p));
        if r.is_zero() {
            if (&q % p).is_zero() {
                return SquareFreeness::NotSquareFree;
            }
            n = q;
        }
    }
    if let Some(v) = n.to_u64() {
        return SquareFreeness::from_bool(cofactor_squarefree_u64(v, limit));
    }
    let mut budget = RHO_BUDGET;
    let mut factors = Vec::new();
    if !factor_big(n, &mut factors, &mut budget) {
        return SquareFreeness::Unknown;
    }
    factors.sort();
    SquareFreeness::from_bool(factors.windows(2).all(|w| w[0] != w[1]))
}

/// Factors into primes (or probable primes); `false` when the budget ran out.
fn factor_big(n: BigUint, out: &mut Vec<BigUint>, budget: &mut u64) -> bool {
    if n.is_one() {
        return true;
    }
    if let Some(v) = n.to_u64() {
        let mut small = Vec::new();
        factor_u64(v, &mut small);
        out.extend(small.into_iter().map(BigUint::from));
        return true;
    }
    if primality_biguint(&n) != Primality::Composite {
        out.push(n);
        return true;
    }
    let r = n.sqrt();
    if &r * &r == n {
        out.push(r.clone());
        out.push(r);
        // A repeated factor settles the question; no need to go further.
        return true;
    }
    for c in 1u32..=16 {
        match brent_big(&n, &BigUint::from(c), budget) {
            Some(d) => {
                let q = &n / &d;
                return factor_big(d, out, budget) && factor_big(q, out, budget);
            }
            None if *budget == 0 => return false,
            None => {}
        }
    }
    false
}

fn brent_big(n: &BigUint, c: &BigUint, budget: &mut u64) -> Option<BigUint> {
    let one = BigUint::one();
    let f = |x: &BigUint| (x * x + c) % n;
    let diff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    let m = 128u64;
    let mut y = BigUint::from(2u32);
    let mut x = y.clone();
    let mut ys = y.clone();
    let mut q = one.clone();
    let mut g = one.clone();
    let mut r = 1u64;
    while g == one {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g == one {
            ys = y.clone();
            let steps = m.min(r - k);
            if *budget < steps {
                *budget = 0;
                return None;
            }
            *budget -= steps;
            for _ in 0..steps {
                y = f(&y);
                q = (&q * diff(&x, &y)) % n;
            }
            g = q.gcd(n);
            k += m;
        }
        r *= 2;
    }
    if &g == n {
        loop {
            ys = f(&ys);
            g = diff(&x, &ys).gcd(n);
            if g > one {
                break;
            }
        }
    }
    (&g != n).then_some(g)
}
