//! Miller–Rabin primality testing.
//!
//! Deterministic below 3.317·10^24 using the first thirteen primes as bases;
//! above that, 64 pseudo-random bases and a `ProbablePrime` verdict.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{mul_mod, pow_mod};

const BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Bases 2..41 are a certificate below this bound.
pub const DETERMINISTIC_BOUND: u128 = 3_317_044_064_679_887_385_961_981;

const PROBABILISTIC_ROUNDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Primality {
    Prime,
    Composite,
    /// Passed the probabilistic test; not certified.
    ProbablePrime,
}

impl Primality {
    pub fn is_prime(self) -> bool {
        !matches!(self, Primality::Composite)
    }
}

/// Deterministic primality for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 43 * 43 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    // Bases 2..37 suffice below 2^64.
    'outer: for &a in &BASES[..12] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn strong_probable_prime(n: &BigUint, a: &BigUint, d: &BigUint, s: u64) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let mut x = a.modpow(d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

pub fn primality_biguint(n: &BigUint) -> Primality {
    if let Some(v) = n.to_u64() {
        return if is_prime_u64(v) {
            Primality::Prime
        } else {
            Primality::Composite
        };
    }
    for &p in &BASES {
        if (n % p).is_zero() {
            return Primality::Composite;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let deterministic = n.to_u128().is_some_and(|v| v < DETERMINISTIC_BOUND);
    if deterministic {
        for &a in &BASES {
            if !strong_probable_prime(n, &BigUint::from(a), &d, s) {
                return Primality::Composite;
            }
        }
        return Primality::Prime;
    }
    let seed = n.iter_u64_digits().fold(0x9e37_79b9_7f4a_7c15u64, |acc, w| acc.rotate_left(7) ^ w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..PROBABILISTIC_ROUNDS {
        let a = BigUint::from(rng.random_range(2..u64::MAX)) % (n - 3u32) + 2u32;
        if !strong_probable_prime(n, &a, &d, s) {
            return Primality::Composite;
        }
    }
    Primality::ProbablePrime
}

/// Primality verdict for a signed integer; only positive values can be prime.
pub fn primality(m: &BigInt) -> Primality {
    if !m.is_positive() {
        return Primality::Composite;
    }
    primality_biguint(m.magnitude())
}

/// `true` for primes and probable primes. `m <= 1` is never prime.
pub fn is_prime(m: &BigInt) -> bool {
    primality(m).is_prime()
}
