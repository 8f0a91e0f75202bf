//! The square-free weights `g(q, d)` and `G(q)`, in exact rational
//! arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{divisors, factor_small, mobius};
use crate::error::{Error, Result};

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn pow(p: u64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), k as usize)
}

/// `g(p^l, p^m)` for `m <= l`, from
/// `p^l (1 - p^-2) g = 0 if l >= m >= 2; 1 if m < min(2, l); 1 - p^(l-2) if l = m <= 1`.
fn g_prime_power(p: u64, l: u32, m: u32) -> BigRational {
    debug_assert!(m <= l);
    let pl = BigRational::from_integer(pow(p, l));
    let scale = &pl * (BigRational::one() - q(1, (p * p) as i64));
    let rhs = if m >= 2 {
        BigRational::zero()
    } else if m < l.min(2) {
        BigRational::one()
    } else {
        // l = m <= 1
        BigRational::one() - BigRational::new(BigInt::one(), pow(p, 2 - l))
    };
    rhs / scale
}

/// `g(q, d) = Π_{p | q} g(p^v_p(q), p^v_p(d))` for `d | q`.
pub fn g_local(qv: u64, d: u64) -> Result<BigRational> {
    if qv == 0 || d == 0 || qv % d != 0 {
        return Err(Error::InvalidArgument(format!("g(q, d) needs d | q, got q = {qv}, d = {d}")));
    }
    let mut out = BigRational::one();
    for (p, l) in factor_small(qv) {
        let mut m = 0;
        let mut dd = d;
        while dd % p == 0 {
            dd /= p;
            m += 1;
        }
        out *= g_prime_power(p, l, m);
    }
    Ok(out)
}

/// `G(q) = Σ_{b=1}^{q} e(b/q) g(q, gcd(b, q))`, evaluated exactly.
///
/// Grouping `b` by `d = gcd(b, q)` turns the inner sum of `e(b/q)` into the
/// Ramanujan sum `c_{q/d}(1) = μ(q/d)`, so `G(q) = Σ_{d | q} g(q, d) μ(q/d)`.
pub fn big_g_by_definition(qv: u64) -> Result<BigRational> {
    if qv == 0 {
        return Err(Error::InvalidArgument("G(q) needs q >= 1".into()));
    }
    let mut out = BigRational::zero();
    for d in divisors(qv) {
        let mu = mobius(qv / d);
        if mu != 0 {
            out += g_local(qv, d)? * BigRational::from_integer(BigInt::from(mu));
        }
    }
    Ok(out)
}

/// Multiplicative closed form: `G(p) = G(p^2) = -p^-2 (1 - p^-2)^-1` and
/// `G(p^k) = 0` for `k >= 3`.
pub fn big_g_closed_form(qv: u64) -> Result<BigRational> {
    if qv == 0 {
        return Err(Error::InvalidArgument("G(q) needs q >= 1".into()));
    }
    let mut out = BigRational::one();
    for (p, k) in factor_small(qv) {
        if k >= 3 {
            return Ok(BigRational::zero());
        }
        let p2 = (p * p) as i64;
        out *= -q(1, p2) / (BigRational::one() - q(1, p2));
    }
    Ok(out)
}

/// Below this bound `big_g` checks the closed form against the defining sum.
pub const BIG_G_CROSS_CHECK: u64 = 10_000;

/// `G(q)` from the closed form, cross-checked against the defining sum for
/// `q <= 10^4`.
pub fn big_g(qv: u64) -> Result<BigRational> {
    let closed = big_g_closed_form(qv)?;
    if qv <= BIG_G_CROSS_CHECK {
        let direct = big_g_by_definition(qv)?;
        if direct != closed {
            return Err(Error::Numerical(format!(
                "G({qv}): defining sum {direct} differs from closed form {closed}"
            )));
        }
    }
    Ok(closed)
}
