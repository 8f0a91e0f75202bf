//! Segmented sieves over integer intervals.

use crate::arith::{isqrt, primes_up_to};
use crate::error::{Error, Result};

/// Longest interval `primes_in_interval` accepts.
pub const MAX_INTERVAL: u64 = 1_000_000_000;

const SEGMENT: u64 = 1 << 18;

/// Membership bitmap for the integers of `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct ValueBitmap {
    lo: u64,
    hi: u64,
    bits: Vec<u64>,
}

impl ValueBitmap {
    fn filled(lo: u64, hi: u64) -> Self {
        let len = (hi - lo + 1) as usize;
        let mut bits = vec![u64::MAX; len.div_ceil(64)];
        if len % 64 != 0 {
            *bits.last_mut().unwrap() = (1u64 << (len % 64)) - 1;
        }
        ValueBitmap { lo, hi, bits }
    }

    #[inline]
    fn clear(&mut self, v: u64) {
        let i = (v - self.lo) as usize;
        self.bits[i / 64] &= !(1u64 << (i % 64));
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    #[inline]
    pub fn covers(&self, v: u64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Membership of `v`, which must lie in `[lo, hi]`.
    #[inline]
    pub fn contains(&self, v: u64) -> bool {
        let i = (v - self.lo) as usize;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (self.lo..=self.hi).filter(|&v| self.contains(v))
    }
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if hi - lo > MAX_INTERVAL {
        return Err(Error::budget("sieve interval", (hi - lo) as u128, MAX_INTERVAL as u128));
    }
    if hi > u64::MAX / 2 {
        return Err(Error::InvalidArgument(format!("sieve bound {hi} is too large")));
    }
    Ok(())
}

/// Primes in `[lo, hi]` as a bitmap.
pub fn prime_bitmap(lo: u64, hi: u64) -> Result<ValueBitmap> {
    check_range(lo, hi)?;
    let mut bm = ValueBitmap::filled(lo, hi);
    for v in lo..=hi.min(1) {
        bm.clear(v);
    }
    for p in primes_up_to(isqrt(hi)) {
        let start = (p * p).max(lo.div_ceil(p) * p);
        let mut m = start;
        while m <= hi {
            bm.clear(m);
            m += p;
        }
    }
    Ok(bm)
}

/// Square-free integers in `[lo, hi]` as a bitmap; 0 is excluded.
pub fn squarefree_bitmap(lo: u64, hi: u64) -> Result<ValueBitmap> {
    check_range(lo, hi)?;
    let mut bm = ValueBitmap::filled(lo, hi);
    if lo == 0 {
        bm.clear(0);
    }
    for p in primes_up_to(isqrt(hi)) {
        let q = p * p;
        let mut m = lo.div_ceil(q).max(1) * q;
        while m <= hi {
            bm.clear(m);
            m += q;
        }
    }
    Ok(bm)
}

/// Primes in `[lo, hi]`, ascending.
pub fn primes_in_interval(lo: u64, hi: u64) -> Result<Vec<u64>> {
    if hi < lo {
        return Ok(Vec::new());
    }
    check_range(lo, hi)?;
    let mut out = Vec::new();
    let mut a = lo;
    loop {
        let b = hi.min(a.saturating_add(SEGMENT - 1));
        out.extend(prime_bitmap(a, b)?.iter());
        if b == hi {
            break;
        }
        a = b + 1;
    }
    Ok(out)
}
