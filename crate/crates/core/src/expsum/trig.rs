//! The trigonometric polynomials `S`, `W` and `Q`, and the exact
//! orthogonality count built from `S` and `W`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{e, RootTable};
use crate::counting::{primes_in_interval, squarefree_bitmap};
use crate::error::{Error, Result};
use crate::poly::MultiPoly;
use crate::region::{certify_positive, refined_enclosure, RationalBox};

/// Bisection depth for the enclosures of `f0(B)`.
const ENCLOSURE_DEPTH: u32 = 10;

/// Multiset of the values `f(x)` over `Z^n ∩ P B`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueHistogram {
    pub counts: BTreeMap<BigInt, u64>,
}

impl ValueHistogram {
    pub fn total(&self) -> u128 {
        self.counts.values().map(|&c| c as u128).sum()
    }

    pub fn min(&self) -> Option<&BigInt> {
        self.counts.keys().next()
    }

    pub fn max(&self) -> Option<&BigInt> {
        self.counts.keys().next_back()
    }
}

pub fn lattice_value_histogram(f: &MultiPoly, b: &RationalBox, p: u64, budget: u128) -> Result<ValueHistogram> {
    if f.n_vars() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: f.n_vars(),
        });
    }
    let points = b.lattice_point_count(p)?;
    if points > budget {
        return Err(Error::budget("lattice enumeration", points, budget));
    }
    let mut h = ValueHistogram::default();
    let Some(ranges) = b.lattice_ranges(p)? else {
        return Ok(h);
    };
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    'outer: loop {
        *h.counts.entry(f.evaluate_i64(&x)?).or_insert(0) += 1;
        for i in (0..x.len()).rev() {
            if x[i] < ranges[i].1 {
                x[i] += 1;
                continue 'outer;
            }
            x[i] = ranges[i].0;
        }
        break;
    }
    Ok(h)
}

/// `S(α) = Σ_x e(α f(x))`.
pub fn s_sum(h: &ValueHistogram, alpha: f64) -> Complex64 {
    h.counts
        .iter()
        .map(|(v, &c)| e(phase(alpha, v)) * c as f64)
        .sum()
}

/// `W(α) = Σ_p e(α p)` over the given primes.
pub fn w_sum(primes: &[u64], alpha: f64) -> Complex64 {
    primes.iter().map(|&p| e(phase(alpha, &BigInt::from(p)))).sum()
}

/// `Q(α)` over square-free `m ≠ 0` in `[lo, hi]`.
pub fn q_sum_interval(lo: i64, hi: i64, alpha: f64) -> Result<Complex64> {
    if hi < lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let top = lo.unsigned_abs().max(hi.unsigned_abs());
    let sf = squarefree_bitmap(0, top)?;
    Ok((lo..=hi)
        .filter(|m| sf.contains(m.unsigned_abs()))
        .map(|m| e(phase(alpha, &BigInt::from(m))))
        .sum())
}

/// `Q(α)` over the interval induced by `f0(B)` at scale `P`.
pub fn q_sum(f: &MultiPoly, b: &RationalBox, p: u64, alpha: f64) -> Result<Complex64> {
    let (lo, hi) = q_interval(f, b, p)?;
    q_sum_interval(lo, hi, alpha)
}

/// `frac(α v)`, keeping precision when `α` is a short dyadic-free rational
/// and `v` is large.
fn phase(alpha: f64, v: &BigInt) -> f64 {
    match v.to_i64() {
        Some(s) if s.unsigned_abs() < 1 << 52 => {
            let a = alpha.rem_euclid(1.0);
            (a * s as f64).rem_euclid(1.0)
        }
        _ => (alpha * v.to_f64().unwrap_or(f64::NAN)).rem_euclid(1.0),
    }
}

/// Certified enclosure `[lo, hi] ⊇ f0(B)` with `lo > 0`.
fn f0_range(f: &MultiPoly, b: &RationalBox) -> Result<(BigRational, BigRational)> {
    let f0 = f.top_degree_part();
    let lower = certify_positive(&f0, b)?;
    let enc = refined_enclosure(&f0, b, ENCLOSURE_DEPTH);
    Ok((enc.lo.max(lower), enc.hi))
}

fn scale_pow(p: u64, d: u32) -> BigRational {
    BigRational::from_integer(num_traits::pow(BigInt::from(p), d as usize))
}

/// Prime range of the `W` sum, `[½ min f0(B) P^d, 2 max f0(B) P^d]`, with
/// the extremes replaced by a certified enclosure (which only widens it).
pub fn w_interval(f: &MultiPoly, b: &RationalBox, p: u64) -> Result<(u64, u64)> {
    let d = f.require_nonconstant()?;
    let (lo, hi) = f0_range(f, b)?;
    let s = scale_pow(p, d);
    let half = BigRational::new(1.into(), 2.into());
    let a = (lo * &s * half).ceil().to_integer();
    let z = (hi * &s * BigInt::from(2)).floor().to_integer();
    let conv = |v: BigInt| {
        v.to_u64()
            .ok_or_else(|| Error::InvalidArgument(format!("W interval endpoint {v} does not fit 64 bits")))
    };
    Ok((conv(a)?, conv(z)?))
}

/// Range of `m` in `Q`, `(min f0(B) - 1) P^d <= m <= (max f0(B) + 1) P^d`.
pub fn q_interval(f: &MultiPoly, b: &RationalBox, p: u64) -> Result<(i64, i64)> {
    let d = f.require_nonconstant()?;
    let (lo, hi) = f0_range(f, b)?;
    let s = scale_pow(p, d);
    let one = BigRational::from_integer(1.into());
    let a = ((lo - &one) * &s).ceil().to_integer();
    let z = ((hi + one) * &s).floor().to_integer();
    let conv = |v: BigInt| {
        v.to_i64()
            .ok_or_else(|| Error::InvalidArgument(format!("Q interval endpoint {v} does not fit 64 bits")))
    };
    Ok((conv(a)?, conv(z)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityCount {
    pub count: u128,
    /// `(1/N) Σ_j S(j/N) conj(W(j/N))` before rounding.
    pub raw_re: f64,
    pub raw_im: f64,
    /// Distance of the raw value from `count`.
    pub residual: f64,
    /// Grid size `N`.
    pub grid: u64,
    pub w_interval: (u64, u64),
    pub primes_in_w: usize,
}

/// Evaluates `(1/N) Σ_{j<N} S(j/N) conj(W(j/N))` with `N` larger than every
/// frequency difference, which by orthogonality of `e(·)` counts the lattice
/// points whose value is a prime of the `W` range.
pub fn orthogonality_count(f: &MultiPoly, b: &RationalBox, p: u64, budget: u128) -> Result<OrthogonalityCount> {
    let (wlo, whi) = w_interval(f, b, p)?;
    let h = lattice_value_histogram(f, b, p, budget)?;
    let primes = primes_in_interval(wlo, whi)?;
    let Some((vmin, vmax)) = h.min().zip(h.max()) else {
        return Ok(OrthogonalityCount {
            count: 0,
            raw_re: 0.0,
            raw_im: 0.0,
            residual: 0.0,
            grid: 1,
            w_interval: (wlo, whi),
            primes_in_w: primes.len(),
        });
    };
    let lo = vmin.clone().min(BigInt::from(wlo));
    let hi = vmax.clone().max(BigInt::from(whi));
    let grid = (hi - lo + 1u32)
        .to_u64()
        .ok_or_else(|| Error::InvalidArgument("frequency range does not fit 64 bits".into()))?;
    let work = grid as u128 * (h.counts.len() + primes.len()) as u128;
    if work > budget {
        return Err(Error::budget("orthogonality grid", work, budget));
    }
    let roots = RootTable::new(grid);
    let gb = BigInt::from(grid);
    let s_terms: Vec<(u64, f64)> = h
        .counts
        .iter()
        .map(|(v, &c)| (v.mod_floor(&gb).to_u64().unwrap(), c as f64))
        .collect();
    let w_terms: Vec<u64> = primes.iter().map(|&q| q % grid).collect();
    let idx = |r: u64, j: u64| ((r as u128 * j as u128) % grid as u128) as u64;
    let grid_terms: Vec<Complex64> = (0..grid)
        .into_par_iter()
        .map(|j| {
            let s: Complex64 = s_terms.iter().map(|&(r, c)| roots.get(idx(r, j)) * c).sum();
            let w: Complex64 = w_terms.iter().map(|&r| roots.get(idx(r, j))).sum();
            s * w.conj()
        })
        .collect();
    let total: Complex64 = grid_terms.iter().sum::<Complex64>() / grid as f64;
    let count = total.re.round().max(0.0);
    let residual = Complex64::new(total.re - count, total.im).norm();
    if residual >= 1e-6 {
        return Err(Error::Numerical(format!(
            "orthogonality sum {total} is not within 1e-6 of an integer"
        )));
    }
    Ok(OrthogonalityCount {
        count: count as u128,
        raw_re: total.re,
        raw_im: total.im,
        residual,
        grid,
        w_interval: (wlo, whi),
        primes_in_w: primes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{count_values, CountMode, CountOptions};
    use crate::poly::parse_polynomial;

    fn poly(s: &str, n: usize) -> MultiPoly {
        parse_polynomial(s, n).unwrap()
    }

    #[test]
    fn sums_at_zero_count_terms() {
        let f = poly("x1^2+x2^2", 2);
        let b = RationalBox::cube(2, 1, 2).unwrap();
        let h = lattice_value_histogram(&f, &b, 3, 1000).unwrap();
        assert!((s_sum(&h, 0.0).re - 16.0).abs() < 1e-12);
        assert!((w_sum(&[2, 3, 5], 0.0).re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn q_half_on_one_to_four() {
        let q = q_sum_interval(1, 4, 0.5).unwrap();
        assert!((q - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        // Sign symmetric: -4..-1 gives the same.
        assert!((q_sum_interval(-4, -1, 0.5).unwrap() - q).norm() < 1e-12);
    }

    #[test]
    fn orthogonality_examples() {
        let f = poly("x1^2+x2^2", 2);
        let b = RationalBox::cube(2, 1, 2).unwrap();
        let r = orthogonality_count(&f, &b, 1, 1 << 20).unwrap();
        assert_eq!(r.count, 3);
        assert!(r.residual < 1e-9);
        let g = poly("x1", 1);
        let b1 = RationalBox::cube(1, 2, 3).unwrap();
        assert_eq!(orthogonality_count(&g, &b1, 10, 1 << 20).unwrap().count, 2);
        // No lattice point in [1/3, 1/2].
        let tiny = RationalBox::new(vec![(BigRational::new(1.into(), 3.into()), BigRational::new(1.into(), 2.into()))]).unwrap();
        assert_eq!(orthogonality_count(&g, &tiny, 1, 1 << 20).unwrap().count, 0);
    }

    #[test]
    fn orthogonality_agrees_with_counting() {
        for (s, n, lo, hi) in [("x1^2+x2^2", 2, 1, 2), ("x1^2 + x1*x2 + 2*x2^2", 2, 1, 3), ("x1^3 + x2^3 + x3^3", 3, 1, 2)] {
            let f = poly(s, n);
            let b = RationalBox::cube(n, lo, hi).unwrap();
            for p in [1u64, 2, 3, 5] {
                let o = orthogonality_count(&f, &b, p, 1 << 24).unwrap().count;
                let c = count_values(&[f.clone()], &b, p, CountMode::Prime, &CountOptions::default()).unwrap().count;
                assert_eq!(o, c, "{s} P={p}");
            }
        }
    }

    #[test]
    fn positivity_is_required() {
        let f = poly("x1", 1);
        let b = RationalBox::cube(1, -1, 1).unwrap();
        assert!(matches!(orthogonality_count(&f, &b, 3, 1000), Err(Error::BoxPositivity(_))));
    }

    #[test]
    fn intervals() {
        let f = poly("x1^2+x2^2", 2);
        let b = RationalBox::cube(2, 1, 2).unwrap();
        // f0(B) = [2, 8].
        assert_eq!(w_interval(&f, &b, 10).unwrap(), (100, 1600));
        assert_eq!(q_interval(&f, &b, 10).unwrap(), (100, 900));
        assert!((phase(0.25, &BigInt::from(-3)) - 0.25).abs() < 1e-15);
    }
}
