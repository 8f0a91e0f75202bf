//! Exact counts of prime, square-free and jointly prime polynomial values
//! over the lattice points of a scaled box.
//!
//! Each row along the last axis is walked with a forward-difference table,
//! so a step costs `deg` additions. Rows are grouped into slabs by the first
//! coordinate and handed to a rayon pool; slab totals are merged in order.

pub mod factor;
pub mod primality;
pub mod sieve;

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use factor::{is_squarefree, is_squarefree_u64, SquareFreeness};
pub use primality::{is_prime, is_prime_u64, primality, Primality};
pub use sieve::{prime_bitmap, primes_in_interval, squarefree_bitmap, ValueBitmap};

use crate::error::{Error, Result};
use crate::poly::MultiPoly;
use crate::region::{refined_enclosure, RationalBox};

/// Default cap on lattice points per count.
pub const DEFAULT_LATTICE_BUDGET: u128 = 1_000_000_000;

/// Value bitmaps are never longer than this.
const MAX_BITMAP: u64 = 1 << 31;

/// Chunk length along the single axis of univariate counts.
const CHUNK: i64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// `f(x)` is a positive prime.
    Prime,
    /// `f(x)` is square-free.
    #[serde(alias = "squarefree")]
    SquareFree,
    /// Every `f_i(x)` is a positive prime.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub budget: u128,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            threads: None,
            budget: DEFAULT_LATTICE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: u128,
    pub lattice_points: u128,
    #[serde(rename = "P")]
    pub p: u64,
    pub mode: CountMode,
    pub elapsed_secs: f64,
    /// Values whose square-free status could not be decided; excluded from
    /// `count`.
    pub unknown: u64,
    /// Values counted as prime on a probabilistic verdict.
    pub probable_primes: u64,
    /// Set when `unknown > 0`: the count is then only a lower bound.
    pub partial: bool,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct Tally {
    count: u128,
    unknown: u64,
    probable: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            count: self.count + o.count,
            unknown: self.unknown + o.unknown,
            probable: self.probable + o.probable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Yes,
    No,
    ProbableYes,
    Unknown,
}

/// Decides membership of single values, using a precomputed bitmap when
/// the value range is short enough.
struct Classifier {
    mode: CountMode,
    bitmap: Option<ValueBitmap>,
}

impl Classifier {
    fn new(mode: CountMode, range: Option<(i128, i128)>, points: u128) -> Result<Self> {
        let bitmap = match range {
            None => None,
            Some((lo, hi)) => {
                let (a, b) = match mode {
                    CountMode::SquareFree => {
                        if lo <= 0 && hi >= 0 {
                            (0, lo.abs().max(hi.abs()))
                        } else {
                            (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()))
                        }
                    }
                    _ => (lo.max(2), hi),
                };
                let len = (b - a).max(0) as u128 + 1;
                let worth_it = len <= (4 * points).max(1 << 20) && len <= MAX_BITMAP as u128;
                if b < a || !worth_it || b > 100_000_000_000_000 {
                    None
                } else {
                    Some(match mode {
                        CountMode::SquareFree => squarefree_bitmap(a as u64, b as u64)?,
                        _ => prime_bitmap(a as u64, b as u64)?,
                    })
                }
            }
        };
        Ok(Classifier { mode, bitmap })
    }

    #[inline]
    fn small(&self, v: i128) -> Verdict {
        let yes = |b: bool| if b { Verdict::Yes } else { Verdict::No };
        match self.mode {
            CountMode::SquareFree => {
                let a = v.unsigned_abs() as u64;
                match &self.bitmap {
                    Some(bm) if bm.covers(a) => yes(bm.contains(a)),
                    _ => yes(is_squarefree_u64(a)),
                }
            }
            _ => {
                if v < 2 {
                    return Verdict::No;
                }
                let a = v as u64;
                match &self.bitmap {
                    Some(bm) if bm.covers(a) => yes(bm.contains(a)),
                    _ => yes(is_prime_u64(a)),
                }
            }
        }
    }

    fn big(&self, v: &BigInt) -> Verdict {
        if let Some(s) = v.to_i64() {
            return self.small(s as i128);
        }
        match self.mode {
            CountMode::SquareFree => match is_squarefree(v) {
                SquareFreeness::SquareFree => Verdict::Yes,
                SquareFreeness::NotSquareFree => Verdict::No,
                SquareFreeness::Unknown => Verdict::Unknown,
            },
            _ => match primality(v) {
                Primality::Prime => Verdict::Yes,
                Primality::Composite => Verdict::No,
                Primality::ProbablePrime => Verdict::ProbableYes,
            },
        }
    }
}

/// Forward differences `Δ^0 g(t), …, Δ^k g(t)` of a univariate restriction.
#[derive(Debug, Clone)]
struct DiffTable<T> {
    d: Vec<T>,
}

impl<T: Clone + for<'a> std::ops::AddAssign<&'a T> + for<'a> std::ops::SubAssign<&'a T>> DiffTable<T> {
    fn from_values(mut v: Vec<T>) -> Self {
        let k = v.len() - 1;
        for level in 1..=k {
            for i in (level..=k).rev() {
                let prev = v[i - 1].clone();
                v[i] -= &prev;
            }
        }
        DiffTable { d: v }
    }

    #[inline]
    fn value(&self) -> &T {
        &self.d[0]
    }

    #[inline]
    fn step(&mut self) {
        for k in 0..self.d.len() - 1 {
            let (lo, hi) = self.d.split_at_mut(k + 1);
            lo[k] += &hi[0];
        }
    }
}

/// Counts lattice points `x ∈ Z^n ∩ P B` whose values satisfy `mode`.
///
/// `Prime` and `SquareFree` take exactly one polynomial; `Joint` takes one
/// or more pairwise-distinct polynomials and requires all values to be
/// positive primes.
pub fn count_values(
    polys: &[MultiPoly],
    b: &RationalBox,
    p: u64,
    mode: CountMode,
    opts: &CountOptions,
) -> Result<CountResult> {
    let start = Instant::now();
    validate(polys, b, mode)?;
    let lattice_points = b.lattice_point_count(p)?;
    if lattice_points > opts.budget {
        return Err(Error::budget("lattice enumeration", lattice_points, opts.budget));
    }
    let Some(ranges) = b.lattice_ranges(p)? else {
        return Ok(CountResult {
            count: 0,
            lattice_points: 0,
            p,
            mode,
            elapsed_secs: start.elapsed().as_secs_f64(),
            unknown: 0,
            probable_primes: 0,
            partial: false,
        });
    };
    let n = b.dim();
    let last = n - 1;
    let steps: Vec<u32> = polys.iter().map(|f| f.degree_in(last)).collect();

    // Values read by the difference tables stay within the lattice hull,
    // extended by the table order along the last axis.
    let hull = RationalBox::from_integers(&ranges)?;
    let mut range: Option<(i128, i128)> = None;
    let mut fast = true;
    for (f, &k) in polys.iter().zip(&steps) {
        let ext = hull.extend_upper(last, &BigRational::from_integer(BigInt::from(k)));
        let enc = refined_enclosure(f, &ext, 2 * n as u32);
        let limit = BigRational::from_integer(BigInt::from(i64::MAX));
        if enc.magnitude() >= limit {
            fast = false;
            continue;
        }
        let lo = enc.lo.floor().to_integer().to_i128().unwrap();
        let hi = enc.hi.ceil().to_integer().to_i128().unwrap();
        range = Some(match range {
            None => (lo, hi),
            Some((a, b)) => (a.min(lo), b.max(hi)),
        });
    }
    let classifier = Classifier::new(mode, if fast { range } else { None }, lattice_points)?;

    let items: Vec<(i64, i64, i64)> = if n == 1 {
        let (lo, hi) = ranges[0];
        let mut v = Vec::new();
        let mut a = lo;
        while a <= hi {
            let b = hi.min(a.saturating_add(CHUNK - 1));
            v.push((0, a, b));
            if b == hi {
                break;
            }
            a = b + 1;
        }
        v
    } else {
        (ranges[0].0..=ranges[0].1).map(|x| (x, ranges[last].0, ranges[last].1)).collect()
    };

    let work = |&(x0, t0, t1): &(i64, i64, i64)| -> Result<Tally> {
        let mut tally = Tally::default();
        if n == 1 {
            return row(polys, &steps, &[], t0, t1, &classifier, fast);
        }
        let mid = &ranges[1..last];
        let mut prefix: Vec<i64> = std::iter::once(x0).chain(mid.iter().map(|r| r.0)).collect();
        loop {
            tally = tally.merge(row(polys, &steps, &prefix, t0, t1, &classifier, fast)?);
            if !advance(&mut prefix[1..], mid) {
                break;
            }
        }
        Ok(tally)
    };

    let per_item: Vec<Result<Tally>> = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(|| items.par_iter().map(work).collect()),
        None => items.par_iter().map(work).collect(),
    };
    let mut total = Tally::default();
    for t in per_item {
        total = total.merge(t?);
    }
    Ok(CountResult {
        count: total.count,
        lattice_points,
        p,
        mode,
        elapsed_secs: start.elapsed().as_secs_f64(),
        unknown: total.unknown,
        probable_primes: total.probable,
        partial: total.unknown > 0,
    })
}

fn validate(polys: &[MultiPoly], b: &RationalBox, mode: CountMode) -> Result<()> {
    if polys.is_empty() {
        return Err(Error::InvalidArgument("no polynomial given".into()));
    }
    if mode != CountMode::Joint && polys.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{mode:?} counting takes one polynomial, got {}",
            polys.len()
        )));
    }
    for f in polys {
        if f.n_vars() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: b.dim(),
                got: f.n_vars(),
            });
        }
        if f.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
    }
    for i in 0..polys.len() {
        for j in 0..i {
            if polys[i] == polys[j] {
                return Err(Error::InvalidArgument(format!(
                    "polynomials {} and {} coincide",
                    j + 1,
                    i + 1
                )));
            }
        }
    }
    Ok(())
}

/// Odometer over the inclusive `ranges`; `false` after the last point.
fn advance(x: &mut [i64], ranges: &[(i64, i64)]) -> bool {
    for i in (0..x.len()).rev() {
        if x[i] < ranges[i].1 {
            x[i] += 1;
            return true;
        }
        x[i] = ranges[i].0;
    }
    false
}

fn row_values(f: &MultiPoly, prefix: &[i64], t0: i64, k: u32) -> Result<Vec<BigInt>> {
    let mut pt: Vec<i64> = prefix.to_vec();
    pt.push(t0);
    let last = pt.len() - 1;
    (0..=k as i64)
        .map(|i| {
            pt[last] = t0 + i;
            f.evaluate_i64(&pt)
        })
        .collect()
}

fn row(
    polys: &[MultiPoly],
    steps: &[u32],
    prefix: &[i64],
    t0: i64,
    t1: i64,
    cls: &Classifier,
    fast: bool,
) -> Result<Tally> {
    let mut tally = Tally::default();
    let len = (t1 - t0 + 1) as usize;
    let record = |tally: &mut Tally, verdicts: &mut dyn Iterator<Item = Verdict>| {
        let mut probable = false;
        for v in verdicts {
            match v {
                Verdict::Yes => {}
                Verdict::ProbableYes => probable = true,
                Verdict::No => return,
                Verdict::Unknown => {
                    tally.unknown += 1;
                    return;
                }
            }
        }
        tally.count += 1;
        if probable {
            tally.probable += 1;
        }
    };
    if fast {
        let mut tables = Vec::with_capacity(polys.len());
        for (f, &k) in polys.iter().zip(steps) {
            let vals = row_values(f, prefix, t0, k)?;
            let vals = vals.iter().map(|v| v.to_i128().expect("certified bound")).collect();
            tables.push(DiffTable::<i128>::from_values(vals));
        }
        if let [t] = tables.as_mut_slice() {
            for _ in 0..len {
                record(&mut tally, &mut std::iter::once(cls.small(*t.value())));
                t.step();
            }
        } else {
            for _ in 0..len {
                record(&mut tally, &mut tables.iter().map(|t| cls.small(*t.value())));
                tables.iter_mut().for_each(DiffTable::step);
            }
        }
    } else {
        let mut tables = Vec::with_capacity(polys.len());
        for (f, &k) in polys.iter().zip(steps) {
            tables.push(DiffTable::<BigInt>::from_values(row_values(f, prefix, t0, k)?));
        }
        for _ in 0..len {
            record(&mut tally, &mut tables.iter().map(|t| {
                let v = t.value();
                if (mode_needs_positive(cls.mode) && !v.is_positive())
                    || (cls.mode == CountMode::SquareFree && v.is_zero())
                {
                    Verdict::No
                } else {
                    cls.big(v)
                }
            }));
            tables.iter_mut().for_each(DiffTable::step);
        }
    }
    Ok(tally)
}

fn mode_needs_positive(mode: CountMode) -> bool {
    mode != CountMode::SquareFree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime_small;
    use crate::poly::parse_polynomial;
    use proptest::prelude::*;

    fn poly(s: &str, n: usize) -> MultiPoly {
        parse_polynomial(s, n).unwrap()
    }

    fn count(polys: &[MultiPoly], b: &RationalBox, p: u64, mode: CountMode) -> u128 {
        count_values(polys, b, p, mode, &CountOptions::default()).unwrap().count
    }

    /// Oracle: direct evaluation at every lattice point with trial division.
    fn brute(polys: &[MultiPoly], b: &RationalBox, p: u64, mode: CountMode) -> u128 {
        let Some(ranges) = b.lattice_ranges(p).unwrap() else { return 0 };
        let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut c = 0;
        loop {
            let ok = polys.iter().all(|f| {
                let v = f.evaluate_i64(&x).unwrap().to_i64().unwrap();
                match mode {
                    CountMode::SquareFree => {
                        let a = v.unsigned_abs();
                        a != 0 && (2u64..).take_while(|k| k * k <= a).all(|k| a % (k * k) != 0)
                    }
                    _ => v > 1 && is_prime_small(v as u64),
                }
            });
            c += ok as u128;
            if !advance(&mut x, &ranges) {
                break;
            }
        }
        c
    }

    #[test]
    fn spec_examples() {
        let b = RationalBox::cube(2, 1, 2).unwrap();
        assert_eq!(count(&[poly("x1^2+x2^2", 2)], &b, 1, CountMode::Prime), 3);
        let b = RationalBox::cube(1, 2, 3).unwrap();
        // Trial-division oracle for the primes in [200, 300].
        let want = (200..=300u64).filter(|&v| is_prime_small(v)).count() as u128;
        assert_eq!(want, 16);
        assert_eq!(count(&[poly("x1", 1)], &b, 100, CountMode::Prime), want);
        let b = RationalBox::cube(1, 1, 2).unwrap();
        assert_eq!(count(&[poly("x1", 1), poly("x1+2", 1)], &b, 10, CountMode::Joint), 2);
    }

    #[test]
    fn squarefree_of_integers() {
        let b = RationalBox::cube(1, 0, 1).unwrap();
        // 0 is excluded; 61 square-free integers in [1, 100].
        assert_eq!(count(&[poly("x1", 1)], &b, 100, CountMode::SquareFree), 61);
        let b = RationalBox::cube(1, -1, 0).unwrap();
        assert_eq!(count(&[poly("x1", 1)], &b, 100, CountMode::SquareFree), 61);
    }

    #[test]
    fn long_univariate_rows_cross_chunks() {
        let b = RationalBox::cube(1, 0, 1).unwrap();
        let r = count_values(&[poly("x1", 1)], &b, 1_000_000, CountMode::Prime, &CountOptions::default()).unwrap();
        assert_eq!(r.count, 78_498);
        assert_eq!(r.lattice_points, 1_000_001);
        assert!(!r.partial);
    }

    #[test]
    fn matches_brute_force_on_mixed_signs() {
        let b = RationalBox::from_integers(&[(-7, 9), (-3, 11)]).unwrap();
        for s in ["x1^2 - 3*x1*x2 + x2^3 - 5", "2*x1^3 + x2^2 + 1", "x1*x2 + 7"] {
            let f = poly(s, 2);
            for mode in [CountMode::Prime, CountMode::SquareFree] {
                assert_eq!(count(&[f.clone()], &b, 1, mode), brute(&[f.clone()], &b, 1, mode), "{s} {mode:?}");
            }
        }
        let fs = [poly("x1^2 + x2^2", 2), poly("x1^2 + x2^2 + 2", 2)];
        assert_eq!(count(&fs, &b, 1, CountMode::Joint), brute(&fs, &b, 1, CountMode::Joint));
    }

    #[test]
    fn big_values_take_the_slow_path() {
        // Values near 2^80 cannot use the 64-bit path.
        let f = poly("x1^5 + 3", 1);
        let b = RationalBox::cube(1, 60_000, 60_100).unwrap();
        let got = count(&[f.clone()], &b, 1, CountMode::Prime);
        let want = (60_000i64..=60_100)
            .filter(|&x| is_prime(&f.evaluate_i64(&[x]).unwrap()))
            .count() as u128;
        assert_eq!(got, want);
        let sf = count_values(&[f.clone()], &b, 1, CountMode::SquareFree, &CountOptions::default()).unwrap();
        assert_eq!(sf.count + sf.unknown as u128 <= 101, true);
    }

    #[test]
    fn threads_are_deterministic() {
        let f = poly("x1^2 + x2^2 + 1", 2);
        let b = RationalBox::cube(2, 1, 2).unwrap();
        let one = count_values(&[f.clone()], &b, 150, CountMode::Prime, &CountOptions { threads: Some(1), ..Default::default() }).unwrap();
        let four = count_values(&[f], &b, 150, CountMode::Prime, &CountOptions { threads: Some(4), ..Default::default() }).unwrap();
        assert_eq!(one.count, four.count);
    }

    #[test]
    fn budget_and_validation() {
        let b = RationalBox::cube(2, 0, 1).unwrap();
        let opts = CountOptions { threads: None, budget: 100 };
        assert!(matches!(
            count_values(&[poly("x1+x2", 2)], &b, 100, CountMode::Prime, &opts),
            Err(Error::BudgetExceeded { .. })
        ));
        let f = poly("x1+x2", 2);
        assert!(count_values(&[f.clone(), f.clone()], &b, 1, CountMode::Joint, &CountOptions::default()).is_err());
        assert!(count_values(&[f.clone(), f], &b, 1, CountMode::Prime, &CountOptions::default()).is_err());
    }

    #[test]
    fn empty_box_counts_zero() {
        let b = RationalBox::new(vec![(BigRational::new(1.into(), 3.into()), BigRational::new(1.into(), 2.into()))]).unwrap();
        let r = count_values(&[poly("x1", 1)], &b, 1, CountMode::Prime, &CountOptions::default()).unwrap();
        assert_eq!((r.count, r.lattice_points), (0, 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn differences_agree_with_direct_evaluation(
            c in proptest::collection::vec(-20i64..20, 6),
            x1 in -50i64..50,
            t0 in -50i64..50,
        ) {
            let f = MultiPoly::from_terms(2, [
                (vec![3, 0], c[0]), (vec![1, 2], c[1]), (vec![0, 3], c[2]),
                (vec![0, 1], c[3]), (vec![1, 1], c[4]), (vec![0, 0], c[5]),
            ].into_iter().map(|(e, c)| (e, BigInt::from(c)))).unwrap();
            prop_assume!(!f.is_zero());
            let k = f.degree_in(1).max(1);
            let vals = row_values(&f, &[x1], t0, k).unwrap();
            let mut t = DiffTable::from_values(vals.iter().map(|v| v.to_i128().unwrap()).collect());
            for i in 0..40 {
                prop_assert_eq!(BigInt::from(*t.value()), f.evaluate_i64(&[x1, t0 + i]).unwrap());
                t.step();
            }
        }
    }
}
