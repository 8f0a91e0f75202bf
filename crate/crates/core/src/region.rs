//! Axis-aligned boxes with rational endpoints, and exact interval
//! enclosures of polynomial values over them.
//!
//! Interval bounds are computed in exact rational arithmetic, so they are
//! rigorous without any rounding-mode control.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::poly::MultiPoly;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalBox {
    intervals: Vec<(BigRational, BigRational)>,
}

impl RationalBox {
    pub fn new(intervals: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("a box needs at least one interval".into()));
        }
        for (i, (a, b)) in intervals.iter().enumerate() {
            if a > b {
                return Err(Error::InvalidArgument(format!(
                    "interval {} has lower end {a} above upper end {b}",
                    i + 1
                )));
            }
        }
        Ok(RationalBox { intervals })
    }

    pub fn from_integers(bounds: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|&(a, b)| (int(a), int(b)))
                .collect(),
        )
    }

    /// The cube `[a, b]^n`.
    pub fn cube(n: usize, a: i64, b: i64) -> Result<Self> {
        Self::from_integers(&vec![(a, b); n])
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(BigRational, BigRational)] {
        &self.intervals
    }

    pub fn volume(&self) -> BigRational {
        self.intervals
            .iter()
            .fold(BigRational::one(), |acc, (a, b)| acc * (b - a))
    }

    pub fn volume_f64(&self) -> f64 {
        self.volume().to_f64().unwrap_or(f64::NAN)
    }

    pub fn scaled(&self, factor: &BigRational) -> RationalBox {
        assert!(factor.is_positive(), "scale factor must be positive");
        RationalBox {
            intervals: self
                .intervals
                .iter()
                .map(|(a, b)| (a * factor, b * factor))
                .collect(),
        }
    }

    pub fn bounds_f64(&self) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .map(|(a, b)| (a.to_f64().unwrap(), b.to_f64().unwrap()))
            .collect()
    }

    /// Integer ranges `[ceil(P a_i), floor(P b_i)]` per axis; `None` when the
    /// box `P B` contains no lattice point.
    pub fn lattice_ranges(&self, p: u64) -> Result<Option<Vec<(i64, i64)>>> {
        let pr = int(p as i64);
        let mut out = Vec::with_capacity(self.dim());
        for (a, b) in &self.intervals {
            let lo = (a * &pr).ceil().to_integer();
            let hi = (b * &pr).floor().to_integer();
            if lo > hi {
                return Ok(None);
            }
            let (Some(lo), Some(hi)) = (lo.to_i64(), hi.to_i64()) else {
                return Err(Error::InvalidArgument(
                    "scaled box does not fit 64-bit coordinates".into(),
                ));
            };
            out.push((lo, hi));
        }
        Ok(Some(out))
    }

    /// `#(Z^n ∩ P B)`.
    pub fn lattice_point_count(&self, p: u64) -> Result<u128> {
        Ok(match self.lattice_ranges(p)? {
            None => 0,
            Some(r) => r
                .iter()
                .fold(1u128, |acc, &(lo, hi)| acc.saturating_mul((hi - lo + 1) as u128)),
        })
    }

    fn midpoint(&self) -> Vec<BigRational> {
        self.intervals
            .iter()
            .map(|(a, b)| (a + b) / int(2))
            .collect()
    }

    /// The midpoint and every corner (for at most four axes; otherwise the
    /// two extreme corners).
    fn witness_points(&self) -> Vec<Vec<BigRational>> {
        let n = self.dim();
        let mut out = vec![self.midpoint()];
        let masks: Vec<u32> = if n <= 4 {
            (0..1u32 << n).collect()
        } else {
            vec![0, u32::MAX]
        };
        for m in masks {
            out.push(
                self.intervals
                    .iter()
                    .enumerate()
                    .map(|(i, (a, b))| if m >> i.min(31) & 1 == 1 { b.clone() } else { a.clone() })
                    .collect(),
            );
        }
        out
    }

    /// Splits along the widest axis.
    fn bisect(&self) -> (RationalBox, RationalBox) {
        let axis = (0..self.dim())
            .max_by(|&i, &j| {
                let wi = &self.intervals[i].1 - &self.intervals[i].0;
                let wj = &self.intervals[j].1 - &self.intervals[j].0;
                wi.cmp(&wj).then(j.cmp(&i))
            })
            .unwrap();
        let (a, b) = &self.intervals[axis];
        let mid = (a + b) / int(2);
        let mut left = self.clone();
        let mut right = self.clone();
        left.intervals[axis].1 = mid.clone();
        right.intervals[axis].0 = mid;
        (left, right)
    }

    /// Extends the upper end of one axis by `amount`.
    pub(crate) fn extend_upper(&self, axis: usize, amount: &BigRational) -> RationalBox {
        let mut out = self.clone();
        out.intervals[axis].1 = &out.intervals[axis].1 + amount;
        out
    }
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Closed rational interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    fn point(v: BigRational) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    fn mul(&self, o: &Interval) -> Interval {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        Interval {
            lo: c.iter().min().unwrap().clone(),
            hi: c.iter().max().unwrap().clone(),
        }
    }

    fn pow(&self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(BigRational::one());
        }
        let a = num_traits::pow(self.lo.clone(), k as usize);
        let b = num_traits::pow(self.hi.clone(), k as usize);
        if k % 2 == 1 {
            return Interval { lo: a, hi: b };
        }
        if self.lo.is_negative() && self.hi.is_positive() {
            Interval {
                lo: BigRational::zero(),
                hi: a.max(b),
            }
        } else {
            Interval {
                lo: a.clone().min(b.clone()),
                hi: a.max(b),
            }
        }
    }

    pub fn magnitude(&self) -> BigRational {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Natural interval extension of `f` over the box: a rigorous enclosure of
/// `f(B)`, generally wider than the true range.
pub fn enclosure(f: &MultiPoly, b: &RationalBox) -> Interval {
    assert_eq!(f.n_vars(), b.dim(), "box dimension must match polynomial");
    let axes: Vec<Interval> = b
        .intervals
        .iter()
        .map(|(lo, hi)| Interval {
            lo: lo.clone(),
            hi: hi.clone(),
        })
        .collect();
    let mut acc = Interval::point(BigRational::zero());
    for (e, c) in f.terms() {
        let mut term = Interval::point(BigRational::from_integer(c.clone()));
        for (i, &k) in e.iter().enumerate() {
            if k > 0 {
                term = term.mul(&axes[i].pow(k));
            }
        }
        acc = acc.add(&term);
    }
    acc
}

/// Tighter enclosure obtained by bisecting into `2^depth` sub-boxes and
/// taking the hull of their enclosures.
pub fn refined_enclosure(f: &MultiPoly, b: &RationalBox, depth: u32) -> Interval {
    if depth == 0 {
        return enclosure(f, b);
    }
    let (l, r) = b.bisect();
    let x = refined_enclosure(f, &l, depth - 1);
    let y = refined_enclosure(f, &r, depth - 1);
    Interval {
        lo: x.lo.min(y.lo),
        hi: x.hi.max(y.hi),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certification {
    /// `f > threshold` everywhere on the box.
    Certified { lower_bound: BigRational },
    /// A point with `f <= threshold` was found.
    Violated { witness: Vec<BigRational> },
    /// The sub-box budget ran out first.
    Inconclusive,
}

/// Proves `f > threshold` on the box by bisection, or finds a violating
/// point. Sub-boxes are visited breadth-first so that the depth, and with it
/// the size of the endpoints, stays logarithmic in `max_boxes`.
pub fn certify_lower_bound(
    f: &MultiPoly,
    b: &RationalBox,
    threshold: &BigRational,
    max_boxes: usize,
) -> Certification {
    let mut queue = VecDeque::from([b.clone()]);
    let mut visited = 0usize;
    let mut lower: Option<BigRational> = None;
    while let Some(bx) = queue.pop_front() {
        visited += 1;
        let enc = enclosure(f, &bx);
        if &enc.lo > threshold {
            lower = Some(match lower {
                None => enc.lo,
                Some(l) => l.min(enc.lo),
            });
            continue;
        }
        for witness in bx.witness_points() {
            let v = eval_rational(f, &witness);
            if &v <= threshold {
                return Certification::Violated { witness };
            }
        }
        if visited >= max_boxes {
            return Certification::Inconclusive;
        }
        let (l, r) = bx.bisect();
        queue.push_back(l);
        queue.push_back(r);
    }
    Certification::Certified {
        lower_bound: lower.unwrap_or_else(|| threshold.clone()),
    }
}

pub fn eval_rational(f: &MultiPoly, x: &[BigRational]) -> BigRational {
    f.terms()
        .iter()
        .map(|(e, c)| {
            let mut t = BigRational::from_integer(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= num_traits::pow(x[i].clone(), k as usize);
                }
            }
            t
        })
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Default sub-box budget for positivity certification.
pub const CERTIFY_MAX_BOXES: usize = 1 << 14;

/// Certifies `f0(B) ⊂ (0, ∞)` for the top-degree part `f0`.
pub fn certify_positive(f0: &MultiPoly, b: &RationalBox) -> Result<BigRational> {
    match certify_lower_bound(f0, b, &BigRational::zero(), CERTIFY_MAX_BOXES) {
        Certification::Certified { lower_bound } => Ok(lower_bound),
        Certification::Violated { witness } => Err(Error::BoxPositivity(format!(
            "f0 is not positive at ({})",
            witness
                .iter()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
        Certification::Inconclusive => Err(Error::BoxPositivity(
            "bisection budget exhausted before positivity was proved".into(),
        )),
    }
}

impl Serialize for RationalBox {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<[Endpoint; 2]> = self
            .intervals
            .iter()
            .map(|(a, b)| [Endpoint(a.clone()), Endpoint(b.clone())])
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rows: Vec<[Endpoint; 2]> = Vec::deserialize(d)?;
        RationalBox::new(rows.into_iter().map(|[a, b]| (a.0, b.0)).collect()).map_err(D::Error::custom)
    }
}

/// A box endpoint: a JSON integer, a JSON float (converted exactly) or a
/// string `"p/q"`.
#[derive(Debug, Clone, PartialEq)]
struct Endpoint(BigRational);

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Some(v) = self.0.to_integer().to_i64() {
                return s.serialize_i64(v);
            }
        }
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        parse_endpoint(&v).map(Endpoint).map_err(D::Error::custom)
    }
}

pub fn parse_endpoint(v: &serde_json::Value) -> std::result::Result<BigRational, String> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(int(i))
            } else {
                let f = n.as_f64().ok_or("bad number")?;
                BigRational::from_float(f).ok_or_else(|| format!("non-finite endpoint {f}"))
            }
        }
        serde_json::Value::String(s) => parse_rational(s),
        other => Err(format!("box endpoint must be a number or \"p/q\" string, got {other}")),
    }
}

pub fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    let s = s.trim();
    let bad = || format!("cannot parse `{s}` as a rational");
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            if let Ok(i) = s.parse::<BigInt>() {
                return Ok(BigRational::from_integer(i));
            }
            let f: f64 = s.parse().map_err(|_| bad())?;
            BigRational::from_float(f).ok_or_else(bad)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn volume_and_scaling() {
        let b = RationalBox::from_integers(&[(1, 2), (0, 3)]).unwrap();
        assert_eq!(b.volume(), r(3, 1));
        let s = b.scaled(&r(5, 1));
        assert_eq!(s.intervals()[1], (r(0, 1), r(15, 1)));
        assert_eq!(s.volume(), r(75, 1));
        assert!(RationalBox::from_integers(&[(2, 1)]).is_err());
    }

    #[test]
    fn lattice_counts() {
        let b = RationalBox::from_integers(&[(1, 2), (1, 2)]).unwrap();
        assert_eq!(b.lattice_point_count(1).unwrap(), 4);
        assert_eq!(b.lattice_point_count(10).unwrap(), 121);
        let half = RationalBox::new(vec![(r(1, 3), r(1, 2))]).unwrap();
        assert_eq!(half.lattice_ranges(1).unwrap(), None);
        assert_eq!(half.lattice_ranges(6).unwrap(), Some(vec![(2, 3)]));
        assert_eq!(half.lattice_point_count(1).unwrap(), 0);
    }

    #[test]
    fn enclosures_contain_values() {
        let f = parse_polynomial("x1^2 - x1*x2 + 3", 2).unwrap();
        let b = RationalBox::from_integers(&[(-1, 2), (0, 1)]).unwrap();
        let enc = enclosure(&f, &b);
        let tight = refined_enclosure(&f, &b, 8);
        assert!(tight.lo >= enc.lo && tight.hi <= enc.hi);
        for x in -4..=8 {
            for y in 0..=4 {
                let pt = [r(x, 4), r(y, 4)];
                let v = eval_rational(&f, &pt);
                assert!(v >= tight.lo && v <= tight.hi);
            }
        }
    }

    #[test]
    fn positivity_certification() {
        let f = parse_polynomial("x1^2+x2^2", 2).unwrap();
        let b = RationalBox::cube(2, 1, 2).unwrap();
        assert_eq!(certify_positive(&f, &b).unwrap(), r(2, 1));
        // x1^2 - x2^2 on [1,2]^2 vanishes on the diagonal.
        let g = parse_polynomial("x1^2-x2^2", 2).unwrap();
        assert!(certify_positive(&g, &b).is_err());
        // Positive but needs bisection: (x1 - x2)^2 + 1/10 style margin.
        let h = parse_polynomial("10*x1^2 - 20*x1*x2 + 10*x2^2 + 1", 2).unwrap();
        assert!(certify_positive(&h, &b).is_ok());
    }

    #[test]
    fn straddling_zero_is_rejected() {
        let f = parse_polynomial("x1", 1).unwrap();
        let b = RationalBox::from_integers(&[(-1, 1)]).unwrap();
        assert!(matches!(
            certify_lower_bound(&f, &b, &BigRational::zero(), 64),
            Certification::Violated { .. }
        ));
    }

    #[test]
    fn json_endpoints() {
        let b: RationalBox = serde_json::from_str(r#"[[1, 2], ["1/2", 0.75]]"#).unwrap();
        assert_eq!(b.intervals()[1], (r(1, 2), r(3, 4)));
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"[[1,2],["1/2","3/4"]]"#);
        let back: RationalBox = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
