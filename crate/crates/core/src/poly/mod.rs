//! Sparse multivariate polynomials over the integers.
//!
//! A [`MultiPoly`] stores a map from exponent vectors to nonzero big-integer
//! coefficients. Variables are indexed `0..n_vars` internally and printed as
//! `x1..x{n}`.

mod analysis;
mod gcd;
pub mod modp;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use analysis::{
    default_sigma_primes, find_linear_factor, heuristic_irreducibility,
    singular_dimension_estimate, Irreducibility, SigmaEstimate, SigmaMethod,
};
pub use gcd::{exact_div, gcd, repeated_factor, separability_check, Separability};
pub use parse::parse_polynomial;

/// Exponent vector of a monomial, one entry per variable.
pub type Exponents = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    n_vars: usize,
    terms: BTreeMap<Exponents, BigInt>,
}

impl MultiPoly {
    pub fn zero(n_vars: usize) -> Self {
        MultiPoly {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(n_vars);
        p.add_term(vec![0; n_vars], c.into());
        p
    }

    /// The variable `x{index+1}`.
    pub fn var(n_vars: usize, index: usize) -> Self {
        assert!(index < n_vars, "variable index out of range");
        let mut e = vec![0; n_vars];
        e[index] = 1;
        let mut p = Self::zero(n_vars);
        p.add_term(e, BigInt::one());
        p
    }

    pub fn monomial(exponents: Exponents, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c.into());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, combining
    /// duplicates and dropping zero coefficients.
    pub fn from_terms<I>(n_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponents, BigInt)>,
    {
        let mut p = Self::zero(n_vars);
        for (e, c) in terms {
            if e.len() != n_vars {
                return Err(Error::DimensionMismatch {
                    expected: n_vars,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, BigInt> {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    /// Coefficient of the monomial with exponent `e` (zero if absent).
    pub fn coefficient(&self, e: &[u32]) -> BigInt {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> BigInt {
        self.coefficient(&vec![0; self.n_vars])
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    /// Highest-indexed variable that occurs with positive degree.
    pub fn main_var(&self) -> Option<usize> {
        (0..self.n_vars).rev().find(|&v| self.degree_in(v) > 0)
    }

    /// Rejects the zero polynomial and constants, returning the degree.
    pub fn require_nonconstant(&self) -> Result<u32> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if self.is_constant() {
            return Err(Error::ConstantPolynomial);
        }
        Ok(self.degree().unwrap_or(0))
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    /// The sum of the terms of maximal total degree.
    pub fn top_degree_part(&self) -> MultiPoly {
        let Some(d) = self.degree() else {
            return self.clone();
        };
        MultiPoly {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() == d)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Gcd of the coefficients, always non-negative (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    /// `self / content`, with the leading term (largest exponent key) positive.
    pub fn primitive_part(&self) -> MultiPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.content();
        if self.leading_coefficient().is_negative() {
            c = -c;
        }
        self.div_scalar_exact(&c)
    }

    /// Coefficient of the largest exponent vector in lexicographic order.
    pub fn leading_coefficient(&self) -> BigInt {
        self.terms
            .values()
            .next_back()
            .cloned()
            .unwrap_or_default()
    }

    pub fn scale(&self, c: &BigInt) -> MultiPoly {
        if c.is_zero() {
            return Self::zero(self.n_vars);
        }
        MultiPoly {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(e, x)| (e.clone(), x * c))
                .collect(),
        }
    }

    pub(crate) fn div_scalar_exact(&self, c: &BigInt) -> MultiPoly {
        MultiPoly {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(e, x)| {
                    debug_assert!((x % c).is_zero());
                    (e.clone(), x / c)
                })
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut result = Self::constant(self.n_vars, 1);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Partial derivative with respect to variable `var` (0-based).
    pub fn derivative(&self, var: usize) -> MultiPoly {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[var] -= 1;
            out.add_term(ne, c * BigInt::from(e[var]));
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.n_vars).map(|i| self.derivative(i)).collect()
    }

    /// Coefficients with respect to `var`: entry `k` is the coefficient of
    /// `var^k`, a polynomial in which `var` does not occur.
    pub fn coefficients_in(&self, var: usize) -> Vec<MultiPoly> {
        let deg = self.degree_in(var) as usize;
        let mut out = vec![Self::zero(self.n_vars); deg + 1];
        for (e, c) in &self.terms {
            let k = e[var] as usize;
            let mut ne = e.clone();
            ne[var] = 0;
            out[k].add_term(ne, c.clone());
        }
        out
    }

    pub fn from_coefficients_in(n_vars: usize, var: usize, coeffs: &[MultiPoly]) -> MultiPoly {
        let mut out = Self::zero(n_vars);
        for (k, c) in coeffs.iter().enumerate() {
            for (e, x) in &c.terms {
                let mut ne = e.clone();
                ne[var] += k as u32;
                out.add_term(ne, x.clone());
            }
        }
        out
    }

    /// Exact value at an integer point.
    pub fn evaluate_int(&self, point: &[BigInt]) -> Result<BigInt> {
        self.check_dim(point.len())?;
        let mut total = BigInt::zero();
        let mut powers: Vec<Vec<BigInt>> = point.iter().map(|x| vec![BigInt::one(), x.clone()]).collect();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let table = &mut powers[i];
                while table.len() <= k as usize {
                    let next = table.last().unwrap() * &point[i];
                    table.push(next);
                }
                term *= &table[k as usize];
            }
            total += term;
        }
        Ok(total)
    }

    pub fn evaluate_i64(&self, point: &[i64]) -> Result<BigInt> {
        let p: Vec<BigInt> = point.iter().map(|&x| BigInt::from(x)).collect();
        self.evaluate_int(&p)
    }

    /// Floating-point evaluation; used by quadrature.
    pub fn evaluate_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = c.to_f64().unwrap_or(f64::NAN);
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        t *= point[i].powi(k as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// Residue of every coefficient modulo `m`, in `[0, m)`.
    pub fn reduce_mod(&self, m: u64) -> Vec<(Exponents, u64)> {
        let mb = BigInt::from(m);
        self.terms
            .iter()
            .filter_map(|(e, c)| {
                let r = c.mod_floor(&mb).to_u64().unwrap();
                (r != 0).then(|| (e.clone(), r))
            })
            .collect()
    }

    /// Substitutes `x_i -> a_i * x_i` for integer scalars `a_i`.
    pub fn scale_variables(&self, factors: &[BigInt]) -> MultiPoly {
        let mut out = Self::zero(self.n_vars);
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                t *= num_traits::pow(factors[i].clone(), k as usize);
            }
            out.add_term(e.clone(), t);
        }
        out
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got,
            });
        }
        Ok(())
    }

    fn check_same_ring(&self, other: &MultiPoly) {
        assert_eq!(
            self.n_vars, other.n_vars,
            "polynomials live in rings with different numbers of variables"
        );
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_same_ring(rhs);
        let mut out = MultiPoly::zero(self.n_vars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Exponents = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&BigInt::from(-1))
    }
}

macro_rules! forward_owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly { (&self).$m(&rhs) }
        }
    )*};
}
forward_owned_ops!(Add add, Sub sub, Mul mul);

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest total degree first, then reverse lexicographic.
        let mut ordered: Vec<(&Exponents, &BigInt)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (idx, (e, c)) in ordered.into_iter().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            let is_const = e.iter().all(|&k| k == 0);
            if !abs.is_one() || is_const {
                factors.push(abs.to_string());
            }
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(format!("x{}", i + 1)),
                    _ => factors.push(format!("x{}^{}", i + 1, k)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    e: Vec<u32>,
    c: String,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    n: usize,
    terms: Vec<TermJson>,
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            n: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson {
                    e: e.clone(),
                    c: c.to_string(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PolyJson::deserialize(d)?;
        let mut terms = Vec::with_capacity(raw.terms.len());
        for t in raw.terms {
            let c: BigInt = t
                .c
                .parse()
                .map_err(|_| D::Error::custom(format!("bad coefficient `{}`", t.c)))?;
            terms.push((t.e, c));
        }
        MultiPoly::from_terms(raw.n, terms).map_err(D::Error::custom)
    }
}
