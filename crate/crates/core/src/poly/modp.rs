//! Dense univariate polynomials over F_p, coefficients low degree first.

use crate::arith::{inv_mod_prime, mul_mod, pow_mod};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyModP {
    p: u64,
    coeffs: Vec<u64>,
}

impl PolyModP {
    pub fn new(p: u64, coeffs: Vec<u64>) -> Self {
        let mut out = PolyModP {
            p,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        };
        out.trim();
        out
    }

    pub fn zero(p: u64) -> Self {
        PolyModP { p, coeffs: vec![] }
    }

    pub fn one(p: u64) -> Self {
        Self::new(p, vec![1])
    }

    /// The monomial `t`.
    pub fn t(p: u64) -> Self {
        Self::new(p, vec![0, 1])
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0);
                let b = other.coeffs.get(i).copied().unwrap_or(0);
                (a + b) % self.p
            })
            .collect();
        Self::new(self.p, c)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let c = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0);
                let b = other.coeffs.get(i).copied().unwrap_or(0);
                (a + self.p - b) % self.p
            })
            .collect();
        Self::new(self.p, c)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.p);
        }
        let mut c = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] = (c[i + j] + mul_mod(a, b, self.p)) % self.p;
            }
        }
        Self::new(self.p, c)
    }

    pub fn rem(&self, modulus: &Self) -> Self {
        let dm = modulus.degree().expect("division by zero polynomial");
        let inv_lc = inv_mod_prime(modulus.coeffs[dm], self.p);
        let mut r = self.coeffs.clone();
        while r.len() > dm {
            let top = r.len() - 1;
            let factor = mul_mod(r[top], inv_lc, self.p);
            if factor != 0 {
                for (i, &m) in modulus.coeffs.iter().enumerate() {
                    let idx = top - dm + i;
                    r[idx] = (r[idx] + self.p - mul_mod(factor, m, self.p)) % self.p;
                }
            }
            r.pop();
            while r.last() == Some(&0) {
                r.pop();
            }
        }
        Self::new(self.p, r)
    }

    pub fn monic(&self) -> Self {
        match self.coeffs.last() {
            None => self.clone(),
            Some(&lc) => {
                let inv = inv_mod_prime(lc, self.p);
                Self::new(self.p, self.coeffs.iter().map(|&c| mul_mod(c, inv, self.p)).collect())
            }
        }
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// `self^e mod modulus`.
    pub fn pow_mod(&self, mut e: u128, modulus: &Self) -> Self {
        let mut acc = Self::one(self.p).rem(modulus);
        let mut base = self.rem(modulus);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(modulus);
            }
            base = base.mul(&base).rem(modulus);
            e >>= 1;
        }
        acc
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| (mul_mod(acc, x, self.p) + c) % self.p)
    }

    /// Rabin's irreducibility test over F_p.
    pub fn is_irreducible(&self) -> bool {
        let Some(d) = self.degree() else {
            return false;
        };
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        let f = self.monic();
        let t = Self::t(self.p);
        // t^(p^k) mod f by repeated p-th powering.
        let frob = |x: &Self| x.pow_mod(self.p as u128, &f);
        let mut powers = Vec::with_capacity(d + 1);
        let mut cur = t.rem(&f);
        powers.push(cur.clone());
        for _ in 1..=d {
            cur = frob(&cur);
            powers.push(cur.clone());
        }
        // powers[k] = t^(p^k) mod f
        if powers[d].sub(&t.rem(&f)).rem(&f) != Self::zero(self.p) {
            return false;
        }
        for (q, _) in crate::arith::factor_small(d as u64) {
            let k = d / q as usize;
            let g = powers[k].sub(&t).gcd(&f);
            if g.degree() != Some(0) {
                return false;
            }
        }
        true
    }
}

/// Restricts a multivariate polynomial (given by coefficients mod p) to the
/// line `x = base + dir * t`, returning the univariate result in `t`.
pub fn restrict_to_line(terms: &[(Vec<u32>, u64)], base: &[u64], dir: &[u64], p: u64) -> PolyModP {
    let n = base.len();
    let lines: Vec<PolyModP> = (0..n)
        .map(|i| PolyModP::new(p, vec![base[i], dir[i]]))
        .collect();
    let mut power_cache: Vec<Vec<PolyModP>> = lines.iter().map(|l| vec![PolyModP::one(p), l.clone()]).collect();
    let mut out = PolyModP::zero(p);
    for (e, c) in terms {
        let mut term = PolyModP::new(p, vec![*c]);
        for (i, &k) in e.iter().enumerate() {
            let cache = &mut power_cache[i];
            while cache.len() <= k as usize {
                let next = cache.last().unwrap().mul(&lines[i]);
                cache.push(next);
            }
            term = term.mul(&cache[k as usize]);
        }
        out = out.add(&term);
    }
    out
}

/// Value of a multivariate polynomial with coefficients mod `p` at `x`.
pub fn eval_terms_mod(terms: &[(Vec<u32>, u64)], x: &[u64], p: u64) -> u64 {
    terms.iter().fold(0, |acc, (e, c)| {
        let mut t = *c;
        for (i, &k) in e.iter().enumerate() {
            if k > 0 {
                t = mul_mod(t, pow_mod(x[i], k as u64, p), p);
            }
        }
        (acc + t) % p
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: a polynomial of degree 2 or 3 over F_p is
    /// irreducible iff it has no root.
    fn no_roots(f: &PolyModP, p: u64) -> bool {
        (0..p).all(|x| f.eval(x) != 0)
    }

    #[test]
    fn rabin_matches_root_oracle_for_low_degree() {
        for p in [2u64, 3, 5, 7] {
            for a in 0..p {
                for b in 0..p {
                    let quad = PolyModP::new(p, vec![a, b, 1]);
                    assert_eq!(quad.is_irreducible(), no_roots(&quad, p), "p={p} {quad:?}");
                    for c in 0..p {
                        let cubic = PolyModP::new(p, vec![a, b, c, 1]);
                        assert_eq!(cubic.is_irreducible(), no_roots(&cubic, p));
                    }
                }
            }
        }
    }

    #[test]
    fn quartic_products_of_irreducible_quadratics() {
        // (t^2+1)^2 and (t^2+1)(t^2+t+2) have no roots mod 3 but are reducible.
        let a = PolyModP::new(3, vec![1, 0, 1]);
        let b = PolyModP::new(3, vec![2, 1, 1]);
        assert!(a.is_irreducible() && b.is_irreducible());
        assert!(!a.mul(&a).is_irreducible());
        assert!(!a.mul(&b).is_irreducible());
        // t^4 + t + 1 is irreducible over F_2.
        assert!(PolyModP::new(2, vec![1, 1, 0, 0, 1]).is_irreducible());
    }

    #[test]
    fn line_restriction() {
        // x1^2 + x2^2 on the line (t, 1) is t^2 + 1.
        let terms = vec![(vec![2, 0], 1), (vec![0, 2], 1)];
        let g = restrict_to_line(&terms, &[0, 1], &[1, 0], 3);
        assert_eq!(g.coeffs(), &[1, 0, 1]);
        assert!(g.is_irreducible());
        assert_eq!(eval_terms_mod(&terms, &[2, 2], 3), 2);
    }
}
