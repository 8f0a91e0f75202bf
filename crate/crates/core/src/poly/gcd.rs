//! Exact division and gcd in Z[x1..xn], recursive on the highest variable.

use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::MultiPoly;

/// `a / b` if `b` divides `a` in Z[x], otherwise `None`.
pub fn exact_div(a: &MultiPoly, b: &MultiPoly) -> Option<MultiPoly> {
    let n = a.n_vars();
    if b.is_zero() {
        return None;
    }
    if a.is_zero() {
        return Some(MultiPoly::zero(n));
    }
    if b.is_constant() {
        let c = b.constant_term();
        if a.terms().values().all(|x| (x % &c).is_zero()) {
            return Some(a.div_scalar_exact(&c));
        }
        return None;
    }
    let v = b.main_var().unwrap();
    let db = b.degree_in(v);
    let lb = b.coefficients_in(v).pop().unwrap();
    let mut r = a.clone();
    let mut q = MultiPoly::zero(n);
    while !r.is_zero() {
        let dr = r.degree_in(v);
        if dr < db {
            return None;
        }
        let lr = r.coefficients_in(v).pop().unwrap();
        let t = exact_div(&lr, &lb)?;
        let mut shift = vec![0; n];
        shift[v] = dr - db;
        let term = &t * &MultiPoly::monomial(shift, 1);
        r = &r - &(&term * b);
        q = &q + &term;
    }
    Some(q)
}

fn leading_in(a: &MultiPoly, v: usize) -> MultiPoly {
    a.coefficients_in(v).pop().unwrap()
}

/// Pseudo-remainder of `a` by `b` with respect to `v`.
fn prem(a: &MultiPoly, b: &MultiPoly, v: usize) -> MultiPoly {
    let n = a.n_vars();
    let db = b.degree_in(v);
    let lb = leading_in(b, v);
    let mut r = a.clone();
    while !r.is_zero() && r.degree_in(v) >= db {
        let dr = r.degree_in(v);
        let lr = leading_in(&r, v);
        let mut shift = vec![0; n];
        shift[v] = dr - db;
        let sub = &(&lr * &MultiPoly::monomial(shift, 1)) * b;
        r = &(&lb * &r) - &sub;
    }
    r
}

/// Gcd of the coefficients of `a` viewed as a polynomial in `v`.
fn content_in(a: &MultiPoly, v: usize) -> MultiPoly {
    let mut it = a.coefficients_in(v).into_iter().filter(|c| !c.is_zero());
    let first = it.next().unwrap_or_else(|| MultiPoly::zero(a.n_vars()));
    it.fold(first, |acc, c| gcd(&acc, &c))
}

fn primitive_in(a: &MultiPoly, v: usize) -> MultiPoly {
    let c = content_in(a, v);
    exact_div(a, &c).expect("content divides")
}

fn normalize(a: MultiPoly) -> MultiPoly {
    if a.leading_coefficient().is_negative() {
        -&a
    } else {
        a
    }
}

/// Greatest common divisor in Z[x1..xn], normalized to a positive leading
/// coefficient. `gcd(0, 0) = 0`.
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let n = a.n_vars();
    if a.is_zero() {
        return normalize(b.clone());
    }
    if b.is_zero() {
        return normalize(a.clone());
    }
    if a.is_constant() || b.is_constant() {
        let g = a.content().gcd(&b.content());
        return MultiPoly::constant(n, g);
    }
    let v = a.main_var().max(b.main_var()).unwrap();
    if a.degree_in(v) == 0 {
        return gcd(a, &content_in(b, v));
    }
    if b.degree_in(v) == 0 {
        return gcd(&content_in(a, v), b);
    }
    let ca = content_in(a, v);
    let cb = content_in(b, v);
    let c = gcd(&ca, &cb);
    let mut pa = exact_div(a, &ca).expect("content divides");
    let mut pb = exact_div(b, &cb).expect("content divides");
    if pa.degree_in(v) < pb.degree_in(v) {
        std::mem::swap(&mut pa, &mut pb);
    }
    let g = loop {
        let r = prem(&pa, &pb, v);
        if r.is_zero() {
            break pb;
        }
        if r.degree_in(v) == 0 {
            break MultiPoly::constant(n, 1);
        }
        pa = pb;
        pb = primitive_in(&r, v);
    };
    let g = if g.is_constant() {
        MultiPoly::constant(n, 1)
    } else {
        primitive_in(&g, v)
    };
    normalize(&c * &g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Separability {
    Separable,
    NotSeparable,
}

/// Nonconstant gcd of `f` and all its partial derivatives, if any. Over Q
/// this is nonconstant exactly when `f` has a repeated irreducible factor.
pub fn repeated_factor(f: &MultiPoly) -> Option<MultiPoly> {
    let pf = f.primitive_part();
    let mut g = pf.clone();
    for i in 0..f.n_vars() {
        let d = pf.derivative(i);
        if d.is_zero() {
            continue;
        }
        g = gcd(&g, &d);
        if g.is_constant() {
            return None;
        }
    }
    (!g.is_constant()).then_some(g)
}

pub fn separability_check(f: &MultiPoly) -> Separability {
    if f.is_constant() {
        // Units and zero have no repeated factors to speak of.
        return Separability::Separable;
    }
    match repeated_factor(f) {
        None => Separability::Separable,
        Some(_) => Separability::NotSeparable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn p(s: &str, n: usize) -> MultiPoly {
        parse_polynomial(s, n).unwrap()
    }

    #[test]
    fn separability_examples() {
        assert_eq!(separability_check(&p("x1^2+x2^2", 2)), Separability::Separable);
        assert_eq!(separability_check(&p("(x1+x2)^2", 2)), Separability::NotSeparable);
        assert_eq!(separability_check(&p("x1*x2", 2)), Separability::Separable);
        assert_eq!(
            separability_check(&p("(x1^2 - x2*x3)^2*(x1+1)", 3)),
            Separability::NotSeparable
        );
        assert_eq!(separability_check(&p("x1*(x1+2)", 1)), Separability::Separable);
    }

    #[test]
    fn gcd_examples() {
        let a = p("(x1+x2)*(x1-x2)", 2);
        let b = p("(x1+x2)^2", 2);
        assert_eq!(gcd(&a, &b), p("x1+x2", 2));
        let c = p("6*x1^2*x2 + 6*x1*x2", 2);
        let d = p("4*x1*x2^2", 2);
        assert_eq!(gcd(&c, &d), p("2*x1*x2", 2));
        assert_eq!(gcd(&p("x1+1", 2), &p("x2+1", 2)), MultiPoly::constant(2, 1));
    }

    #[test]
    fn exact_division() {
        let f = p("x1^3 - x1*x2^2", 2);
        assert_eq!(exact_div(&f, &p("x1 - x2", 2)), Some(p("x1^2 + x1*x2", 2)));
        assert_eq!(exact_div(&f, &p("x1 + 2", 2)), None);
        assert_eq!(exact_div(&p("2*x1", 1), &MultiPoly::constant(1, 4)), None);
    }

    fn small_poly(n: usize) -> impl Strategy<Value = MultiPoly> {
        prop::collection::vec((prop::collection::vec(0u32..3, n), -5i64..6), 1..4)
            .prop_filter_map("nonconstant", move |t| {
                let f = MultiPoly::from_terms(n, t.into_iter().map(|(e, c)| (e, BigInt::from(c))))
                    .unwrap();
                (!f.is_constant()).then_some(f)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn gcd_divides_both_and_recovers_common_factor(
            a in small_poly(2), b in small_poly(2), c in small_poly(2)
        ) {
            let x = &a * &c;
            let y = &b * &c;
            let g = gcd(&x, &y);
            prop_assert!(exact_div(&x, &g).is_some());
            prop_assert!(exact_div(&y, &g).is_some());
            prop_assert!(exact_div(&g, &c.primitive_part()).is_some());
        }

        #[test]
        fn squares_are_never_separable(a in small_poly(2), b in small_poly(2)) {
            let f = &(&a * &a) * &b;
            prop_assert_eq!(separability_check(&f), Separability::NotSeparable);
        }
    }
}
