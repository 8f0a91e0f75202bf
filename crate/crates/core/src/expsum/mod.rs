//! Complete exponential sums `S_{a,q}`, their averages `T_f(q)`, the
//! square-free weights, and exact checks of the orthogonality and point-count
//! identities they satisfy.

mod trig;
mod weights;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub use trig::{
    lattice_value_histogram, orthogonality_count, q_interval, q_sum, q_sum_interval, s_sum, w_interval, w_sum,
    OrthogonalityCount, ValueHistogram,
};
pub use weights::{big_g, big_g_by_definition, big_g_closed_form, g_local, BIG_G_CROSS_CHECK};

use crate::arith::{gcd_u64, sat_pow};
use crate::error::{Error, Result};
use crate::local::count_zeros_mod;
use crate::local::sweep::sweep_mod;
use crate::poly::MultiPoly;

pub type ComplexValue = Complex64;

/// Default cap on residue points per exponential-sum evaluation.
pub const DEFAULT_EXPSUM_BUDGET: u128 = 100_000_000;

/// `e(k/q)` for `k = 0..q`, each entry computed directly.
#[derive(Debug, Clone)]
pub struct RootTable {
    q: u64,
    roots: Vec<Complex64>,
}

impl RootTable {
    pub fn new(q: u64) -> Self {
        assert!(q >= 1);
        let roots = (0..q)
            .map(|k| {
                let t = TAU * (k as f64 / q as f64);
                Complex64::new(t.cos(), t.sin())
            })
            .collect();
        RootTable { q, roots }
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    /// `e(k/q)`.
    #[inline]
    pub fn get(&self, k: u64) -> Complex64 {
        self.roots[(k % self.q) as usize]
    }
}

/// `e(z) = exp(2πiz)`, reducing `z` mod 1 first.
pub fn e(z: f64) -> Complex64 {
    let t = TAU * z.rem_euclid(1.0);
    Complex64::new(t.cos(), t.sin())
}

/// `h[r] = #{x ∈ (Z/qZ)^n : f(x) ≡ r}`.
pub fn residue_histogram(f: &MultiPoly, qv: u64, budget: u128) -> Result<Vec<u64>> {
    f.require_nonconstant()?;
    if qv == 0 {
        return Err(Error::InvalidModulus(0));
    }
    let n = f.n_vars() as u32;
    if qv == 1 {
        return Ok(vec![1]);
    }
    let len = qv as usize;
    sweep_mod(
        std::slice::from_ref(f),
        qv,
        qv,
        budget,
        true,
        || vec![0u64; len],
        |h, v| h[v[0] as usize] += 1,
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    )
    .inspect(|h| debug_assert_eq!(h.iter().map(|&c| c as u128).sum::<u128>(), sat_pow(qv, n)))
}

fn sum_from_histogram(h: &[u64], a: u64, roots: &RootTable) -> Complex64 {
    let qv = roots.order();
    let a = a % qv;
    h.iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(r, &c)| roots.get(((a as u128 * r as u128) % qv as u128) as u64) * c as f64)
        .sum()
}

/// `S_{a,q} = Σ_{x ∈ (Z/qZ)^n} e(a f(x) / q)`.
pub fn complete_exp_sum(f: &MultiPoly, a: i64, qv: u64, budget: u128) -> Result<Complex64> {
    if qv == 0 {
        return Err(Error::InvalidModulus(0));
    }
    let a = a.rem_euclid(qv as i64) as u64;
    if gcd_u64(a, qv) != 1 {
        return Err(Error::InvalidArgument(format!("gcd(a, q) must be 1, got a = {a}, q = {qv}")));
    }
    let h = residue_histogram(f, qv, budget)?;
    Ok(sum_from_histogram(&h, a, &RootTable::new(qv)))
}

/// All `S_{a,q}` with `gcd(a, q) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSumTable {
    pub q: u64,
    pub values: BTreeMap<u64, Complex64>,
}

pub fn exp_sum_table(f: &MultiPoly, qv: u64, budget: u128) -> Result<ExpSumTable> {
    let h = residue_histogram(f, qv, budget)?;
    let roots = RootTable::new(qv);
    let values = (0..qv)
        .filter(|&a| gcd_u64(a, qv) == 1)
        .map(|a| (a, sum_from_histogram(&h, a, &roots)))
        .collect();
    Ok(ExpSumTable { q: qv, values })
}

/// `T_f(q) = q^-n Σ_{a ∈ (Z/qZ)^*} |S_{a,q}|`.
pub fn t_f(f: &MultiPoly, qv: u64, budget: u128) -> Result<f64> {
    let table = exp_sum_table(f, qv, budget)?;
    let n = f.n_vars() as i32;
    Ok(table.values.values().map(|s| s.norm()).sum::<f64>() / (qv as f64).powi(n))
}

/// Both sides of `Σ_{a=1}^{p-1} S_{a,p} = -p^n + p #{x ∈ F_p^n : f(x) = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservatoryCheck {
    pub p: u64,
    pub lhs: f64,
    pub lhs_imag: f64,
    pub rhs: i128,
}

/// Evaluates both sides and fails unless they agree to `10^-6 p^n`.
pub fn observatory_check(f: &MultiPoly, p: u64, budget: u128) -> Result<ObservatoryCheck> {
    if !crate::arith::is_prime_small(p) {
        return Err(Error::InvalidModulus(p));
    }
    let n = f.n_vars() as u32;
    let table = exp_sum_table(f, p, budget)?;
    let lhs: Complex64 = table.values.values().sum();
    let np = count_zeros_mod(f, p, budget)?;
    let pn = sat_pow(p, n) as i128;
    let rhs = -pn + p as i128 * np as i128;
    let tol = 1e-6 * pn as f64;
    if lhs.im.abs() >= tol || (lhs.re - rhs as f64).abs() >= tol {
        return Err(Error::Numerical(format!(
            "observatory identity at p = {p}: lhs = {lhs}, rhs = {rhs}"
        )));
    }
    Ok(ObservatoryCheck {
        p,
        lhs: lhs.re,
        lhs_imag: lhs.im,
        rhs,
    })
}

/// Writes `a, re, im, abs` rows.
pub fn write_exp_sum_csv<W: Write>(table: &ExpSumTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "a", "re", "im", "abs"])?;
    for (a, s) in &table.values {
        w.write_record([
            table.q.to_string(),
            a.to_string(),
            format!("{:.17e}", s.re),
            format!("{:.17e}", s.im),
            format!("{:.17e}", s.norm()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the `(q, T_f(q), G(q))` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub q: u64,
    pub t_f: f64,
    /// `G(q)` as an exact fraction.
    pub g: String,
    pub g_f64: f64,
}

pub fn modulus_table(f: &MultiPoly, q_max: u64, budget: u128) -> Result<Vec<ModulusRow>> {
    (1..=q_max)
        .map(|qv| {
            let g = big_g(qv)?;
            Ok(ModulusRow {
                q: qv,
                t_f: t_f(f, qv, budget)?,
                g_f64: g.to_f64().unwrap_or(f64::NAN),
                g: g.to_string(),
            })
        })
        .collect()
}

pub fn write_modulus_csv<W: Write>(rows: &[ModulusRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "T_f", "G"])?;
    for r in rows {
        w.write_record([r.q.to_string(), format!("{:.17e}", r.t_f), r.g.clone()])?;
    }
    w.flush()?;
    Ok(())
}
