//! Archimedean quantities: the oscillatory integral `I(B; γ)`, the
//! logarithmic integral `Li_f(PB)`, the log-moments `J(k)` and the expansion
//! of `Li_f` in powers of `1 / log P`.

mod quad;

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::MultiPoly;
use crate::region::{certify_lower_bound, certify_positive, refined_enclosure, Certification, RationalBox, CERTIFY_MAX_BOXES};

pub use quad::{Scalar, MAX_DIM};
use quad::{integrate_box, Budget};

/// Cap on integrand evaluations for one call.
pub const DEFAULT_MAX_EVALUATIONS: u64 = 200_000_000;

/// Highest moment order `laurent_expansion` may request.
pub const MAX_MOMENT: u32 = 40;

/// Oscillations per initial panel along each axis.
const OSCILLATIONS_PER_PANEL: f64 = 2.0;

const MAX_INITIAL_PANELS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: u64,
    /// False when the evaluation budget ran out before `tol` was met.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexQuadrature {
    pub re: f64,
    pub im: f64,
    pub abs_error_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl ComplexQuadrature {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Dense `f64` form of a polynomial for fast evaluation.
#[derive(Debug, Clone)]
struct Compiled {
    terms: Vec<(f64, [u32; MAX_DIM])>,
}

impl Compiled {
    fn new(f: &MultiPoly) -> Self {
        let terms = f
            .terms()
            .iter()
            .map(|(e, c)| {
                let mut ex = [0u32; MAX_DIM];
                ex[..e.len()].copy_from_slice(e);
                (c.to_f64().unwrap_or(f64::NAN), ex)
            })
            .collect();
        Compiled { terms }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }
}

fn check_dims(f: &MultiPoly, b: &RationalBox) -> Result<()> {
    if f.n_vars() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.n_vars(),
            got: b.dim(),
        });
    }
    if b.dim() > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "quadrature supports at most {MAX_DIM} variables, got {}",
            b.dim()
        )));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn rational(x: f64, what: &str) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("{what} must be finite, got {x}")))
}

/// `∫_B e(γ f0(x)) dx`.
///
/// Axis `i` starts with panels proportional to `1 + |γ| L_i w_i`, where `L_i`
/// bounds `|∂f0/∂x_i|` on the box and `w_i` is the side length, so that each
/// panel sees a bounded number of oscillations.
pub fn oscillatory_integral(f0: &MultiPoly, b: &RationalBox, gamma: f64, tol: f64) -> Result<ComplexQuadrature> {
    oscillatory_integral_with_budget(f0, b, gamma, tol, DEFAULT_MAX_EVALUATIONS)
}

pub fn oscillatory_integral_with_budget(
    f0: &MultiPoly,
    b: &RationalBox,
    gamma: f64,
    tol: f64,
    max_evaluations: u64,
) -> Result<ComplexQuadrature> {
    check_dims(f0, b)?;
    check_tol(tol)?;
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be finite, got {gamma}")));
    }
    let bounds = b.bounds_f64();
    let panels: Vec<usize> = (0..b.dim())
        .map(|i| {
            let slope = refined_enclosure(&f0.derivative(i), b, 4).magnitude().to_f64().unwrap_or(f64::INFINITY);
            let w = bounds[i].1 - bounds[i].0;
            let k = 1.0 + (gamma.abs() * slope * w / OSCILLATIONS_PER_PANEL).ceil();
            (k.min(MAX_INITIAL_PANELS as f64)) as usize
        })
        .collect();
    let poly = Compiled::new(f0);
    let g = |x: &[f64]| {
        let t = gamma * poly.eval(x);
        // Reduce the phase first so large arguments keep their fractional part.
        let frac = t - t.round();
        Complex64::from_polar(1.0, TAU * frac)
    };
    let budget = Budget::new(max_evaluations);
    let e = integrate_box(&g, &bounds, &panels, tol, &budget);
    Ok(ComplexQuadrature {
        re: e.value.re,
        im: e.value.im,
        abs_error_estimate: e.error,
        evaluations: budget.used(),
        converged: e.converged,
    })
}

/// Certifies `f0 > P^-d` on `B`, i.e. `f0(PB) ⊂ (1, ∞)`.
fn certify_above_one(f0: &MultiPoly, b: &RationalBox, p: f64) -> Result<()> {
    let d = f0.degree().unwrap_or(0);
    let pr = rational(p, "P")?;
    if pr <= BigRational::zero() {
        return Err(Error::InvalidArgument(format!("P must be positive, got {p}")));
    }
    let threshold = BigRational::one() / num_traits::pow(pr, d as usize);
    match certify_lower_bound(f0, b, &threshold, CERTIFY_MAX_BOXES) {
        Certification::Certified { .. } => Ok(()),
        Certification::Violated { witness } => Err(Error::BoxPositivity(format!(
            "f0(P x) <= 1 at x = ({}) for P = {p}",
            witness.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(", ")
        ))),
        Certification::Inconclusive => Err(Error::BoxPositivity(format!(
            "could not certify f0(P B) > 1 for P = {p} within the bisection budget"
        ))),
    }
}

/// `Li_f(PB) = ∫_{PB} dx / log f0(x)`, computed as
/// `P^n ∫_B dt / (d log P + log f0(t))`.
pub fn li_f(f: &MultiPoly, b: &RationalBox, p: f64, tol: f64) -> Result<QuadratureResult> {
    li_joint(std::slice::from_ref(f), b, p, tol)
}

/// `∫_{PB} Π_i dx / log f_{i,0}(x)`; the normaliser for simultaneous
/// primality of several polynomials.
pub fn li_joint(polys: &[MultiPoly], b: &RationalBox, p: f64, tol: f64) -> Result<QuadratureResult> {
    if polys.is_empty() {
        return Err(Error::InvalidArgument("need at least one polynomial".into()));
    }
    check_tol(tol)?;
    let mut tops = Vec::with_capacity(polys.len());
    for f in polys {
        check_dims(f, b)?;
        let d = f.require_nonconstant()?;
        let f0 = f.top_degree_part();
        certify_above_one(&f0, b, p)?;
        tops.push((Compiled::new(&f0), d as f64));
    }
    let n = b.dim() as i32;
    let log_p = p.ln();
    let scale = p.powi(n);
    let g = |t: &[f64]| {
        tops.iter()
            .map(|(c, d)| 1.0 / (d * log_p + c.eval(t).ln()))
            .product::<f64>()
    };
    let budget = Budget::new(DEFAULT_MAX_EVALUATIONS);
    let e = integrate_box(&g, &b.bounds_f64(), &vec![1; b.dim()], tol / scale, &budget);
    Ok(QuadratureResult {
        value: scale * e.value,
        abs_error_estimate: scale * e.error,
        evaluations: budget.used(),
        converged: e.converged,
    })
}

type MomentKey = (String, String, u32);

fn moment_cache() -> &'static Mutex<HashMap<MomentKey, QuadratureResult>> {
    static CACHE: OnceLock<Mutex<HashMap<MomentKey, QuadratureResult>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `J(k) = ∫_B (log f0(t))^k dt`. Results are cached per `(f0, B, k)` and
/// reused whenever the cached error estimate already meets `tol`.
pub fn log_moment(f0: &MultiPoly, b: &RationalBox, k: u32, tol: f64) -> Result<QuadratureResult> {
    check_dims(f0, b)?;
    check_tol(tol)?;
    if k > MAX_MOMENT {
        return Err(Error::budget("moment order", k as u128, MAX_MOMENT as u128));
    }
    let key = (f0.to_string(), format!("{:?}", b.intervals()), k);
    if let Some(hit) = moment_cache().lock().unwrap().get(&key) {
        if hit.converged && hit.abs_error_estimate <= tol {
            return Ok(*hit);
        }
    }
    certify_positive(f0, b)?;
    let poly = Compiled::new(f0);
    let g = |t: &[f64]| poly.eval(t).ln().powi(k as i32);
    let budget = Budget::new(DEFAULT_MAX_EVALUATIONS);
    let e = integrate_box(&g, &b.bounds_f64(), &vec![1; b.dim()], tol, &budget);
    let out = QuadratureResult {
        value: e.value,
        abs_error_estimate: e.error,
        evaluations: budget.used(),
        converged: e.converged,
    };
    moment_cache().lock().unwrap().insert(key, out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentExpansion {
    pub value: f64,
    /// Bound on the omitted terms `k > K`; infinite when the series bound
    /// does not converge.
    pub truncation_bound: f64,
    /// Propagated quadrature error of the moments.
    pub quadrature_error: f64,
    /// Partial sums after each `k = 1..=K`.
    pub partial_sums: Vec<f64>,
    /// `r = M / (d log P)` with `M = max |log f0|` on the box.
    pub ratio: f64,
}

/// `vol(B)/d · P^n/log P + P^n Σ_{k=2}^{K} (-1)^(k-1) d^-k J(k-1) (log P)^-k`.
///
/// With `M ≥ |log f0|` on `B` and `r = M/(d log P) < 1`, each omitted term is
/// at most `P^n vol(B)/(d log P) · r^(k-1)`, so the tail is bounded by
/// `P^n vol(B)/(d log P) · r^K/(1 - r)`.
pub fn laurent_expansion(f: &MultiPoly, b: &RationalBox, p: f64, k_max: u32, tol: f64) -> Result<LaurentExpansion> {
    check_dims(f, b)?;
    check_tol(tol)?;
    let d = f.require_nonconstant()? as f64;
    if k_max == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if k_max - 1 > MAX_MOMENT {
        return Err(Error::budget("expansion order K", k_max as u128, MAX_MOMENT as u128 + 1));
    }
    let log_p = p.ln();
    if !(log_p > 2.0) {
        return Err(Error::InvalidArgument(format!("the expansion needs log P > 2, got P = {p}")));
    }
    let f0 = f.top_degree_part();
    let lower = certify_positive(&f0, b)?;
    let enc = refined_enclosure(&f0, b, 8);
    let lo = if enc.lo > lower { enc.lo } else { lower };
    let (lo, hi) = (lo.to_f64().unwrap_or(0.0), enc.hi.to_f64().unwrap_or(f64::INFINITY));
    // Outward slack for the f64 conversion.
    let m = lo.ln().abs().max(hi.ln().abs()) * (1.0 + 1e-12) + 1e-300;
    let n = b.dim() as i32;
    let scale = p.powi(n);
    let vol = b.volume_f64();
    let dl = d * log_p;
    let mut value = scale * vol / dl;
    let mut quadrature_error = 0.0;
    let mut partial_sums = vec![value];
    let per_term_tol = tol / (scale * k_max as f64);
    for k in 2..=k_max {
        let coeff = scale / dl.powi(k as i32);
        let j = log_moment(&f0, b, k - 1, (per_term_tol / coeff).max(f64::MIN_POSITIVE))?;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        value += sign * coeff * j.value;
        quadrature_error += coeff * j.abs_error_estimate;
        partial_sums.push(value);
    }
    let r = m / dl;
    let truncation_bound = if vol == 0.0 {
        0.0
    } else if r < 1.0 {
        scale * vol / dl * r.powi(k_max as i32) / (1.0 - r)
    } else {
        f64::INFINITY
    };
    Ok(LaurentExpansion {
        value,
        truncation_bound,
        quadrature_error,
        partial_sums,
        ratio: r,
    })
}

/// `vol(B) P^n / (d log P)`, the leading term of `Li_f(PB)`.
pub fn leading_term(f: &MultiPoly, b: &RationalBox, p: f64) -> Result<f64> {
    let d = f.require_nonconstant()? as f64;
    Ok(b.volume_f64() * p.powi(b.dim() as i32) / (d * p.ln()))
}
