//! Nested adaptive Gauss–Kronrod (10-point Gauss, 21-point Kronrod)
//! quadrature over boxes.
//!
//! Each axis is integrated by a round-based adaptive scheme: every round
//! bisects all panels whose error exceeds their share of the tolerance.
//! Panels are kept in left-to-right order and summed in that order, so the
//! result does not depend on the thread count.

use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

/// Highest supported dimension.
pub const MAX_DIM: usize = 4;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

const MAX_ROUNDS: usize = 48;

/// Values the quadrature can integrate.
pub trait Scalar:
    Copy + Send + Sync + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    fn norm(&self) -> f64;
}

impl Scalar for f64 {
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

/// Shared evaluation counter with a hard cap.
pub(crate) struct Budget {
    used: AtomicU64,
    max: u64,
}

impl Budget {
    pub(crate) fn new(max: u64) -> Self {
        Budget {
            used: AtomicU64::new(0),
            max,
        }
    }

    fn charge(&self, k: u64) {
        self.used.fetch_add(k, Ordering::Relaxed);
    }

    fn exhausted(&self) -> bool {
        self.used.load(Ordering::Relaxed) >= self.max
    }

    pub(crate) fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub converged: bool,
}

#[derive(Clone, Copy)]
struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

/// One 21-point rule on `[a, b]`; `f` returns a value and the error already
/// committed in computing it (non-zero for nested integrals).
fn gk21<T: Scalar>(f: &(dyn Fn(f64) -> (T, f64) + Sync), a: f64, b: f64) -> Panel<T> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (fc, ec) = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = T::zero();
    let mut inner = ec * WGK[10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let (f1, e1) = f(c - dx);
        let (f2, e2) = f(c + dx);
        let s = f1 + f2;
        kron += s * WGK[j];
        inner += (e1 + e2) * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    Panel {
        a,
        b,
        value: kron * h,
        error: ((kron - gauss) * h).norm() + inner * h.abs(),
    }
}

/// Adaptive integral of `f` over `[a, b]`, starting from `panels` equal
/// panels. `leaf` marks the innermost axis, whose evaluations are charged to
/// the budget.
pub(crate) fn adaptive<T: Scalar>(
    f: &(dyn Fn(f64) -> (T, f64) + Sync),
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
    budget: &Budget,
    leaf: bool,
    parallel: bool,
) -> Estimate<T> {
    let width = b - a;
    if width == 0.0 {
        return Estimate {
            value: T::zero(),
            error: 0.0,
            converged: true,
        };
    }
    let eval = |ranges: Vec<(f64, f64)>| -> Vec<Panel<T>> {
        if leaf {
            budget.charge(21 * ranges.len() as u64);
        }
        if parallel {
            ranges.into_par_iter().map(|(x, y)| gk21(f, x, y)).collect()
        } else {
            ranges.into_iter().map(|(x, y)| gk21(f, x, y)).collect()
        }
    };
    let k = panels.max(1);
    let step = width / k as f64;
    let initial = (0..k)
        .map(|i| (a + step * i as f64, if i + 1 == k { b } else { a + step * (i + 1) as f64 }))
        .collect();
    let mut current = eval(initial);
    let min_width = width.abs() * 1e-13;
    for _ in 0..MAX_ROUNDS {
        let total: f64 = current.iter().map(|p| p.error).sum();
        if total <= tol {
            return finish(&current, true);
        }
        if budget.exhausted() {
            break;
        }
        let mut split = Vec::new();
        let mut keep = vec![true; current.len()];
        for (i, p) in current.iter().enumerate() {
            let share = tol * ((p.b - p.a) / width).abs();
            if p.error > share && (p.b - p.a).abs() > min_width {
                let m = 0.5 * (p.a + p.b);
                split.push((p.a, m));
                split.push((m, p.b));
                keep[i] = false;
            }
        }
        if split.is_empty() {
            break;
        }
        let mut fresh = eval(split).into_iter();
        let mut next = Vec::with_capacity(current.len() * 2);
        for (p, k) in current.into_iter().zip(keep) {
            if k {
                next.push(p);
            } else {
                next.push(fresh.next().unwrap());
                next.push(fresh.next().unwrap());
            }
        }
        current = next;
    }
    let total: f64 = current.iter().map(|p| p.error).sum();
    finish(&current, total <= tol)
}

fn finish<T: Scalar>(panels: &[Panel<T>], converged: bool) -> Estimate<T> {
    let mut value = T::zero();
    let mut error = 0.0;
    for p in panels {
        value += p.value;
        error += p.error;
    }
    Estimate { value, error, converged }
}

/// Tensor-product integral of `g` over `bounds` (at most [`MAX_DIM`] axes),
/// with `panels[i]` initial panels on axis `i`.
pub(crate) fn integrate_box<T: Scalar>(
    g: &(dyn Fn(&[f64]) -> T + Sync),
    bounds: &[(f64, f64)],
    panels: &[usize],
    tol: f64,
    budget: &Budget,
) -> Estimate<T> {
    assert!(!bounds.is_empty() && bounds.len() <= MAX_DIM);
    level(g, bounds, panels, 0, [0.0; MAX_DIM], tol, budget)
}

fn level<T: Scalar>(
    g: &(dyn Fn(&[f64]) -> T + Sync),
    bounds: &[(f64, f64)],
    panels: &[usize],
    axis: usize,
    point: [f64; MAX_DIM],
    tol: f64,
    budget: &Budget,
) -> Estimate<T> {
    let n = bounds.len();
    if budget.exhausted() {
        // Nothing is known about the remaining slice.
        return Estimate {
            value: T::zero(),
            error: f64::INFINITY,
            converged: false,
        };
    }
    let (a, b) = bounds[axis];
    let leaf = axis + 1 == n;
    let parallel = axis == 0;
    let conv = std::sync::atomic::AtomicBool::new(true);
    let estimate = if leaf {
        let f = move |x: f64| {
            let mut p = point;
            p[axis] = x;
            (g(&p[..n]), 0.0)
        };
        adaptive(&f, a, b, panels[axis], tol, budget, true, parallel)
    } else {
        // Half the tolerance goes to the inner integrals, spread over this
        // axis' width.
        let w = (b - a).abs().max(f64::MIN_POSITIVE);
        let inner_tol = 0.5 * tol / w;
        let conv_ref = &conv;
        let f = move |x: f64| {
            let mut p = point;
            p[axis] = x;
            let e = level(g, bounds, panels, axis + 1, p, inner_tol, budget);
            if !e.converged {
                conv_ref.store(false, Ordering::Relaxed);
            }
            (e.value, e.error)
        };
        adaptive(&f, a, b, panels[axis], tol, budget, false, parallel)
    };
    Estimate {
        converged: estimate.converged && conv.load(Ordering::Relaxed),
        ..estimate
    }
}
