//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime
//! limit. Run with `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polydens::arith::{gcd_u64, primes_up_to};
use polydens::counting::{count_values, CountMode, CountOptions};
use polydens::experiment::{emit_report, run_experiment, ExperimentConfig, ExperimentReport, ReportFormat};
use polydens::expsum::{big_g_by_definition, big_g_closed_form, g_local, observatory_check, orthogonality_count, t_f};
use polydens::integral::{laurent_expansion, li_f, oscillatory_integral};
use polydens::local::{euler_product, EulerOptions};
use polydens::poly::{parse_polynomial, MultiPoly};
use polydens::region::RationalBox;

type Outcome = Result<String, String>;

const BUDGET: u128 = 1 << 32;

fn poly(s: &str, n: usize) -> MultiPoly {
    parse_polynomial(s, n).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn experiment(json: &str) -> Result<ExperimentReport, String> {
    run_experiment(ExperimentConfig::from_json(json).map_err(err)?).map_err(err)
}

fn last_ratio(r: &ExperimentReport) -> Result<f64, String> {
    r.rows.last().and_then(|row| row.ratio).ok_or_else(|| format!("no ratio (gated = {}, rows = {:?})", r.gated, r.rows))
}

fn ac1() -> Outcome {
    let f = poly("x1^2 + x2^2", 2);
    let b = RationalBox::cube(2, 1, 2).unwrap();
    let mut got = Vec::new();
    for p in [1u64, 2, 3] {
        let orth = orthogonality_count(&f, &b, p, BUDGET).map_err(err)?;
        let direct = count_values(std::slice::from_ref(&f), &b, p, CountMode::Prime, &CountOptions::default()).map_err(err)?;
        ensure(orth.count == direct.count, || format!("P = {p}: {} vs {}", orth.count, direct.count))?;
        got.push(direct.count);
    }
    ensure(got[0] == 3, || format!("P = 1 gives {}", got[0]))?;
    Ok(format!("counts {got:?}"))
}

fn random_poly(rng: &mut ChaCha8Rng) -> MultiPoly {
    let n = rng.random_range(1..=3usize);
    loop {
        let constant = BigInt::from(rng.random_range(-3i64..=3));
        let terms: Vec<_> = (0..rng.random_range(1..=5)).map(|_| {
            let mut e = vec![0u32; n];
            let deg = rng.random_range(1..=3u32);
            for _ in 0..deg {
                e[rng.random_range(0..n)] += 1;
            }
            (e, BigInt::from(rng.random_range(-5i64..=5)))
        }).collect();
        let f = MultiPoly::from_terms(n, terms.into_iter().chain([(vec![0; n], constant)])).unwrap();
        if f.degree().is_some_and(|d| d >= 1) {
            return f;
        }
    }
}

/// `N_p` by enumeration, independent of the library's residue counting.
fn brute_zero_count(f: &MultiPoly, p: u64) -> u64 {
    let n = f.n_vars();
    let mut x = vec![0i64; n];
    let mut count = 0;
    loop {
        let v = f.evaluate_i64(&x).unwrap() % BigInt::from(p);
        if v.is_zero() {
            count += 1;
        }
        let mut i = 0;
        while i < n {
            x[i] += 1;
            if x[i] < p as i64 {
                break;
            }
            x[i] = 0;
            i += 1;
        }
        if i == n {
            return count;
        }
    }
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checks = 0;
    for _ in 0..20 {
        let f = random_poly(&mut rng);
        for p in primes_up_to(13) {
            let c = observatory_check(&f, p, BUDGET).map_err(|e| format!("{f} at {p}: {e}"))?;
            let tol = 1e-6 * (p as f64).powi(f.n_vars() as i32);
            // Summing over the units a only: -p^n + p N_p.
            let want = (p * brute_zero_count(&f, p)) as f64 - (p as f64).powi(f.n_vars() as i32);
            ensure((c.lhs - want).abs() < tol && c.lhs_imag.abs() < tol && c.rhs as f64 == want, || {
                format!("{f} at {p}: {} + {}i vs {want}", c.lhs, c.lhs_imag)
            })?;
            checks += 1;
        }
    }
    Ok(format!("{checks} (f, p) pairs"))
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0f64;
    let mut cases = 0;
    while cases < 50 {
        let q1 = rng.random_range(2..=100u64);
        let q2 = rng.random_range(2..=100u64);
        if q1 * q2 > 200 || gcd_u64(q1, q2) != 1 {
            continue;
        }
        let mut f = random_poly(&mut rng);
        while f.n_vars() > 2 {
            f = random_poly(&mut rng);
        }
        let whole = t_f(&f, q1 * q2, BUDGET).map_err(err)?;
        let parts = t_f(&f, q1, BUDGET).map_err(err)? * t_f(&f, q2, BUDGET).map_err(err)?;
        // Exact zeros come out as rounding noise of order 1e-15.
        let zero = whole.abs() < 1e-12 && parts.abs() < 1e-12;
        let rel = if zero { 0.0 } else { (whole - parts).abs() / whole.abs() };
        ensure(rel < 1e-8, || format!("{f}, q = {q1}*{q2}: {whole} vs {parts}"))?;
        worst = worst.max(rel);
        cases += 1;
    }
    Ok(format!("{cases} cases, worst relative deviation {worst:.1e}"))
}

/// `G(q)` rebuilt from the factorisation by trial division.
fn g_oracle(mut q: u64) -> BigRational {
    let mut out = BigRational::one();
    let mut p = 2;
    while p * p <= q || q > 1 {
        if p * p > q {
            p = q;
        }
        let mut k = 0;
        while q % p == 0 {
            q /= p;
            k += 1;
        }
        match k {
            0 => {}
            1 | 2 => {
                let p2 = BigRational::from_integer(BigInt::from(p * p));
                out *= -BigRational::one() / (p2 - BigRational::one());
            }
            _ => return BigRational::zero(),
        }
        p += 1;
    }
    out
}

fn ac4() -> Outcome {
    let mut nonzero = 0;
    for q in 1..=10_000u64 {
        let direct = big_g_by_definition(q).map_err(err)?;
        let closed = big_g_closed_form(q).map_err(err)?;
        ensure(direct == closed && closed == g_oracle(q), || format!("G({q}): {direct} vs {closed}"))?;
        let cube_free = (2..=21u64).all(|p| q % (p * p * p) != 0);
        ensure(cube_free || direct.is_zero(), || format!("G({q}) = {direct} on a non-cube-free q"))?;
        nonzero += usize::from(!direct.is_zero());
    }
    // The literal sum over b, in floating point, for small q.
    for q in 1..=300u64 {
        let mut s = Complex64::zero();
        for b in 1..=q {
            let g = g_local(q, gcd_u64(b, q)).map_err(err)?.to_f64().unwrap();
            s += Complex64::from_polar(g, 2.0 * PI * b as f64 / q as f64);
        }
        let want = big_g_closed_form(q).map_err(err)?.to_f64().unwrap();
        ensure((s.re - want).abs() < 1e-10 && s.im.abs() < 1e-10, || format!("literal G({q}) = {s} vs {want}"))?;
    }
    Ok(format!("q <= 10^4 exact, {nonzero} nonzero"))
}

fn ac5() -> Outcome {
    let r = experiment(r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [1000000], "euler_cutoff": 1000, "force": true}"#)?;
    let euler = r.rows[0].euler_value.ok_or("no Euler value")?;
    ensure(euler == 1.0, || format!("Euler product {euler}"))?;
    let ratio = last_ratio(&r)?;
    ensure((ratio - 1.0).abs() < 0.01, || format!("ratio {ratio}"))?;
    Ok(format!("ratio {ratio:.5}"))
}

fn ac6() -> Outcome {
    let r = experiment(r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "square-free", "P_grid": [1000000], "euler_cutoff": 10000, "force": true}"#)?;
    let ratio = last_ratio(&r)?;
    ensure((ratio - 1.0).abs() < 0.005, || format!("ratio {ratio}"))?;
    let f = poly("x1", 1);
    let (est, _) = euler_product(&[f], CountMode::SquareFree, 10_000, &[0], &EulerOptions::default()).map_err(err)?;
    let dev = (est.value - 6.0 / (PI * PI)).abs();
    ensure(dev < 1e-4, || format!("truncated product {} off by {dev}", est.value))?;
    Ok(format!("ratio {ratio:.5}, |product - 6/pi^2| = {dev:.1e}"))
}

fn ac7() -> Outcome {
    let r = experiment(
        r#"{"polynomials": ["x1^2 + x2^2"], "box": [[1, 2], [1, 2]], "mode": "square-free", "P_grid": [1000], "euler_cutoff": 1000}"#,
    )?;
    ensure(!r.gated, || "gated".into())?;
    let ratio = last_ratio(&r)?;
    ensure((ratio - 1.0).abs() < 0.01, || format!("ratio {ratio}"))?;
    Ok(format!("{} points, ratio {ratio:.5}", r.rows[0].lattice_points.unwrap_or(0)))
}

fn ac8() -> Outcome {
    let r = experiment(
        r#"{"polynomials": ["x1^2 + x2^2 + x3^2 + x4^2"], "box": [[1, 2], [1, 2], [1, 2], [1, 2]], "mode": "prime",
            "P_grid": [10, 18, 25], "euler_cutoff": 100}"#,
    )?;
    ensure(!r.gated, || "gated".into())?;
    let ratios: Vec<f64> = r.rows.iter().map(|row| row.ratio.ok_or("missing ratio")).collect::<Result<_, _>>()?;
    let devs: Vec<f64> = ratios.iter().map(|x| (x - 1.0).abs()).collect();
    let shown = format!("ratios {:?}", ratios.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>());
    ensure(devs[2] < 0.25, || format!("{shown}: last deviation too large"))?;
    ensure(devs.windows(2).all(|w| w[1] <= w[0]), || format!("{shown}: deviation not non-increasing"))?;
    Ok(shown)
}

/// `2 Π_{p > 2} (1 - 1/(p-1)^2)` over primes up to `limit`.
fn twin_constant(limit: u64) -> f64 {
    2.0 * primes_up_to(limit).into_iter().skip(1).map(|p| 1.0 - 1.0 / ((p - 1) as f64).powi(2)).product::<f64>()
}

fn ac9() -> Outcome {
    let r = experiment(
        r#"{"polynomials": ["x1", "x1 + 2"], "box": [[2, 3]], "mode": "joint", "P_grid": [100000], "euler_cutoff": 10000}"#,
    )?;
    let euler = r.rows[0].euler_value.ok_or("no Euler value")?;
    let classical = twin_constant(10_000_000);
    ensure((euler - classical).abs() < 1e-3, || format!("constant {euler} vs {classical}"))?;
    let ratio = last_ratio(&r)?;
    ensure((ratio - 1.0).abs() < 0.05, || format!("ratio {ratio}"))?;
    Ok(format!("constant {euler:.6} (classical {classical:.6}), ratio {ratio:.4}"))
}

fn ac10() -> Outcome {
    for (s, n, lo, hi) in [("x1^2 + x2^2", 2usize, 1i64, 2i64), ("x1^3 - x2*x3", 3, -1, 2), ("x1", 1, 2, 5)] {
        let b = RationalBox::cube(n, lo, hi).unwrap();
        let i = oscillatory_integral(&poly(s, n), &b, 0.0, 1e-12).map_err(err)?;
        let vol = b.volume_f64();
        ensure((i.re - vol).abs() < 1e-10 && i.im.abs() < 1e-10, || format!("I(B; 0) for {s}: {} vs {vol}", i.re))?;
    }
    // Linear phases: ∫_a^b e(γ(c x + d)) dx = (e(γ(cb+d)) - e(γ(ca+d))) / (2πiγc).
    let e = |z: f64| Complex64::from_polar(1.0, 2.0 * PI * z);
    for (c, d, gamma) in [(1i64, 0i64, 0.37), (3, 1, 5.5), (-2, 7, 40.0), (5, -3, 123.25)] {
        let f = poly(&format!("{c}*x1 + {d}"), 1);
        let b = RationalBox::from_integers(&[(-1, 2)]).unwrap();
        let got = oscillatory_integral(&f, &b, gamma, 1e-12).map_err(err)?.value();
        let (cf, df) = (c as f64, d as f64);
        let want = (e(gamma * (2.0 * cf + df)) - e(gamma * (-cf + df))) / Complex64::new(0.0, 2.0 * PI * gamma * cf);
        ensure((got - want).norm() < 1e-8, || format!("{c}x+{d} at {gamma}: {got} vs {want}"))?;
    }
    // Laurent expansion against the direct integral.
    let f = poly("x1^2", 1);
    let b = RationalBox::cube(1, 1, 2).unwrap();
    let li = li_f(&f, &b, 1e3, 1e-12).map_err(err)?;
    let mut detail = Vec::new();
    for k in [2u32, 4, 8] {
        let l = laurent_expansion(&f, &b, 1e3, k, 1e-12).map_err(err)?;
        let bound = l.truncation_bound + l.quadrature_error + li.abs_error_estimate;
        let gap = (l.value - li.value).abs();
        ensure(gap <= bound, || format!("K = {k}: |{} - {}| = {gap} > {bound}", l.value, li.value))?;
        detail.push(format!("K={k}: {gap:.1e} <= {bound:.1e}"));
    }
    Ok(detail.join(", "))
}

fn csv_bytes(r: &ExperimentReport) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    emit_report(r, ReportFormat::Csv, &mut out).map_err(err)?;
    Ok(out)
}

fn ac11() -> Outcome {
    let configs = [
        r#"{"polynomials": ["x1^2 + x2^2"], "box": [[1, 2], [1, 2]], "mode": "square-free", "P_grid": [100, 300], "euler_cutoff": 200, "threads": THREADS}"#,
        r#"{"polynomials": ["x1"], "box": [[2, 3]], "mode": "prime", "P_grid": [100000], "euler_cutoff": 100, "force": true, "threads": THREADS}"#,
        r#"{"polynomials": ["x1", "x1 + 2"], "box": [[2, 3]], "mode": "joint", "P_grid": [10000], "euler_cutoff": 500, "threads": THREADS}"#,
    ];
    for c in configs {
        let one = experiment(&c.replace("THREADS", "1"))?;
        let four = experiment(&c.replace("THREADS", "4"))?;
        let counts = |r: &ExperimentReport| r.rows.iter().map(|x| (x.p, x.empirical)).collect::<Vec<_>>();
        ensure(counts(&one) == counts(&four), || format!("counts differ: {:?} vs {:?}", counts(&one), counts(&four)))?;
        ensure(csv_bytes(&one)? == csv_bytes(&four)?, || "CSV bytes differ".into())?;
    }
    Ok(format!("{} configurations identical", configs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 11] = [
        ("AC1", ac1, Duration::from_secs(1)),
        ("AC2", ac2, Duration::from_secs(30)),
        ("AC3", ac3, Duration::from_secs(60)),
        ("AC4", ac4, Duration::from_secs(60)),
        ("AC5", ac5, Duration::from_secs(10)),
        ("AC6", ac6, Duration::from_secs(30)),
        ("AC7", ac7, Duration::from_secs(300)),
        ("AC8", ac8, Duration::from_secs(600)),
        ("AC9", ac9, Duration::from_secs(30)),
        ("AC10", ac10, Duration::from_secs(30)),
        ("AC11", ac11, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = outcome.and_then(|d| {
            if took <= limit {
                Ok(d)
            } else {
                Err(format!("{d}; runtime {took:.2?} exceeds {limit:?}"))
            }
        });
        match outcome {
            Ok(d) => println!("{name} PASS ({took:.2?}) {d}"),
            Err(d) => {
                failed += 1;
                println!("{name} FAIL ({took:.2?}) {d}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
