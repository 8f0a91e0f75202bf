//! Exhaustive sweeps over residue boxes `[0, side)^n`, with values reduced
//! modulo `m` and propagated by finite differences along the last axis.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::modp::eval_terms_mod;
use crate::poly::MultiPoly;

/// Largest modulus the sweep supports; keeps sums inside `u64`.
pub const MAX_MODULUS: u64 = 1 << 32;

struct Prepared {
    terms: Vec<(Vec<u32>, u64)>,
    order: usize,
}

/// Visits every point of `[0, side)^n` and hands `visit` the values of all
/// `polys` modulo `m`. Slabs along the first axis are folded in order, so the
/// result does not depend on the thread count.
pub(crate) fn sweep_mod<S, I, V, M>(
    polys: &[MultiPoly],
    m: u64,
    side: u64,
    budget: u128,
    parallel: bool,
    init: I,
    visit: V,
    merge: M,
) -> Result<S>
where
    S: Send,
    I: Fn() -> S + Sync,
    V: Fn(&mut S, &[u64]) + Sync,
    M: Fn(S, S) -> S,
{
    assert!(!polys.is_empty());
    if m < 2 || m > MAX_MODULUS {
        return Err(Error::InvalidModulus(m));
    }
    let n = polys[0].n_vars();
    let cost = (side as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if cost > budget {
        return Err(Error::budget(format!("residue sweep of side {side} in {n} variables"), cost, budget));
    }
    let prepared: Vec<Prepared> = polys
        .iter()
        .map(|f| Prepared {
            terms: f.reduce_mod(m),
            order: f.degree_in(n - 1) as usize,
        })
        .collect();

    let slab = |x0: u64| -> S {
        let mut state = init();
        let mut x = vec![0u64; n];
        x[0] = x0;
        let mut tables: Vec<Vec<u64>> = prepared.iter().map(|p| vec![0; p.order + 1]).collect();
        let mut vals = vec![0u64; polys.len()];
        loop {
            for (p, table) in prepared.iter().zip(tables.iter_mut()) {
                for (i, slot) in table.iter_mut().enumerate() {
                    x[n - 1] = i as u64 % m;
                    *slot = eval_terms_mod(&p.terms, &x, m);
                }
                for level in 1..table.len() {
                    for i in (level..table.len()).rev() {
                        table[i] = (table[i] + m - table[i - 1]) % m;
                    }
                }
            }
            for _ in 0..side {
                for (v, table) in vals.iter_mut().zip(&tables) {
                    *v = table[0];
                }
                visit(&mut state, &vals);
                for table in tables.iter_mut() {
                    for k in 0..table.len() - 1 {
                        table[k] = (table[k] + table[k + 1]) % m;
                    }
                }
            }
            if n == 1 || !advance_middle(&mut x[1..n - 1], side) {
                break;
            }
        }
        state
    };

    if n == 1 {
        return Ok(slab(0));
    }
    let slabs: Vec<S> = if parallel {
        (0..side).into_par_iter().map(slab).collect()
    } else {
        (0..side).map(slab).collect()
    };
    let mut it = slabs.into_iter();
    let first = it.next().unwrap_or_else(&init);
    Ok(it.fold(first, merge))
}

fn advance_middle(x: &mut [u64], side: u64) -> bool {
    for v in x.iter_mut().rev() {
        *v += 1;
        if *v < side {
            return true;
        }
        *v = 0;
    }
    false
}
