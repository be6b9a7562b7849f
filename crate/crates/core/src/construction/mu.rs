//! Counts of new fractions `j / λ_n`.
//!
//! `μ_n = #{0 < j < λ_n : j/λ_n ≠ k/λ_q for all q < n, 0 < k < λ_q}`. A reduced
//! fraction `j/λ_n` has a denominator `d | λ_n`, `d > 1`, and is old exactly
//! when `d` divides an earlier `λ_q`, so `μ_n` is the sum of `φ(d)` over the
//! divisors of `λ_n` that divide no earlier term.

use std::collections::HashSet;

use num_integer::Integer;

use super::levels::ConstructionState;

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Every divisor `d` of `n` paired with `φ(d)`.
pub fn divisors_with_phi(n: u64) -> Vec<(u64, u64)> {
    let mut out = vec![(1u64, 1u64)];
    for (p, e) in factorize(n) {
        let current = out.len();
        let mut pk = 1u64;
        for _ in 0..e {
            let phi_pk = pk * (p - 1);
            pk *= p;
            for i in 0..current {
                let (d, phi) = out[i];
                out.push((d * pk, phi * phi_pk));
            }
        }
    }
    out.sort_unstable();
    out
}

/// `μ_1, …, μ_N` for a strictly increasing prefix.
pub fn mu_sequence(lambda: &[u64]) -> Vec<u64> {
    let mut seen: HashSet<u64> = HashSet::new();
    lambda
        .iter()
        .map(|&l| {
            let divisors = divisors_with_phi(l);
            let mu = divisors
                .iter()
                .filter(|(d, _)| *d > 1 && !seen.contains(d))
                .map(|(_, phi)| phi)
                .sum();
            seen.extend(divisors.iter().map(|(d, _)| *d));
            mu
        })
        .collect()
}

/// Direct enumeration: `j/λ_n` equals some `k/λ_q` iff `λ_n | j λ_q`.
pub fn mu_brute(lambda: &[u64], n: usize) -> u64 {
    let ln = lambda[n - 1];
    (1..ln)
        .filter(|&j| {
            !lambda[..n - 1]
                .iter()
                .any(|&lq| (j as u128 * lq as u128) % ln as u128 == 0)
        })
        .count() as u64
}

/// `μ_n` for the one-based index `n` of the state's `λ` sequence.
pub fn mu_exact(state: &ConstructionState, n: usize) -> u64 {
    assert!(n >= 1 && n <= state.lambda.len(), "index outside the built prefix");
    let ln = state.lambda[n - 1];
    divisors_with_phi(ln)
        .into_iter()
        .filter(|&(d, _)| d > 1 && state.lambda[..n - 1].iter().all(|lq| !lq.is_multiple_of(&d)))
        .map(|(_, phi)| phi)
        .sum()
}
