//! Additive energy `E(A_N) = #{(a, b, c, d) ∈ A_N⁴ : a + b = c + d}` of
//! sequence truncations, computed exactly through difference counts:
//! `E = N² + 2 Σ_{v>0} A_N(v)²` where `A_N(v)` counts pairs `i > j` with
//! `a(i) − a(j) = v`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequences::IntSeq;

/// Largest truncation accepted by the `O(N²)` kernels.
pub const MAX_PAIR_KERNEL_N: usize = 20_000;
/// Largest truncation accepted by the quadruple-enumeration oracle.
pub const MAX_BRUTE_N: usize = 50;
/// Value span up to which differences are tallied in a flat array.
pub const DENSE_SPAN_LIMIT: u64 = 1 << 26;
/// Pair entries held in memory at once by the big-integer kernel.
const FINGERPRINT_PASS_ENTRIES: u64 = 1 << 24;
// Not a Mersenne prime: powers of two must not cycle quickly modulo it.
const FINGERPRINT_PRIME: u64 = (1 << 62) - 57;

/// Multiplicities `A_N(v)` of all positive differences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffCounts {
    pub counts: BTreeMap<BigUint, u64>,
    pub n: usize,
}

impl DiffCounts {
    pub fn get(&self, v: &BigUint) -> u64 {
        self.counts.get(v).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn square_sum(&self) -> u128 {
        self.counts.values().map(|&c| c as u128 * c as u128).sum()
    }
}

fn truncation(seq: &IntSeq, n: usize, limit: usize) -> Result<&[BigUint]> {
    if n > seq.len() {
        return Err(Error::param("n", format!("truncation {n} exceeds sequence length {}", seq.len())));
    }
    if n > limit {
        return Err(Error::TooLarge {
            what: "truncation",
            requested: n,
            limit,
        });
    }
    Ok(seq.prefix(n))
}

/// Exact multiplicity of every positive difference among the first `n` terms.
pub fn diff_counts(seq: &IntSeq, n: usize) -> Result<DiffCounts> {
    let values = truncation(seq, n, MAX_PAIR_KERNEL_N)?;
    let counts = match seq.prefix_u64(n) {
        Some(small) => {
            let merged = (1..small.len())
                .into_par_iter()
                .fold(HashMap::<u64, u64>::new, |mut map, i| {
                    for j in 0..i {
                        *map.entry(small[i] - small[j]).or_default() += 1;
                    }
                    map
                })
                .reduce(HashMap::new, |mut a, b| {
                    for (k, v) in b {
                        *a.entry(k).or_default() += v;
                    }
                    a
                });
            merged.into_iter().map(|(k, v)| (BigUint::from(k), v)).collect()
        }
        None => {
            let mut map = BTreeMap::new();
            for i in 1..values.len() {
                for j in 0..i {
                    *map.entry(&values[i] - &values[j]).or_default() += 1;
                }
            }
            map
        }
    };
    Ok(DiffCounts { counts, n })
}

/// `E(A_n)` via `n² + 2 Σ A_n(v)²`.
pub fn energy_exact(seq: &IntSeq, n: usize) -> Result<u128> {
    let values = truncation(seq, n, MAX_PAIR_KERNEL_N)?;
    let sums = square_sums_at(values, &[n]);
    Ok(energy_from_square_sum(n, sums[0]))
}

fn energy_from_square_sum(n: usize, square_sum: u128) -> u128 {
    let n2 = (n as u128) * (n as u128);
    let e = n2 + 2 * square_sum;
    assert!(n2 <= e && e <= n2 * n as u128, "energy {e} outside [N², N³] for N = {n}");
    e
}

/// `Σ_v A_N(v)²` for every `N` in `checkpoints` (ascending, each `<= values.len()`).
fn square_sums_at(values: &[BigUint], checkpoints: &[usize]) -> Vec<u128> {
    let small: Option<Vec<u64>> = values.iter().map(|v| v.to_u64()).collect();
    match small {
        Some(v) if v.is_empty() || v[v.len() - 1] - v[0] <= DENSE_SPAN_LIMIT => dense_square_sums(&v, checkpoints),
        Some(v) => hashed_square_sums(&v, checkpoints),
        None => checkpoints.iter().map(|&n| fingerprint_square_sum(&values[..n])).collect(),
    }
}

/// Walks rows in order, updating `Σ A²` by `2A + 1` whenever a count `A` grows.
fn incremental<F: FnMut(usize, usize) -> u64>(len: usize, checkpoints: &[usize], mut bump: F) -> Vec<u128> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut cp = checkpoints.iter().peekable();
    let mut sum: u128 = 0;
    for row in 0..=len {
        while cp.peek().is_some_and(|&&c| c == row) {
            out.push(sum);
            cp.next();
        }
        if row == len {
            break;
        }
        for j in 0..row {
            let before = bump(row, j);
            sum += 2 * before as u128 + 1;
        }
    }
    out
}

fn dense_square_sums(values: &[u64], checkpoints: &[usize]) -> Vec<u128> {
    let Some(&first) = values.first() else {
        return checkpoints.iter().map(|_| 0).collect();
    };
    let span = (values[values.len() - 1] - first) as usize;
    let mut counts = vec![0u32; span + 1];
    incremental(values.len(), checkpoints, |i, j| {
        let slot = &mut counts[(values[i] - values[j]) as usize];
        let before = *slot;
        *slot += 1;
        before as u64
    })
}

fn hashed_square_sums(values: &[u64], checkpoints: &[usize]) -> Vec<u128> {
    let mut counts: HashMap<u64, u32> = HashMap::new();
    incremental(values.len(), checkpoints, |i, j| {
        let slot = counts.entry(values[i] - values[j]).or_default();
        let before = *slot;
        *slot += 1;
        before as u64
    })
}

/// Exact `Σ A(v)²` for arbitrary-size integers.
///
/// Pairs are bucketed by `(a_i − a_j) mod p` for a 62-bit prime `p`; only pairs sharing a
/// fingerprint are compared as big integers. Buckets are processed in
/// fingerprint-range passes so memory stays bounded.
fn fingerprint_square_sum(values: &[BigUint]) -> u128 {
    let n = values.len();
    let residues: Vec<u64> = values
        .iter()
        .map(|v| (v % FINGERPRINT_PRIME).to_u64().expect("residue below 2^62"))
        .collect();
    let pairs = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let passes = pairs.div_ceil(FINGERPRINT_PASS_ENTRIES).max(1);
    let width = FINGERPRINT_PRIME.div_ceil(passes);
    let mut total: u128 = 0;
    let mut entries: Vec<(u64, u32, u32)> = Vec::new();
    for pass in 0..passes {
        let (lo, hi) = (pass * width, (pass + 1) * width);
        entries.clear();
        for i in 1..n {
            for j in 0..i {
                let fp = (residues[i] + FINGERPRINT_PRIME - residues[j]) % FINGERPRINT_PRIME;
                if (lo..hi).contains(&fp) {
                    entries.push((fp, i as u32, j as u32));
                }
            }
        }
        entries.sort_unstable();
        let mut start = 0;
        while start < entries.len() {
            let mut end = start + 1;
            while end < entries.len() && entries[end].0 == entries[start].0 {
                end += 1;
            }
            if end - start == 1 {
                total += 1;
            } else {
                let mut exact: HashMap<BigUint, u64> = HashMap::new();
                for &(_, i, j) in &entries[start..end] {
                    *exact.entry(&values[i as usize] - &values[j as usize]).or_default() += 1;
                }
                total += exact.values().map(|&c| c as u128 * c as u128).sum::<u128>();
            }
            start = end;
        }
    }
    total
}

/// Literal count of quadruples with `a + b = c + d`; an oracle for small sets.
pub fn energy_brute(seq: &IntSeq, n: usize) -> Result<u128> {
    let values = truncation(seq, n, MAX_BRUTE_N)?;
    let sums: Vec<Vec<BigUint>> = values
        .iter()
        .map(|a| values.iter().map(|b| a + b).collect())
        .collect();
    let mut count: u128 = 0;
    for ab in sums.iter().flatten() {
        for cd in sums.iter().flatten() {
            count += (ab == cd) as u128;
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub n: usize,
    /// Exact energy, serialized as a decimal string.
    #[serde(with = "u128_decimal")]
    pub energy: u128,
    /// `E / N³`, exactly.
    #[serde(with = "crate::exact::rational")]
    pub cubic_ratio: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub records: Vec<EnergyRecord>,
    /// Least-squares slope of `log E` against `log N`.
    pub fitted_exponent: f64,
    /// Root-mean-square residual of that fit.
    pub fit_residual: f64,
}

/// Exact energies on an ascending grid plus a log-log growth exponent.
pub fn energy_profile(seq: &IntSeq, grid: &[usize]) -> Result<EnergyProfile> {
    if grid.len() < 3 {
        return Err(Error::param("grid", "need at least three truncation lengths"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
        return Err(Error::param("grid", "lengths must be positive and strictly ascending"));
    }
    let max = *grid.last().expect("non-empty");
    let values = truncation(seq, max, MAX_PAIR_KERNEL_N)?;
    let sums = square_sums_at(values, grid);
    let records: Vec<EnergyRecord> = grid
        .iter()
        .zip(sums)
        .map(|(&n, s)| {
            let energy = energy_from_square_sum(n, s);
            let n3 = BigInt::from(n).pow(3);
            EnergyRecord {
                n,
                energy,
                cubic_ratio: BigRational::new(BigInt::from(energy), n3),
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.n as f64).ln(), (r.energy as f64).ln()))
        .collect();
    let (fitted_exponent, fit_residual) = least_squares_slope(&points);
    Ok(EnergyProfile {
        records,
        fitted_exponent,
        fit_residual,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyClass {
    SubCubic,
    NearCubic,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Exponent margin `ε₀`: sub-cubic when the fit is at most `3 − ε₀`.
    pub epsilon0: f64,
    /// `κ`: near-cubic when `E / N³ >= κ` on every record.
    pub kappa: f64,
    /// Fits noisier than this are inconclusive.
    pub max_residual: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            epsilon0: 0.25,
            kappa: 0.01,
            max_residual: 0.1,
        }
    }
}

pub fn classify(profile: &EnergyProfile, config: &ClassifyConfig) -> EnergyClass {
    if !profile.fitted_exponent.is_finite() || profile.fit_residual > config.max_residual {
        return EnergyClass::Inconclusive;
    }
    if profile.fitted_exponent <= 3.0 - config.epsilon0 {
        return EnergyClass::SubCubic;
    }
    let min_ratio = profile
        .records
        .iter()
        .map(|r| crate::exact::rational_to_f64(&r.cubic_ratio))
        .fold(f64::INFINITY, f64::min);
    if min_ratio >= config.kappa {
        EnergyClass::NearCubic
    } else {
        EnergyClass::Inconclusive
    }
}

mod u128_decimal {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}
