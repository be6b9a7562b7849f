//! Generators for the integer-sequence families used in the experiments.
//!
//! All values are materialized eagerly as exact [`BigUint`]s.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ceil_to_biguint, decimal};

/// Which family a sequence came from, with the parameters that reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Coefficients from the highest degree down, as decimal strings.
    Polynomial { coeffs: Vec<String> },
    Lacunary { base: u64 },
    QuasiArithmetic(QuasiArithmeticParams),
    Sidon,
    Custom,
}

/// A strictly increasing sequence of positive integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntSeq {
    #[serde(flatten)]
    family: Family,
    #[serde(with = "decimal::vec")]
    values: Vec<BigUint>,
}

impl IntSeq {
    /// Wraps arbitrary values after checking positivity and strict monotonicity.
    pub fn new(family: Family, values: Vec<BigUint>) -> Result<Self> {
        check_increasing(&values)?;
        Ok(IntSeq { family, values })
    }

    pub fn custom(values: Vec<BigUint>) -> Result<Self> {
        Self::new(Family::Custom, values)
    }

    pub fn from_u64s(values: &[u64]) -> Result<Self> {
        Self::custom(values.iter().map(|&v| BigUint::from(v)).collect())
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn values(&self) -> &[BigUint] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `n` terms (all of them if `n` exceeds the length).
    pub fn prefix(&self, n: usize) -> &[BigUint] {
        &self.values[..n.min(self.values.len())]
    }

    /// Bit length of the largest of the first `n` terms.
    pub fn max_bits(&self, n: usize) -> u64 {
        self.prefix(n).last().map_or(0, |v| v.bits())
    }

    /// The first `n` terms as machine words, if they all fit.
    pub fn prefix_u64(&self, n: usize) -> Option<Vec<u64>> {
        self.prefix(n).iter().map(|v| v.to_u64()).collect()
    }

    /// Re-validates the type invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        check_increasing(&self.values)
    }
}

fn check_increasing(values: &[BigUint]) -> Result<()> {
    if let Some(first) = values.first() {
        if first.is_zero() {
            return Err(Error::NotIncreasing {
                index: 0,
                detail: "value 0 is not positive".into(),
            });
        }
    }
    for (i, w) in values.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::NotIncreasing {
                index: i + 1,
                detail: format!("{} follows {}", w[1], w[0]),
            });
        }
    }
    Ok(())
}

/// `a(n)` for `n = 1..=count`, with `coeffs` listed from the highest degree down.
pub fn gen_polynomial(coeffs: &[BigInt], count: usize) -> Result<IntSeq> {
    let lead = coeffs
        .iter()
        .find(|c| !c.is_zero())
        .ok_or_else(|| Error::param("coeffs", "polynomial is identically zero"))?;
    if !lead.is_positive() {
        return Err(Error::param("coeffs", "leading coefficient must be positive"));
    }
    let mut values = Vec::with_capacity(count);
    let mut prev: Option<BigInt> = None;
    for n in 1..=count {
        let x = BigInt::from(n);
        let v = coeffs.iter().fold(BigInt::zero(), |acc, c| acc * &x + c);
        if !v.is_positive() || prev.as_ref().is_some_and(|p| &v <= p) {
            return Err(Error::NotIncreasing {
                index: n - 1,
                detail: format!("a({n}) = {v} breaks positivity or strict increase"),
            });
        }
        prev = Some(v.clone());
        values.push(v.to_biguint().expect("checked positive"));
    }
    Ok(IntSeq {
        family: Family::Polynomial {
            coeffs: coeffs.iter().map(|c| c.to_string()).collect(),
        },
        values,
    })
}

/// `base^n` for `n = 1..=count`.
pub fn gen_lacunary(base: u64, count: usize) -> Result<IntSeq> {
    if base < 2 {
        return Err(Error::param("base", format!("must be at least 2, got {base}")));
    }
    let b = BigUint::from(base);
    let mut values = Vec::with_capacity(count);
    let mut cur = BigUint::one();
    for _ in 0..count {
        cur *= &b;
        values.push(cur.clone());
    }
    Ok(IntSeq {
        family: Family::Lacunary { base },
        values,
    })
}

/// Parameters of a single-block quasi-arithmetic sequence of degree one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiArithmeticParams {
    /// Block size `M`.
    pub block: usize,
    /// Density `C` in `(0, 1]`.
    #[serde(with = "crate::exact::rational")]
    pub density: BigRational,
    /// Span factor `K >= 1`; the progression has `ceil(K M)` terms.
    #[serde(with = "crate::exact::rational")]
    pub span: BigRational,
    pub step: u64,
    pub base: u64,
    pub seed: u64,
}

impl QuasiArithmeticParams {
    /// Number of progression terms `#{r : 0 <= r < K M}`.
    pub fn progression_len(&self) -> u64 {
        let km = &self.span * BigRational::from_integer(BigInt::from(self.block));
        ceil_to_biguint(&km).to_u64().unwrap_or(u64::MAX)
    }

    /// `ceil(C M)`, the guaranteed number of progression members among the first `M` terms.
    pub fn required_members(&self) -> u64 {
        let cm = &self.density * BigRational::from_integer(BigInt::from(self.block));
        ceil_to_biguint(&cm).to_u64().unwrap_or(u64::MAX)
    }

    pub fn progression_contains(&self, value: &BigUint) -> bool {
        let Some(v) = value.to_u64() else {
            return false;
        };
        v >= self.base && (v - self.base) % self.step == 0 && (v - self.base) / self.step < self.progression_len()
    }

    fn validate(&self) -> Result<()> {
        let zero = BigRational::zero();
        let one = BigRational::one();
        if self.block == 0 {
            return Err(Error::param("block", "must be positive"));
        }
        if self.density <= zero || self.density > one {
            return Err(Error::param("density", "must lie in (0, 1]"));
        }
        if self.span < one {
            return Err(Error::param("span", "must be at least 1"));
        }
        if self.step == 0 || self.base == 0 {
            return Err(Error::param("step", "step and base must be positive"));
        }
        if self.required_members() > self.progression_len() {
            return Err(Error::param("density", "ceil(C M) exceeds the progression length K M"));
        }
        Ok(())
    }
}

/// A sequence whose first `M` terms contain at least `ceil(C M)` members of
/// `{base + r step : 0 <= r < K M}`.
///
/// The progression members are a seeded random choice of `ceil(C M)` indices
/// `r`; the remaining `M - ceil(C M)` block terms are drawn from
/// `[P_end, 2 P_end)` where `P_end = base + ceil(K M) step`. The tail continues
/// along the progression, keeping each further term with probability `C / K`.
pub fn gen_quasi_arithmetic_deg1(params: &QuasiArithmeticParams, count: usize) -> Result<IntSeq> {
    params.validate()?;
    if count < params.block {
        return Err(Error::param("n", "must be at least the block size M"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let len = params.progression_len();
    let need = params.required_members();
    let as_u64 = |what: &'static str, v: Option<u64>| v.ok_or_else(|| Error::param(what, "value overflows 64 bits"));

    let mut rs = rand::seq::index::sample(&mut rng, len as usize, need as usize).into_vec();
    rs.sort_unstable();
    let mut values: Vec<u64> = rs
        .iter()
        .map(|&r| as_u64("step", (r as u64).checked_mul(params.step).and_then(|x| x.checked_add(params.base))))
        .collect::<Result<_>>()?;

    let p_end = as_u64("span", len.checked_mul(params.step).and_then(|x| x.checked_add(params.base)))?;
    let fillers = params.block - need as usize;
    if fillers > 0 {
        let mut extra = rand::seq::index::sample(&mut rng, p_end as usize, fillers).into_vec();
        extra.sort_unstable();
        values.extend(extra.into_iter().map(|x| p_end + x as u64));
    }

    // Continue along the progression past the last block term.
    let last = *values.last().expect("block is non-empty");
    let mut r = if last < params.base {
        0
    } else {
        (last - params.base) / params.step + 1
    };
    let keep = (&params.density / &params.span).to_f64().unwrap_or(1.0);
    while values.len() < count {
        let v = as_u64("n", r.checked_mul(params.step).and_then(|x| x.checked_add(params.base)))?;
        if keep >= 1.0 || rng.random_bool(keep) {
            values.push(v);
        }
        r += 1;
    }
    Ok(IntSeq {
        family: Family::QuasiArithmetic(params.clone()),
        values: values.into_iter().map(BigUint::from).collect(),
    })
}

/// Greedy set with all pairwise differences distinct (the Mian–Chowla sequence).
pub fn gen_sidon_greedy(count: usize) -> Result<IntSeq> {
    if count == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut elems: Vec<u64> = vec![1];
    let mut used = DiffBitset::default();
    let mut candidate = 1u64;
    while elems.len() < count {
        candidate += 1;
        if elems.iter().all(|&a| !used.contains(candidate - a)) {
            for &a in &elems {
                used.insert(candidate - a);
            }
            elems.push(candidate);
        }
    }
    Ok(IntSeq {
        family: Family::Sidon,
        values: elems.into_iter().map(BigUint::from).collect(),
    })
}

#[derive(Default)]
struct DiffBitset {
    words: Vec<u64>,
}

impl DiffBitset {
    fn contains(&self, v: u64) -> bool {
        let w = (v / 64) as usize;
        w < self.words.len() && self.words[w] >> (v % 64) & 1 == 1
    }

    fn insert(&mut self, v: u64) {
        let w = (v / 64) as usize;
        if w >= self.words.len() {
            self.words.resize((w + 1).next_power_of_two(), 0);
        }
        self.words[w] |= 1 << (v % 64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;
    use std::collections::HashSet;

    fn ints(values: &[BigUint]) -> Vec<u64> {
        values.iter().map(|v| v.to_u64().unwrap()).collect()
    }

    fn qa(block: usize, c: &str, k: &str, step: u64, seed: u64) -> QuasiArithmeticParams {
        QuasiArithmeticParams {
            block,
            density: parse_rational(c).unwrap(),
            span: parse_rational(k).unwrap(),
            step,
            base: 1,
            seed,
        }
    }

    #[test]
    fn polynomial_values() {
        let sq = gen_polynomial(&[1.into(), 0.into(), 0.into()], 4).unwrap();
        assert_eq!(ints(sq.values()), [1, 4, 9, 16]);
        let id = gen_polynomial(&[1.into(), 0.into()], 3).unwrap();
        assert_eq!(ints(id.values()), [1, 2, 3]);
    }

    #[test]
    fn non_monotone_polynomial_rejected() {
        let err = gen_polynomial(&[1.into(), (-10).into(), 0.into()], 4).unwrap_err();
        assert!(matches!(err, Error::NotIncreasing { index: 0, .. }));
        assert!(gen_polynomial(&[(-1).into(), 100.into()], 3).is_err());
    }

    #[test]
    fn lacunary_values() {
        assert_eq!(ints(gen_lacunary(2, 4).unwrap().values()), [2, 4, 8, 16]);
        assert_eq!(ints(gen_lacunary(3, 3).unwrap().values()), [3, 9, 27]);
        let big = gen_lacunary(2, 2000).unwrap();
        assert_eq!(big.values().last().unwrap().bits(), 2001);
        assert!(gen_lacunary(1, 3).is_err());
    }

    #[test]
    fn full_progression_when_dense() {
        let s = gen_quasi_arithmetic_deg1(&qa(10, "1", "1", 1, 3), 25).unwrap();
        assert_eq!(ints(s.values()), (1..=25).collect::<Vec<_>>());
    }

    #[test]
    fn half_density_step_two() {
        let p = qa(10, "1/2", "1", 2, 11);
        let s = gen_quasi_arithmetic_deg1(&p, 40).unwrap();
        let members = s.prefix(10).iter().filter(|v| p.progression_contains(v)).count();
        assert!(members >= 5, "{members}");
        assert!(s.values().iter().all(|v| v.to_u64().unwrap() > 0));
    }

    #[test]
    fn density_recount() {
        let p = qa(1000, "0.9", "1", 1, 7);
        let s = gen_quasi_arithmetic_deg1(&p, 10_000).unwrap();
        assert_eq!(s.len(), 10_000);
        s.validate().unwrap();
        // Recount directly against the progression definition.
        let members = ints(s.prefix(1000)).into_iter().filter(|&v| (1..=1000).contains(&v)).count();
        assert!(members >= 900, "{members}");
    }

    #[test]
    fn infeasible_quasi_arithmetic_rejected() {
        assert!(gen_quasi_arithmetic_deg1(&qa(10, "1", "1/2", 1, 0), 10).is_err());
        assert!(gen_quasi_arithmetic_deg1(&qa(10, "0", "1", 1, 0), 10).is_err());
        assert!(gen_quasi_arithmetic_deg1(&qa(10, "1", "1", 1, 0), 5).is_err());
    }

    /// Brute-force greedy: smallest next integer keeping all differences distinct.
    fn greedy_oracle(n: usize) -> Vec<u64> {
        let mut set = vec![1u64];
        let mut c = 1;
        while set.len() < n {
            c += 1;
            let mut trial = set.clone();
            trial.push(c);
            let mut diffs = HashSet::new();
            let ok = trial
                .iter()
                .flat_map(|a| trial.iter().map(move |b| (a, b)))
                .filter(|(a, b)| a != b)
                .all(|(a, b)| diffs.insert(*a as i64 - *b as i64));
            if ok {
                set = trial;
            }
        }
        set
    }

    #[test]
    fn sidon_matches_brute_force_greedy() {
        assert_eq!(ints(gen_sidon_greedy(1).unwrap().values()), [1]);
        assert_eq!(ints(gen_sidon_greedy(4).unwrap().values()), [1, 2, 4, 8]);
        assert_eq!(ints(gen_sidon_greedy(30).unwrap().values()), greedy_oracle(30));
    }

    #[test]
    fn sidon_differences_distinct() {
        let s = ints(gen_sidon_greedy(120).unwrap().values());
        let mut diffs = HashSet::new();
        for a in &s {
            for b in &s {
                if a != b {
                    assert!(diffs.insert(*a as i64 - *b as i64));
                }
            }
        }
        assert_eq!(diffs.len(), 120 * 119);
    }

    #[test]
    fn custom_rejects_duplicates() {
        assert!(IntSeq::from_u64s(&[1, 2, 2]).is_err());
        assert!(IntSeq::from_u64s(&[0, 2]).is_err());
        assert!(IntSeq::from_u64s(&[3, 5, 9]).is_ok());
    }
}
