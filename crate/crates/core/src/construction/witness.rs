//! Hits `‖λ_n α‖ <= ψ_n` and the pair-correlation windows they force.

use std::collections::HashSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::levels::ConstructionState;
use crate::error::{Error, Result};
use crate::exact::{ratio_from_biguint, ratio_from_u64, rational_to_f64};
use crate::paircorr::r2_fast;
use crate::torus::{distance_to_zero, fractional_parts, FixedPointAlpha};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    /// One-based index into `λ`.
    pub n: usize,
    /// One-based level.
    pub level: usize,
    #[serde(with = "crate::exact::string")]
    pub lambda: u64,
    /// Nearest integer to `λ_n α`.
    #[serde(with = "crate::exact::decimal")]
    pub m: BigUint,
    /// `‖λ_n α‖ · 2^B`.
    #[serde(with = "crate::exact::decimal")]
    pub distance: BigUint,
    pub bits: u32,
}

/// Every `n` with `‖λ_n α‖ <= 1/M_l`, tested as `d · M_l <= 2^B`.
pub fn find_hits(state: &ConstructionState, alpha: &FixedPointAlpha) -> Result<Vec<Hit>> {
    let bits = alpha.bits();
    let max_lambda = state.lambda.last().copied().unwrap_or(0);
    let value_bits = u64::from(64 - max_lambda.leading_zeros());
    let required = FixedPointAlpha::required_bits(value_bits);
    if bits < required {
        return Err(Error::InsufficientBits {
            bits,
            required,
            value_bits,
        });
    }
    let one = BigUint::one() << bits as usize;
    let half = BigUint::one() << (bits as usize - 1);
    let mask = &one - 1u32;
    let hits = state
        .lambda
        .iter()
        .enumerate()
        .filter_map(|(i, &lambda)| {
            let product = alpha.numerator() * lambda;
            let distance = distance_to_zero(&(&product & &mask), bits);
            let level = &state.levels[state.level_of[i]];
            (&distance * level.m <= one).then(|| Hit {
                n: i + 1,
                level: level.index,
                lambda,
                m: (&product + &half) >> bits as usize,
                distance,
                bits,
            })
        })
        .collect();
    Ok(hits)
}

/// Hit lists for many `α`, in input order.
pub fn hit_survey(state: &ConstructionState, alphas: &[FixedPointAlpha]) -> Result<Vec<Vec<Hit>>> {
    alphas.par_iter().map(|a| find_hits(state, a)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessCase {
    /// `ρ < c₂/(4K²)`: a single window `s = c₂/(4K)` must reach `R₂ >= 4s`.
    Zero,
    /// Two windows around `Kρ` must miss `2s` by at least `c₂/(8K)` on one side.
    Positive,
}

/// A deviation witness at scale `M = floor(K M_l)` built from one observed hit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub hit: Hit,
    pub case: WitnessCase,
    /// Number of sequence terms used.
    pub m: u64,
    pub level_m: u64,
    /// `M_l ‖λ_n α‖`.
    #[serde(with = "crate::exact::rational")]
    pub rho: BigRational,
    /// Window parameters and `R₂` values; one entry in the zero case, `s₁`, `s₂` otherwise.
    #[serde(with = "crate::exact::rational::vec")]
    pub s_values: Vec<BigRational>,
    #[serde(with = "crate::exact::rational::vec")]
    pub r2_values: Vec<BigRational>,
    /// `R₂ − 4s` in the zero case, `max_j |Λ^(j) − 2s_j|` otherwise.
    #[serde(with = "crate::exact::rational")]
    pub deviation: BigRational,
    /// `4s` in the zero case, `c₂/(8K)` otherwise.
    #[serde(with = "crate::exact::rational")]
    pub required: BigRational,
    pub holds: bool,
    /// Pairs `p, q <= M` with `a(p) − a(q) = λ_n`.
    pub lambda_pairs: u64,
    pub deviation_f64: f64,
    /// The bound is only claimed for large levels; a failure here is reported, not fatal.
    pub violation: bool,
}

/// Evaluates the case analysis at the hit `n` (one-based) for the state's own sequence.
pub fn witness_non_poissonian(state: &ConstructionState, alpha: &FixedPointAlpha, hit: &Hit) -> Result<WitnessReport> {
    let prefix_len = crate::exact::floor_times(state.span(), state.level_for(hit.n).m);
    let values = state.family.prefix(prefix_len as usize)?;
    witness_for_values(state, alpha, hit, &values)
}

/// Same as [`witness_non_poissonian`] with an explicit sequence prefix of length at least `K M_l`.
pub fn witness_for_values(
    state: &ConstructionState,
    alpha: &FixedPointAlpha,
    hit: &Hit,
    values: &[u64],
) -> Result<WitnessReport> {
    if hit.n == 0 || hit.n > state.len() || state.lambda[hit.n - 1] != hit.lambda {
        return Err(Error::param("hit", "does not belong to this state"));
    }
    let level = state.level_for(hit.n);
    let m = crate::exact::floor_times(state.span(), level.m);
    if (values.len() as u64) < m {
        return Err(Error::param(
            "sequence",
            format!("prefix has {} terms, the witness needs {m}", values.len()),
        ));
    }
    let values = &values[..m as usize];
    let big: Vec<BigUint> = values.iter().map(|&v| BigUint::from(v)).collect();
    let points = fractional_parts(&big, alpha)?;

    let product = alpha.numerator() * hit.lambda;
    let mask = (BigUint::one() << alpha.bits() as usize) - 1u32;
    let distance = distance_to_zero(&(&product & &mask), alpha.bits());
    if distance != hit.distance || &distance * level.m > BigUint::one() << alpha.bits() as usize {
        return Err(Error::param("hit", "is not a hit for this alpha"));
    }

    let k = state.span();
    let c2 = &state.c2;
    let two = BigRational::from_integer(BigInt::from(2));
    let four = BigRational::from_integer(BigInt::from(4));
    let eight = BigRational::from_integer(BigInt::from(8));
    let rho = ratio_from_biguint(&distance * level.m, BigUint::one() << alpha.bits() as usize);
    let zero_cut = c2 / (&four * k * k);

    let (case, s_values) = if rho < zero_cut {
        (WitnessCase::Zero, vec![c2 / (&four * k)])
    } else {
        let eps = (&rho / &two).min(c2 / (&eight * k * k));
        (WitnessCase::Positive, vec![k * (&rho - &eps), k * (&rho + &eps)])
    };
    let r2_values = s_values.iter().map(|s| r2_fast(&points, s)).collect::<Result<Vec<_>>>()?;
    let (deviation, required) = match case {
        WitnessCase::Zero => (&r2_values[0] - &four * &s_values[0], &four * &s_values[0]),
        WitnessCase::Positive => {
            let dev = s_values
                .iter()
                .zip(&r2_values)
                .map(|(s, r)| (r - &two * s).abs())
                .max()
                .expect("two windows");
            (dev, c2 / (&eight * k))
        }
    };
    let holds = match case {
        WitnessCase::Zero => r2_values[0] >= required,
        WitnessCase::Positive => deviation >= required,
    };
    Ok(WitnessReport {
        hit: hit.clone(),
        case,
        m,
        level_m: level.m,
        rho,
        deviation_f64: rational_to_f64(&deviation),
        s_values,
        r2_values,
        deviation,
        required,
        holds,
        lambda_pairs: count_difference(values, hit.lambda),
        violation: !holds,
    })
}

/// Number of pairs `(p, q)` with `a(p) − a(q) = t`.
fn count_difference(values: &[u64], t: u64) -> u64 {
    let set: HashSet<u64> = values.iter().copied().collect();
    values.iter().filter(|&&v| set.contains(&(v + t))).count() as u64
}

/// Whether a hit meets the zero-case precondition `M_l ‖λ α‖ < c₂/(4K²)`.
pub fn is_zero_case(state: &ConstructionState, hit: &Hit) -> bool {
    let rho = ratio_from_biguint(&hit.distance * state.level_for(hit.n).m, BigUint::one() << hit.bits as usize);
    let k = state.span();
    rho < &state.c2 / (ratio_from_u64(4, 1) * k * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::levels::{build_levels, BuildOptions, InterleavedProgression};
    use crate::torus::{alpha_random, alpha_rational};
    use num_traits::Zero;

    fn state() -> ConstructionState {
        build_levels(&InterleavedProgression::identity(), &BuildOptions::default()).unwrap()
    }

    #[test]
    fn alpha_zero_hits_everything() {
        let s = state();
        let zero = FixedPointAlpha::new(BigUint::zero(), 128, crate::torus::Provenance::Explicit).unwrap();
        let hits = find_hits(&s, &zero).unwrap();
        assert_eq!(hits.len(), s.len());
        assert!(hits.iter().all(|h| h.distance.is_zero() && h.m.is_zero()));
    }

    #[test]
    fn half_hits_even_lambdas() {
        let s = state();
        let half = alpha_rational(1, 2, 128).unwrap();
        let hits = find_hits(&s, &half).unwrap();
        let even: Vec<usize> = (1..=s.len()).filter(|&n| s.lambda[n - 1] % 2 == 0).collect();
        let exact: Vec<usize> = hits.iter().filter(|h| h.distance.is_zero()).map(|h| h.n).collect();
        assert_eq!(exact, even);
        // λ = 40: 40/2 = 20
        let h = hits.iter().find(|h| h.lambda == 40).unwrap();
        assert_eq!(h.m, BigUint::from(20u32));
    }

    #[test]
    fn narrow_alpha_is_rejected() {
        let s = state();
        let a = alpha_random(64, 1).unwrap();
        assert!(matches!(find_hits(&s, &a), Err(Error::InsufficientBits { .. })));
    }

    #[test]
    fn third_gives_zero_case_witness() {
        let s = state();
        // 1/3 truncated to 128 bits: λ = 42 is a multiple of 3 and ‖42 α‖ is tiny
        let third = alpha_rational(1, 3, 128).unwrap();
        let hits = find_hits(&s, &third).unwrap();
        let hit = hits.iter().find(|h| h.lambda == 42).expect("42 is a hit");
        assert!(is_zero_case(&s, hit));
        let report = witness_non_poissonian(&s, &third, hit).unwrap();
        assert_eq!(report.case, WitnessCase::Zero);
        assert_eq!(report.m, 50);
        assert!(report.holds);
        // s = 1/32; every pair with difference divisible by 3 sits at distance < s / M
        let two_s = ratio_from_u64(1, 16);
        assert!(report.r2_values[0] > ratio_from_u64(10, 1) * two_s);
        assert_eq!(report.lambda_pairs, 8);
    }

    #[test]
    fn witness_checks_hit_and_prefix() {
        let s = state();
        let third = alpha_rational(1, 3, 128).unwrap();
        let hits = find_hits(&s, &third).unwrap();
        let hit = hits.iter().find(|h| h.lambda == 42).unwrap();
        assert!(witness_for_values(&s, &third, hit, &[1, 2, 3]).is_err());
        let mut forged = hit.clone();
        forged.lambda = 43;
        assert!(witness_non_poissonian(&s, &third, &forged).is_err());
    }

    #[test]
    fn survey_keeps_order() {
        let s = state();
        let alphas: Vec<_> = (0..8).map(|seed| alpha_random(128, seed).unwrap()).collect();
        let survey = hit_survey(&s, &alphas).unwrap();
        for (a, hits) in alphas.iter().zip(&survey) {
            assert_eq!(&find_hits(&s, a).unwrap(), hits);
        }
    }
}
