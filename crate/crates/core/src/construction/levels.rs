use std::collections::HashSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::totient::density_constant;
use crate::error::{Error, Result};
use crate::exact::{ceil_times, rational_to_f64};

/// Member sets up to this size get their differences tallied pair by pair.
const DIRECT_MULTISET_LIMIT: usize = 2048;

/// A strictly increasing sequence built from the progression `base + r step`
/// with off-progression filler: term `n` is the next progression term exactly
/// when `ceil(C n) > ceil(C (n − 1))`, so the first `M` terms always contain
/// the `ceil(C M)` progression terms with `r < ceil(C M) <= K M`.
///
/// With `C = 1` there is no filler and `a(n) = base + (n − 1) step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterleavedProgression {
    pub base: u64,
    pub step: u64,
    #[serde(with = "crate::exact::rational")]
    pub density: BigRational,
    #[serde(with = "crate::exact::rational")]
    pub span: BigRational,
}

impl InterleavedProgression {
    pub fn new(base: u64, step: u64, density: BigRational, span: BigRational) -> Result<Self> {
        let one = BigRational::one();
        if base == 0 || step == 0 {
            return Err(Error::param("step", "base and step must be positive"));
        }
        if density <= BigRational::zero() || density > one {
            return Err(Error::param("C", "density must lie in (0, 1]"));
        }
        if span < one {
            return Err(Error::param("K", "span factor must be at least 1"));
        }
        // at most ceil(1/C) - 1 filler terms sit between consecutive progression terms
        let max_run = ceil_times(&density.recip(), 1) - 1;
        if max_run >= step {
            return Err(Error::param(
                "step",
                format!("density {density} needs step >= {} to fit the filler terms", max_run + 1),
            ));
        }
        Ok(InterleavedProgression {
            base,
            step,
            density,
            span,
        })
    }

    /// `a(n) = n`.
    pub fn identity() -> Self {
        Self::new(1, 1, BigRational::one(), BigRational::one()).expect("valid parameters")
    }

    /// Smallest step that accommodates the filler for density `C`.
    pub fn min_step(density: &BigRational) -> u64 {
        ceil_times(&density.recip(), 1).max(1)
    }

    fn is_progression_turn(&self, n: u64) -> bool {
        ceil_times(&self.density, n) > ceil_times(&self.density, n - 1)
    }

    /// The first `len` terms.
    pub fn prefix(&self, len: usize) -> Result<Vec<u64>> {
        let mut out = Vec::with_capacity(len);
        let mut r: u64 = 0;
        let mut last: u64 = 0;
        for n in 1..=len as u64 {
            let v = if self.is_progression_turn(n) {
                let v = r
                    .checked_mul(self.step)
                    .and_then(|x| x.checked_add(self.base))
                    .ok_or_else(|| Error::param("n", "sequence value overflows 64 bits"))?;
                r += 1;
                v
            } else {
                last + 1
            };
            out.push(v);
            last = v;
        }
        Ok(out)
    }

    /// Definition-1 data at scale `m`: the progression `P` and the members of `P` among the first `m` terms.
    pub fn level(&self, m: u64) -> LevelData {
        let s = ceil_times(&self.density, m);
        LevelData {
            m,
            base: self.base,
            step: self.step,
            len: ceil_times(&self.span, m),
            members: (0..s).collect(),
        }
    }
}

/// A level's progression `{base + r step : 0 <= r < len}` with `len = ceil(K M)`,
/// and the indices `r` of the subset `A` found among the first `M` terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelData {
    pub m: u64,
    pub base: u64,
    pub step: u64,
    pub len: u64,
    pub members: Vec<u64>,
}

impl LevelData {
    /// Maps sequence values onto progression indices, rejecting values outside the progression.
    pub fn from_values(m: u64, base: u64, step: u64, len: u64, values: &[u64]) -> Result<Self> {
        let outside = |v: u64| Error::OutsideProgression {
            value: v.to_string(),
            base: base.to_string(),
            step: step.to_string(),
            len,
        };
        let mut members = Vec::with_capacity(values.len());
        for &v in values {
            if v < base || (v - base) % step != 0 || (v - base) / step >= len {
                return Err(outside(v));
            }
            members.push((v - base) / step);
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("values", "must be strictly increasing"));
        }
        Ok(LevelData {
            m,
            base,
            step,
            len,
            members,
        })
    }
}

/// Multiplicities of the positive differences `(r_i − r_j) κ` of a level subset,
/// indexed by the index difference `t = r_i − r_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferenceMultiset {
    pub step: u64,
    pub size: u64,
    /// `mult[t]` for `0 < t < len`; `mult[0]` is unused and zero.
    pub mult: Vec<u64>,
}

impl DifferenceMultiset {
    pub fn multiplicity(&self, t: u64) -> u64 {
        self.mult.get(t as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.mult.iter().sum()
    }

    /// `(difference value t κ, multiplicity)` for every difference that occurs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.mult
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(t, &c)| (t as u64 * self.step, c))
    }
}

/// Differences of the level subset with multiplicity; FFT autocorrelation for large subsets.
pub fn difference_multiset(level: &LevelData) -> Result<DifferenceMultiset> {
    if let Some(&r) = level.members.iter().find(|&&r| r >= level.len) {
        return Err(Error::OutsideProgression {
            value: (level.base as u128 + r as u128 * level.step as u128).to_string(),
            base: level.base.to_string(),
            step: level.step.to_string(),
            len: level.len,
        });
    }
    if level.members.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("members", "must be strictly increasing"));
    }
    let len = level.len as usize;
    let s = level.members.len();
    let mut mult = if s <= DIRECT_MULTISET_LIMIT {
        let mut mult = vec![0u64; len.max(1)];
        for (i, &ri) in level.members.iter().enumerate() {
            for &rj in &level.members[..i] {
                mult[(ri - rj) as usize] += 1;
            }
        }
        mult
    } else {
        autocorrelation(&level.members, len)?
    };
    mult[0] = 0;
    let expected = (s as u64) * (s as u64).saturating_sub(1) / 2;
    let total: u64 = mult.iter().sum();
    if total != expected {
        return Err(Error::param("members", format!("difference total {total} != {expected}")));
    }
    Ok(DifferenceMultiset {
        step: level.step,
        size: s as u64,
        mult,
    })
}

fn autocorrelation(members: &[u64], len: usize) -> Result<Vec<u64>> {
    let size = (2 * len).next_power_of_two();
    let mut buf = vec![Complex::new(0.0f64, 0.0); size];
    for &r in members {
        buf[r as usize].re = 1.0;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for z in &mut buf {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = size as f64;
    buf[..len]
        .iter()
        .map(|z| {
            let v = z.re / scale;
            let rounded = v.round();
            if (v - rounded).abs() > 0.25 || rounded < 0.0 {
                return Err(Error::param("members", format!("FFT count {v} is not near an integer")));
            }
            Ok(rounded as u64)
        })
        .collect()
}

/// The largest difference indices whose multiplicity reaches `c₂ M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// `R_1 < ... < R_w`.
    pub r_values: Vec<u64>,
    pub multiplicities: Vec<u64>,
    pub qualifying: usize,
    pub threshold: BigRational,
}

/// Picks the `ceil(c₂ M / 2)` largest differences of multiplicity at least `c₂ M`
/// and checks `c₂ M / 2 <= R_1 < ... < R_w < K M`.
pub fn select_top_values(
    multiset: &DifferenceMultiset,
    m: u64,
    c2: &BigRational,
    span: &BigRational,
    level: usize,
) -> Result<Selection> {
    let threshold = c2 * BigRational::from_integer(BigInt::from(m));
    let qualifies = |c: u64| BigRational::from_integer(BigInt::from(c)) >= threshold;
    let qualifying: Vec<u64> = (1..multiset.mult.len() as u64)
        .filter(|&t| qualifies(multiset.multiplicity(t)))
        .collect();
    let needed = ceil_times(c2, m) as usize;
    if qualifying.len() < needed {
        return Err(Error::InsufficientMultiplicity {
            level,
            found: qualifying.len(),
            needed,
            threshold: crate::exact::format_rational(&threshold),
        });
    }
    let half = c2 / BigRational::from_integer(2.into());
    let w = ceil_times(&half, m) as usize;
    let r_values = qualifying[qualifying.len() - w..].to_vec();
    let lower = &half * BigRational::from_integer(BigInt::from(m));
    let upper = span * BigRational::from_integer(BigInt::from(m));
    let first = BigRational::from_integer(BigInt::from(r_values[0]));
    let last = BigRational::from_integer(BigInt::from(r_values[w - 1]));
    if first < lower || last >= upper {
        return Err(Error::param(
            "selection",
            format!("level {level}: R values {}..{} leave [c2 M / 2, K M)", r_values[0], r_values[w - 1]),
        ));
    }
    Ok(Selection {
        multiplicities: r_values.iter().map(|&t| multiset.multiplicity(t)).collect(),
        r_values,
        qualifying: qualifying.len(),
        threshold,
    })
}

/// Independent recount of how often index difference `t` occurs in the member set.
pub fn recount_multiplicity(members: &[u64], t: u64) -> u64 {
    let set: HashSet<u64> = members.iter().copied().collect();
    members.iter().filter(|&&r| set.contains(&(r + t))).count() as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthMode {
    /// `M_l > (Σ_{p<l} Σ_q T_q^(p))²`.
    Strict,
    /// `M_l > Σ_{p<l} Σ_q T_q^(p)`; results are labelled non-conforming.
    Relaxed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    /// One-based level number `l`.
    pub index: usize,
    #[serde(with = "crate::exact::string")]
    pub m: u64,
    #[serde(with = "crate::exact::string")]
    pub kappa: u64,
    #[serde(with = "crate::exact::string")]
    pub base: u64,
    /// `|A_l|`.
    #[serde(with = "crate::exact::string")]
    pub subset_size: u64,
    pub w: usize,
    #[serde(with = "crate::exact::string::vec")]
    pub r_values: Vec<u64>,
    /// `T_j = R_j κ`.
    #[serde(with = "crate::exact::string::vec")]
    pub t_values: Vec<u64>,
    #[serde(with = "crate::exact::string::vec")]
    pub multiplicities: Vec<u64>,
    #[serde(with = "crate::exact::rational")]
    pub multiplicity_threshold: BigRational,
    /// The lower bound `M_l` had to exceed (`(ΣT)²` or `ΣT` over earlier levels).
    #[serde(with = "crate::exact::decimal")]
    pub growth_bound: BigUint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub family: InterleavedProgression,
    #[serde(with = "crate::exact::rational")]
    pub c1: BigRational,
    #[serde(with = "crate::exact::rational")]
    pub c2: BigRational,
    /// `(K/2) c(c₂/(2K))`, the asymptotic per-level lower bound; diagnostic only.
    pub c4: f64,
    pub growth_mode: GrowthMode,
    /// False whenever relaxed growth was used.
    pub conforming: bool,
    pub levels: Vec<LevelRecord>,
    /// Merged `T` values, strictly increasing.
    #[serde(with = "crate::exact::string::vec")]
    pub lambda: Vec<u64>,
    /// Zero-based level of each `λ_n`.
    pub level_of: Vec<usize>,
}

impl ConstructionState {
    pub fn density(&self) -> &BigRational {
        &self.family.density
    }

    pub fn span(&self) -> &BigRational {
        &self.family.span
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// The level record of the one-based index `n`.
    pub fn level_for(&self, n: usize) -> &LevelRecord {
        &self.levels[self.level_of[n - 1]]
    }

    /// `ψ_n = 1 / M_l`.
    pub fn psi(&self, n: usize) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.level_for(n).m))
    }

    /// `τ_n = 1 / l`.
    pub fn tau(&self, n: usize) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.level_for(n).index))
    }

    /// Re-checks the structural invariants of a (possibly deserialized) state.
    pub fn validate(&self) -> Result<()> {
        let fail = |detail: String| Err(Error::param("state", detail));
        if self.lambda.windows(2).any(|w| w[0] >= w[1]) {
            return fail("lambda is not strictly increasing".into());
        }
        if self.level_of.len() != self.lambda.len() || self.level_of.windows(2).any(|w| w[0] > w[1]) {
            return fail("level map does not match lambda".into());
        }
        let c2 = c2_from(self.density(), self.span());
        if c2 != self.c2 {
            return fail(format!("c2 = {} but min(K, c1/(2K)) = {c2}", self.c2));
        }
        let mut earlier = BigUint::zero();
        for (l, level) in self.levels.iter().enumerate() {
            let half_m = &self.c2 * BigRational::from_integer(BigInt::from(level.m)) / BigRational::from_integer(2.into());
            let km = self.span() * BigRational::from_integer(BigInt::from(level.m));
            let ok_low = level.r_values.first().is_some_and(|&r| BigRational::from_integer(r.into()) >= half_m);
            let ok_high = level.r_values.last().is_some_and(|&r| BigRational::from_integer(r.into()) < km);
            if !ok_low || !ok_high || level.r_values.windows(2).any(|w| w[0] >= w[1]) {
                return fail(format!("level {} violates c2 M / 2 <= R_1 < ... < R_w < K M", l + 1));
            }
            if l > 0 && self.growth_mode == GrowthMode::Strict && BigUint::from(level.m) <= &earlier * &earlier {
                return fail(format!("level {} violates M_l > (sum of earlier T)^2", l + 1));
            }
            earlier += level.t_values.iter().map(|&t| BigUint::from(t)).sum::<BigUint>();
        }
        Ok(())
    }
}

/// `c₁ = C² / 4`.
pub fn c1_from(density: &BigRational) -> BigRational {
    density * density / BigRational::from_integer(4.into())
}

/// `c₂ = min(K, c₁ / (2K))`.
pub fn c2_from(density: &BigRational, span: &BigRational) -> BigRational {
    let c1 = c1_from(density);
    let other = &c1 / (span * BigRational::from_integer(2.into()));
    if span < &other {
        span.clone()
    } else {
        other
    }
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub levels: usize,
    pub mode: GrowthMode,
    /// `M_1`; raised to `ceil(2 / C)` if smaller.
    pub first_m: u64,
    /// Largest admissible `M_l`.
    pub budget: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            levels: 3,
            mode: GrowthMode::Strict,
            first_m: 8,
            budget: 1 << 22,
        }
    }
}

/// Builds the level structure and the merged sequences `λ_n`, `ψ_n`, `τ_n`.
pub fn build_levels(family: &InterleavedProgression, options: &BuildOptions) -> Result<ConstructionState> {
    if options.levels == 0 {
        return Err(Error::param("levels", "must be at least 1"));
    }
    let density = &family.density;
    let span = &family.span;
    let c1 = c1_from(density);
    let c2 = c2_from(density, span);
    // |Ã_l| >= c1 M² needs C M >= 2
    let min_m = ceil_times(&(BigRational::from_integer(2.into()) / density), 1).max(options.first_m).max(2);

    let mut levels: Vec<LevelRecord> = Vec::with_capacity(options.levels);
    let mut lambda: Vec<u64> = Vec::new();
    let mut level_of: Vec<usize> = Vec::new();
    let mut t_sum = BigUint::zero();
    for index in 1..=options.levels {
        let growth_bound = match options.mode {
            GrowthMode::Strict if index > 1 => &t_sum * &t_sum,
            _ => t_sum.clone(),
        };
        let previous_m = levels.last().map_or(0, |l| l.m);
        let required = (&growth_bound + 1u32).max(BigUint::from(previous_m + 1)).max(BigUint::from(min_m));
        let mut m = match required.to_u64() {
            Some(m) if m <= options.budget => m,
            _ => {
                return Err(Error::GrowthBudget {
                    level: index,
                    required: required.to_string(),
                    budget: options.budget,
                })
            }
        };
        let last_lambda = lambda.last().copied().unwrap_or(0);
        let record = loop {
            if m > options.budget {
                return Err(Error::GrowthBudget {
                    level: index,
                    required: m.to_string(),
                    budget: options.budget,
                });
            }
            let data = family.level(m);
            let multiset = difference_multiset(&data)?;
            let selection = select_top_values(&multiset, m, &c2, span, index)?;
            let t_values: Vec<u64> = selection
                .r_values
                .iter()
                .map(|&r| r.checked_mul(data.step).ok_or_else(|| Error::param("step", "T value overflows 64 bits")))
                .collect::<Result<_>>()?;
            // λ must keep increasing across the level boundary
            if t_values[0] <= last_lambda {
                m += 1;
                continue;
            }
            break LevelRecord {
                index,
                m,
                kappa: data.step,
                base: data.base,
                subset_size: data.members.len() as u64,
                w: t_values.len(),
                r_values: selection.r_values,
                t_values,
                multiplicities: selection.multiplicities,
                multiplicity_threshold: selection.threshold,
                growth_bound: growth_bound.clone(),
            };
        };
        for &t in &record.t_values {
            lambda.push(t);
            level_of.push(index - 1);
            t_sum += t;
        }
        levels.push(record);
    }
    let c3 = rational_to_f64(&c2) / (2.0 * rational_to_f64(span));
    let c4 = rational_to_f64(span) / 2.0 * density_constant(c3);
    Ok(ConstructionState {
        family: family.clone(),
        c1,
        c2,
        c4,
        growth_mode: options.mode,
        conforming: options.mode == GrowthMode::Strict,
        levels,
        lambda,
        level_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{parse_rational, ratio_from_u64};
    use proptest::prelude::*;

    fn direct_multiset(members: &[u64], len: usize) -> Vec<u64> {
        let mut mult = vec![0u64; len];
        for (i, a) in members.iter().enumerate() {
            for b in &members[..i] {
                mult[(a - b) as usize] += 1;
            }
        }
        mult
    }

    #[test]
    fn full_progression_of_three() {
        let level = LevelData::from_values(3, 5, 4, 3, &[5, 9, 13]).unwrap();
        let ms = difference_multiset(&level).unwrap();
        let pairs: Vec<(u64, u64)> = ms.iter().collect();
        assert_eq!(pairs, vec![(4, 2), (8, 1)]);
        assert_eq!(ms.total(), 3);
    }

    #[test]
    fn outside_progression_rejected() {
        assert!(matches!(
            LevelData::from_values(3, 5, 4, 3, &[5, 10]),
            Err(Error::OutsideProgression { .. })
        ));
        assert!(LevelData::from_values(3, 5, 4, 3, &[5, 17]).is_err());
        let bad = LevelData {
            m: 3,
            base: 1,
            step: 1,
            len: 3,
            members: vec![0, 5],
        };
        assert!(difference_multiset(&bad).is_err());
    }

    #[test]
    fn fft_path_matches_direct_tally() {
        let members: Vec<u64> = (0..6000u64).filter(|r| r % 3 != 1 && r % 7 != 2).collect();
        let level = LevelData {
            m: 6000,
            base: 1,
            step: 2,
            len: 6000,
            members: members.clone(),
        };
        let ms = difference_multiset(&level).unwrap();
        let mut direct = direct_multiset(&members, 6000);
        direct[0] = 0;
        assert_eq!(ms.mult, direct);
    }

    #[test]
    fn multiplicities_bounded_by_subset_size() {
        let level = InterleavedProgression::identity().level(200);
        let ms = difference_multiset(&level).unwrap();
        assert_eq!(ms.total(), 200 * 199 / 2);
        assert!(ms.mult.iter().all(|&c| c <= ms.size));
        for t in 1..200 {
            assert_eq!(ms.multiplicity(t), 200 - t);
        }
    }

    #[test]
    fn selection_on_ten_term_progression() {
        // c2 = 1/4: differences r = 1..7 have multiplicity 10 - r >= 2.5
        let level = InterleavedProgression::identity().level(10);
        let ms = difference_multiset(&level).unwrap();
        let sel = select_top_values(&ms, 10, &ratio_from_u64(1, 4), &ratio_from_u64(1, 1), 1).unwrap();
        assert_eq!(sel.qualifying, 7);
        // ceil(10/8) = 2 largest qualifying values
        assert_eq!(sel.r_values, vec![6, 7]);
        assert_eq!(sel.multiplicities, vec![4, 3]);
    }

    #[test]
    fn selection_fails_loudly_when_too_sparse() {
        let level = LevelData {
            m: 10,
            base: 1,
            step: 1,
            len: 100,
            members: vec![0, 1, 30, 99],
        };
        let ms = difference_multiset(&level).unwrap();
        let err = select_top_values(&ms, 10, &ratio_from_u64(1, 4), &ratio_from_u64(10, 1), 1).unwrap_err();
        assert!(matches!(err, Error::InsufficientMultiplicity { found: 0, .. }));
    }

    #[test]
    fn constants_follow_the_formulas() {
        let one = ratio_from_u64(1, 1);
        assert_eq!(c1_from(&one), ratio_from_u64(1, 4));
        assert_eq!(c2_from(&one, &one), ratio_from_u64(1, 8));
        let half = ratio_from_u64(1, 2);
        let k = ratio_from_u64(3, 2);
        // c1 = 1/16, c1 / (2K) = 1/48 < K
        assert_eq!(c2_from(&half, &k), ratio_from_u64(1, 48));
    }

    #[test]
    fn identity_three_levels_strict() {
        let state = build_levels(&InterleavedProgression::identity(), &BuildOptions::default()).unwrap();
        let ms: Vec<u64> = state.levels.iter().map(|l| l.m).collect();
        assert_eq!(ms, vec![8, 50, 29930]);
        assert_eq!(state.levels[0].t_values, vec![7]);
        assert_eq!(state.levels[1].t_values, vec![40, 41, 42, 43]);
        assert_eq!(state.levels[2].w, 1871);
        assert_eq!(*state.levels[2].t_values.first().unwrap(), 24318);
        assert_eq!(*state.levels[2].t_values.last().unwrap(), 26188);
        state.validate().unwrap();
        assert!(state.conforming);
        assert!(state.lambda.windows(2).all(|w| w[0] < w[1]));
        for n in 2..=state.len() {
            assert!(state.psi(n) <= state.psi(n - 1));
            assert!(state.tau(n) <= state.tau(n - 1));
        }
    }

    #[test]
    fn psi_mass_per_level_is_at_least_half_c2() {
        let state = build_levels(&InterleavedProgression::identity(), &BuildOptions::default()).unwrap();
        let total: BigRational = (1..=state.len()).map(|n| state.psi(n)).sum();
        let per_level: BigRational = state
            .levels
            .iter()
            .map(|l| BigRational::new(BigInt::from(l.w), BigInt::from(l.m)))
            .sum();
        let floor = &state.c2 / BigRational::from_integer(2.into()) * BigRational::from_integer(3.into());
        assert!(total >= per_level && per_level >= floor);
    }

    #[test]
    fn strict_growth_beyond_budget_suggests_relaxed() {
        let options = BuildOptions {
            levels: 4,
            ..Default::default()
        };
        let err = build_levels(&InterleavedProgression::identity(), &options).unwrap_err();
        assert!(matches!(err, Error::GrowthBudget { level: 4, .. }));
        assert!(err.to_string().contains("relaxed"));
        let relaxed = build_levels(
            &InterleavedProgression::identity(),
            &BuildOptions {
                levels: 4,
                mode: GrowthMode::Relaxed,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!relaxed.conforming);
        assert_eq!(relaxed.levels.len(), 4);
        assert!(relaxed.lambda.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sparse_family_builds_and_recounts() {
        let c = parse_rational("1/2").unwrap();
        let k = parse_rational("2").unwrap();
        let family = InterleavedProgression::new(3, 2, c, k).unwrap();
        let seq = family.prefix(40).unwrap();
        assert!(seq.windows(2).all(|w| w[0] < w[1]));
        let state = build_levels(&family, &BuildOptions::default()).unwrap();
        state.validate().unwrap();
        for level in &state.levels {
            let data = family.level(level.m);
            for (&r, &mult) in level.r_values.iter().zip(&level.multiplicities) {
                assert_eq!(recount_multiplicity(&data.members, r), mult);
                assert!(BigRational::from_integer(mult.into()) >= level.multiplicity_threshold);
            }
        }
    }

    #[test]
    fn family_rejects_cramped_step() {
        let c = parse_rational("1/3").unwrap();
        assert!(InterleavedProgression::new(1, 2, c.clone(), ratio_from_u64(1, 1)).is_err());
        assert!(InterleavedProgression::new(1, 3, c, ratio_from_u64(1, 1)).is_ok());
        assert!(InterleavedProgression::new(1, 1, ratio_from_u64(1, 1), ratio_from_u64(1, 2)).is_err());
    }

    #[test]
    fn interleaved_prefix_keeps_density() {
        let c = parse_rational("3/5").unwrap();
        let family = InterleavedProgression::new(1, 2, c.clone(), ratio_from_u64(1, 1)).unwrap();
        let values = family.prefix(500).unwrap();
        for m in [1u64, 7, 50, 500] {
            let members = values[..m as usize].iter().filter(|&&v| v % 2 == 1 && (v - 1) / 2 < m).count() as u64;
            assert!(members >= ceil_times(&c, m), "m = {m}");
        }
        assert!(values.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn selected_values_recount(members in prop::collection::btree_set(0u64..300, 60..200)) {
            let members: Vec<u64> = members.into_iter().collect();
            let level = LevelData { m: 150, base: 1, step: 1, len: 300, members };
            let ms = difference_multiset(&level).unwrap();
            let c2 = ratio_from_u64(1, 64);
            if let Ok(sel) = select_top_values(&ms, 150, &c2, &ratio_from_u64(2, 1), 1) {
                for (&r, &mult) in sel.r_values.iter().zip(&sel.multiplicities) {
                    prop_assert_eq!(recount_multiplicity(&level.members, r), mult);
                    prop_assert!(BigRational::from_integer(mult.into()) >= sel.threshold);
                }
            }
        }
    }
}
