//! Pair correlation `R₂`, its deviation from the Poissonian value `2s`,
//! and nearest-neighbour gap statistics.
//!
//! `R₂(s) = (1/N) #{j ≠ k : ‖θ_j − θ_k‖ ≤ s/N}` counts ordered pairs with a
//! closed threshold. With points stored as integers `v / 2^B`, the test is the
//! exact inequality `N · d · s_den ≤ s_num · 2^B`.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{non_negative_parts, parse_rational, ratio_from_biguint, rational_to_f64};
use crate::torus::{cmp_limbs, limbs_to_biguint, push_limbs, sub_mod_limbs, TorusPointSet};

/// `R₂` evaluated on a grid of `s` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelationCurve {
    #[serde(with = "crate::exact::rational::vec")]
    pub s_grid: Vec<BigRational>,
    #[serde(with = "crate::exact::rational::vec")]
    pub r2_values: Vec<BigRational>,
    pub n: usize,
}

impl PairCorrelationCurve {
    pub fn iter(&self) -> impl Iterator<Item = (&BigRational, &BigRational)> {
        self.s_grid.iter().zip(&self.r2_values)
    }

    /// The sub-curve with `s <= max_s`.
    pub fn up_to(&self, max_s: &BigRational) -> PairCorrelationCurve {
        let keep = self.s_grid.iter().take_while(|s| *s <= max_s).count();
        PairCorrelationCurve {
            s_grid: self.s_grid[..keep].to_vec(),
            r2_values: self.r2_values[..keep].to_vec(),
            n: self.n,
        }
    }
}

/// Parses `"start:end:step"` (inclusive of `end` when hit exactly) or a comma list.
pub fn parse_s_grid(text: &str) -> Result<Vec<BigRational>> {
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (parse_rational(start)?, parse_rational(end)?, parse_rational(step)?);
            if !step.is_positive() {
                return Err(Error::param("s-grid", "step must be positive"));
            }
            let mut grid = Vec::new();
            let mut s = start;
            while s <= end {
                grid.push(s.clone());
                s += &step;
                if grid.len() > 1_000_000 {
                    return Err(Error::TooLarge {
                        what: "s-grid",
                        requested: grid.len(),
                        limit: 1_000_000,
                    });
                }
            }
            grid
        }
        [_] => text.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::param("s-grid", format!("cannot parse `{text}`"))),
    };
    if grid.iter().any(|s| s.is_negative()) {
        return Err(Error::param("s-grid", "values must be non-negative"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("s-grid", "values must be ascending"));
    }
    Ok(grid)
}

/// The default grid `0, 1/10, ..., 5`.
pub fn default_s_grid() -> Vec<BigRational> {
    (0..=50)
        .map(|i| BigRational::new(BigInt::from(i), BigInt::from(10)))
        .collect()
}

/// Reference implementation: every unordered pair, exact cross-multiplied test.
pub fn r2_naive(points: &TorusPointSet, s: &BigRational) -> Result<BigRational> {
    let n = points.len();
    let (s_num, s_den) = non_negative_parts(s).ok_or_else(|| Error::param("s", "must be non-negative"))?;
    if n == 0 {
        return Ok(BigRational::zero());
    }
    let bits = points.bits();
    let width = points.width();
    let mask = points.top_mask();
    let rhs = &s_num << bits as usize;
    let lhs_factor = BigUint::from(n) * &s_den;
    // u128 fast route when every product provably fits.
    let small = match (rhs.to_u128(), lhs_factor.to_u64()) {
        (Some(r), Some(f)) if bits <= 64 && (f as u128).checked_mul(1u128 << 63).is_some() => Some((r, f as u128)),
        _ => None,
    };
    let mut fwd = vec![0u64; width];
    let mut bwd = vec![0u64; width];
    let mut count: u64 = 0;
    for j in 0..n {
        for k in j + 1..n {
            sub_mod_limbs(points.point(k), points.point(j), &mut fwd, mask);
            sub_mod_limbs(points.point(j), points.point(k), &mut bwd, mask);
            let d = if cmp_limbs(&fwd, &bwd) == Ordering::Greater { &bwd } else { &fwd };
            let within = match small {
                Some((r, f)) => f * d[0] as u128 <= r,
                None => &lhs_factor * limbs_to_biguint(d) <= rhs,
            };
            count += within as u64;
        }
    }
    Ok(BigRational::new(BigInt::from(2 * count), BigInt::from(n)))
}

/// Scaled threshold `floor(s 2^B / N)`, or saturation when every pair qualifies.
enum Threshold {
    All,
    Limit(Vec<u64>),
}

fn threshold(points: &TorusPointSet, s: &BigRational) -> Result<Threshold> {
    let (s_num, s_den) = non_negative_parts(s).ok_or_else(|| Error::param("s", "must be non-negative"))?;
    let bits = points.bits() as usize;
    let n = points.len().max(1);
    let t = (s_num << bits) / (s_den * BigUint::from(n));
    // Every torus distance is at most 2^{B-1}.
    if t >= BigUint::one() << (bits - 1) {
        return Ok(Threshold::All);
    }
    let mut limbs = Vec::with_capacity(points.width());
    push_limbs(&mut limbs, &t, points.width());
    Ok(Threshold::Limit(limbs))
}

/// Distinct point values in sorted order with multiplicities.
struct Runs {
    starts: Vec<usize>,
    /// `prefix[i]` = number of points in runs `0..i` of the circle unrolled twice.
    prefix: Vec<u64>,
    within_pairs: u64,
}

impl Runs {
    fn new(points: &TorusPointSet) -> Self {
        let n = points.len();
        let mut starts = Vec::new();
        let mut mults = Vec::new();
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && points.point(j) == points.point(i) {
                j += 1;
            }
            starts.push(i);
            mults.push((j - i) as u64);
            i = j;
        }
        let k = mults.len();
        let mut prefix = Vec::with_capacity(2 * k + 1);
        prefix.push(0);
        for r in 0..2 * k {
            prefix.push(prefix[r] + mults[r % k]);
        }
        let within_pairs = mults.iter().map(|m| m * (m - 1) / 2).sum();
        Runs {
            starts,
            prefix,
            within_pairs,
        }
    }

    fn len(&self) -> usize {
        self.starts.len()
    }

    fn mult(&self, r: usize) -> u64 {
        self.prefix[r + 1] - self.prefix[r]
    }
}

/// Sliding-window counter over the sorted circle, reusable across growing thresholds.
struct Window<'a> {
    points: &'a TorusPointSet,
    runs: Runs,
    /// Unrolled index of the last run inside each run's forward window.
    ends: Vec<usize>,
    scratch: Vec<u64>,
}

impl<'a> Window<'a> {
    fn new(points: &'a TorusPointSet) -> Self {
        let runs = Runs::new(points);
        let ends = (0..runs.len()).collect();
        Window {
            points,
            runs,
            ends,
            scratch: vec![0; points.width()],
        }
    }

    fn run_point(&self, unrolled: usize) -> &'a [u64] {
        self.points.point(self.runs.starts[unrolled % self.runs.len()])
    }

    /// Unordered pairs within scaled distance `limit`; `limit` must not decrease between calls.
    fn unordered_pairs(&mut self, limit: &[u64]) -> u64 {
        let k = self.runs.len();
        let mask = self.points.top_mask();
        let mut total = self.runs.within_pairs;
        let mut floor = 0;
        for i in 0..k {
            let mut e = self.ends[i].max(floor).max(i);
            let base = self.run_point(i);
            while e + 1 < i + k {
                sub_mod_limbs(self.run_point(e + 1), base, &mut self.scratch, mask);
                if cmp_limbs(&self.scratch, limit) == Ordering::Greater {
                    break;
                }
                e += 1;
            }
            self.ends[i] = e;
            floor = e;
            total += self.runs.mult(i) * (self.runs.prefix[e + 1] - self.runs.prefix[i + 1]);
        }
        total
    }
}

fn r2_from_pairs(unordered: u64, n: usize) -> BigRational {
    if n == 0 {
        return BigRational::zero();
    }
    BigRational::new(BigInt::from(2 * unordered as u128), BigInt::from(n))
}

/// Same value as [`r2_naive`] in `O(N + #window steps)` on the sorted circle.
pub fn r2_fast(points: &TorusPointSet, s: &BigRational) -> Result<BigRational> {
    let n = points.len();
    match threshold(points, s)? {
        Threshold::All => Ok(r2_from_pairs((n * n.saturating_sub(1) / 2) as u64, n)),
        Threshold::Limit(limit) => {
            if n == 0 {
                return Ok(BigRational::zero());
            }
            let mut window = Window::new(points);
            Ok(r2_from_pairs(window.unordered_pairs(&limit), n))
        }
    }
}

/// `R₂` on an ascending grid, advancing one set of windows through the grid.
pub fn r2_curve(points: &TorusPointSet, s_grid: &[BigRational]) -> Result<PairCorrelationCurve> {
    if s_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param("s-grid", "values must be ascending"));
    }
    let n = points.len();
    let mut window = (n > 0).then(|| Window::new(points));
    let mut r2_values = Vec::with_capacity(s_grid.len());
    for s in s_grid {
        let pairs = match (threshold(points, s)?, window.as_mut()) {
            (_, None) => 0,
            (Threshold::All, Some(_)) => (n * (n - 1) / 2) as u64,
            (Threshold::Limit(limit), Some(w)) => w.unordered_pairs(&limit),
        };
        r2_values.push(r2_from_pairs(pairs, n));
    }
    Ok(PairCorrelationCurve {
        s_grid: s_grid.to_vec(),
        r2_values,
        n,
    })
}

/// `sup_s |R₂(s) − 2s|` over the curve's grid, exactly.
pub fn poissonian_deviation_exact(curve: &PairCorrelationCurve) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    curve
        .iter()
        .map(|(s, r)| (r - &two * s).abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}

pub fn poissonian_deviation(curve: &PairCorrelationCurve) -> f64 {
    rational_to_f64(&poissonian_deviation_exact(curve))
}

/// Circular nearest-neighbour spacings.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacingStats {
    /// Raw gaps as multiples of `2^{-B}`, ascending.
    pub raw_gaps: Vec<BigUint>,
    pub bits: u32,
    pub n: usize,
    /// Sup distance between the empirical CDF of normalized gaps and `1 − e^{−x}`.
    pub ks_to_exponential: f64,
    pub distinct_gap_count: usize,
}

impl SpacingStats {
    /// Gaps multiplied by `N`, exactly.
    pub fn normalized_gaps(&self) -> Vec<BigRational> {
        let full = BigUint::one() << self.bits as usize;
        self.raw_gaps
            .iter()
            .map(|g| ratio_from_biguint(g * BigUint::from(self.n), full.clone()))
            .collect()
    }

    pub fn normalized_gaps_f64(&self) -> Vec<f64> {
        self.raw_gaps
            .iter()
            .map(|g| crate::exact::dyadic_to_f64(g, self.bits) * self.n as f64)
            .collect()
    }

    /// Distinct raw gap values, ascending.
    pub fn distinct_gaps(&self) -> Vec<BigUint> {
        let mut d = self.raw_gaps.clone();
        d.dedup();
        d
    }
}

/// Gaps between circular neighbours, their distinct count and KS distance to `Exp(1)`.
pub fn gap_structure(points: &TorusPointSet) -> Result<SpacingStats> {
    let n = points.len();
    if n < 2 {
        return Err(Error::param("points", "need at least two points"));
    }
    let bits = points.bits();
    let mut gaps: Vec<BigUint> = Vec::with_capacity(n);
    let mut scratch = vec![0u64; points.width()];
    for i in 1..n {
        sub_mod_limbs(points.point(i), points.point(i - 1), &mut scratch, points.top_mask());
        gaps.push(limbs_to_biguint(&scratch));
    }
    let full = BigUint::one() << bits as usize;
    gaps.push(full - points.point_biguint(n - 1) + points.point_biguint(0));
    gaps.sort_unstable();
    let distinct_gap_count = 1 + gaps.windows(2).filter(|w| w[0] != w[1]).count();
    let mut stats = SpacingStats {
        raw_gaps: gaps,
        bits,
        n,
        ks_to_exponential: 0.0,
        distinct_gap_count,
    };
    stats.ks_to_exponential = ks_exponential(&stats.normalized_gaps_f64());
    Ok(stats)
}

/// Kolmogorov–Smirnov statistic of sorted samples against `1 − e^{−x}`.
pub fn ks_exponential(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-x).exp();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio_from_u64;
    use crate::sequences::IntSeq;
    use crate::torus::{alpha_random, alpha_rational, alpha_sqrt};
    use proptest::prelude::*;

    fn set_from_fractions(fracs: &[f64]) -> TorusPointSet {
        let pts: Vec<BigUint> = fracs.iter().map(|f| BigUint::from((f * 2f64.powi(64)) as u64)).collect();
        TorusPointSet::from_raw(64, &pts).unwrap()
    }

    fn r(n: u64, d: u64) -> BigRational {
        ratio_from_u64(n, d)
    }

    #[test]
    fn antipodal_pair_is_far() {
        let set = set_from_fractions(&[0.0, 0.5]);
        assert_eq!(r2_naive(&set, &r(2, 5)).unwrap(), r(0, 1));
        assert_eq!(r2_fast(&set, &r(2, 5)).unwrap(), r(0, 1));
    }

    #[test]
    fn identical_points_give_n_minus_one() {
        let set = TorusPointSet::from_raw(64, &vec![BigUint::from(12345u32); 7]).unwrap();
        for s in [r(0, 1), r(1, 3), r(4, 1)] {
            assert_eq!(r2_naive(&set, &s).unwrap(), r(6, 1));
            assert_eq!(r2_fast(&set, &s).unwrap(), r(6, 1));
        }
    }

    #[test]
    fn four_point_example_with_boundary_tie() {
        // threshold 1/4; the pair (0, 0.25) sits exactly on it and counts
        let set = set_from_fractions(&[0.0, 0.1, 0.25, 0.6]);
        assert_eq!(r2_naive(&set, &r(1, 1)).unwrap(), r(3, 2));
        assert_eq!(r2_fast(&set, &r(1, 1)).unwrap(), r(3, 2));
    }

    #[test]
    fn zero_and_saturated_thresholds() {
        let seq = IntSeq::from_u64s(&(1..=40).collect::<Vec<_>>()).unwrap();
        let set = TorusPointSet::from_sequence(&seq, 40, &alpha_sqrt(3, 96).unwrap()).unwrap();
        assert_eq!(r2_fast(&set, &r(0, 1)).unwrap(), r(0, 1));
        // s/N >= 1/2
        assert_eq!(r2_fast(&set, &r(20, 1)).unwrap(), r(39, 1));
        assert_eq!(r2_naive(&set, &r(20, 1)).unwrap(), r(39, 1));
    }

    #[test]
    fn negative_s_rejected() {
        let set = set_from_fractions(&[0.0, 0.5]);
        assert!(r2_fast(&set, &-r(1, 2)).is_err());
        assert!(r2_naive(&set, &-r(1, 2)).is_err());
    }

    #[test]
    fn curve_matches_pointwise_fast() {
        let seq = crate::sequences::gen_polynomial(&[1.into(), 0.into(), 0.into()], 3000).unwrap();
        let set = TorusPointSet::from_sequence(&seq, 3000, &alpha_random(128, 4).unwrap()).unwrap();
        let grid = default_s_grid();
        let curve = r2_curve(&set, &grid).unwrap();
        for (s, v) in curve.iter() {
            assert_eq!(v, &r2_fast(&set, s).unwrap());
        }
        assert!(curve.r2_values.windows(2).all(|w| w[0] <= w[1]));
        let single = r2_curve(&set, &[r(7, 10)]).unwrap();
        assert_eq!(single.r2_values[0], r2_fast(&set, &r(7, 10)).unwrap());
    }

    #[test]
    fn deviation_examples() {
        let curve = PairCorrelationCurve {
            s_grid: vec![r(1, 2), r(1, 1)],
            r2_values: vec![r(1, 1), r(2, 1)],
            n: 10,
        };
        assert_eq!(poissonian_deviation(&curve), 0.0);
        let curve = PairCorrelationCurve {
            s_grid: vec![r(1, 1)],
            r2_values: vec![r(3, 1)],
            n: 10,
        };
        assert_eq!(poissonian_deviation(&curve), 1.0);
    }

    #[test]
    fn grid_parsing() {
        let g = parse_s_grid("0:5:0.1").unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g, default_s_grid());
        assert_eq!(parse_s_grid("0.5,1,2").unwrap(), vec![r(1, 2), r(1, 1), r(2, 1)]);
        assert!(parse_s_grid("2,1").is_err());
        assert!(parse_s_grid("0:1:0").is_err());
        assert!(parse_s_grid("-1,2").is_err());
    }

    #[test]
    fn equally_spaced_points_have_one_gap() {
        let pts: Vec<BigUint> = (0..16u64).map(|i| BigUint::from(i << 60)).collect();
        let set = TorusPointSet::from_raw(64, &pts).unwrap();
        let stats = gap_structure(&set).unwrap();
        assert_eq!(stats.distinct_gap_count, 1);
        assert!(stats.normalized_gaps().iter().all(|g| g == &r(1, 1)));
    }

    #[test]
    fn gaps_cover_the_circle() {
        let seq = IntSeq::from_u64s(&[3, 7, 8, 20, 21, 50]).unwrap();
        let set = TorusPointSet::from_sequence(&seq, 6, &alpha_rational(1, 8, 70).unwrap()).unwrap();
        let stats = gap_structure(&set).unwrap();
        let total: BigUint = stats.raw_gaps.iter().sum();
        assert_eq!(total, BigUint::one() << 70usize);
        assert!(gap_structure(&TorusPointSet::from_raw(8, &[BigUint::one()]).unwrap()).is_err());
    }

    #[test]
    fn three_distances_for_linear_sequence() {
        let seq = IntSeq::from_u64s(&(1..=5000).collect::<Vec<_>>()).unwrap();
        for alpha in [alpha_sqrt(2, 128).unwrap(), alpha_random(128, 17).unwrap()] {
            let set = TorusPointSet::from_sequence(&seq, 5000, &alpha).unwrap();
            assert!(gap_structure(&set).unwrap().distinct_gap_count <= 3);
        }
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        assert!(ks_exponential(&sample) <= 0.5 / n as f64 + 1e-12);
    }

    fn arb_points() -> impl Strategy<Value = (u32, Vec<u64>)> {
        (prop_oneof![Just(8u32), Just(64u32), Just(100u32)], prop::collection::vec(any::<u64>(), 1..60))
    }

    fn build(bits: u32, raw: &[u64]) -> TorusPointSet {
        let mask = if bits >= 64 { u64::MAX } else { (1 << bits) - 1 };
        // low values collide often at 8 bits, exercising duplicate runs
        let pts: Vec<BigUint> = raw
            .iter()
            .map(|&v| {
                let v = BigUint::from(v & mask);
                if bits > 64 { v << (bits - 64) as usize } else { v }
            })
            .collect();
        TorusPointSet::from_raw(bits, &pts).unwrap()
    }

    proptest! {
        #[test]
        fn fast_equals_naive((bits, raw) in arb_points(), num in 0u64..400, den in 1u64..80) {
            let set = build(bits, &raw);
            let s = r(num, den);
            prop_assert_eq!(r2_fast(&set, &s).unwrap(), r2_naive(&set, &s).unwrap());
        }

        #[test]
        fn rotation_and_reflection_invariance((bits, raw) in arb_points(), shift in any::<u64>(), num in 0u64..300) {
            let set = build(bits, &raw);
            let full = BigUint::one() << bits as usize;
            let shift = BigUint::from(shift) % &full;
            let pts = set.points_biguint();
            let rotated: Vec<BigUint> = pts.iter().map(|p| (p + &shift) % &full).collect();
            let reflected: Vec<BigUint> = pts.iter().map(|p| (&full - p) % &full).collect();
            let s = r(num, 37);
            let base = r2_fast(&set, &s).unwrap();
            prop_assert_eq!(&base, &r2_fast(&TorusPointSet::from_raw(bits, &rotated).unwrap(), &s).unwrap());
            prop_assert_eq!(&base, &r2_fast(&TorusPointSet::from_raw(bits, &reflected).unwrap(), &s).unwrap());
        }

        #[test]
        fn curve_is_monotone_and_bounded((bits, raw) in arb_points()) {
            let set = build(bits, &raw);
            let curve = r2_curve(&set, &default_s_grid()).unwrap();
            let cap = BigRational::from_integer(BigInt::from(set.len() - 1));
            prop_assert!(curve.r2_values.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(curve.r2_values.iter().all(|v| v <= &cap));
        }
    }
}
