use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::levels::ConstructionState;
use super::mu::mu_sequence;
use super::totient::TotientTable;
use crate::error::{Error, Result};
use crate::exact::{ratio_from_u64, rational_to_f64};

/// Per-level terms of the divergence argument, evaluated on a complete level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStar {
    pub level: usize,
    /// `Σ_{n in level} μ_n λ_n⁻¹ ψ_n`.
    #[serde(with = "crate::exact::rational")]
    pub level_sum: BigRational,
    /// `(1/(2 M_l)) Σ_i φ(R_i)/R_i`.
    #[serde(with = "crate::exact::rational")]
    pub totient_bound: BigRational,
    pub totient_bound_holds: bool,
    /// `Σ_{n <= N_l} μ_n λ_n⁻¹ ψ_n` through the end of this level.
    #[serde(with = "crate::exact::rational")]
    pub cumulative_psi_sum: BigRational,
    /// Whether the cumulative sum reaches the asymptotic constant `c₄`.
    pub reaches_c4: bool,
    /// `Σ μ λ⁻¹ ψ τ` and `Σ ψ τ` through the end of this level.
    #[serde(with = "crate::exact::rational")]
    pub weighted_sum: BigRational,
    #[serde(with = "crate::exact::rational")]
    pub base_sum: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    pub n: usize,
    /// `Σ_{n<=N} μ_n λ_n⁻¹ ψ_n τ_n`.
    #[serde(with = "crate::exact::rational")]
    pub weighted_sum: BigRational,
    /// `Σ_{n<=N} ψ_n τ_n`.
    #[serde(with = "crate::exact::rational")]
    pub base_sum: BigRational,
    #[serde(with = "crate::exact::rational")]
    pub ratio: BigRational,
    pub ratio_f64: f64,
    #[serde(with = "crate::exact::rational")]
    pub c: BigRational,
    /// `weighted_sum > c · base_sum`.
    pub passes: bool,
    #[serde(with = "crate::exact::string::vec")]
    pub mu: Vec<u64>,
    /// Levels fully contained in the first `N` indices.
    pub levels: Vec<LevelStar>,
    pub conforming: bool,
}

/// Evaluates the weighted divergence condition on the first `n` indices.
pub fn verify_condition_star(state: &ConstructionState, n: usize, c: &BigRational) -> Result<StarReport> {
    if n == 0 || n > state.len() {
        return Err(Error::param("n", format!("must lie in 1..={}", state.len())));
    }
    if c <= &BigRational::zero() {
        return Err(Error::param("c", "must be positive"));
    }
    let mu = mu_sequence(&state.lambda[..n]);
    let mut weighted = BigRational::zero();
    let mut base = BigRational::zero();
    let mut psi_sum = BigRational::zero();
    let mut level_sum = BigRational::zero();
    let mut levels = Vec::new();
    let max_r = state.levels.iter().flat_map(|l| l.r_values.iter()).max().copied().unwrap_or(1);
    let totients = TotientTable::new(max_r as usize)?;
    for i in 1..=n {
        let psi = state.psi(i);
        let tau = state.tau(i);
        let fresh = ratio_from_u64(mu[i - 1], state.lambda[i - 1]) * &psi;
        weighted += &fresh * &tau;
        base += &psi * &tau;
        psi_sum += &fresh;
        level_sum += fresh;
        let level = state.level_of[i - 1];
        if i == state.len() || state.level_of[i] != level {
            let record = &state.levels[level];
            let bound: BigRational = record
                .r_values
                .iter()
                .map(|&r| ratio_from_u64(totients.phi(r as usize) as u64, r))
                .sum::<BigRational>()
                / BigRational::from_integer(BigInt::from(2 * record.m));
            levels.push(LevelStar {
                level: record.index,
                totient_bound_holds: level_sum >= bound,
                level_sum: std::mem::take(&mut level_sum),
                totient_bound: bound,
                reaches_c4: rational_to_f64(&psi_sum) >= state.c4,
                cumulative_psi_sum: psi_sum.clone(),
                weighted_sum: weighted.clone(),
                base_sum: base.clone(),
            });
        }
    }
    let ratio = &weighted / &base;
    Ok(StarReport {
        n,
        passes: weighted > c * &base,
        ratio_f64: rational_to_f64(&ratio),
        ratio,
        weighted_sum: weighted,
        base_sum: base,
        c: c.clone(),
        mu,
        levels,
        conforming: state.conforming,
    })
}

/// Least-squares slope of `y` against `log l` through the origin, over levels `l >= 2`.
pub fn log_scaling(levels: &[LevelStar], y: impl Fn(&LevelStar) -> f64) -> Option<f64> {
    let (num, den) = levels
        .iter()
        .filter(|l| l.level >= 2)
        .map(|l| ((l.level as f64).ln(), y(l)))
        .fold((0.0, 0.0), |(n, d), (x, y)| (n + x * y, d + x * x));
    (den > 0.0).then(|| num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::levels::{build_levels, BuildOptions, InterleavedProgression};

    fn state() -> ConstructionState {
        build_levels(&InterleavedProgression::identity(), &BuildOptions::default()).unwrap()
    }

    #[test]
    fn level_one_ratio_is_positive() {
        let s = state();
        let report = verify_condition_star(&s, 1, &ratio_from_u64(1, 100)).unwrap();
        // λ₁ = 7: μ₁ = 6, ψ = 1/8, τ = 1
        assert_eq!(report.weighted_sum, ratio_from_u64(6, 56));
        assert_eq!(report.base_sum, ratio_from_u64(1, 8));
        assert_eq!(report.ratio, ratio_from_u64(6, 7));
        assert!(report.passes);
        assert_eq!(report.levels.len(), 1);
    }

    #[test]
    fn full_state_reports_every_level() {
        let s = state();
        let report = verify_condition_star(&s, s.len(), &ratio_from_u64(1, 10)).unwrap();
        assert_eq!(report.levels.len(), 3);
        assert!(report.ratio > BigRational::zero());
        assert!(report.levels.windows(2).all(|w| w[0].weighted_sum < w[1].weighted_sum));
        // a partial last level is not reported
        let partial = verify_condition_star(&s, s.len() - 1, &ratio_from_u64(1, 10)).unwrap();
        assert_eq!(partial.levels.len(), 2);
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = state();
        assert!(verify_condition_star(&s, 0, &ratio_from_u64(1, 2)).is_err());
        assert!(verify_condition_star(&s, s.len() + 1, &ratio_from_u64(1, 2)).is_err());
        assert!(verify_condition_star(&s, 1, &BigRational::zero()).is_err());
    }
}
