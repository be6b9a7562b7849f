//! Deviation from the Poissonian curve over many seeded random `α`.

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paircorr::{poissonian_deviation, poissonian_deviation_exact, r2_curve};
use crate::sequences::IntSeq;
use crate::torus::{alpha_random, TorusPointSet};

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n: usize,
    pub bits: u32,
    /// `α_i` uses seed `seed + i`.
    pub seed: u64,
    pub count: usize,
    pub s_grid: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub seed: u64,
    #[serde(with = "crate::exact::rational")]
    pub deviation: BigRational,
    pub deviation_f64: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n: usize,
    pub bits: u32,
    pub runs: Vec<SweepRun>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

/// `sup_s |R₂(s) − 2s|` for `count` random `α`, merged in seed order.
pub fn batch_alpha_sweep(seq: &IntSeq, config: &SweepConfig) -> Result<SweepSummary> {
    if config.count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    if config.n > seq.len() {
        return Err(Error::param("n", format!("sequence has only {} terms", seq.len())));
    }
    let runs = (0..config.count as u64)
        .into_par_iter()
        .map(|i| {
            let seed = config.seed.wrapping_add(i);
            let alpha = alpha_random(config.bits, seed)?;
            let points = TorusPointSet::from_sequence(seq, config.n, &alpha)?;
            let curve = r2_curve(&points, &config.s_grid)?;
            Ok(SweepRun {
                seed,
                deviation_f64: poissonian_deviation(&curve),
                deviation: poissonian_deviation_exact(&curve),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<f64> = runs.iter().map(|r| r.deviation_f64).collect();
    sorted.sort_by(f64::total_cmp);
    Ok(SweepSummary {
        n: config.n,
        bits: config.bits,
        min: sorted[0],
        median: median(&sorted),
        max: sorted[sorted.len() - 1],
        runs,
    })
}

/// Median of an ascending slice; mean of the middle pair for even lengths.
pub fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0
    }
}
