//! Euler's totient on `1..=N` and the averages of `φ(n)/n` used to bound the
//! number of new fractions contributed by a level.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::non_negative_parts;

/// Euler–Mascheroni constant to 30 decimal places.
pub const EULER_GAMMA_STR: &str = "0.577215664901532860606512090082";
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `φ(1..=N)` from a linear sieve.
#[derive(Clone, Debug)]
pub struct TotientTable {
    phi: Vec<u32>,
}

impl TotientTable {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if n > u32::MAX as usize {
            return Err(Error::TooLarge {
                what: "totient table",
                requested: n,
                limit: u32::MAX as usize,
            });
        }
        let mut phi = vec![0u32; n + 1];
        let mut composite = vec![false; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        phi[1] = 1;
        for i in 2..=n {
            if !composite[i] {
                primes.push(i as u32);
                phi[i] = i as u32 - 1;
            }
            for &p in &primes {
                let ip = i * p as usize;
                if ip > n {
                    break;
                }
                composite[ip] = true;
                if i % p as usize == 0 {
                    phi[ip] = phi[i] * p;
                    break;
                }
                phi[ip] = phi[i] * (p - 1);
            }
        }
        Ok(TotientTable { phi })
    }

    pub fn limit(&self) -> usize {
        self.phi.len() - 1
    }

    /// `φ(n)` for `1 <= n <= limit`.
    pub fn phi(&self, n: usize) -> u32 {
        assert!(n >= 1, "φ is defined from 1");
        self.phi[n]
    }

    /// `(1/N) Σ_{n<=N} φ(n)/n` in double precision; tends to `6/π²`.
    pub fn full_ratio_average(&self, n: usize) -> f64 {
        let n = n.min(self.limit());
        let sum: f64 = (1..=n).map(|k| self.phi[k] as f64 / k as f64).sum();
        sum / n as f64
    }

    /// Fraction of `n <= N` with `n / φ(n) >= t`, compared exactly as `n t_den >= t_num φ(n)`.
    pub fn empirical_b(&self, t: &BigRational, n: usize) -> Result<f64> {
        let (num, den) = non_negative_parts(t).ok_or_else(|| Error::param("t", "must be non-negative"))?;
        if t < &BigRational::from_integer(1.into()) {
            return Err(Error::param("t", "must be at least 1"));
        }
        let n = n.min(self.limit());
        let (Some(num), Some(den)) = (num.to_u64(), den.to_u64()) else {
            return Err(Error::param("t", "numerator and denominator must fit in 64 bits"));
        };
        let hits = (1..=n)
            .filter(|&k| k as u128 * den as u128 >= num as u128 * self.phi[k] as u128)
            .count();
        Ok(hits as f64 / n as f64)
    }
}

/// `(1/N) Σ_{n∈A, n<=N} φ(n)/n`, exactly. Elements above `N` are ignored.
pub fn totient_ratio_average(table: &TotientTable, subset: &[usize], n: usize) -> Result<BigRational> {
    if n == 0 || n > table.limit() {
        return Err(Error::param("n", format!("must lie in 1..={}", table.limit())));
    }
    let mut sum = BigRational::zero();
    for &k in subset.iter().filter(|&&k| (1..=n).contains(&k)) {
        sum += BigRational::new(BigInt::from(table.phi(k)), BigInt::from(k));
    }
    Ok(sum / BigRational::from_integer(BigInt::from(n)))
}

/// Double-precision version of [`totient_ratio_average`] for large sets.
pub fn totient_ratio_average_f64(table: &TotientTable, subset: &[usize], n: usize) -> f64 {
    let sum: f64 = subset
        .iter()
        .filter(|&&k| (1..=n.min(table.limit())).contains(&k))
        .map(|&k| table.phi(k) as f64 / k as f64)
        .sum();
    sum / n as f64
}

/// `t₀(δ) = e^γ log(−2 log(δ/4))`, the ratio cut-off for density `δ`.
pub fn ratio_cutoff(delta: f64) -> f64 {
    EULER_GAMMA.exp() * (-2.0 * (delta / 4.0).ln()).ln()
}

/// `c(δ) = δ / (3 t₀(δ))`, the lower bound on the `φ(n)/n` average of a set of density `δ`.
pub fn density_constant(delta: f64) -> f64 {
    delta / (3.0 * ratio_cutoff(delta))
}

/// Leading-order asymptotic `exp(−e^{t e^{−γ}})` for the density of `n/φ(n) >= t`.
pub fn b_asymptotic(t: f64) -> f64 {
    (-(t * (-EULER_GAMMA).exp()).exp()).exp()
}
