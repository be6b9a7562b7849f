//! Exact pair-correlation statistics of sequences `({a(n) α})` on the torus,
//! additive energy of integer-sequence truncations, and a constructive,
//! desk-scale version of the argument showing that quasi-arithmetic
//! sequences of degree one are non-Poissonian for almost every `α`.
//!
//! Everything that is counted is counted exactly: `α` is a dyadic fixed-point
//! number `X / 2^B`, torus points are raw `B`-bit integers and thresholds are
//! compared by cross-multiplication. Floating point only appears in
//! diagnostics (exponent fits, KS distances, sweep summaries).

pub mod construction;
pub mod energy;
pub mod exact;
pub mod error;
pub mod paircorr;
pub mod sequences;
pub mod sweep;
pub mod torus;

pub use error::{Error, Result};
pub use num_bigint::BigUint;
pub use num_rational::BigRational;
