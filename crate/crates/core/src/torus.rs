//! Exact fixed-point `α = X / 2^B` and the point sets `{a(n) α}` it induces.
//!
//! A torus point `θ = v / 2^B` is stored as the raw `B`-bit integer `v`,
//! split into little-endian 64-bit limbs. Points are never converted to
//! floating point on any counting path.

use std::cmp::Ordering;
use std::io::{Read, Write};

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::{ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::decimal;
use crate::sequences::IntSeq;

/// Extra bits required beyond the bit length of the largest sequence value.
pub const GUARD_BITS: u32 = 64;

/// Where a fixed-point `α` came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Random { seed: u64 },
    Rational { p: u64, q: u64 },
    Sqrt { d: u64 },
    Golden,
    Explicit,
}

/// `α = X / 2^B` with `0 <= X < 2^B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointAlpha {
    #[serde(with = "decimal")]
    numerator: BigUint,
    bits: u32,
    provenance: Provenance,
}

impl FixedPointAlpha {
    /// Reduces `numerator` modulo `2^bits`; an integer shift of `α` changes nothing.
    pub fn new(numerator: BigUint, bits: u32, provenance: Provenance) -> Result<Self> {
        if bits == 0 {
            return Err(Error::param("bits", "must be positive"));
        }
        let numerator = truncate(&numerator, bits);
        Ok(FixedPointAlpha {
            numerator,
            bits,
            provenance,
        })
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn to_f64(&self) -> f64 {
        crate::exact::dyadic_to_f64(&self.numerator, self.bits)
    }

    /// Minimum bit width that makes `{a α}` exact enough for values of `value_bits` bits.
    pub fn required_bits(value_bits: u64) -> u32 {
        (value_bits + GUARD_BITS as u64).min(u32::MAX as u64) as u32
    }
}

/// Uniform `X` on `[0, 2^B)`, reproducible from the seed.
pub fn alpha_random(bits: u32, seed: u64) -> Result<FixedPointAlpha> {
    if bits < 64 {
        return Err(Error::param("bits", format!("random alpha needs at least 64 bits, got {bits}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = vec![0u64; limbs_for(bits)];
    for w in &mut words {
        *w = rng.next_u64();
    }
    let x = limbs_to_biguint(&words);
    FixedPointAlpha::new(x, bits, Provenance::Random { seed })
}

/// `X = floor(frac(sqrt(D)) 2^B)` via the integer square root of `D 2^{2B}`.
pub fn alpha_sqrt(d: u64, bits: u32) -> Result<FixedPointAlpha> {
    let r = d.sqrt();
    if r * r == d {
        return Err(Error::param("d", format!("{d} is a perfect square")));
    }
    let scaled = BigUint::from(d) << (2 * bits as usize);
    let root = scaled.sqrt();
    FixedPointAlpha::new(root, bits, Provenance::Sqrt { d })
}

/// `X = floor(frac((1 + sqrt 5) / 2) 2^B) = floor((isqrt(5 4^B) - 2^B) / 2)`.
pub fn alpha_golden(bits: u32) -> Result<FixedPointAlpha> {
    if bits == 0 {
        return Err(Error::param("bits", "must be positive"));
    }
    let root = (BigUint::from(5u32) << (2 * bits as usize)).sqrt();
    let x = (root - (BigUint::from(1u32) << bits as usize)) >> 1usize;
    FixedPointAlpha::new(x, bits, Provenance::Golden)
}

/// `X = floor(frac(p / q) 2^B)`; exact whenever `q` is a power of two dividing `2^B`.
pub fn alpha_rational(p: u64, q: u64, bits: u32) -> Result<FixedPointAlpha> {
    if q == 0 {
        return Err(Error::param("q", "denominator must be positive"));
    }
    let x = (BigUint::from(p % q) << bits as usize) / q;
    FixedPointAlpha::new(x, bits, Provenance::Rational { p, q })
}

/// Sorted exact torus points with the map back to sequence positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusPointSet {
    bits: u32,
    width: usize,
    data: Vec<u64>,
    perm: Vec<u64>,
}

impl TorusPointSet {
    /// `{a(n) α}` for the first `n` terms of `seq`, computed as `(a(n) X) mod 2^B`.
    pub fn from_sequence(seq: &IntSeq, n: usize, alpha: &FixedPointAlpha) -> Result<Self> {
        fractional_parts(&seq.values()[..n.min(seq.len())], alpha)
    }

    /// Builds a point set from raw `B`-bit values given in sequence order.
    pub fn from_raw(bits: u32, points: &[BigUint]) -> Result<Self> {
        if bits == 0 {
            return Err(Error::param("bits", "must be positive"));
        }
        let width = limbs_for(bits);
        let mut data = Vec::with_capacity(points.len() * width);
        for p in points {
            if p.bits() > bits as u64 {
                return Err(Error::param("points", format!("{p} does not fit in {bits} bits")));
            }
            push_limbs(&mut data, p, width);
        }
        Ok(Self::sorted(bits, width, data))
    }

    fn sorted(bits: u32, width: usize, data: Vec<u64>) -> Self {
        let n = if width == 0 { 0 } else { data.len() / width };
        let mut order: Vec<usize> = (0..n).collect();
        let at = |i: usize| &data[i * width..(i + 1) * width];
        order.sort_by(|&i, &j| cmp_limbs(at(i), at(j)).then(i.cmp(&j)));
        let mut sorted = Vec::with_capacity(data.len());
        for &i in &order {
            sorted.extend_from_slice(at(i));
        }
        TorusPointSet {
            bits,
            width,
            data: sorted,
            perm: order.into_iter().map(|i| i as u64).collect(),
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Number of 64-bit limbs per point.
    pub fn width(&self) -> usize {
        self.width
    }

    /// The `i`-th smallest point as little-endian limbs.
    pub fn point(&self, i: usize) -> &[u64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn point_biguint(&self, i: usize) -> BigUint {
        limbs_to_biguint(self.point(i))
    }

    /// Zero-based sequence position of the `i`-th smallest point.
    pub fn original_index(&self, i: usize) -> usize {
        self.perm[i] as usize
    }

    pub fn perm(&self) -> &[u64] {
        &self.perm
    }

    pub fn points_biguint(&self) -> Vec<BigUint> {
        (0..self.len()).map(|i| self.point_biguint(i)).collect()
    }

    /// Mask for the most significant limb.
    pub(crate) fn top_mask(&self) -> u64 {
        top_mask(self.bits)
    }

    /// Writes the documented binary layout:
    ///
    /// ```text
    /// u32 LE  B
    /// u64 LE  n
    /// n x ceil(B/8) bytes   sorted points, each little-endian
    /// n x u64 LE            zero-based original index of each sorted point
    /// ```
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&self.bits.to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        let nbytes = bytes_for(self.bits);
        let mut buf = Vec::with_capacity(self.width * 8);
        for i in 0..self.len() {
            buf.clear();
            for limb in self.point(i) {
                buf.extend_from_slice(&limb.to_le_bytes());
            }
            out.write_all(&buf[..nbytes])?;
        }
        for &p in &self.perm {
            out.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut head = [0u8; 12];
        input
            .read_exact(&mut head)
            .map_err(|e| Error::Format(format!("header: {e}")))?;
        let bits = u32::from_le_bytes(head[..4].try_into().expect("4 bytes"));
        let n = u64::from_le_bytes(head[4..].try_into().expect("8 bytes")) as usize;
        if bits == 0 {
            return Err(Error::Format("zero bit width".into()));
        }
        let width = limbs_for(bits);
        let nbytes = bytes_for(bits);
        let mut data = Vec::with_capacity(n.saturating_mul(width).min(1 << 28));
        let mut raw = vec![0u8; width * 8];
        for _ in 0..n {
            raw.fill(0);
            input
                .read_exact(&mut raw[..nbytes])
                .map_err(|e| Error::Format(format!("points: {e}")))?;
            for chunk in raw.chunks_exact(8) {
                data.push(u64::from_le_bytes(chunk.try_into().expect("8 bytes")));
            }
            if data[data.len() - 1] & !top_mask(bits) != 0 {
                return Err(Error::Format(format!("point exceeds {bits} bits")));
            }
        }
        let mut perm = Vec::with_capacity(n.min(1 << 28));
        let mut word = [0u8; 8];
        for _ in 0..n {
            input
                .read_exact(&mut word)
                .map_err(|e| Error::Format(format!("index map: {e}")))?;
            perm.push(u64::from_le_bytes(word));
        }
        let set = TorusPointSet {
            bits,
            width,
            data,
            perm,
        };
        set.check_invariants().map_err(Error::Format)?;
        Ok(set)
    }

    fn check_invariants(&self) -> std::result::Result<(), String> {
        for i in 1..self.len() {
            if cmp_limbs(self.point(i - 1), self.point(i)) == Ordering::Greater {
                return Err(format!("points not sorted at {i}"));
            }
        }
        let mut seen = vec![false; self.len()];
        for &p in &self.perm {
            let p = p as usize;
            if p >= seen.len() || std::mem::replace(&mut seen[p], true) {
                return Err("index map is not a permutation".into());
            }
        }
        Ok(())
    }
}

/// Exact `{a(n) α}` for each value; rejects bit widths below the guard-bit rule.
pub fn fractional_parts(values: &[BigUint], alpha: &FixedPointAlpha) -> Result<TorusPointSet> {
    let bits = alpha.bits();
    let value_bits = values.iter().map(|v| v.bits()).max().unwrap_or(0);
    let required = FixedPointAlpha::required_bits(value_bits);
    if bits < required {
        return Err(Error::InsufficientBits {
            bits,
            required,
            value_bits,
        });
    }
    let width = limbs_for(bits);
    let mut data = Vec::with_capacity(values.len() * width);
    if bits <= 128 {
        let x = alpha.numerator().to_u128().expect("numerator fits in B <= 128 bits");
        let mask = if bits == 128 { u128::MAX } else { (1u128 << bits) - 1 };
        for v in values {
            // value_bits <= 64 here by the guard rule
            let a = v.to_u64().expect("guard rule bounds values to 64 bits") as u128;
            let p = a.wrapping_mul(x) & mask;
            data.push(p as u64);
            if width == 2 {
                data.push((p >> 64) as u64);
            }
        }
    } else {
        for v in values {
            let p = truncate(&(v * alpha.numerator()), bits);
            push_limbs(&mut data, &p, width);
        }
    }
    Ok(TorusPointSet::sorted(bits, width, data))
}

/// `min(|x - y|, 2^B - |x - y|)`, the scaled distance to the nearest integer.
pub fn torus_distance(x: &BigUint, y: &BigUint, bits: u32) -> BigUint {
    let d = if x >= y { x - y } else { y - x };
    let full = BigUint::from(1u32) << bits as usize;
    let wrap = &full - &d;
    d.min(wrap)
}

/// Distance from `v` to the nearest integer, scaled by `2^B`: `min(v, 2^B - v)`.
pub fn distance_to_zero(v: &BigUint, bits: u32) -> BigUint {
    torus_distance(v, &BigUint::zero(), bits)
}

pub(crate) fn limbs_for(bits: u32) -> usize {
    (bits as usize).div_ceil(64)
}

fn bytes_for(bits: u32) -> usize {
    (bits as usize).div_ceil(8)
}

pub(crate) fn top_mask(bits: u32) -> u64 {
    match bits % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

pub(crate) fn truncate(v: &BigUint, bits: u32) -> BigUint {
    let digits = v.to_u64_digits();
    let width = limbs_for(bits);
    let mut out: Vec<u64> = digits.into_iter().take(width).collect();
    if out.len() == width {
        if let Some(top) = out.last_mut() {
            *top &= top_mask(bits);
        }
    }
    limbs_to_biguint(&out)
}

pub(crate) fn push_limbs(data: &mut Vec<u64>, v: &BigUint, width: usize) {
    let digits = v.to_u64_digits();
    debug_assert!(digits.len() <= width);
    data.extend_from_slice(&digits);
    data.extend(std::iter::repeat_n(0, width - digits.len()));
}

pub(crate) fn limbs_to_biguint(limbs: &[u64]) -> BigUint {
    let mut words = Vec::with_capacity(limbs.len() * 2);
    for &l in limbs {
        words.push(l as u32);
        words.push((l >> 32) as u32);
    }
    BigUint::new(words)
}

pub(crate) fn cmp_limbs(a: &[u64], b: &[u64]) -> Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// `out = (a - b) mod 2^B`.
pub(crate) fn sub_mod_limbs(a: &[u64], b: &[u64], out: &mut [u64], top_mask: u64) {
    let mut borrow = false;
    for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
        let (d1, b1) = x.overflowing_sub(y);
        let (d2, b2) = d1.overflowing_sub(borrow as u64);
        *o = d2;
        borrow = b1 || b2;
    }
    if let Some(top) = out.last_mut() {
        *top &= top_mask;
    }
}
