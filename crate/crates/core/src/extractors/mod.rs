//! Randomness extractors: greater-than over two same-source samples, a
//! seeded polynomial hash over GF(2^64), and an inner-product two-source
//! extractor over small binary fields.

use std::cmp::Ordering;

use crate::bitstr::BitStr;
use crate::error::{Error, Result};

mod gf64;
mod small_field;

pub use gf64::{gf_mul, Gf64};
pub use small_field::{small_mul, SUPPORTED_WIDTHS};

pub const MAX_EXT_BITS: usize = 32;

/// `1[x >= y]` under big-endian comparison.
pub fn gt(x: &BitStr, y: &BitStr) -> Result<bool> {
    Ok(x.cmp_be(y)? != Ordering::Less)
}

/// Seed of the hash `x -> b + sum x_i a^i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HashSeed {
    a: Gf64,
    b: Gf64,
}

impl HashSeed {
    /// A zero `a` collapses the hash to a constant, so it is replaced by 1.
    pub fn new(a: Gf64, b: Gf64) -> Self {
        let a = if a == Gf64::ZERO { Gf64::ONE } else { a };
        HashSeed { a, b }
    }

    pub fn a(&self) -> Gf64 {
        self.a
    }

    pub fn b(&self) -> Gf64 {
        self.b
    }

    /// Splits a seed string of any length in `2..=128` into two halves read
    /// as integers. For 128 bits this is exactly [`seed_from_bits`].
    pub fn from_seed_bits(bits: &BitStr) -> Result<Self> {
        if bits.len() < 2 || bits.len() > 128 {
            return Err(Error::BadLength {
                expected: 128,
                actual: bits.len(),
            });
        }
        let half = bits.len() / 2;
        let a = bits.slice(0, half).to_u64();
        let b = bits.slice(half, bits.len() - half).to_u64();
        Ok(Self::new(Gf64(a), Gf64(b)))
    }

    pub fn to_bits(&self) -> BitStr {
        BitStr::from_u64(self.a.0, 64).concat(&BitStr::from_u64(self.b.0, 64))
    }
}

pub fn seed_from_bits(bits: &BitStr) -> Result<HashSeed> {
    if bits.len() != 128 {
        return Err(Error::BadLength {
            expected: 128,
            actual: bits.len(),
        });
    }
    HashSeed::from_seed_bits(bits)
}

fn check_v(v: usize) -> Result<()> {
    if v == 0 || v > MAX_EXT_BITS {
        return Err(Error::BadV(v));
    }
    Ok(())
}

/// Hash value before truncation.
pub fn hash_full(seed: &HashSeed, x: &BitStr) -> Result<Gf64> {
    if x.is_empty() {
        return Err(Error::BadLength {
            expected: 1,
            actual: 0,
        });
    }
    let mut acc = Gf64::ZERO;
    for word in words64(x).into_iter().rev() {
        acc = (acc + Gf64(word)) * seed.a;
    }
    Ok(acc + seed.b)
}

/// 64-bit big-endian words, the last one zero-padded.
fn words64(x: &BitStr) -> Vec<u64> {
    x.as_bytes()
        .chunks(8)
        .map(|chunk| {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            u64::from_be_bytes(w)
        })
        .collect()
}

/// The low `v` bits of the hash.
pub fn ext_seeded(seed: &HashSeed, x: &BitStr, v: usize) -> Result<BitStr> {
    check_v(v)?;
    let h = hash_full(seed, x)?.0;
    Ok(BitStr::from_u64(h & low_mask(v), v))
}

fn low_mask(v: usize) -> u64 {
    if v == 64 {
        u64::MAX
    } else {
        (1u64 << v) - 1
    }
}

/// Inner product of `v`-bit blocks over GF(2^v).
pub fn ip_2ext(x: &BitStr, y: &BitStr, v: usize) -> Result<BitStr> {
    small_field::modulus(v)?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() || x.len() % v != 0 {
        return Err(Error::BadLength {
            expected: x.len().div_ceil(v).max(1) * v,
            actual: x.len(),
        });
    }
    let mut acc = 0u64;
    for (a, b) in x.blocks(v)?.iter().zip(y.blocks(v)?) {
        acc ^= small_mul(a.to_u64(), b.to_u64(), v)?;
    }
    Ok(BitStr::from_u64(acc, v))
}
