//! GF(2^64) modulo x^64 + x^4 + x^3 + x + 1.

use std::fmt;
use std::ops::{Add, Mul};

/// Low-order terms of the modulus: x^64 = x^4 + x^3 + x + 1.
const REDUCTION: u64 = 0x1b;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Gf64(pub u64);

impl fmt::Debug for Gf64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf64({:#018x})", self.0)
    }
}

/// Carry-less 64x64 -> 128 product.
#[inline]
fn clmul(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the CPU supports the instruction, checked just above.
            return unsafe { clmul_x86(a, b) };
        }
    }
    clmul_soft(a, b)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq", enable = "sse2")]
unsafe fn clmul_x86(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::{__m128i, _mm_clmulepi64_si128, _mm_cvtsi64_si128, _mm_storeu_si128};
    let r = _mm_clmulepi64_si128(
        _mm_cvtsi64_si128(a as i64),
        _mm_cvtsi64_si128(b as i64),
        0x00,
    );
    let mut out = [0u8; 16];
    _mm_storeu_si128(out.as_mut_ptr() as *mut __m128i, r);
    u128::from_le_bytes(out)
}

fn clmul_soft(a: u64, b: u64) -> u128 {
    let a = a as u128;
    let mut r = 0u128;
    for i in 0..64 {
        let mask = (((b >> i) & 1) as u128).wrapping_neg();
        r ^= (a << i) & mask;
    }
    r
}

fn reduce(x: u128) -> u64 {
    let lo = x as u64;
    let hi = (x >> 64) as u64;
    // hi * (x^4 + x^3 + x + 1) spills at most 4 bits past 64; fold once more.
    let folded = clmul(hi, REDUCTION);
    let spill = (folded >> 64) as u64;
    lo ^ folded as u64 ^ clmul(spill, REDUCTION) as u64
}

pub fn gf_mul(a: Gf64, b: Gf64) -> Gf64 {
    Gf64(reduce(clmul(a.0, b.0)))
}

impl Gf64 {
    pub const ZERO: Gf64 = Gf64(0);
    pub const ONE: Gf64 = Gf64(1);

    pub fn pow(self, mut e: u128) -> Gf64 {
        let mut base = self;
        let mut acc = Gf64::ONE;
        while e != 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self) -> Option<Gf64> {
        if self.0 == 0 {
            None
        } else {
            Some(self.pow((1u128 << 64) - 2))
        }
    }
}

impl Add for Gf64 {
    type Output = Gf64;
    fn add(self, rhs: Gf64) -> Gf64 {
        Gf64(self.0 ^ rhs.0)
    }
}

impl Mul for Gf64 {
    type Output = Gf64;
    fn mul(self, rhs: Gf64) -> Gf64 {
        gf_mul(self, rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Shift-and-add with reduction at every step.
    fn naive_mul(mut a: u64, mut b: u64) -> u64 {
        let mut r = 0u64;
        while b != 0 {
            if b & 1 == 1 {
                r ^= a;
            }
            let carry = a >> 63;
            a <<= 1;
            if carry == 1 {
                a ^= REDUCTION;
            }
            b >>= 1;
        }
        r
    }

    #[test]
    fn hardware_and_portable_products_agree() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let (a, b): (u64, u64) = (rng.gen(), rng.gen());
            assert_eq!(clmul(a, b), clmul_soft(a, b));
        }
    }

    #[test]
    fn small_cases() {
        let a = Gf64(0xdead_beef_0123_4567);
        assert_eq!(a * Gf64::ONE, a);
        assert_eq!(Gf64(2) * Gf64(2), Gf64(4));
        assert_eq!(Gf64(1 << 63) * Gf64(2), Gf64(REDUCTION));
    }

    #[test]
    fn matches_naive_reference() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            let (a, b): (u64, u64) = (rng.gen(), rng.gen());
            assert_eq!(gf_mul(Gf64(a), Gf64(b)).0, naive_mul(a, b));
        }
    }

    #[test]
    fn field_axioms() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let (a, b, c) = (Gf64(rng.gen()), Gf64(rng.gen()), Gf64(rng.gen()));
            assert_eq!((a * b) * c, a * (b * c));
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!(a * b, b * a);
            if let Some(i) = a.inv() {
                assert_eq!(a * i, Gf64::ONE);
            }
        }
        assert_eq!(Gf64::ZERO.inv(), None);
    }

    proptest! {
        #[test]
        fn prop_matches_reference(a: u64, b: u64) {
            prop_assert_eq!(gf_mul(Gf64(a), Gf64(b)).0, naive_mul(a, b));
        }
    }
}
