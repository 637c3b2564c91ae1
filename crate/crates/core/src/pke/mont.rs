//! Modular arithmetic for odd moduli of up to 1024 bits: Montgomery form in
//! general, plain representation with folding reduction for moduli of the
//! form `2^(64n) - c` with small `c`.
//!
//! Values are little-endian `u64` limb arrays. Only the first `n` limbs of
//! each array are meaningful; the rest stay zero.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

pub(crate) const MAX_LIMBS: usize = 16;
pub(crate) type Limbs = [u64; MAX_LIMBS];

const FIXED_WINDOW: usize = 8;

pub(crate) fn limbs_from_biguint(x: &BigUint) -> Limbs {
    let mut out = [0u64; MAX_LIMBS];
    for (i, d) in x.to_u64_digits().into_iter().enumerate() {
        assert!(i < MAX_LIMBS, "value exceeds {} limbs", MAX_LIMBS);
        out[i] = d;
    }
    out
}

pub(crate) fn limbs_to_biguint(x: &Limbs) -> BigUint {
    let mut bytes = Vec::with_capacity(MAX_LIMBS * 8);
    for limb in x {
        bytes.extend_from_slice(&limb.to_le_bytes());
    }
    BigUint::from_bytes_le(&bytes)
}

/// Big-endian bytes into limbs.
pub(crate) fn limbs_from_be(bytes: &[u8]) -> Limbs {
    let mut out = [0u64; MAX_LIMBS];
    for (i, &b) in bytes.iter().rev().enumerate() {
        out[i / 8] |= (b as u64) << (8 * (i % 8));
    }
    out
}

/// The low `nbytes` bytes of `x`, big-endian.
pub(crate) fn limbs_to_be(x: &Limbs, nbytes: usize) -> Vec<u8> {
    (0..nbytes)
        .rev()
        .map(|i| (x[i / 8] >> (8 * (i % 8))) as u8)
        .collect()
}

pub(crate) fn bit(x: &Limbs, i: usize) -> bool {
    (x[i / 64] >> (i % 64)) & 1 == 1
}

pub(crate) fn cmp(a: &Limbs, b: &Limbs) -> std::cmp::Ordering {
    for i in (0..MAX_LIMBS).rev() {
        match a[i].cmp(&b[i]) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

pub(crate) fn is_zero(a: &Limbs) -> bool {
    a.iter().all(|&l| l == 0)
}

/// `a - b`, assuming `a >= b`.
pub(crate) fn sub(a: &Limbs, b: &Limbs) -> Limbs {
    let mut out = [0u64; MAX_LIMBS];
    let mut borrow = 0u64;
    for i in 0..MAX_LIMBS {
        let (d, b1) = a[i].overflowing_sub(b[i]);
        let (d, b2) = d.overflowing_sub(borrow);
        out[i] = d;
        borrow = (b1 | b2) as u64;
    }
    out
}

/// CIOS Montgomery product `a * b / 2^(64N) mod m` on `N` limbs.
#[inline(always)]
fn mont_mul<const N: usize>(a: &Limbs, b: &Limbs, m: &Limbs, minv: u64) -> Limbs {
    let mut t = [0u64; N];
    let mut top = 0u64;
    for &ai in &a[..N] {
        let ai = ai as u128;
        let mut carry = 0u128;
        for j in 0..N {
            let s = t[j] as u128 + ai * b[j] as u128 + carry;
            t[j] = s as u64;
            carry = s >> 64;
        }
        let s = top as u128 + carry;
        top = s as u64;
        let overflow = (s >> 64) as u64;

        let q = t[0].wrapping_mul(minv) as u128;
        let s = t[0] as u128 + q * m[0] as u128;
        let mut carry = s >> 64;
        for j in 1..N {
            let s = t[j] as u128 + q * m[j] as u128 + carry;
            t[j - 1] = s as u64;
            carry = s >> 64;
        }
        let s = top as u128 + carry;
        t[N - 1] = s as u64;
        top = overflow + (s >> 64) as u64;
    }
    let mut r = [0u64; MAX_LIMBS];
    r[..N].copy_from_slice(&t);
    if top != 0 || cmp(&r, m) != std::cmp::Ordering::Less {
        // Any borrow out of limb N-1 cancels `top`.
        let mut borrow = 0u64;
        for j in 0..N {
            let (d, b1) = r[j].overflowing_sub(m[j]);
            let (d, b2) = d.overflowing_sub(borrow);
            r[j] = d;
            borrow = (b1 | b2) as u64;
        }
    }
    r
}

#[derive(Debug, Clone)]
pub(crate) struct MontField {
    modulus: Limbs,
    n: usize,
    minv: u64,
    r2: Limbs,
    one: Limbs,
    /// `c` when the modulus is `2^(64n) - c`; values are then kept as-is.
    fold: Option<u64>,
}

/// Product modulo `2^(64N) - c`, using `2^(64N) = c`.
#[inline(always)]
fn fold_mul<const N: usize>(a: &Limbs, b: &Limbs, m: &Limbs, c: u64) -> Limbs {
    let mut prod = [0u64; 2 * MAX_LIMBS];
    for i in 0..N {
        let ai = a[i] as u128;
        let mut carry = 0u128;
        for j in 0..N {
            let s = prod[i + j] as u128 + ai * b[j] as u128 + carry;
            prod[i + j] = s as u64;
            carry = s >> 64;
        }
        prod[i + N] = carry as u64;
    }
    let mut r = [0u64; MAX_LIMBS];
    let mut carry = 0u128;
    for j in 0..N {
        let s = prod[j] as u128 + prod[N + j] as u128 * c as u128 + carry;
        r[j] = s as u64;
        carry = s >> 64;
    }
    // carry * 2^(64N) folds to carry * c, which fits in two limbs.
    let mut extra = carry * c as u128;
    while extra != 0 {
        let mut add = extra;
        for limb in r.iter_mut().take(N) {
            let s = *limb as u128 + (add as u64) as u128;
            *limb = s as u64;
            add = (add >> 64) + (s >> 64);
            if add == 0 {
                break;
            }
        }
        extra = add * c as u128;
    }
    if cmp(&r, m) != std::cmp::Ordering::Less {
        r = sub(&r, m);
    }
    r
}

impl MontField {
    pub(crate) fn new(p: &BigUint) -> Self {
        assert!(p.bit(0), "Montgomery modulus must be odd");
        let n = p.to_u64_digits().len();
        assert!(n <= MAX_LIMBS);
        let modulus = limbs_from_biguint(p);
        // Newton iteration for p^-1 mod 2^64.
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(modulus[0].wrapping_mul(inv)));
        }
        let r = BigUint::one() << (64 * n);
        let fold = (&r - p).to_u64().filter(|&c| c < 1 << 32);
        let mut one = [0u64; MAX_LIMBS];
        one[0] = 1;
        MontField {
            modulus,
            n,
            minv: inv.wrapping_neg(),
            r2: limbs_from_biguint(&((&r * &r) % p)),
            one: if fold.is_some() {
                one
            } else {
                limbs_from_biguint(&(&r % p))
            },
            fold,
        }
    }

    pub(crate) fn one(&self) -> Limbs {
        self.one
    }

    pub(crate) fn mul(&self, a: &Limbs, b: &Limbs) -> Limbs {
        macro_rules! dispatch {
            ($($n:literal)*) => {
                match (self.n, self.fold) {
                    $(($n, None) => mont_mul::<$n>(a, b, &self.modulus, self.minv),)*
                    $(($n, Some(c)) => fold_mul::<$n>(a, b, &self.modulus, c),)*
                    _ => unreachable!("limb count checked in new"),
                }
            };
        }
        dispatch!(1 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16)
    }

    pub(crate) fn to_mont(&self, x: &Limbs) -> Limbs {
        if self.fold.is_some() {
            return *x;
        }
        self.mul(x, &self.r2)
    }

    pub(crate) fn from_mont(&self, x: &Limbs) -> Limbs {
        if self.fold.is_some() {
            return *x;
        }
        let mut unit = [0u64; MAX_LIMBS];
        unit[0] = 1;
        self.mul(x, &unit)
    }

    /// `base^exp` for a Montgomery-form base; result in Montgomery form.
    pub(crate) fn pow(&self, base: &Limbs, exp: &Limbs) -> Limbs {
        let bits = (0..MAX_LIMBS * 64)
            .rev()
            .find(|&i| bit(exp, i))
            .map_or(0, |i| i + 1);
        let mut table = [self.one; 16];
        for i in 1..16 {
            table[i] = self.mul(&table[i - 1], base);
        }
        let mut acc = self.one;
        let windows = bits.div_ceil(4);
        for w in (0..windows).rev() {
            for _ in 0..4 {
                acc = self.mul(&acc, &acc);
            }
            let mut idx = 0usize;
            for k in (0..4).rev() {
                idx = (idx << 1) | bit(exp, 4 * w + k) as usize;
            }
            if idx != 0 {
                acc = self.mul(&acc, &table[idx]);
            }
        }
        acc
    }
}

/// Precomputed powers `base^(j * 2^(w*i))` for fast exponentiation of a
/// fixed base. Entries store only the field's limbs to keep the table small.
#[derive(Debug)]
pub(crate) struct FixedBase {
    windows: usize,
    limbs: usize,
    table: Vec<u64>,
}

impl FixedBase {
    /// `base` in Montgomery form; exponents up to `exp_bits` bits.
    pub(crate) fn new(field: &MontField, base: &Limbs, exp_bits: usize) -> Self {
        let windows = exp_bits.div_ceil(FIXED_WINDOW).max(1);
        let width = 1usize << FIXED_WINDOW;
        let n = field.n;
        let mut table = Vec::with_capacity(windows * width * n);
        let mut step = *base;
        for _ in 0..windows {
            let mut cur = field.one();
            table.extend_from_slice(&cur[..n]);
            for _ in 1..width {
                cur = field.mul(&cur, &step);
                table.extend_from_slice(&cur[..n]);
            }
            // step^(2^w) is the next window's unit.
            step = field.mul(&cur, &step);
        }
        FixedBase {
            windows,
            limbs: n,
            table,
        }
    }

    pub(crate) fn pow(&self, field: &MontField, exp: &Limbs) -> Limbs {
        let width = 1usize << FIXED_WINDOW;
        let mask = (width - 1) as u64;
        let n = self.limbs;
        let mut acc = field.one();
        let mut entry = [0u64; MAX_LIMBS];
        for w in 0..self.windows {
            let pos = w * FIXED_WINDOW;
            let mut digit = exp[pos / 64] >> (pos % 64);
            if pos % 64 + FIXED_WINDOW > 64 && pos / 64 + 1 < MAX_LIMBS {
                digit |= exp[pos / 64 + 1] << (64 - pos % 64);
            }
            let digit = (digit & mask) as usize;
            if digit != 0 {
                let at = (w * width + digit) * n;
                entry[..n].copy_from_slice(&self.table[at..at + n]);
                acc = field.mul(&acc, &entry);
            }
        }
        debug_assert!((self.windows * FIXED_WINDOW..64 * MAX_LIMBS).all(|i| !bit(exp, i)));
        acc
    }
}
