//! Safe-prime groups `Z_p^*` with `p = 2q + 1`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use super::mont::{self, FixedBase, Limbs, MontField};
use crate::bitstr::BitStr;
use crate::error::{Error, Result};

const DESK_512: &str = include_str!("../../groups/desk512.txt");
const TINY_16: &str = include_str!("../../groups/tiny16.txt");
const TINY_5: &str = include_str!("../../groups/tiny5.txt");

/// Bits of statistical slack required between `p` and `2^ell`.
pub const ENCODING_SLACK_BITS: usize = 40;

#[derive(Clone)]
pub struct GroupParams(Arc<Inner>);

struct Inner {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    ell: usize,
    field: MontField,
    p_limbs: Limbs,
    q_limbs: Limbs,
    /// (p + 1) / 4, the square-root exponent for p = 3 mod 4.
    sqrt_exp: Limbs,
    g_table: OnceLock<FixedBase>,
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GroupParams(ell={}, g={}, p={})",
            self.0.ell, self.0.g, self.0.p
        )
    }
}

impl PartialEq for GroupParams {
    fn eq(&self, other: &Self) -> bool {
        self.0.p == other.0.p && self.0.g == other.0.g
    }
}

impl Eq for GroupParams {}

impl GroupParams {
    /// Validates the safe-prime structure and that `g` generates the order-`q` subgroup.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self> {
        let bad = |why: &str| Err(Error::InvalidParams(format!("group: {why}")));
        if p != &q * 2u32 + 1u32 {
            return bad("p != 2q + 1");
        }
        if (&p % 4u32) != BigUint::from(3u32) {
            return bad("p != 3 mod 4");
        }
        if !is_probable_prime(&q, 40) || !is_probable_prime(&p, 40) {
            return bad("p or q not prime");
        }
        if g <= BigUint::one() || g >= p || !g.modpow(&q, &p).is_one() {
            return bad("g does not generate the order-q subgroup");
        }
        Ok(Self::from_validated(p, q, g))
    }

    fn from_validated(p: BigUint, q: BigUint, g: BigUint) -> Self {
        let field = MontField::new(&p);
        GroupParams(Arc::new(Inner {
            ell: p.bits() as usize,
            p_limbs: mont::limbs_from_biguint(&p),
            q_limbs: mont::limbs_from_biguint(&q),
            sqrt_exp: mont::limbs_from_biguint(&((&p + 1u32) >> 2)),
            field,
            p,
            q,
            g,
            g_table: OnceLock::new(),
        }))
    }

    /// Parses the `p=…\nq=…\ng=…` decimal format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vals = [None, None, None];
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad group line `{line}`")))?;
            let slot = match k.trim() {
                "p" => 0,
                "q" => 1,
                "g" => 2,
                other => return Err(Error::Parse(format!("unknown group key `{other}`"))),
            };
            vals[slot] = Some(
                v.trim()
                    .parse::<BigUint>()
                    .map_err(|e| Error::Parse(format!("{k}: {e}")))?,
            );
        }
        match vals {
            [Some(p), Some(q), Some(g)] => Self::new(p, q, g),
            _ => Err(Error::Parse("group file needs p, q and g".into())),
        }
    }

    pub fn to_text(&self) -> String {
        format!("p={}\nq={}\ng={}\n", self.0.p, self.0.q, self.0.g)
    }

    /// The committed 512-bit group, `p = 2^512 - 38117`.
    pub fn desk() -> Self {
        static G: OnceLock<GroupParams> = OnceLock::new();
        G.get_or_init(|| Self::parse(DESK_512).expect("committed group is valid"))
            .clone()
    }

    /// `p = 65267`, the largest 16-bit safe prime.
    pub fn tiny16() -> Self {
        static G: OnceLock<GroupParams> = OnceLock::new();
        G.get_or_init(|| Self::parse(TINY_16).expect("committed group is valid"))
            .clone()
    }

    /// `p = 23, q = 11, g = 2`.
    pub fn tiny() -> Self {
        static G: OnceLock<GroupParams> = OnceLock::new();
        G.get_or_init(|| Self::parse(TINY_5).expect("committed group is valid"))
            .clone()
    }

    pub fn p(&self) -> &BigUint {
        &self.0.p
    }

    pub fn q(&self) -> &BigUint {
        &self.0.q
    }

    pub fn g(&self) -> &BigUint {
        &self.0.g
    }

    /// Bit length of `p`; group elements are encoded in this many bits.
    pub fn ell(&self) -> usize {
        self.0.ell
    }

    /// Whether `2^ell - p <= 2^(ell - 40)`, i.e. uniform elements of `Z_p^*`
    /// encode to strings within `2^-40` of uniform `ell`-bit strings.
    pub fn has_uniform_encoding(&self) -> bool {
        if self.0.ell <= ENCODING_SLACK_BITS {
            return false;
        }
        let gap = (BigUint::one() << self.0.ell) - &self.0.p;
        gap <= BigUint::one() << (self.0.ell - ENCODING_SLACK_BITS)
    }

    pub(crate) fn field(&self) -> &MontField {
        &self.0.field
    }

    pub(crate) fn q_limbs(&self) -> &Limbs {
        &self.0.q_limbs
    }

    pub(crate) fn sqrt_exp(&self) -> &Limbs {
        &self.0.sqrt_exp
    }

    pub(crate) fn q_bits(&self) -> usize {
        self.0.q.bits() as usize
    }

    /// Uniform exponent in `[1, q - 1]`.
    pub(crate) fn random_exponent(&self, rng: &mut dyn RngCore) -> Limbs {
        let bits = self.q_bits();
        loop {
            let mut x = [0u64; mont::MAX_LIMBS];
            for (i, limb) in x.iter_mut().enumerate().take(bits.div_ceil(64)) {
                *limb = rng.next_u64();
                let top = bits - 64 * i;
                if top < 64 {
                    *limb &= (1u64 << top) - 1;
                }
            }
            if !mont::is_zero(&x) && mont::cmp(&x, &self.0.q_limbs) == std::cmp::Ordering::Less {
                return x;
            }
        }
    }

    /// `g^e`, Montgomery form.
    pub(crate) fn pow_g(&self, e: &Limbs) -> Limbs {
        let table = self.0.g_table.get_or_init(|| {
            let gm = self.0.field.to_mont(&mont::limbs_from_biguint(&self.0.g));
            FixedBase::new(&self.0.field, &gm, self.q_bits())
        });
        table.pow(&self.0.field, e)
    }

    /// `p - x` for `0 < x < p`.
    pub(crate) fn negate(&self, x: &Limbs) -> Limbs {
        mont::sub(&self.0.p_limbs, x)
    }

    /// Fixed-width big-endian encoding of a residue in `[0, p)`.
    pub(crate) fn encode(&self, x: &Limbs) -> BitStr {
        let ell = self.0.ell;
        if ell % 8 == 0 {
            return BitStr::from_byte_vec(mont::limbs_to_be(x, ell / 8));
        }
        BitStr::from_bits((0..ell).rev().map(|i| mont::bit(x, i)))
    }

    /// Inverse of [`encode`](Self::encode); rejects 0 and values `>= p`.
    pub(crate) fn decode(&self, s: &BitStr) -> Result<Limbs> {
        if s.len() != self.0.ell {
            return Err(Error::BadLength {
                expected: self.0.ell,
                actual: s.len(),
            });
        }
        let x = if s.len() % 8 == 0 {
            mont::limbs_from_be(s.as_bytes())
        } else {
            let mut x = [0u64; mont::MAX_LIMBS];
            for (i, b) in s.bits().enumerate() {
                if b {
                    let pos = self.0.ell - 1 - i;
                    x[pos / 64] |= 1 << (pos % 64);
                }
            }
            x
        };
        if mont::is_zero(&x) || mont::cmp(&x, &self.0.p_limbs) != std::cmp::Ordering::Less {
            return Err(Error::BadElement);
        }
        Ok(x)
    }

    pub fn encode_biguint(&self, x: &BigUint) -> BitStr {
        self.encode(&mont::limbs_from_biguint(&(x % &self.0.p)))
    }

    pub fn decode_biguint(&self, s: &BitStr) -> Result<BigUint> {
        self.decode(s).map(|x| mont::limbs_to_biguint(&x))
    }

    /// Smallest base `a` certifying `p` prime given `q` prime (Pocklington with
    /// the factor `q > sqrt(p)` of `p - 1`): `a^(p-1) = 1` and `gcd(a^2 - 1, p) = 1`.
    pub fn pocklington_witness(&self) -> Option<u32> {
        let p = &self.0.p;
        let pm1 = p - 1u32;
        (2u32..1000).find(|&a| {
            let a = BigUint::from(a);
            a.modpow(&pm1, p).is_one() && (a.modpow(&BigUint::from(2u32), p) - 1u32).gcd(p).is_one()
        })
    }
}

const SMALL_PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// Miller-Rabin with the first `rounds` primes as bases (deterministic below 3.3e24).
pub fn is_probable_prime(n: &BigUint, rounds: usize) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let nm1 = n - 1u32;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    'witness: for &a in SMALL_PRIMES.iter().take(rounds.min(SMALL_PRIMES.len())) {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x.is_one() || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&BigUint::from(2u32), n);
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Legendre symbol `(a/p)` as -1, 0 or 1.
pub fn legendre(a: &BigUint, p: &BigUint) -> i8 {
    let r = a.modpow(&((p - 1u32) >> 1), p);
    if r.is_zero() {
        0
    } else if r.is_one() {
        1
    } else {
        -1
    }
}
