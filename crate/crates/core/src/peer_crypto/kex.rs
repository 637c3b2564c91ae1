//! One-round Diffie-Hellman whose messages look like uniform strings.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;

use super::ske::prf_stream;
use crate::bitstr::BitStr;
use crate::error::{Error, Result};
use crate::extractors::{ext_seeded, HashSeed};
use crate::params::SecurityParams;
use crate::pke::group::GroupParams;
use crate::pke::mont::{self, Limbs};

const KEY_PARTS: usize = 8;
const PART_BITS: usize = 32;

/// One party's secret half of the exchange. Consumed by [`kex_finish`].
pub struct KexState {
    group: GroupParams,
    exponent: Limbs,
    sign: bool,
    sent: BitStr,
}

impl std::fmt::Debug for KexState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KexState")
            .field("sign", &self.sign)
            .field("sent", &self.sent)
            .finish_non_exhaustive()
    }
}

impl KexState {
    pub fn sent(&self) -> &BitStr {
        &self.sent
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SharedKey {
    key: BitStr,
    degenerate: bool,
}

impl std::fmt::Debug for SharedKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SharedKey({} bits, degenerate={})",
            self.key.len(),
            self.degenerate
        )
    }
}

impl SharedKey {
    pub fn key(&self) -> &BitStr {
        &self.key
    }

    /// The shared group element was 1, i.e. the peer sent +-1.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

fn key_seeds() -> &'static [HashSeed; KEY_PARTS] {
    static SEEDS: OnceLock<[HashSeed; KEY_PARTS]> = OnceLock::new();
    SEEDS.get_or_init(|| {
        let label = BitStr::from_byte_vec(b"kex key derive".to_vec());
        let stream = prf_stream(&BitStr::zeros(256), &label, 128 * KEY_PARTS).expect("fixed sizes");
        std::array::from_fn(|i| {
            HashSeed::from_seed_bits(&stream.slice(128 * i, 128)).expect("128 bits")
        })
    })
}

fn state_from(group: &GroupParams, exponent: Limbs, sign: bool) -> (KexState, BitStr) {
    let field = group.field();
    let mut y = field.from_mont(&group.pow_g(&exponent));
    if sign {
        y = group.negate(&y);
    }
    let sent = group.encode(&y);
    let state = KexState {
        group: group.clone(),
        exponent,
        sign,
        sent: sent.clone(),
    };
    (state, sent)
}

pub fn kex_round1(
    params: &SecurityParams,
    group: &GroupParams,
    rng: &mut dyn RngCore,
) -> Result<(KexState, BitStr)> {
    if params.ell_kex != group.ell() {
        return Err(Error::InvalidParams(format!(
            "ell_kex={} but group has {} bits",
            params.ell_kex,
            group.ell()
        )));
    }
    let x = group.random_exponent(rng);
    let sign = rng.next_u32() & 1 == 1;
    Ok(state_from(group, x, sign))
}

/// Deterministic variant for a chosen exponent in `[1, q - 1]`.
pub fn kex_from_exponent(
    group: &GroupParams,
    x: &BigUint,
    sign: bool,
) -> Result<(KexState, BitStr)> {
    if x < &BigUint::one() || x >= group.q() {
        return Err(Error::BadKey("exponent outside [1, q-1]".into()));
    }
    Ok(state_from(group, mont::limbs_from_biguint(x), sign))
}

pub fn kex_finish(state: KexState, peer_msg: &BitStr) -> Result<SharedKey> {
    let group = &state.group;
    let peer = group.decode(peer_msg)?;
    let field = group.field();
    let pm = field.to_mont(&peer);
    let shared = field.from_mont(&field.pow(&field.mul(&pm, &pm), &state.exponent));
    let degenerate = shared == mont::limbs_from_biguint(&BigUint::one());
    let encoded = group.encode(&shared);
    let mut key = BitStr::empty();
    for seed in key_seeds() {
        key.extend(&ext_seeded(seed, &encoded, PART_BITS)?);
    }
    Ok(SharedKey { key, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::resolve_profile;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn agreement_desk() {
        let p = resolve_profile("desk").unwrap();
        let g = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (a, ma) = kex_round1(&p, &g, &mut rng).unwrap();
            let (b, mb) = kex_round1(&p, &g, &mut rng).unwrap();
            let ka = kex_finish(a, &mb).unwrap();
            let kb = kex_finish(b, &ma).unwrap();
            assert_eq!(ka, kb);
            assert_eq!(ka.key().len(), 256);
        }
    }

    #[test]
    fn agreement_exhaustive_tiny_group() {
        let g = GroupParams::tiny();
        for x in 1..11u32 {
            for y in 1..11u32 {
                for (sx, sy) in [(false, false), (true, false), (false, true), (true, true)] {
                    let (a, ma) = kex_from_exponent(&g, &BigUint::from(x), sx).unwrap();
                    let (b, mb) = kex_from_exponent(&g, &BigUint::from(y), sy).unwrap();
                    // Independent route: 2^(2xy) mod 23.
                    let expect = BigUint::from(2u32)
                        .modpow(&BigUint::from(2 * x * y), &BigUint::from(23u32));
                    let ka = kex_finish(a, &mb).unwrap();
                    assert_eq!(ka, kex_finish(b, &ma).unwrap());
                    assert_eq!(ka.is_degenerate(), expect == BigUint::one());
                }
            }
        }
    }

    #[test]
    fn exponent_one_sends_generator() {
        let g = GroupParams::desk();
        let (_, m) = kex_from_exponent(&g, &BigUint::one(), false).unwrap();
        assert_eq!(m, g.encode_biguint(&BigUint::from(3u32)));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = resolve_profile("desk").unwrap();
        let g = GroupParams::desk();
        let run = |s| {
            kex_round1(&p, &g, &mut ChaCha20Rng::seed_from_u64(s))
                .unwrap()
                .1
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn bad_peer_messages() {
        let g = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let p = resolve_profile("desk").unwrap();
        let (a, _) = kex_round1(&p, &g, &mut rng).unwrap();
        assert!(matches!(
            kex_finish(a, &BitStr::zeros(512)),
            Err(Error::BadElement)
        ));
        let (a, _) = kex_round1(&p, &g, &mut rng).unwrap();
        let ones = BitStr::from_bits(std::iter::repeat(true).take(512));
        assert!(matches!(kex_finish(a, &ones), Err(Error::BadElement)));
        let (a, _) = kex_round1(&p, &g, &mut rng).unwrap();
        let k = kex_finish(a, &g.encode_biguint(&BigUint::one())).unwrap();
        assert!(k.is_degenerate());
        let wrong = resolve_profile("tiny").unwrap();
        assert!(kex_round1(&wrong, &g, &mut rng).is_err());
    }

    #[test]
    fn avalanche() {
        let p = resolve_profile("desk").unwrap();
        let g = GroupParams::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut same = 0;
        for i in 0..1000 {
            let (a, _) = kex_round1(&p, &g, &mut rng).unwrap();
            let (a2, _) =
                kex_from_exponent(&g, &mont::limbs_to_biguint(&a.exponent), a.sign).unwrap();
            let (_, mb) = kex_round1(&p, &g, &mut rng).unwrap();
            let mut flipped = mb.clone();
            flipped.set(8 + i % 500, !flipped.get(8 + i % 500));
            let k1 = kex_finish(a, &mb).unwrap();
            match kex_finish(a2, &flipped) {
                Ok(k2) => same += (k1 == k2) as usize,
                Err(Error::BadElement) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(same, 0);
    }
}
