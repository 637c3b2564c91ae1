//! Sign-randomized ElGamal over a safe-prime group.
//!
//! Ciphertexts are `((-1)^b1 g^r, (-1)^b2 m' pk^r)` with `m' = (m + 1)^2`.
//! Plain `g^r` only ranges over quadratic residues and is told apart from
//! uniform by the Legendre symbol; the random signs make each component
//! uniform over `Z_p^*` instead.

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;

use super::group::GroupParams;
use super::mont::{self, FixedBase, Limbs};
use super::{check_ct, check_msg, KeyPair, PublicKey, Scheme, SecretKey};
use crate::bitstr::BitStr;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ElGamal {
    group: GroupParams,
    msg_bits: usize,
}

struct PreparedKey {
    table: FixedBase,
}

pub(crate) fn bitstr_to_biguint(s: &BitStr) -> BigUint {
    let pad = s.as_bytes().len() * 8 - s.len();
    BigUint::from_bytes_be(s.as_bytes()) >> pad
}

pub(crate) fn biguint_to_bitstr(x: &BigUint, len: usize) -> BitStr {
    let shifted = x << (len.div_ceil(8) * 8 - len);
    let raw = shifted.to_bytes_be();
    let mut bytes = vec![0u8; len.div_ceil(8)];
    let n = raw.len().min(bytes.len());
    let off = bytes.len() - n;
    bytes[off..].copy_from_slice(&raw[raw.len() - n..]);
    BitStr::from_bytes(len, &bytes).expect("sized above")
}

impl ElGamal {
    /// Plaintexts of `msg_bits` bits; `(m + 1)^2` must stay below `p`, which
    /// needs `msg_bits <= ell/2 - 1`.
    pub fn new(group: GroupParams, msg_bits: usize) -> Result<Self> {
        let max = (group.ell() / 2).saturating_sub(1);
        if msg_bits == 0 || msg_bits > max {
            return Err(Error::MessageTooLong {
                bits: msg_bits,
                max,
            });
        }
        Ok(ElGamal { group, msg_bits })
    }

    /// The 512-bit group with 128-bit plaintexts.
    pub fn desk() -> Self {
        Self::new(GroupParams::desk(), 128).expect("128 <= 255")
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    /// Key pair for an explicit exponent `x` in `[1, q - 1]`.
    pub fn keypair_from_exponent(&self, x: &BigUint) -> Result<KeyPair> {
        if x < &BigUint::one() || x >= self.group.q() {
            return Err(Error::BadKey("exponent outside [1, q-1]".into()));
        }
        let xl = mont::limbs_from_biguint(x);
        Ok(self.keypair_from_limbs(&xl))
    }

    fn keypair_from_limbs(&self, x: &Limbs) -> KeyPair {
        let field = self.group.field();
        let pk = self.group.encode(&field.from_mont(&self.group.pow_g(x)));
        KeyPair {
            pk: PublicKey::new(pk),
            sk: SecretKey::new(self.group.encode(x)),
        }
    }

    fn secret_exponent(&self, sk: &SecretKey) -> Result<Limbs> {
        let x = self
            .group
            .decode(sk.bits())
            .map_err(|_| Error::BadKey("secret exponent out of range".into()))?;
        if mont::cmp(&x, self.group.q_limbs()) != std::cmp::Ordering::Less {
            return Err(Error::BadKey("secret exponent >= q".into()));
        }
        Ok(x)
    }

    fn prepare(&self, pk: &PublicKey) -> Result<std::sync::Arc<PreparedKey>> {
        pk.prepared(|| {
            let y = self
                .group
                .decode(pk.bits())
                .map_err(|_| Error::BadKey("public key is not a group element".into()))?;
            let field = self.group.field();
            Ok(PreparedKey {
                table: FixedBase::new(field, &field.to_mont(&y), self.group.q_bits()),
            })
        })
    }
}

pub fn elg_gen(group: &GroupParams, rng: &mut dyn RngCore) -> KeyPair {
    let x = group.random_exponent(rng);
    ElGamal {
        group: group.clone(),
        msg_bits: 1,
    }
    .keypair_from_limbs(&x)
}

pub fn elg_enc(
    scheme: &ElGamal,
    pk: &PublicKey,
    m: &BitStr,
    rng: &mut dyn RngCore,
) -> Result<BitStr> {
    check_msg(m, scheme.msg_bits)?;
    let group = &scheme.group;
    let field = group.field();
    let prepared = scheme.prepare(pk)?;

    let r = group.random_exponent(rng);
    let signs = rng.next_u32();

    let mut c1 = field.from_mont(&group.pow_g(&r));
    let shared = prepared.table.pow(field, &r);
    let m1 = field.to_mont(&mont::limbs_from_biguint(&(bitstr_to_biguint(m) + 1u32)));
    let encoded = field.mul(&m1, &m1);
    let mut c2 = field.from_mont(&field.mul(&encoded, &shared));
    if signs & 1 == 1 {
        c1 = group.negate(&c1);
    }
    if signs & 2 == 2 {
        c2 = group.negate(&c2);
    }
    Ok(group.encode(&c1).concat(&group.encode(&c2)))
}

pub fn elg_dec(scheme: &ElGamal, sk: &SecretKey, c: &BitStr) -> Result<BitStr> {
    let group = &scheme.group;
    let ell = group.ell();
    check_ct(c, 2 * ell)?;
    let x = scheme.secret_exponent(sk)?;
    let c1 = group
        .decode(&c.slice(0, ell))
        .map_err(|_| Error::DecodeFailure)?;
    let c2 = group
        .decode(&c.slice(ell, ell))
        .map_err(|_| Error::DecodeFailure)?;
    let field = group.field();

    // Squaring strips both signs: c1^2 = g^(2r), c2^2 = m'^2 g^(2rx).
    // (c1^2)^(q - x) = g^(-2rx) since c1^2 has order dividing q.
    let c1m = field.to_mont(&c1);
    let c2m = field.to_mont(&c2);
    let unmask = field.pow(&field.mul(&c1m, &c1m), &mont::sub(group.q_limbs(), &x));
    let encoded_sq = field.mul(&field.mul(&c2m, &c2m), &unmask);
    // The residue square root picks +m', since -1 is a non-residue for p = 3 mod 4.
    let encoded =
        mont::limbs_to_biguint(&field.from_mont(&field.pow(&encoded_sq, group.sqrt_exp())));

    let root = encoded.sqrt();
    if &root * &root != encoded || root < BigUint::one() || root > BigUint::one() << scheme.msg_bits
    {
        return Err(Error::DecodeFailure);
    }
    Ok(biguint_to_bitstr(&(root - 1u32), scheme.msg_bits))
}

impl Scheme for ElGamal {
    fn id(&self) -> String {
        format!("elg-{}", self.group.ell())
    }

    fn ct_bits(&self) -> usize {
        2 * self.group.ell()
    }

    fn msg_bits(&self) -> usize {
        self.msg_bits
    }

    fn gen(&self, rng: &mut dyn RngCore) -> KeyPair {
        elg_gen(&self.group, rng)
    }

    fn enc(&self, pk: &PublicKey, m: &BitStr, rng: &mut dyn RngCore) -> Result<BitStr> {
        elg_enc(self, pk, m, rng)
    }

    fn dec(&self, sk: &SecretKey, c: &BitStr) -> Result<BitStr> {
        elg_dec(self, sk, c)
    }

    fn public_key(&self, sk: &SecretKey) -> Result<PublicKey> {
        let x = self.secret_exponent(sk)?;
        Ok(self.keypair_from_limbs(&x).pk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pke::group::legendre;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn tiny() -> ElGamal {
        ElGamal::new(GroupParams::tiny(), 1).unwrap()
    }

    #[test]
    fn gen_is_deterministic_and_matches_modpow() {
        let group = GroupParams::tiny();
        let a = elg_gen(&group, &mut ChaCha20Rng::seed_from_u64(0));
        let b = elg_gen(&group, &mut ChaCha20Rng::seed_from_u64(0));
        assert_eq!(a, b);
        let x = bitstr_to_biguint(a.sk.bits());
        assert!(x >= BigUint::one() && &x < group.q());
        // Independent route: num-bigint's own modpow.
        let pk = BigUint::from(2u32).modpow(&x, &BigUint::from(23u32));
        assert_eq!(bitstr_to_biguint(a.pk.bits()), pk);
    }

    #[test]
    fn exponent_one_gives_generator() {
        let kp = tiny().keypair_from_exponent(&BigUint::one()).unwrap();
        assert_eq!(bitstr_to_biguint(kp.pk.bits()), BigUint::from(2u32));
        assert!(tiny().keypair_from_exponent(&BigUint::from(11u32)).is_err());
    }

    #[test]
    fn exponents_stay_in_range() {
        let group = GroupParams::tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..2000 {
            let x = bitstr_to_biguint(elg_gen(&group, &mut rng).sk.bits());
            assert!(x >= BigUint::one() && x < BigUint::from(11u32));
            seen.insert(x);
        }
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn tiny_group_exhaustive_correctness() {
        let s = tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for x in 1..11u32 {
            let kp = s.keypair_from_exponent(&BigUint::from(x)).unwrap();
            for m in 0..2u64 {
                let m = BitStr::from_u64(m, 1);
                for _ in 0..50 {
                    let c = s.enc(&kp.pk, &m, &mut rng).unwrap();
                    assert_eq!(c.len(), 10);
                    assert_eq!(s.dec(&kp.sk, &c).unwrap(), m);
                }
            }
        }
    }

    #[test]
    fn desk_round_trip() {
        let s = ElGamal::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let kp = s.gen(&mut rng);
        for _ in 0..1000 {
            let m = BitStr::random(128, &mut rng);
            let c = s.enc(&kp.pk, &m, &mut rng).unwrap();
            assert_eq!(c.len(), 1024);
            assert_eq!(s.dec(&kp.sk, &c).unwrap(), m);
        }
        let edge = BitStr::from_bits(std::iter::repeat(true).take(128));
        let c = s.enc(&kp.pk, &edge, &mut rng).unwrap();
        assert_eq!(s.dec(&kp.sk, &c).unwrap(), edge);
    }

    #[test]
    fn message_width_enforced() {
        let s = ElGamal::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let kp = s.gen(&mut rng);
        assert!(matches!(
            s.enc(&kp.pk, &BitStr::zeros(129), &mut rng),
            Err(Error::MessageTooLong { .. })
        ));
        assert!(ElGamal::new(GroupParams::desk(), 256).is_err());
        assert!(ElGamal::new(GroupParams::desk(), 255).is_ok());
    }

    #[test]
    fn squared_components_are_residues() {
        let s = ElGamal::desk();
        let p = s.group().p().clone();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let kp = s.gen(&mut rng);
        let mut plain_qr = [0usize; 2];
        for _ in 0..200 {
            let c = s
                .enc(&kp.pk, &BitStr::random(128, &mut rng), &mut rng)
                .unwrap();
            for (i, half) in [c.slice(0, 512), c.slice(512, 512)].iter().enumerate() {
                let v = bitstr_to_biguint(half);
                assert_eq!(legendre(&(&v * &v % &p), &p), 1);
                if legendre(&v, &p) == 1 {
                    plain_qr[i] += 1;
                }
            }
        }
        // The components themselves are residues only about half the time.
        for n in plain_qr {
            assert!((60..140).contains(&n), "{n}");
        }
    }

    #[test]
    fn tampering_never_panics() {
        let s = ElGamal::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let kp = s.gen(&mut rng);
        let m = BitStr::random(128, &mut rng);
        let c = s.enc(&kp.pk, &m, &mut rng).unwrap();
        for pos in [512, 700, 1023] {
            let mut t = c.clone();
            t.set(pos, !t.get(pos));
            match s.dec(&kp.sk, &t) {
                Ok(m2) => assert_ne!(m2, m),
                Err(Error::DecodeFailure) => {}
                Err(e) => panic!("unexpected {e}"),
            }
        }
        assert!(s.dec(&kp.sk, &BitStr::zeros(1024)).is_err());
    }

    #[test]
    fn wrong_key_fails() {
        let s = ElGamal::desk();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let kp = s.gen(&mut rng);
        let m = BitStr::random(128, &mut rng);
        let c = s.enc(&kp.pk, &m, &mut rng).unwrap();
        let matches = (0..1000)
            .filter(|_| s.dec(&s.gen(&mut rng).sk, &c).ok().as_ref() == Some(&m))
            .count();
        assert_eq!(matches, 0);
    }

    #[test]
    fn repeated_encryptions_differ() {
        let s = tiny();
        let kp = s.keypair_from_exponent(&BigUint::from(3u32)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let m = BitStr::from_u64(1, 1);
        let trials = 20000;
        let same = (0..trials)
            .filter(|_| {
                s.enc(&kp.pk, &m, &mut rng).unwrap() == s.enc(&kp.pk, &m, &mut rng).unwrap()
            })
            .count();
        // Collision bound over r and both signs: (q - 1) * 4 = 40 equiprobable ciphertexts.
        let rate = same as f64 / trials as f64;
        assert!((rate - 1.0 / 40.0).abs() < 0.005, "{rate}");
    }

    #[test]
    fn public_key_from_secret() {
        let s = ElGamal::desk();
        let kp = s.gen(&mut ChaCha20Rng::seed_from_u64(9));
        assert_eq!(s.public_key(&kp.sk).unwrap(), kp.pk);
    }
}
