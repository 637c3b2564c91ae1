//! A deliberately weak scheme whose ciphertexts have exactly `k` bits of
//! min-entropy: `m || nonce || pad` with a `k`-bit uniform nonce and a pad
//! fixed by the key and message. Not semantically secure.

use rand::RngCore;

use super::{check_ct, check_msg, CiphertextPmf, KeyPair, PublicKey, Scheme, SecretKey};
use crate::bitstr::BitStr;
use crate::error::{Error, Result};
use crate::peer_crypto::prf_stream;

const KEY_BITS: usize = 256;
const ENUMERATE_MAX_K: usize = 16;

#[derive(Debug, Clone)]
pub struct LowEntropyScheme {
    n_ct: usize,
    msg_bits: usize,
    k: usize,
}

/// 1024-bit ciphertexts over 128-bit messages with `k` bits of randomness.
pub fn lowent_scheme(k: usize) -> Result<LowEntropyScheme> {
    LowEntropyScheme::new(1024, 128, k)
}

impl LowEntropyScheme {
    pub fn new(n_ct: usize, msg_bits: usize, k: usize) -> Result<Self> {
        if msg_bits == 0 || msg_bits > n_ct {
            return Err(Error::InvalidParams(format!(
                "msg_bits {msg_bits} vs n_ct {n_ct}"
            )));
        }
        if k > n_ct - msg_bits {
            return Err(Error::BadK {
                k,
                available: n_ct - msg_bits,
            });
        }
        Ok(LowEntropyScheme { n_ct, msg_bits, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn assemble(&self, key: &BitStr, m: &BitStr, nonce: &BitStr) -> Result<BitStr> {
        if key.len() != KEY_BITS {
            return Err(Error::BadKey(format!("expected {KEY_BITS}-bit key")));
        }
        let pad_len = self.n_ct - self.msg_bits - self.k;
        let pad = prf_stream(key, &m.resized(m.len().min(128)), pad_len)?;
        Ok(m.concat(nonce).concat(&pad))
    }
}

impl Scheme for LowEntropyScheme {
    fn id(&self) -> String {
        format!("lowent-{}-{}-{}", self.n_ct, self.msg_bits, self.k)
    }

    fn ct_bits(&self) -> usize {
        self.n_ct
    }

    fn msg_bits(&self) -> usize {
        self.msg_bits
    }

    fn gen(&self, rng: &mut dyn RngCore) -> KeyPair {
        let key = BitStr::random(KEY_BITS, rng);
        KeyPair {
            pk: PublicKey::new(key.clone()),
            sk: SecretKey::new(key),
        }
    }

    fn enc(&self, pk: &PublicKey, m: &BitStr, rng: &mut dyn RngCore) -> Result<BitStr> {
        check_msg(m, self.msg_bits)?;
        self.assemble(pk.bits(), m, &BitStr::random(self.k, rng))
    }

    fn dec(&self, _sk: &SecretKey, c: &BitStr) -> Result<BitStr> {
        check_ct(c, self.n_ct)?;
        Ok(c.slice(0, self.msg_bits))
    }

    fn public_key(&self, sk: &SecretKey) -> Result<PublicKey> {
        Ok(PublicKey::new(sk.bits().clone()))
    }

    fn enumerable(&self) -> bool {
        self.k <= ENUMERATE_MAX_K
    }

    fn enumerate(&self, pk: &PublicKey, m: &BitStr) -> Option<CiphertextPmf> {
        if !self.enumerable() {
            return None;
        }
        check_msg(m, self.msg_bits).ok()?;
        let p = 1.0 / (1u64 << self.k) as f64;
        (0..1u64 << self.k)
            .map(|nonce| {
                self.assemble(pk.bits(), m, &BitStr::from_u64(nonce, self.k))
                    .ok()
                    .map(|c| (c, p))
            })
            .collect()
    }
}
