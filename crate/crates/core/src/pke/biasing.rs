//! The adversarial wrapper: re-encrypt up to `t` times until a public
//! decoder `f` outputs 1. Any hidden channel that a third party could decode
//! locally from a single ciphertext gets pinned to 1 this way, while the
//! outputs stay genuine ciphertexts of the base scheme.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use super::{CiphertextPmf, KeyPair, PublicKey, Scheme, SecretKey};
use crate::bitstr::BitStr;
use crate::error::{Error, Result};

type DecoderFn = dyn Fn(&BitStr) -> bool + Send + Sync;

/// A function from a single ciphertext to one bit.
#[derive(Clone)]
pub struct LocalDecoder {
    name: String,
    f: Arc<DecoderFn>,
}

impl LocalDecoder {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&BitStr) -> bool + Send + Sync + 'static,
    ) -> Self {
        LocalDecoder {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Last bit of the ciphertext.
    pub fn lsb() -> Self {
        Self::new("lsb", |c: &BitStr| !c.is_empty() && c.get(c.len() - 1))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decode(&self, c: &BitStr) -> bool {
        (self.f)(c)
    }
}

impl fmt::Debug for LocalDecoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalDecoder({})", self.name)
    }
}

#[derive(Debug, Clone)]
pub struct BiasingScheme {
    base: Arc<dyn Scheme>,
    decoder: LocalDecoder,
    t: u32,
}

pub fn biasing_wrap(base: Arc<dyn Scheme>, decoder: LocalDecoder, t: u32) -> Result<BiasingScheme> {
    if t == 0 {
        return Err(Error::InvalidParams(
            "biasing rounds must be at least 1".into(),
        ));
    }
    Ok(BiasingScheme { base, decoder, t })
}

impl BiasingScheme {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn decoder(&self) -> &LocalDecoder {
        &self.decoder
    }

    pub fn base(&self) -> &Arc<dyn Scheme> {
        &self.base
    }
}

/// The locally decodable strawman: encrypt `m` until `decoder` reads
/// `bit` from the ciphertext, giving up after `budget` tries. The receiver
/// recovers the bit with `decoder` alone. Returns the last ciphertext and
/// whether it carries `bit`.
pub fn embed_bit_locally(
    scheme: &dyn Scheme,
    pk: &PublicKey,
    m: &BitStr,
    decoder: &LocalDecoder,
    bit: bool,
    budget: u32,
    rng: &mut dyn RngCore,
) -> Result<(BitStr, bool)> {
    let mut c = scheme.enc(pk, m, rng)?;
    for _ in 1..budget {
        if decoder.decode(&c) == bit {
            break;
        }
        c = scheme.enc(pk, m, rng)?;
    }
    let hit = decoder.decode(&c) == bit;
    Ok((c, hit))
}

/// `Pr[f(c) = 1]` after `t` tries when one try succeeds with probability `p`.
pub(crate) fn biased_success(p: f64, t: u32) -> f64 {
    1.0 - (1.0 - p).powi(t as i32)
}

impl Scheme for BiasingScheme {
    fn id(&self) -> String {
        format!(
            "biased-{}-{}-t{}",
            self.base.id(),
            self.decoder.name,
            self.t
        )
    }

    fn ct_bits(&self) -> usize {
        self.base.ct_bits()
    }

    fn msg_bits(&self) -> usize {
        self.base.msg_bits()
    }

    fn gen(&self, rng: &mut dyn RngCore) -> KeyPair {
        self.base.gen(rng)
    }

    fn enc(&self, pk: &PublicKey, m: &BitStr, rng: &mut dyn RngCore) -> Result<BitStr> {
        let mut c = self.base.enc(pk, m, rng)?;
        for _ in 1..self.t {
            if self.decoder.decode(&c) {
                break;
            }
            c = self.base.enc(pk, m, rng)?;
        }
        Ok(c)
    }

    fn dec(&self, sk: &SecretKey, c: &BitStr) -> Result<BitStr> {
        self.base.dec(sk, c)
    }

    fn public_key(&self, sk: &SecretKey) -> Result<PublicKey> {
        self.base.public_key(sk)
    }

    fn enumerable(&self) -> bool {
        self.base.enumerable()
    }

    fn enumerate(&self, pk: &PublicKey, m: &BitStr) -> Option<CiphertextPmf> {
        let base = self.base.enumerate(pk, m)?;
        let p: f64 = base
            .iter()
            .filter(|(c, _)| self.decoder.decode(c))
            .map(|(_, w)| w)
            .sum();
        let miss = (1.0 - p).powi(self.t as i32 - 1);
        Some(
            base.into_iter()
                .map(|(c, w)| {
                    let scale = if self.decoder.decode(&c) {
                        // Success on try i has weight (1 - p)^(i - 1) * w.
                        if p > 0.0 {
                            biased_success(p, self.t) / p
                        } else {
                            0.0
                        }
                    } else {
                        miss
                    };
                    (c, w * scale)
                })
                .collect(),
        )
    }
}
