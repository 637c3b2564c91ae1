//! The mandated public-key encryption scheme and its instantiations.
//!
//! [`ElGamal`] is the semantically secure default with near-uniform
//! ciphertexts. [`LowEntropyScheme`] and [`TinyScheme`] exist to give the
//! extractors and the rejection sampler sources whose distributions are known
//! exactly. [`BiasingScheme`] is the adversarial wrapper that defeats any
//! locally decodable hidden channel.

use std::any::Any;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::RngCore;

use crate::bitstr::BitStr;
use crate::error::{Error, Result};

mod biasing;
mod elgamal;
pub mod group;
mod lowent;
pub(crate) mod mont;
mod tiny;

pub use biasing::{biasing_wrap, embed_bit_locally, BiasingScheme, LocalDecoder};
pub use elgamal::{elg_dec, elg_enc, elg_gen, ElGamal};
pub use group::GroupParams;
pub use lowent::{lowent_scheme, LowEntropyScheme};
pub use tiny::{tiny_scheme, TinyScheme};

/// Scheme-specific public key bytes, plus a lazily built encryption table.
pub struct PublicKey {
    bits: BitStr,
    prepared: OnceLock<Arc<dyn Any + Send + Sync>>,
}

impl PublicKey {
    pub fn new(bits: BitStr) -> Self {
        PublicKey {
            bits,
            prepared: OnceLock::new(),
        }
    }

    pub fn bits(&self) -> &BitStr {
        &self.bits
    }

    pub(crate) fn prepared<T, F>(&self, build: F) -> Result<Arc<T>>
    where
        T: Any + Send + Sync,
        F: FnOnce() -> Result<T>,
    {
        if let Some(p) = self.prepared.get() {
            if let Ok(t) = Arc::clone(p).downcast::<T>() {
                return Ok(t);
            }
        }
        let built = Arc::new(build()?);
        let _ = self.prepared.set(built.clone());
        Ok(built)
    }
}

impl Clone for PublicKey {
    fn clone(&self) -> Self {
        let prepared = OnceLock::new();
        if let Some(p) = self.prepared.get() {
            let _ = prepared.set(Arc::clone(p));
        }
        PublicKey {
            bits: self.bits.clone(),
            prepared,
        }
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}

impl Eq for PublicKey {}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.bits)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey(BitStr);

impl SecretKey {
    pub fn new(bits: BitStr) -> Self {
        SecretKey(bits)
    }

    pub fn bits(&self) -> &BitStr {
        &self.0
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey({} bits)", self.0.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub pk: PublicKey,
    pub sk: SecretKey,
}

/// Exact ciphertext distribution: `(ciphertext, probability)` pairs.
pub type CiphertextPmf = Vec<(BitStr, f64)>;

/// A public-key encryption scheme `(Gen, Enc, Dec)` with fixed-width
/// plaintexts and ciphertexts.
pub trait Scheme: Send + Sync + fmt::Debug {
    fn id(&self) -> String;
    fn ct_bits(&self) -> usize;
    fn msg_bits(&self) -> usize;
    fn gen(&self, rng: &mut dyn RngCore) -> KeyPair;
    fn enc(&self, pk: &PublicKey, m: &BitStr, rng: &mut dyn RngCore) -> Result<BitStr>;
    fn dec(&self, sk: &SecretKey, c: &BitStr) -> Result<BitStr>;
    fn public_key(&self, sk: &SecretKey) -> Result<PublicKey>;

    /// Whether [`enumerate`](Self::enumerate) is available.
    fn enumerable(&self) -> bool {
        false
    }

    /// The exact distribution of `enc(pk, m)` for small schemes.
    fn enumerate(&self, _pk: &PublicKey, _m: &BitStr) -> Option<CiphertextPmf> {
        None
    }
}

pub(crate) fn check_msg(m: &BitStr, msg_bits: usize) -> Result<()> {
    if m.len() > msg_bits {
        return Err(Error::MessageTooLong {
            bits: m.len(),
            max: msg_bits,
        });
    }
    if m.len() != msg_bits {
        return Err(Error::BadLength {
            expected: msg_bits,
            actual: m.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_ct(c: &BitStr, ct_bits: usize) -> Result<()> {
    if c.len() != ct_bits {
        return Err(Error::BadLength {
            expected: ct_bits,
            actual: c.len(),
        });
    }
    Ok(())
}
