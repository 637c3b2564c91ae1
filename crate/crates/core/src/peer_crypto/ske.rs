//! Nonce-based stream encryption and its keystream.

use rand::RngCore;

use super::chacha::{chacha20_block, hchacha20};
use super::SharedKey;
use crate::bitstr::BitStr;
use crate::error::{Error, Result};
use crate::params::SecurityParams;

pub const KEY_BITS: usize = 256;
pub const MAX_STREAM_BITS: usize = 1 << 20;
pub const MAX_NONCE_BITS: usize = 128;

/// `len_bits` of keystream for `(key, nonce)`. The nonce (up to 128 bits,
/// zero-extended) selects an HChaCha20 subkey, whose ChaCha20 stream is read
/// from counter 0.
pub fn prf_stream(key: &BitStr, nonce: &BitStr, len_bits: usize) -> Result<BitStr> {
    if len_bits > MAX_STREAM_BITS {
        return Err(Error::TooLong(len_bits));
    }
    if key.len() != KEY_BITS {
        return Err(Error::BadLength {
            expected: KEY_BITS,
            actual: key.len(),
        });
    }
    if nonce.len() > MAX_NONCE_BITS {
        return Err(Error::BadLength {
            expected: MAX_NONCE_BITS,
            actual: nonce.len(),
        });
    }
    let key: [u8; 32] = key.as_bytes().try_into().expect("256 bits");
    let nonce: [u8; 16] = nonce
        .resized(MAX_NONCE_BITS)
        .as_bytes()
        .try_into()
        .expect("128 bits");
    let subkey = hchacha20(&key, &nonce);
    let nbytes = len_bits.div_ceil(8);
    let mut out = Vec::with_capacity(nbytes.next_multiple_of(64));
    let mut counter = 0u32;
    while out.len() < nbytes {
        out.extend_from_slice(&chacha20_block(&subkey, counter, &[0u8; 12]));
        counter += 1;
    }
    out.truncate(nbytes);
    BitStr::from_bytes(len_bits, &out)
}

#[derive(Clone, PartialEq, Eq)]
pub struct SkeKey(BitStr);

impl std::fmt::Debug for SkeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SkeKey({} bits)", self.0.len())
    }
}

impl SkeKey {
    pub fn from_bits(bits: BitStr) -> Result<Self> {
        if bits.len() != KEY_BITS {
            return Err(Error::BadLength {
                expected: KEY_BITS,
                actual: bits.len(),
            });
        }
        Ok(SkeKey(bits))
    }

    pub fn bits(&self) -> &BitStr {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeCiphertext {
    pub nonce: BitStr,
    pub body: BitStr,
}

impl SkeCiphertext {
    pub fn to_bits(&self) -> BitStr {
        self.nonce.concat(&self.body)
    }

    pub fn from_bits(params: &SecurityParams, bits: &BitStr) -> Result<Self> {
        if bits.len() != params.xi_ske {
            return Err(Error::BadLength {
                expected: params.xi_ske,
                actual: bits.len(),
            });
        }
        let n = params.nonce_bits();
        Ok(SkeCiphertext {
            nonce: bits.slice(0, n),
            body: bits.slice(n, params.kappa),
        })
    }
}

pub fn ske_gen(coins: &SharedKey) -> SkeKey {
    SkeKey(coins.key().clone())
}

pub fn ske_enc(
    params: &SecurityParams,
    key: &SkeKey,
    msg: &BitStr,
    rng: &mut dyn RngCore,
) -> Result<SkeCiphertext> {
    if msg.len() != params.kappa {
        return Err(Error::BadLength {
            expected: params.kappa,
            actual: msg.len(),
        });
    }
    let nonce = BitStr::random(params.nonce_bits(), rng);
    let body = msg.xor(&prf_stream(&key.0, &nonce, params.kappa)?)?;
    Ok(SkeCiphertext { nonce, body })
}

pub fn ske_dec(params: &SecurityParams, key: &SkeKey, c: &SkeCiphertext) -> Result<BitStr> {
    if c.nonce.len() != params.nonce_bits() || c.body.len() != params.kappa {
        return Err(Error::BadLength {
            expected: params.xi_ske,
            actual: c.nonce.len() + c.body.len(),
        });
    }
    c.body.xor(&prf_stream(&key.0, &c.nonce, params.kappa)?)
}
