//! An 8-bit scheme small enough to enumerate: the low two bits carry the
//! message masked by a 2-bit key, the top six bits are uniform.

use rand::RngCore;

use super::{check_ct, check_msg, CiphertextPmf, KeyPair, PublicKey, Scheme, SecretKey};
use crate::bitstr::BitStr;
use crate::error::{Error, Result};

const MSG_BITS: usize = 2;
const CT_BITS: usize = 8;

#[derive(Debug, Clone, Copy, Default)]
pub struct TinyScheme;

pub fn tiny_scheme() -> TinyScheme {
    TinyScheme
}

fn offset(key: &BitStr) -> Result<u64> {
    if key.len() != MSG_BITS {
        return Err(Error::BadKey(format!(
            "expected {MSG_BITS}-bit key, got {}",
            key.len()
        )));
    }
    Ok(key.to_u64())
}

impl Scheme for TinyScheme {
    fn id(&self) -> String {
        "tiny".into()
    }

    fn ct_bits(&self) -> usize {
        CT_BITS
    }

    fn msg_bits(&self) -> usize {
        MSG_BITS
    }

    fn gen(&self, rng: &mut dyn RngCore) -> KeyPair {
        let k = BitStr::from_u64(rng.next_u32() as u64 & 3, MSG_BITS);
        KeyPair {
            pk: PublicKey::new(k.clone()),
            sk: SecretKey::new(k),
        }
    }

    fn enc(&self, pk: &PublicKey, m: &BitStr, rng: &mut dyn RngCore) -> Result<BitStr> {
        check_msg(m, MSG_BITS)?;
        let high = rng.next_u32() as u64 & 0x3f;
        Ok(BitStr::from_u64(
            (high << 2) | (m.to_u64() ^ offset(pk.bits())?),
            CT_BITS,
        ))
    }

    fn dec(&self, sk: &SecretKey, c: &BitStr) -> Result<BitStr> {
        check_ct(c, CT_BITS)?;
        Ok(BitStr::from_u64(
            (c.to_u64() & 3) ^ offset(sk.bits())?,
            MSG_BITS,
        ))
    }

    fn public_key(&self, sk: &SecretKey) -> Result<PublicKey> {
        offset(sk.bits())?;
        Ok(PublicKey::new(sk.bits().clone()))
    }

    fn enumerable(&self) -> bool {
        true
    }

    fn enumerate(&self, pk: &PublicKey, m: &BitStr) -> Option<CiphertextPmf> {
        check_msg(m, MSG_BITS).ok()?;
        let low = m.to_u64() ^ offset(pk.bits()).ok()?;
        Some(
            (0..64u64)
                .map(|high| (BitStr::from_u64((high << 2) | low, CT_BITS), 1.0 / 64.0))
                .collect(),
        )
    }
}
