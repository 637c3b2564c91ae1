//! Public seed establishment from raw ciphertexts.

use crate::bitstr::BitStr;
use crate::error::{Error, Result};
use crate::extractors::{gt, ip_2ext, HashSeed};
use crate::frame::{Role, TranscriptFrame};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub bits: BitStr,
    pub hash: HashSeed,
    /// Which party's round pair produced each bit; pairs are numbered from 1.
    pub provenance: Vec<(Role, u32)>,
}

impl Seed {
    pub fn from_frames(frames: &[TranscriptFrame], d: usize) -> Result<Self> {
        let bits = compute_seed_bits(frames, d)?;
        let provenance = (1..=(d / 2) as u32)
            .flat_map(|j| [(Role::P0, j), (Role::P1, j)])
            .collect();
        Ok(Seed {
            hash: HashSeed::from_seed_bits(&bits)?,
            bits,
            provenance,
        })
    }
}

/// The ciphertexts of rounds `1..=rounds` sent by `party`, in round order.
fn first_rounds(frames: &[TranscriptFrame], party: Role, rounds: usize) -> Result<Vec<&BitStr>> {
    let mut out: Vec<Option<&BitStr>> = vec![None; rounds];
    for f in frames.iter().filter(|f| f.party == party) {
        if f.round >= 1 && (f.round as usize) <= rounds {
            out[f.round as usize - 1] = Some(&f.ciphertext);
        }
    }
    let available = out.iter().take_while(|c| c.is_some()).count();
    if available < rounds {
        return Err(Error::NotEnoughFrames {
            available,
            required: rounds,
        });
    }
    Ok(out.into_iter().flatten().collect())
}

/// One greater-than bit per party per non-overlapping round pair,
/// P0's bit first.
pub fn compute_seed_bits(frames: &[TranscriptFrame], d: usize) -> Result<BitStr> {
    if d % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "seed length {d} must be even"
        )));
    }
    let p0 = first_rounds(frames, Role::P0, d)?;
    let p1 = first_rounds(frames, Role::P1, d)?;
    let mut bits = BitStr::empty();
    for j in 0..d / 2 {
        bits.push(gt(p0[2 * j], p0[2 * j + 1])?);
        bits.push(gt(p1[2 * j], p1[2 * j + 1])?);
    }
    Ok(bits)
}

/// Seed from (plaintext, ciphertext) pairs when the cover messages carry
/// at least `k1` bits of min-entropy: one inner-product block per pair, in
/// transcript order, truncated to `seed_bits`.
pub fn minentropy_seed(
    frames: &[TranscriptFrame],
    plaintexts: &[BitStr],
    declared_entropy: f64,
    k1: f64,
    v: usize,
    seed_bits: usize,
) -> Result<BitStr> {
    if declared_entropy < k1 {
        return Err(Error::EntropyTooLow {
            declared: declared_entropy,
            required: k1,
        });
    }
    if frames.len() != plaintexts.len() {
        return Err(Error::LengthMismatch {
            left: frames.len(),
            right: plaintexts.len(),
        });
    }
    let mut out = BitStr::empty();
    for (f, m) in frames.iter().zip(plaintexts) {
        if out.len() >= seed_bits {
            break;
        }
        let block = ip_2ext(m, &f.ciphertext.resized(m.len()), v)?;
        if m.count_ones() == 0 {
            log::warn!(
                "zero plaintext in round {} contributes a zero seed block",
                f.round
            );
        }
        out.extend(&block);
    }
    if out.len() < seed_bits {
        return Err(Error::NotEnoughFrames {
            available: out.len() / v,
            required: seed_bits.div_ceil(v),
        });
    }
    Ok(out.slice(0, seed_bits))
}
