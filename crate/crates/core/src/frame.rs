//! Transcript frames: one ciphertext per party per exchange-round.

use std::collections::HashSet;

use crate::bitstr::BitStr;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    P0,
    P1,
}

impl Role {
    pub fn peer(self) -> Role {
        match self {
            Role::P0 => Role::P1,
            Role::P1 => Role::P0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Role::P0 => 0,
            Role::P1 => 1,
        }
    }
}

/// Local annotation only; never serialized onto the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    SeedPhase,
    KexPhase,
    CommPhase,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptFrame {
    pub party: Role,
    pub round: u32,
    pub phase: Phase,
    pub ciphertext: BitStr,
}

impl TranscriptFrame {
    pub fn new(party: Role, round: u32, phase: Phase, ciphertext: BitStr) -> Self {
        TranscriptFrame {
            party,
            round,
            phase,
            ciphertext,
        }
    }
}

/// Checks that `(party, round)` pairs are unique and each party's rounds run
/// contiguously from 1.
pub fn check_transcript(frames: &[TranscriptFrame]) -> Result<()> {
    let mut seen = HashSet::new();
    let mut next = [1u32; 2];
    for f in frames {
        if !seen.insert((f.party, f.round)) {
            return Err(Error::ProtocolDesync(format!(
                "duplicate frame {:?} round {}",
                f.party, f.round
            )));
        }
        let slot = &mut next[f.party.index()];
        if f.round != *slot {
            return Err(Error::ProtocolDesync(format!(
                "{:?} expected round {}, found {}",
                f.party, slot, f.round
            )));
        }
        *slot += 1;
    }
    Ok(())
}

/// Frames sent by `party`, in order.
pub fn frames_from(
    frames: &[TranscriptFrame],
    party: Role,
) -> impl Iterator<Item = &TranscriptFrame> {
    frames.iter().filter(move |f| f.party == party)
}
