//! Length-prefixed binary frames.
//!
//! ```text
//! magic   2  0x53 0x43 ("SC")
//! version 1  0x01
//! dir     1  0x00 = P0 -> P1, 0x01 = P1 -> P0
//! round   4  big-endian, >= 1
//! length  4  big-endian payload byte count
//! payload    ciphertext bytes
//! ```

use std::io::{ErrorKind, Read, Write};

use crate::bitstr::BitStr;
use crate::error::{Error, Result};
use crate::frame::{Phase, Role, TranscriptFrame};

pub const MAGIC: u16 = 0x5343;
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 12;
/// Refuses payloads above this many bytes before allocating.
pub const MAX_PAYLOAD: u32 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireFrame {
    pub direction: Role,
    pub round: u32,
    pub payload: Vec<u8>,
}

impl WireFrame {
    /// The ciphertext as an `n_ct`-bit string. The phase tag is left as
    /// [`Phase::Idle`]; only the local engine knows the real one.
    pub fn into_transcript(self, n_ct: usize) -> Result<TranscriptFrame> {
        if self.payload.len() != n_ct.div_ceil(8) {
            return Err(Error::BadLength {
                expected: n_ct.div_ceil(8) * 8,
                actual: self.payload.len() * 8,
            });
        }
        let ciphertext = BitStr::from_bytes(n_ct, &self.payload)?;
        Ok(TranscriptFrame::new(
            self.direction,
            self.round,
            Phase::Idle,
            ciphertext,
        ))
    }
}

fn direction_byte(role: Role) -> u8 {
    match role {
        Role::P0 => 0,
        Role::P1 => 1,
    }
}

pub fn frame_encode(direction: Role, round: u32, ciphertext: &BitStr) -> Vec<u8> {
    let payload = ciphertext.as_bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC.to_be_bytes());
    out.push(VERSION);
    out.push(direction_byte(direction));
    out.extend_from_slice(&round.to_be_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    out
}

/// Parses the fixed header, returning the frame skeleton and payload length.
fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(Role, u32, u32)> {
    let magic = u16::from_be_bytes([h[0], h[1]]);
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if h[2] != VERSION {
        return Err(Error::BadVersion(h[2]));
    }
    let direction = match h[3] {
        0 => Role::P0,
        1 => Role::P1,
        other => return Err(Error::Parse(format!("bad direction byte {other:#04x}"))),
    };
    let round = u32::from_be_bytes([h[4], h[5], h[6], h[7]]);
    if round == 0 {
        return Err(Error::Parse("round 0 on the wire".into()));
    }
    let length = u32::from_be_bytes([h[8], h[9], h[10], h[11]]);
    if length > MAX_PAYLOAD {
        return Err(Error::Parse(format!("payload of {length} bytes")));
    }
    Ok((direction, round, length))
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn frame_decode(bytes: &[u8]) -> Result<WireFrame> {
    let header: &[u8; HEADER_LEN] = bytes
        .get(..HEADER_LEN)
        .and_then(|h| h.try_into().ok())
        .ok_or(Error::Truncated)?;
    let (direction, round, length) = parse_header(header)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < length as usize {
        return Err(Error::Truncated);
    }
    if payload.len() > length as usize {
        return Err(Error::Parse(format!(
            "{} trailing bytes after frame",
            payload.len() - length as usize
        )));
    }
    Ok(WireFrame {
        direction,
        round,
        payload: payload.to_vec(),
    })
}

/// Reads one frame; `Ok(None)` on a clean end of stream between frames.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> Result<Option<WireFrame>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match r.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Truncated),
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::io("reading frame header", e)),
        }
    }
    let (direction, round, length) = parse_header(&header)?;
    let mut payload = vec![0u8; length as usize];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::Truncated,
        _ => Error::io("reading frame payload", e),
    })?;
    Ok(Some(WireFrame {
        direction,
        round,
        payload,
    }))
}

pub fn write_frame<W: Write + ?Sized>(w: &mut W, frame: &TranscriptFrame) -> Result<()> {
    w.write_all(&frame_encode(frame.party, frame.round, &frame.ciphertext))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io("writing frame", e))
}
