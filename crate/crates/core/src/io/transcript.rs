//! Transcript files: one header line, then one wire frame per line in hex.
//!
//! ```text
//! covertext-transcript profile=desk mode=subliminal rngseed=42
//! 5343010000000001000000800a1b...
//! ```
//!
//! `mode` and `rngseed` are optional. An eavesdropper that knows the seed
//! can rebuild both parties' keys from it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::wire::{frame_decode, frame_encode};
use crate::error::{Error, Result};
use crate::frame::TranscriptFrame;
use crate::params::{ParamProfile, ProfileName};
use crate::protocol::Mode;

const TAG: &str = "covertext-transcript";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranscriptHeader {
    pub profile: ProfileName,
    pub mode: Option<Mode>,
    pub rng_seed: Option<u64>,
}

impl TranscriptHeader {
    pub fn new(profile: ProfileName) -> Self {
        TranscriptHeader {
            profile,
            mode: None,
            rng_seed: None,
        }
    }

    fn render(&self) -> String {
        let mut s = format!("{TAG} profile={}", self.profile);
        if let Some(m) = self.mode {
            s += &format!(" mode={m}");
        }
        if let Some(seed) = self.rng_seed {
            s += &format!(" rngseed={seed}");
        }
        s
    }

    fn parse(line: &str) -> Result<Self> {
        let mut words = line.split_whitespace();
        if words.next() != Some(TAG) {
            return Err(Error::Parse(format!("not a transcript header: `{line}`")));
        }
        let mut profile = None;
        let mut header = TranscriptHeader::new(ProfileName::Desk);
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("header field `{w}` lacks `=`")))?;
            match k {
                "profile" => profile = Some(v.parse()?),
                "mode" => header.mode = Some(v.parse()?),
                "rngseed" => {
                    header.rng_seed = Some(
                        v.parse()
                            .map_err(|_| Error::Parse(format!("bad rngseed `{v}`")))?,
                    )
                }
                _ => return Err(Error::Parse(format!("unknown header field `{k}`"))),
            }
        }
        header.profile = profile.ok_or_else(|| Error::Parse("header lacks profile".into()))?;
        Ok(header)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub frames: Vec<TranscriptFrame>,
}

/// Appends frames to a transcript file as they arrive.
pub struct TranscriptWriter {
    out: BufWriter<Box<dyn Write + Send>>,
}

impl TranscriptWriter {
    pub fn create(path: &Path, header: &TranscriptHeader) -> Result<Self> {
        let file =
            File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        Self::new(Box::new(file), header)
    }

    pub fn new(sink: Box<dyn Write + Send>, header: &TranscriptHeader) -> Result<Self> {
        let mut out = BufWriter::new(sink);
        writeln!(out, "{}", header.render())
            .map_err(|e| Error::io("writing transcript header", e))?;
        Ok(TranscriptWriter { out })
    }

    pub fn append(&mut self, frame: &TranscriptFrame) -> Result<()> {
        let bytes = frame_encode(frame.party, frame.round, &frame.ciphertext);
        writeln!(self.out, "{}", hex::encode(bytes))
            .map_err(|e| Error::io("writing transcript frame", e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(|e| Error::io("flushing transcript", e))
    }
}

pub fn write_transcript(
    path: &Path,
    header: &TranscriptHeader,
    frames: &[TranscriptFrame],
) -> Result<()> {
    let mut w = TranscriptWriter::create(path, header)?;
    for f in frames {
        w.append(f)?;
    }
    w.flush()
}

/// Reads a transcript; ciphertext widths come from the header's profile.
/// Phase tags are not stored and read back as idle.
pub fn read_transcript(path: &Path) -> Result<Transcript> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{} is empty", path.display())))?
        .map_err(|e| Error::io("reading transcript", e))?;
    let header = TranscriptHeader::parse(&first)?;
    let n_ct = ParamProfile::get(header.profile).resolved.n_ct;
    let mut frames = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("reading transcript", e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bytes = hex::decode(line)
            .map_err(|e| Error::Parse(format!("{} line {}: {e}", path.display(), i + 2)))?;
        frames.push(frame_decode(&bytes)?.into_transcript(n_ct)?);
    }
    Ok(Transcript { header, frames })
}
