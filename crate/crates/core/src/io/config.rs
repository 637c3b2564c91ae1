//! Plain `key = value` configuration and key files.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines whose
//! first non-space character is `#` are ignored; whitespace around keys and
//! values is trimmed; a key may appear once. Recognized run keys:
//!
//! | key        | value                                         | default          |
//! |------------|-----------------------------------------------|------------------|
//! | profile    | desk, tiny, bench                             | desk             |
//! | scheme     | elg-512, tiny, lowent-1024-128-K              | by profile       |
//! | cover      | constant[:hex], flat:K, ngram[:path]          | ngram, or flat:2 on tiny |
//! | mode       | honest, subliminal, naive-stego               | subliminal       |
//! | rngseed    | unsigned integer                              | 0                |
//! | role       | p0, p1                                        | none             |
//! | peer       | local, or host:port                           | local            |
//! | msg        | comma-separated hex messages, one per session | none             |
//! | transcript | output path                                   | none             |
//! | keys       | output path for the observer key file         | none             |
//!
//! The `COVERTEXT_RNG_SEED` environment variable overrides `rngseed`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::bitstr::BitStr;
use crate::coverdist::CoverDist;
use crate::error::{Error, Result};
use crate::frame::Role;
use crate::params::{ParamProfile, ProfileName, SecurityParams};
use crate::pke::{lowent_scheme, tiny_scheme, ElGamal, KeyPair, PublicKey, Scheme, SecretKey};
use crate::protocol::{kex_group_for, Mode, RunOptions, SessionPlan};

pub const RNG_SEED_ENV: &str = "COVERTEXT_RNG_SEED";

/// Parses the `key = value` grammar, rejecting duplicate keys.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", i + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::Parse(format!("line {}: duplicate key `{k}`", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Peer {
    Local,
    Tcp(String),
}

pub fn parse_role(s: &str) -> Result<Role> {
    match s.to_ascii_lowercase().as_str() {
        "p0" | "0" => Ok(Role::P0),
        "p1" | "1" => Ok(Role::P1),
        _ => Err(Error::Parse(format!("unknown role `{s}`"))),
    }
}

/// Plain hex, whole bytes.
pub fn parse_message_hex(s: &str) -> Result<BitStr> {
    let bytes = hex::decode(s.trim()).map_err(|e| Error::Parse(format!("message `{s}`: {e}")))?;
    Ok(BitStr::from_byte_vec(bytes))
}

/// The mandated scheme named by `id`.
pub fn scheme_from_id(id: &str) -> Result<Arc<dyn Scheme>> {
    if id == "tiny" {
        return Ok(Arc::new(tiny_scheme()));
    }
    if id == "elg-512" {
        return Ok(Arc::new(ElGamal::desk()));
    }
    if let Some(k) = id.strip_prefix("lowent-1024-128-") {
        let k = k
            .parse()
            .map_err(|_| Error::Parse(format!("bad entropy in `{id}`")))?;
        return Ok(Arc::new(lowent_scheme(k)?));
    }
    Err(Error::Parse(format!("unknown scheme `{id}`")))
}

fn default_cover(profile: ProfileName) -> &'static str {
    match profile {
        ProfileName::Tiny => "flat:2",
        _ => "ngram",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub profile: ProfileName,
    pub scheme: Option<String>,
    pub cover: Option<String>,
    pub mode: Mode,
    pub rng_seed: u64,
    pub role: Option<Role>,
    pub peer: Peer,
    pub messages: Vec<BitStr>,
    pub transcript: Option<PathBuf>,
    pub keys: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: ProfileName::Desk,
            scheme: None,
            cover: None,
            mode: Mode::Subliminal,
            rng_seed: 0,
            role: None,
            peer: Peer::Local,
            messages: Vec::new(),
            transcript: None,
            keys: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (k, v) in parse_kv(text)? {
            match k.as_str() {
                "profile" => cfg.profile = v.parse()?,
                "scheme" => cfg.scheme = Some(v),
                "cover" => cfg.cover = Some(v),
                "mode" => cfg.mode = v.parse()?,
                "rngseed" => cfg.rng_seed = parse_seed(&v)?,
                "role" => cfg.role = Some(parse_role(&v)?),
                "peer" => {
                    cfg.peer = if v == "local" {
                        Peer::Local
                    } else {
                        Peer::Tcp(v)
                    };
                }
                "msg" => {
                    cfg.messages = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(parse_message_hex)
                        .collect::<Result<_>>()?
                }
                "transcript" => cfg.transcript = Some(PathBuf::from(v)),
                "keys" => cfg.keys = Some(PathBuf::from(v)),
                _ => return Err(Error::Parse(format!("unknown config key `{k}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }

    /// Applies the environment's seed override, if set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(RNG_SEED_ENV) {
            self.rng_seed = parse_seed(&v)?;
        }
        Ok(())
    }

    pub fn params(&self) -> SecurityParams {
        ParamProfile::get(self.profile).resolved
    }

    pub fn scheme(&self) -> Result<Arc<dyn Scheme>> {
        match &self.scheme {
            Some(id) => scheme_from_id(id),
            None => crate::protocol::default_scheme(&self.params()),
        }
    }

    pub fn dist(&self, msg_bits: usize) -> Result<CoverDist> {
        CoverDist::parse(
            self.cover.as_deref().unwrap_or(default_cover(self.profile)),
            msg_bits,
        )
    }

    /// Builds run options, checking that scheme, profile, cover and hidden
    /// messages agree on their widths.
    pub fn run_options(&self) -> Result<RunOptions> {
        let params = self.params();
        let scheme = self.scheme()?;
        if scheme.ct_bits() != params.n_ct {
            return Err(Error::InvalidParams(format!(
                "scheme {} has {}-bit ciphertexts, profile {} needs {}",
                scheme.id(),
                scheme.ct_bits(),
                self.profile,
                params.n_ct
            )));
        }
        let dist = self.dist(scheme.msg_bits())?;
        if let Some(m) = self.messages.iter().find(|m| m.len() != params.kappa) {
            return Err(Error::BadLength {
                expected: params.kappa,
                actual: m.len(),
            });
        }
        Ok(RunOptions {
            params,
            mode: self.mode,
            kex_group: kex_group_for(&params)?,
            plan: SessionPlan::alternating(self.messages.len()),
            scheme,
            dist,
            rng_seed: self.rng_seed,
            messages: self.messages.clone(),
        })
    }
}

fn parse_seed(v: &str) -> Result<u64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad rng seed `{v}`")))
}

/// A key file as written for an eavesdropper or a party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyFile {
    pub scheme: String,
    pub role: Option<Role>,
    pub pk: PublicKey,
    pub sk: Option<SecretKey>,
}

impl KeyFile {
    pub fn from_pair(scheme: &dyn Scheme, role: Option<Role>, keys: &KeyPair) -> Self {
        KeyFile {
            scheme: scheme.id(),
            role,
            pk: keys.pk.clone(),
            sk: Some(keys.sk.clone()),
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("scheme={}\n", self.scheme);
        if let Some(r) = self.role {
            s += &format!("role=p{}\n", r.index());
        }
        s += &format!("pk={}\n", self.pk.bits().to_hex());
        if let Some(sk) = &self.sk {
            s += &format!("sk={}\n", sk.bits().to_hex());
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut scheme, mut role, mut pk, mut sk) = (None, None, None, None);
        for (k, v) in parse_kv(text)? {
            match k.as_str() {
                "scheme" => scheme = Some(v),
                "role" => role = Some(parse_role(&v)?),
                "pk" => pk = Some(PublicKey::new(BitStr::parse_hex(&v)?)),
                "sk" => sk = Some(SecretKey::new(BitStr::parse_hex(&v)?)),
                _ => return Err(Error::Parse(format!("unknown key file field `{k}`"))),
            }
        }
        Ok(KeyFile {
            scheme: scheme.ok_or_else(|| Error::Parse("key file lacks scheme".into()))?,
            role,
            pk: pk.ok_or_else(|| Error::Parse("key file lacks pk".into()))?,
            sk,
        })
    }
}

pub fn write_key_files(path: &Path, files: &[KeyFile]) -> Result<()> {
    let text: Vec<String> = files.iter().map(KeyFile::render).collect();
    fs::write(path, text.join("\n"))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Reads one or more key blocks separated by blank lines.
pub fn read_key_files(path: &Path) -> Result<Vec<KeyFile>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    text.split("\n\n")
        .filter(|block| !block.trim().is_empty())
        .map(KeyFile::parse)
        .collect()
}
