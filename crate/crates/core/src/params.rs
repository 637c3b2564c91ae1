//! Concrete parameter profiles.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every length the protocol needs, pinned to concrete numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecurityParams {
    /// Hidden message bits per communication phase.
    pub kappa: usize,
    /// Mandated-scheme ciphertext length.
    pub n_ct: usize,
    /// Extractor output bits embedded per ciphertext.
    pub v: usize,
    /// Shared seed length, one greater-than bit per direction per round pair.
    pub d: usize,
    /// Key-exchange message length.
    pub ell_kex: usize,
    /// Secret-key ciphertext length (nonce plus body).
    pub xi_ske: usize,
    /// Rejection-sampling budget per ciphertext.
    pub max_attempts: u64,
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: String| Err(Error::InvalidParams(why));
        if self.v == 0 || self.v > 32 {
            return bad(format!("v={} outside 1..=32", self.v));
        }
        if self.d == 0 || self.d % 2 != 0 {
            return bad(format!("d={} must be a positive even number", self.d));
        }
        if self.ell_kex % self.v != 0 || self.xi_ske % self.v != 0 {
            return bad(format!(
                "ell_kex={} and xi_ske={} must be multiples of v={}",
                self.ell_kex, self.xi_ske, self.v
            ));
        }
        if self.xi_ske <= self.kappa {
            return bad("xi_ske must leave room for a nonce".into());
        }
        if self.max_attempts < 1u64 << self.v {
            return bad(format!(
                "max_attempts={} below 2^v={}",
                self.max_attempts,
                1u64 << self.v
            ));
        }
        Ok(())
    }

    /// Blocks per key-exchange message.
    pub fn kex_blocks(&self) -> usize {
        self.ell_kex / self.v
    }

    /// Blocks (exchange-rounds) per communication phase.
    pub fn comm_blocks(&self) -> usize {
        self.xi_ske / self.v
    }

    pub fn nonce_bits(&self) -> usize {
        self.xi_ske - self.kappa
    }

    /// Exchange-rounds spent in the setup phase.
    pub fn setup_rounds(&self) -> usize {
        self.d + self.kex_blocks()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileName {
    Desk,
    Tiny,
    Bench,
}

impl FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(ProfileName::Desk),
            "tiny" => Ok(ProfileName::Tiny),
            "bench" => Ok(ProfileName::Bench),
            _ => Err(Error::UnknownProfile(s.to_string())),
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProfileName::Desk => "desk",
            ProfileName::Tiny => "tiny",
            ProfileName::Bench => "bench",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamProfile {
    pub name: ProfileName,
    pub resolved: SecurityParams,
}

impl ParamProfile {
    pub fn get(name: ProfileName) -> Self {
        ParamProfile {
            name,
            resolved: resolve(name),
        }
    }
}

/// Default budget: per-block failure probability (1 - 2^-v)^(64 * 2^v) <= e^-64.
pub fn default_budget(v: usize) -> u64 {
    64 << v
}

fn resolve(name: ProfileName) -> SecurityParams {
    let desk = SecurityParams {
        kappa: 128,
        n_ct: 1024,
        v: 4,
        d: 128,
        ell_kex: 512,
        xi_ske: 256,
        max_attempts: default_budget(4),
    };
    match name {
        ProfileName::Desk => desk,
        ProfileName::Tiny => SecurityParams {
            kappa: 8,
            n_ct: 8,
            v: 2,
            d: 8,
            ell_kex: 16,
            xi_ske: 16,
            max_attempts: 64,
        },
        ProfileName::Bench => SecurityParams {
            v: 8,
            max_attempts: default_budget(8),
            ..desk
        },
    }
}

pub fn resolve_profile(name: &str) -> Result<SecurityParams> {
    Ok(resolve(name.parse()?))
}
