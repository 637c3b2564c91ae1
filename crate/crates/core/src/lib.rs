//! Subliminal communication over a mandated public-key encryption scheme.
//!
//! Two parties who only ever exchange ciphertexts of an adversary-chosen
//! scheme, with no prior shared secret, first agree on an extractor seed,
//! then run a key exchange and secret-key encryption hidden inside the
//! extractor outputs of their ciphertexts. The transcript stays distributed
//! like an honest one.

pub mod bitstr;
pub mod coverdist;
pub mod error;
pub mod extractors;
pub mod frame;
pub mod io;
pub mod params;
pub mod peer_crypto;
pub mod pke;
pub mod protocol;
pub mod stats;

pub use bitstr::{bitstr_cmp, BitStr};
pub use error::{Error, Result};
pub use frame::{Phase, Role, TranscriptFrame};
pub use params::{resolve_profile, ParamProfile, ProfileName, SecurityParams};
