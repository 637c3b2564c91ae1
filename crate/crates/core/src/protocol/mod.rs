//! Seed establishment, hidden key exchange and hidden communication over
//! the mandated scheme.

mod engine;
mod sampler;
mod seed;
mod session;

pub use engine::{EngineConfig, Event, Mode, PartyEngine};
pub use sampler::{recombine, rejection_sample, sampler_pmf};
pub use seed::{compute_seed_bits, minentropy_seed, Seed};
pub use session::{
    default_scheme, drive_party, kex_group_for, party_keys, party_rng, run_local, run_party,
    FrameLink, PartyOutcome, RunOptions, RunReport, SessionPlan,
};
