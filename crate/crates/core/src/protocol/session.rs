//! Running two engines against each other, in-process or over a link.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::engine::{EngineConfig, Event, Mode, PartyEngine};
use super::seed::Seed;
use crate::bitstr::BitStr;
use crate::coverdist::CoverDist;
use crate::error::{Error, Result};
use crate::frame::{Phase, Role, TranscriptFrame};
use crate::params::SecurityParams;
use crate::pke::group::GroupParams;
use crate::pke::{tiny_scheme, ElGamal, KeyPair, Scheme, SecretKey};

/// The mandated scheme matching a profile's ciphertext length.
pub fn default_scheme(params: &SecurityParams) -> Result<Arc<dyn Scheme>> {
    match params.n_ct {
        8 => Ok(Arc::new(tiny_scheme())),
        1024 => Ok(Arc::new(ElGamal::desk())),
        n => Err(Error::InvalidParams(format!(
            "no built-in scheme with {n}-bit ciphertexts"
        ))),
    }
}

/// The key-exchange group matching a profile's message length.
pub fn kex_group_for(params: &SecurityParams) -> Result<GroupParams> {
    match params.ell_kex {
        16 => Ok(GroupParams::tiny16()),
        512 => Ok(GroupParams::desk()),
        n => Err(Error::InvalidParams(format!(
            "no built-in {n}-bit key-exchange group"
        ))),
    }
}

/// Per-party protocol randomness.
pub fn party_rng(seed: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1 + role.index() as u64);
    rng
}

/// Key pair of `role` for a run seeded with `seed`. Both ends of a network
/// run derive the same pairs, which is how each learns the other's key.
pub fn party_keys(scheme: &dyn Scheme, seed: u64, role: Role) -> KeyPair {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(16 + role.index() as u64);
    scheme.gen(&mut rng)
}

/// Which party starts each communication session. Sessions run back to back
/// right after setup, each lasting `xi_ske / v` exchange-rounds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SessionPlan {
    pub initiators: Vec<Role>,
}

impl SessionPlan {
    /// `n` sessions alternating P0, P1, P0, ...
    pub fn alternating(n: usize) -> Self {
        SessionPlan {
            initiators: (0..n)
                .map(|i| if i % 2 == 0 { Role::P0 } else { Role::P1 })
                .collect(),
        }
    }

    pub fn total_rounds(&self, params: &SecurityParams) -> u32 {
        (params.setup_rounds() + self.initiators.len() * params.comm_blocks()) as u32
    }

    /// Index of the session whose first round is `round`, if any.
    pub fn session_starting(&self, params: &SecurityParams, round: u32) -> Option<usize> {
        let setup = params.setup_rounds() as u32;
        let len = params.comm_blocks() as u32;
        if round <= setup || (round - setup - 1) % len != 0 {
            return None;
        }
        let k = ((round - setup - 1) / len) as usize;
        (k < self.initiators.len()).then_some(k)
    }

    /// The local phase annotation of `party`'s frame in `round`. Used to
    /// restore tags on frames that crossed the wire without them.
    pub fn phase_of(&self, params: &SecurityParams, mode: Mode, party: Role, round: u32) -> Phase {
        let d = params.d as u32;
        let setup = params.setup_rounds() as u32;
        if round <= d {
            return Phase::SeedPhase;
        }
        match mode {
            Mode::NaiveStego => Phase::CommPhase,
            _ if round <= setup => Phase::KexPhase,
            Mode::Honest => Phase::Idle,
            Mode::Subliminal => {
                let k = ((round - setup - 1) / params.comm_blocks() as u32) as usize;
                match self.initiators.get(k) {
                    Some(&who) if who == party => Phase::CommPhase,
                    _ => Phase::Idle,
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub params: SecurityParams,
    pub mode: Mode,
    pub scheme: Arc<dyn Scheme>,
    pub dist: CoverDist,
    pub kex_group: GroupParams,
    pub rng_seed: u64,
    pub plan: SessionPlan,
    /// One hidden message per session, in session order.
    pub messages: Vec<BitStr>,
}

impl RunOptions {
    /// Built-in scheme and group for the profile, with the given cover
    /// distribution and hidden messages sent by alternating parties.
    pub fn new(
        params: SecurityParams,
        mode: Mode,
        dist: CoverDist,
        rng_seed: u64,
        messages: Vec<BitStr>,
    ) -> Result<Self> {
        Ok(RunOptions {
            scheme: default_scheme(&params)?,
            kex_group: kex_group_for(&params)?,
            plan: SessionPlan::alternating(messages.len()),
            params,
            mode,
            dist,
            rng_seed,
            messages,
        })
    }

    pub fn engine_config(&self, role: Role) -> EngineConfig {
        EngineConfig {
            role,
            mode: self.mode,
            params: self.params,
            scheme: Arc::clone(&self.scheme),
            my_keys: party_keys(self.scheme.as_ref(), self.rng_seed, role),
            peer_pk: party_keys(self.scheme.as_ref(), self.rng_seed, role.peer()).pk,
            dist: self.dist.clone(),
            kex_group: self.kex_group.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    /// Hidden messages in the order they were received.
    pub recovered: Vec<BitStr>,
    pub frames: Vec<TranscriptFrame>,
    /// Encryptions spent on each rejection-sampled frame, in transcript order.
    pub attempts_histogram: Vec<u64>,
    pub seed: Option<Seed>,
    pub diagnostics: Vec<String>,
    /// Secret keys of P0 and P1, as an eavesdropper holding both would see.
    pub observer_keys: [SecretKey; 2],
}

impl RunReport {
    pub fn recovered_msg(&self) -> Option<&BitStr> {
        self.recovered.last()
    }

    pub fn mean_attempts(&self) -> Option<f64> {
        if self.attempts_histogram.is_empty() {
            return None;
        }
        Some(
            self.attempts_histogram.iter().sum::<u64>() as f64
                / self.attempts_histogram.len() as f64,
        )
    }
}

fn absorb(
    events: Vec<Event>,
    role: Role,
    recovered: &mut Vec<BitStr>,
    diagnostics: &mut Vec<String>,
) {
    for e in events {
        match e {
            Event::MessageReceived(m) => recovered.push(m),
            Event::Diagnostic(d) => diagnostics.push(format!("{role:?}: {d}")),
            _ => {}
        }
    }
}

fn check_messages(opts: &RunOptions) -> Result<()> {
    if opts.plan.initiators.len() != opts.messages.len() {
        return Err(Error::InvalidParams(format!(
            "{} sessions planned for {} messages",
            opts.plan.initiators.len(),
            opts.messages.len()
        )));
    }
    if let Some(m) = opts.messages.iter().find(|m| m.len() != opts.params.kappa) {
        return Err(Error::BadLength {
            expected: opts.params.kappa,
            actual: m.len(),
        });
    }
    Ok(())
}

/// Runs both parties in-process.
pub fn run_local(opts: &RunOptions) -> Result<RunReport> {
    check_messages(opts)?;
    let mut engines = [
        PartyEngine::new(opts.engine_config(Role::P0))?,
        PartyEngine::new(opts.engine_config(Role::P1))?,
    ];
    let mut rngs = [
        party_rng(opts.rng_seed, Role::P0),
        party_rng(opts.rng_seed, Role::P1),
    ];
    let mut frames = Vec::new();
    let mut recovered = Vec::new();
    let mut diagnostics = Vec::new();
    for round in 1..=opts.plan.total_rounds(&opts.params) {
        for role in [Role::P0, Role::P1] {
            let (me, peer) = (role.index(), role.peer().index());
            if opts.mode == Mode::Subliminal {
                if let Some(k) = opts.plan.session_starting(&opts.params, round) {
                    if opts.plan.initiators[k] == role {
                        engines[me].embed(&opts.messages[k], &mut rngs[me])?;
                    }
                }
            }
            let (frame, events) = engines[me].emit(&mut rngs[me])?;
            absorb(events, role, &mut recovered, &mut diagnostics);
            let events = engines[peer].receive(&frame)?;
            absorb(events, role.peer(), &mut recovered, &mut diagnostics);
            frames.push(frame);
        }
    }
    let mut attempts: Vec<(u32, usize, u64)> = engines
        .iter()
        .flat_map(|e| {
            e.attempts()
                .iter()
                .map(move |&(r, n)| (r, e.role().index(), n))
        })
        .collect();
    attempts.sort();
    Ok(RunReport {
        recovered,
        frames,
        attempts_histogram: attempts.into_iter().map(|(_, _, n)| n).collect(),
        seed: engines[0].seed().cloned(),
        diagnostics,
        observer_keys: [
            party_keys(opts.scheme.as_ref(), opts.rng_seed, Role::P0).sk,
            party_keys(opts.scheme.as_ref(), opts.rng_seed, Role::P1).sk,
        ],
    })
}

/// A bidirectional frame transport for one party.
pub trait FrameLink {
    fn send_frame(&mut self, frame: &TranscriptFrame) -> Result<()>;
    /// The next frame from the peer; its phase tag is not meaningful.
    fn recv_frame(&mut self) -> Result<TranscriptFrame>;
}

#[derive(Debug, Clone, Default)]
pub struct PartyOutcome {
    pub recovered: Vec<BitStr>,
    pub diagnostics: Vec<String>,
    pub frames: Vec<TranscriptFrame>,
}

/// Runs one party over `link` following `plan`. `messages[k]` is used when
/// this party initiates session `k`.
pub fn drive_party(
    engine: &mut PartyEngine,
    link: &mut dyn FrameLink,
    plan: &SessionPlan,
    messages: &[Option<BitStr>],
    rng: &mut ChaCha20Rng,
) -> Result<PartyOutcome> {
    let params = *engine.params();
    let role = engine.role();
    let mut out = PartyOutcome::default();
    let recv = |engine: &mut PartyEngine,
                link: &mut dyn FrameLink,
                out: &mut PartyOutcome|
     -> Result<()> {
        let mut f = link.recv_frame()?;
        f.phase = plan.phase_of(&params, engine.mode(), role.peer(), f.round);
        let events = engine.receive(&f)?;
        absorb(events, role, &mut out.recovered, &mut out.diagnostics);
        out.frames.push(f);
        Ok(())
    };
    let total = plan.total_rounds(&params);
    for round in 1..=total {
        if role == Role::P1 {
            recv(engine, link, &mut out)?;
        }
        if engine.mode() == Mode::Subliminal {
            if let Some(k) = plan.session_starting(&params, round) {
                if plan.initiators[k] == role {
                    let msg = messages.get(k).and_then(|m| m.as_ref()).ok_or_else(|| {
                        Error::InvalidParams(format!("no message for session {k}"))
                    })?;
                    engine.embed(msg, rng)?;
                }
            }
        }
        let (frame, events) = engine.emit(rng)?;
        absorb(events, role, &mut out.recovered, &mut out.diagnostics);
        // The frame goes out before anything else can fail locally.
        let sent = link.send_frame(&frame);
        out.frames.push(frame);
        sent?;
        if role == Role::P0 {
            recv(engine, link, &mut out)?;
        }
    }
    Ok(out)
}

/// Builds `role`'s engine from `opts` and runs it over `link`.
pub fn run_party(opts: &RunOptions, role: Role, link: &mut dyn FrameLink) -> Result<PartyOutcome> {
    check_messages(opts)?;
    let mut engine = PartyEngine::new(opts.engine_config(role))?;
    let messages: Vec<Option<BitStr>> = opts
        .plan
        .initiators
        .iter()
        .zip(&opts.messages)
        .map(|(&who, m)| (who == role).then(|| m.clone()))
        .collect();
    let mut rng = party_rng(opts.rng_seed, role);
    drive_party(&mut engine, link, &opts.plan, &messages, &mut rng)
}
