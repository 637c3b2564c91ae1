//! One party's side of the protocol as a round-by-round state machine.
//!
//! Exchange-round `i` consists of P0's `i`-th frame followed by P1's. The
//! first `d` rounds establish the seed, the next `ell_kex / v` carry the
//! key exchange, and afterwards either party may start a communication
//! session of `xi_ske / v` rounds.

use std::sync::Arc;

use rand::RngCore;

use super::sampler::rejection_sample;
use super::seed::Seed;
use crate::bitstr::BitStr;
use crate::coverdist::{CoverDist, CoverKind};
use crate::error::{Error, Result};
use crate::extractors::ext_seeded;
use crate::frame::{Phase, Role, TranscriptFrame};
use crate::params::SecurityParams;
use crate::peer_crypto::{
    kex_finish, kex_round1, ske_dec, ske_enc, ske_gen, KexState, SkeCiphertext, SkeKey,
};
use crate::pke::group::GroupParams;
use crate::pke::{KeyPair, PublicKey, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Plain encryptions of cover messages, nothing hidden.
    Honest,
    Subliminal,
    /// Re-encrypts after the seed phase until the extractor output is all
    /// ones. Detectable; exists to show the battery has power.
    NaiveStego,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "honest" => Ok(Mode::Honest),
            "subliminal" => Ok(Mode::Subliminal),
            "naive" | "naive-stego" => Ok(Mode::NaiveStego),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Honest => "honest",
            Mode::Subliminal => "subliminal",
            Mode::NaiveStego => "naive-stego",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    SeedEstablished,
    KeyEstablished,
    MessageSent,
    MessageReceived(BitStr),
    Diagnostic(String),
}

#[derive(Debug)]
enum State {
    Setup,
    Idle,
    CommSend { blocks: Vec<BitStr>, next: usize },
    CommRecv { collected: BitStr, count: usize },
}

/// Everything a party needs besides its randomness.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub role: Role,
    pub mode: Mode,
    pub params: SecurityParams,
    pub scheme: Arc<dyn Scheme>,
    pub my_keys: KeyPair,
    pub peer_pk: PublicKey,
    pub dist: CoverDist,
    pub kex_group: GroupParams,
}

#[derive(Debug)]
pub struct PartyEngine {
    cfg: EngineConfig,
    state: State,
    sent: Vec<TranscriptFrame>,
    received: Vec<TranscriptFrame>,
    plaintexts: Vec<BitStr>,
    seed: Option<Seed>,
    kex: Option<KexState>,
    kex_blocks: Vec<BitStr>,
    peer_kex: BitStr,
    sk_star: Option<SkeKey>,
    pending: Option<Vec<BitStr>>,
    attempts: Vec<(u32, u64)>,
}

impl PartyEngine {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.params.validate()?;
        if cfg.scheme.ct_bits() != cfg.params.n_ct {
            return Err(Error::InvalidParams(format!(
                "scheme {} has {}-bit ciphertexts, profile expects {}",
                cfg.scheme.id(),
                cfg.scheme.ct_bits(),
                cfg.params.n_ct
            )));
        }
        if cfg.dist.msg_bits() != cfg.scheme.msg_bits() {
            return Err(Error::InvalidParams(format!(
                "cover messages are {} bits, scheme takes {}",
                cfg.dist.msg_bits(),
                cfg.scheme.msg_bits()
            )));
        }
        if cfg.mode == Mode::Subliminal && cfg.kex_group.ell() != cfg.params.ell_kex {
            return Err(Error::InvalidParams(format!(
                "key-exchange group has {} bits, profile expects {}",
                cfg.kex_group.ell(),
                cfg.params.ell_kex
            )));
        }
        Ok(PartyEngine {
            cfg,
            state: State::Setup,
            sent: Vec::new(),
            received: Vec::new(),
            plaintexts: Vec::new(),
            seed: None,
            kex: None,
            kex_blocks: Vec::new(),
            peer_kex: BitStr::empty(),
            sk_star: None,
            pending: None,
            attempts: Vec::new(),
        })
    }

    pub fn role(&self) -> Role {
        self.cfg.role
    }

    pub fn mode(&self) -> Mode {
        self.cfg.mode
    }

    pub fn params(&self) -> &SecurityParams {
        &self.cfg.params
    }

    pub fn seed(&self) -> Option<&Seed> {
        self.seed.as_ref()
    }

    pub fn has_key(&self) -> bool {
        self.sk_star.is_some()
    }

    pub fn is_idle(&self) -> bool {
        matches!(self.state, State::Idle)
    }

    /// `(round, attempts)` for every rejection-sampled frame this party sent.
    pub fn attempts(&self) -> &[(u32, u64)] {
        &self.attempts
    }

    pub fn sent_frames(&self) -> &[TranscriptFrame] {
        &self.sent
    }

    pub fn next_round(&self) -> u32 {
        self.sent.len() as u32 + 1
    }

    pub fn my_turn(&self) -> bool {
        match self.cfg.role {
            Role::P0 => self.sent.len() == self.received.len(),
            Role::P1 => self.sent.len() < self.received.len(),
        }
    }

    fn d(&self) -> u32 {
        self.cfg.params.d as u32
    }

    fn setup_rounds(&self) -> u32 {
        self.cfg.params.setup_rounds() as u32
    }

    fn needs_history(&self) -> bool {
        matches!(self.cfg.dist.kind(), CoverKind::NgramText(_))
    }

    /// Queues `msg` (kappa bits) for hidden transmission starting with this
    /// party's next frame.
    pub fn embed(&mut self, msg: &BitStr, rng: &mut dyn RngCore) -> Result<()> {
        let Some(key) = &self.sk_star else {
            return Err(Error::NotReady("no shared key yet"));
        };
        if !matches!(self.state, State::Idle) {
            return Err(Error::NotReady("a session is already in progress"));
        }
        let p = &self.cfg.params;
        let c = ske_enc(p, key, msg, rng)?;
        let blocks = c.to_bits().blocks(p.v)?;
        self.state = State::CommSend { blocks, next: 0 };
        Ok(())
    }

    fn establish_seed(&mut self, events: &mut Vec<Event>) -> Result<()> {
        if self.seed.is_some()
            || self.sent.len() < self.d() as usize
            || self.received.len() < self.d() as usize
        {
            return Ok(());
        }
        let frames: Vec<TranscriptFrame> =
            self.sent.iter().chain(&self.received).cloned().collect();
        self.seed = Some(Seed::from_frames(&frames, self.cfg.params.d)?);
        events.push(Event::SeedEstablished);
        Ok(())
    }

    fn try_finish_kex(&mut self, events: &mut Vec<Event>) -> Result<()> {
        let p = &self.cfg.params;
        let done_sending = self.sent.len() >= self.setup_rounds() as usize;
        if self.sk_star.is_some() || !done_sending || self.peer_kex.len() < p.ell_kex {
            return Ok(());
        }
        let state = self
            .kex
            .take()
            .ok_or(Error::ProtocolDesync("key exchange never started".into()))?;
        let shared = match kex_finish(state, &self.peer_kex) {
            Ok(k) => k,
            Err(Error::BadElement) => {
                return Err(Error::ProtocolDesync(
                    "peer key-exchange message is not a group element".into(),
                ))
            }
            Err(e) => return Err(e),
        };
        if shared.is_degenerate() {
            events.push(Event::Diagnostic(
                "key exchange produced the identity element".into(),
            ));
        }
        self.sk_star = Some(ske_gen(&shared));
        self.state = State::Idle;
        events.push(Event::KeyEstablished);
        Ok(())
    }

    fn embed_block(
        &mut self,
        m: &BitStr,
        target: &BitStr,
        round: u32,
        rng: &mut dyn RngCore,
    ) -> Result<BitStr> {
        let hash = self
            .seed
            .as_ref()
            .ok_or(Error::NotReady("seed not established"))?
            .hash;
        match rejection_sample(
            self.cfg.scheme.as_ref(),
            &self.cfg.peer_pk,
            m,
            &hash,
            target,
            self.cfg.params.max_attempts,
            rng,
        ) {
            Ok((c, n)) => {
                self.attempts.push((round, n));
                Ok(c)
            }
            Err(Error::BudgetExhausted { attempts }) => Err(Error::BudgetExhaustedAt {
                role: self.cfg.role,
                round,
                attempts,
            }),
            Err(e) => Err(e),
        }
    }

    /// Produces this party's next frame.
    pub fn emit(&mut self, rng: &mut dyn RngCore) -> Result<(TranscriptFrame, Vec<Event>)> {
        if !self.my_turn() {
            return Err(Error::ProtocolDesync(format!(
                "{:?} asked to send out of turn",
                self.cfg.role
            )));
        }
        let mut events = Vec::new();
        let round = self.next_round();
        let m = self.cfg.dist.next_message(&self.plaintexts, rng);
        let scheme = Arc::clone(&self.cfg.scheme);
        let plain = |rng: &mut dyn RngCore, pk: &PublicKey| scheme.enc(pk, &m, rng);
        let v = self.cfg.params.v;

        let (phase, c) = if round <= self.d() {
            (Phase::SeedPhase, plain(rng, &self.cfg.peer_pk)?)
        } else {
            self.establish_seed(&mut events)?;
            match self.cfg.mode {
                Mode::Honest => {
                    let phase = if round <= self.setup_rounds() {
                        Phase::KexPhase
                    } else {
                        Phase::Idle
                    };
                    (phase, plain(rng, &self.cfg.peer_pk)?)
                }
                Mode::NaiveStego => {
                    let ones = BitStr::from_bits(std::iter::repeat(true).take(v));
                    (Phase::CommPhase, self.embed_block(&m, &ones, round, rng)?)
                }
                Mode::Subliminal if round <= self.setup_rounds() => {
                    if self.kex.is_none() && self.kex_blocks.is_empty() {
                        let (state, msg) = kex_round1(&self.cfg.params, &self.cfg.kex_group, rng)?;
                        self.kex = Some(state);
                        self.kex_blocks = msg.blocks(v)?;
                    }
                    let target = self.kex_blocks[(round - self.d() - 1) as usize].clone();
                    (Phase::KexPhase, self.embed_block(&m, &target, round, rng)?)
                }
                Mode::Subliminal => match &self.state {
                    State::CommSend { blocks, next } => {
                        let target = blocks[*next].clone();
                        let c = self.embed_block(&m, &target, round, rng)?;
                        if let State::CommSend { blocks, next } = &mut self.state {
                            *next += 1;
                            if *next == blocks.len() {
                                self.state = State::Idle;
                                events.push(Event::MessageSent);
                            }
                        }
                        (Phase::CommPhase, c)
                    }
                    _ => (Phase::Idle, plain(rng, &self.cfg.peer_pk)?),
                },
            }
        };

        let frame = TranscriptFrame::new(self.cfg.role, round, phase, c);
        self.sent.push(frame.clone());
        if self.needs_history() {
            self.plaintexts.push(m);
        }
        self.establish_seed(&mut events)?;
        if self.cfg.mode == Mode::Subliminal {
            self.try_finish_kex(&mut events)?;
        }
        Ok((frame, events))
    }

    /// Consumes the peer's next frame.
    pub fn receive(&mut self, frame: &TranscriptFrame) -> Result<Vec<Event>> {
        let expected_round = self.received.len() as u32 + 1;
        if frame.party != self.cfg.role.peer() || frame.round != expected_round || self.my_turn() {
            return Err(Error::ProtocolDesync(format!(
                "{:?} got {:?} round {} while expecting {:?} round {}",
                self.cfg.role,
                frame.party,
                frame.round,
                self.cfg.role.peer(),
                expected_round
            )));
        }
        if frame.ciphertext.len() != self.cfg.params.n_ct {
            return Err(Error::BadLength {
                expected: self.cfg.params.n_ct,
                actual: frame.ciphertext.len(),
            });
        }
        let mut events = Vec::new();
        self.received.push(frame.clone());
        if self.needs_history() {
            match self.cfg.scheme.dec(&self.cfg.my_keys.sk, &frame.ciphertext) {
                Ok(m) => self.plaintexts.push(m),
                Err(e) => events.push(Event::Diagnostic(format!(
                    "round {} does not decrypt: {e}",
                    frame.round
                ))),
            }
        }
        self.establish_seed(&mut events)?;
        if self.cfg.mode != Mode::Subliminal || frame.round <= self.d() {
            return Ok(events);
        }

        let v = self.cfg.params.v;
        let hash = self
            .seed
            .as_ref()
            .ok_or(Error::NotReady("seed not established"))?
            .hash;
        let block = || ext_seeded(&hash, &frame.ciphertext, v);
        if frame.round <= self.setup_rounds() {
            self.peer_kex.extend(&block()?);
            self.try_finish_kex(&mut events)?;
            return Ok(events);
        }

        let starts_session = frame.phase == Phase::CommPhase;
        match &mut self.state {
            State::CommRecv { collected, count } => {
                collected.extend(&block()?);
                *count += 1;
            }
            State::CommSend { blocks, next: 0 } if starts_session => {
                // The peer started first; ours waits until theirs is done.
                self.pending = Some(std::mem::take(blocks));
                self.state = State::CommRecv {
                    collected: block()?,
                    count: 1,
                };
            }
            State::Idle if starts_session => {
                self.state = State::CommRecv {
                    collected: block()?,
                    count: 1,
                };
            }
            _ => {}
        }

        let p = self.cfg.params;
        if let State::CommRecv { collected, count } = &self.state {
            if *count == p.comm_blocks() {
                let c = SkeCiphertext::from_bits(&p, collected)?;
                let key = self
                    .sk_star
                    .as_ref()
                    .ok_or(Error::NotReady("no shared key"))?;
                events.push(Event::MessageReceived(ske_dec(&p, key, &c)?));
                self.state = match self.pending.take() {
                    Some(blocks) => State::CommSend { blocks, next: 0 },
                    None => State::Idle,
                };
            }
        }
        Ok(events)
    }

    /// Receives `incoming` if given, then sends if it is this party's turn.
    pub fn step(
        &mut self,
        incoming: Option<&TranscriptFrame>,
        rng: &mut dyn RngCore,
    ) -> Result<(Option<TranscriptFrame>, Vec<Event>)> {
        let mut events = match incoming {
            Some(f) => self.receive(f)?,
            None => Vec::new(),
        };
        if !self.my_turn() {
            return Ok((None, events));
        }
        let (frame, more) = self.emit(rng)?;
        events.extend(more);
        Ok((Some(frame), events))
    }
}
