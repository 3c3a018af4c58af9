//! Synchronous broadcast rounds with a rushing adversary.
//!
//! Within a round every honest message is committed before the adversary is
//! consulted, and faulty messages are committed after it has seen them.
//! Corruption happens only at round boundaries.

use crate::bits::BitString;
use crate::error::{invalid, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One committed broadcast.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub round: u32,
    pub sender: usize,
    pub msg: BitString,
    /// Position in the global commit order.
    pub order: u32,
    pub faulty: bool,
}

/// JSON-lines form of an [`Event`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub round: u32,
    pub sender: usize,
    pub width: u32,
    pub hex: String,
    pub order: u32,
    pub faulty: bool,
}

impl From<&Event> for EventRecord {
    fn from(e: &Event) -> Self {
        EventRecord { round: e.round, sender: e.sender, width: e.msg.width(), hex: e.msg.to_hex(), order: e.order, faulty: e.faulty }
    }
}

/// Everything public at the moment the adversary acts.
#[derive(Clone, Copy, Debug)]
pub struct PublicView<'a> {
    pub round: u32,
    /// Commits of earlier rounds, then this round's honest commits.
    pub transcript: &'a [Event],
    pub faulty: &'a [usize],
    pub players: usize,
    pub t: usize,
}

impl PublicView<'_> {
    /// This round's honest commits.
    pub fn honest_this_round(&self) -> impl Iterator<Item = &Event> {
        let r = self.round;
        self.transcript.iter().filter(move |e| e.round == r && !e.faulty)
    }
}

/// The classical side-information register `(E_1, …, E_t)`.
#[derive(Clone, Copy, Debug)]
pub struct SideInfo<'a> {
    pub values: &'a [u32],
    pub widths: &'a [u32],
}

/// A faulty slot the adversary must fill.
#[derive(Clone, Copy, Debug)]
pub struct RushRequest {
    pub sender: usize,
    pub width: u32,
    /// What the protocol would send for this player; faulty inputs are known
    /// to the adversary.
    pub honest_value: BitString,
}

/// Independent rushing: sees the public transcript and faulty players'
/// inputs, never the side-information register.
pub trait IrStrategy: Send {
    fn name(&self) -> String;

    /// Players to corrupt at the start of `view.round`.
    fn corrupt(&mut self, _view: &PublicView, _rng: &mut ChaCha8Rng) -> Vec<usize> {
        Vec::new()
    }

    fn rush(&mut self, view: &PublicView, req: &RushRequest, rng: &mut ChaCha8Rng) -> BitString;
}

/// Classical analog of quantum rushing: rushing may also read the register.
pub trait QrStrategy: Send {
    fn name(&self) -> String;

    fn corrupt(&mut self, _view: &PublicView, _rng: &mut ChaCha8Rng) -> Vec<usize> {
        Vec::new()
    }

    fn rush(&mut self, view: &PublicView, side: &SideInfo, req: &RushRequest, rng: &mut ChaCha8Rng) -> BitString;
}

pub enum Adversary {
    None,
    Ir(Box<dyn IrStrategy>),
    Qr(Box<dyn QrStrategy>),
}

impl Adversary {
    pub fn name(&self) -> String {
        match self {
            Adversary::None => "none".into(),
            Adversary::Ir(s) => format!("ir:{}", s.name()),
            Adversary::Qr(s) => format!("qr:{}", s.name()),
        }
    }
}

/// A completed execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolRun {
    pub seed: u64,
    pub events: Vec<Event>,
    /// Private outputs; `None` is ⊥.
    pub outputs: Vec<Option<BitString>>,
    /// In corruption order.
    pub faulty: Vec<usize>,
    /// `(round, player)` for each corruption.
    pub corruptions: Vec<(u32, usize)>,
    /// Interactive rounds.
    pub rounds: u32,
    /// Non-interactive output steps after the last round.
    pub local_steps: u32,
}

impl ProtocolRun {
    pub fn is_faulty(&self, i: usize) -> bool {
        self.faulty.contains(&i)
    }

    pub fn round_events(&self, round: u32) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.round == round)
    }

    pub fn records(&self) -> Vec<EventRecord> {
        self.events.iter().map(EventRecord::from).collect()
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in self.records() {
            out.push_str(&serde_json::to_string(&r).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

/// First `(round, faulty order, honest order)` where a faulty commit precedes
/// an honest commit of the same round.
pub fn rushing_violation(events: &[Event]) -> Option<(u32, u32, u32)> {
    let mut first_faulty: Vec<(u32, u32)> = Vec::new();
    for e in events {
        match first_faulty.iter().find(|(r, _)| *r == e.round) {
            Some(&(r, f)) if !e.faulty => return Some((r, f, e.order)),
            None if e.faulty => first_faulty.push((e.round, e.order)),
            _ => {}
        }
    }
    None
}

/// Drives rounds for one run. The adversary's randomness is stream 1 of the
/// run seed.
pub struct Scheduler<'a> {
    players: usize,
    t: usize,
    adversary: &'a mut Adversary,
    side: SideInfo<'a>,
    rng: ChaCha8Rng,
    events: Vec<Event>,
    faulty: Vec<usize>,
    corruptions: Vec<(u32, usize)>,
    round: u32,
}

impl<'a> Scheduler<'a> {
    pub fn new(players: usize, t: usize, adversary: &'a mut Adversary, side: SideInfo<'a>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Scheduler { players, t, adversary, side, rng, events: Vec::new(), faulty: Vec::new(), corruptions: Vec::new(), round: 0 }
    }

    pub fn faulty(&self) -> &[usize] {
        &self.faulty
    }

    pub fn is_faulty(&self, i: usize) -> bool {
        self.faulty.contains(&i)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn corrupt_at_boundary(&mut self) -> Result<()> {
        let view = PublicView { round: self.round, transcript: &self.events, faulty: &self.faulty, players: self.players, t: self.t };
        let wanted = match self.adversary {
            Adversary::None => return Ok(()),
            Adversary::Ir(s) => s.corrupt(&view, &mut self.rng),
            Adversary::Qr(s) => s.corrupt(&view, &mut self.rng),
        };
        for p in wanted {
            if p >= self.players {
                return invalid(format!("adversary corrupted player {p} of {}", self.players));
            }
            if self.faulty.len() == self.t {
                break;
            }
            if !self.faulty.contains(&p) {
                self.faulty.push(p);
                self.corruptions.push((self.round, p));
            }
        }
        Ok(())
    }

    /// Runs one round. `message(i)` is what player `i` sends if honest.
    /// Returns the committed messages in `senders` order.
    pub fn round(&mut self, senders: &[usize], mut message: impl FnMut(usize, &[Event]) -> Result<BitString>) -> Result<Vec<BitString>> {
        self.round += 1;
        self.corrupt_at_boundary()?;
        let mut intended = Vec::with_capacity(senders.len());
        for &s in senders {
            intended.push(message(s, &self.events)?);
        }
        let mut out = vec![None; senders.len()];
        for (slot, (&s, &m)) in senders.iter().zip(&intended).enumerate() {
            if !self.is_faulty(s) {
                self.commit(s, m, false);
                out[slot] = Some(m);
            }
        }
        for (slot, (&s, &m)) in senders.iter().zip(&intended).enumerate() {
            if !self.is_faulty(s) {
                continue;
            }
            let req = RushRequest { sender: s, width: m.width(), honest_value: m };
            let view = PublicView { round: self.round, transcript: &self.events, faulty: &self.faulty, players: self.players, t: self.t };
            let sent = match &mut *self.adversary {
                Adversary::None => m,
                Adversary::Ir(st) => st.rush(&view, &req, &mut self.rng),
                Adversary::Qr(st) => st.rush(&view, &self.side, &req, &mut self.rng),
            };
            if sent.width() != m.width() {
                return invalid(format!("rushed message for player {s} has width {} instead of {}", sent.width(), m.width()));
            }
            self.commit(s, sent, true);
            out[slot] = Some(sent);
        }
        if let Some((r, f, h)) = rushing_violation(&self.events) {
            return Err(Error::Format(format!("rushing order violated in round {r}: faulty commit {f} precedes honest commit {h}")));
        }
        Ok(out.into_iter().map(|m| m.expect("every slot committed")).collect())
    }

    fn commit(&mut self, sender: usize, msg: BitString, faulty: bool) {
        let order = self.events.len() as u32;
        self.events.push(Event { round: self.round, sender, msg, order, faulty });
    }

    pub fn finish(self, seed: u64, outputs: Vec<Option<BitString>>) -> ProtocolRun {
        ProtocolRun { seed, events: self.events, outputs, faulty: self.faulty, corruptions: self.corruptions, rounds: self.round, local_steps: 0 }
    }
}
