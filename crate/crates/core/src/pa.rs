//! Privacy amplification between Alice and Bob over an authenticated public
//! channel watched by a passive eavesdropper.
//!
//! Protocol 1 amplifies a shared weak secret `X` with a weak seed `Y` that
//! Alice sends in the clear; the key is a weak-seed extractor `h(X, Y)`.
//! Protocol 2 has each party publish one short seed and keys on the
//! three-source extractor `h(Y₁, Y₂, X)`. No key confirmation is run; key
//! equality is checked only by the harness.

use crate::bits::BitString;
use crate::combinators::{three_source_handle, weak_seed_transform, BextSlots, Composite, CompositionConfig, Condenser};
use crate::error::{invalid, Result};
use crate::extractors::certify::{certify_random_table, CertifyRequest};
use crate::extractors::{Arity, ExtractorHandle};
use crate::leakage::LeakageScenario;
use crate::netsim::{evaluate_security, DistanceReport, Draw, EvalMode, Observation, SourceModel};
use crate::oracle::{worst_case_error, LeakFamily, OracleInput, OracleMode, OracleQuery, OracleReport};
use crate::source::FlatSource;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaProtocol {
    /// Transcript `[Y]`, key `h(X, Y)`.
    OneSource,
    /// Transcript `[Y₁, Y₂]`, key `h(Y₁, Y₂, X)`.
    TwoSources,
}

impl PaProtocol {
    /// Inputs of `h` Eve sees in the transcript.
    pub fn strong_indices(self) -> Vec<usize> {
        match self {
            PaProtocol::OneSource => vec![1],
            PaProtocol::TwoSources => vec![0, 1],
        }
    }

    /// Position of `X` among the inputs of `h`.
    pub fn secret_index(self) -> usize {
        match self {
            PaProtocol::OneSource => 0,
            PaProtocol::TwoSources => 2,
        }
    }

    pub fn local_sources(self) -> usize {
        match self {
            PaProtocol::OneSource => 1,
            PaProtocol::TwoSources => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Message {
    pub from: Party,
    pub payload: BitString,
}

/// One completed session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaSession {
    pub protocol: PaProtocol,
    pub handle: String,
    /// The shared secret as Alice holds it.
    pub x: BitString,
    /// `Y` (protocol 1) or `(Y₁, Y₂)`; `Y₂` is Bob's.
    pub locals: Vec<BitString>,
    /// Side-information register, one entry per non-trivial leak map.
    pub register: Vec<u32>,
    pub transcript: Vec<Message>,
    pub alice_key: BitString,
    pub bob_key: BitString,
}

#[derive(Serialize)]
struct MessageRecord {
    from: Party,
    width: u32,
    hex: String,
}

#[derive(Serialize)]
struct SessionLog<'a> {
    protocol: PaProtocol,
    handle: &'a str,
    transcript: Vec<MessageRecord>,
    key_width: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    alice_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bob_key: Option<String>,
}

impl PaSession {
    pub fn keys_agree(&self) -> bool {
        self.alice_key == self.bob_key
    }

    /// First transcript payload sent by `party`.
    pub fn sent_by(&self, party: Party) -> Option<BitString> {
        self.transcript.iter().find(|m| m.from == party).map(|m| m.payload)
    }

    /// JSON log of the transcript; keys appear only with `reveal`.
    pub fn to_json(&self, reveal: bool) -> String {
        let log = SessionLog {
            protocol: self.protocol,
            handle: &self.handle,
            transcript: self.transcript.iter().map(|m| MessageRecord { from: m.from, width: m.payload.width(), hex: m.payload.to_hex() }).collect(),
            key_width: self.alice_key.width(),
            alice_key: reveal.then(|| self.alice_key.to_hex()),
            bob_key: reveal.then(|| self.bob_key.to_hex()),
        };
        serde_json::to_string(&log).expect("session logs serialize")
    }
}

fn check_one_source(h: &ExtractorHandle) -> Result<()> {
    if h.arity != Arity::Seeded || h.input_widths.len() != 2 {
        return invalid(format!("{} is not a seeded [X, Y] extractor", h.name));
    }
    if 2 * h.k[1] <= h.input_widths[1] {
        return invalid(format!("declared seed rate {}/{} is not above 1/2", h.k[1], h.input_widths[1]));
    }
    Ok(())
}

fn check_two_sources(h: &ExtractorHandle) -> Result<()> {
    if h.input_widths.len() != 3 {
        return invalid(format!("{} is not a three-source [Y₁, Y₂, X] extractor", h.name));
    }
    if h.input_widths[0] != h.input_widths[1] {
        return invalid("short seeds must share one width");
    }
    Ok(())
}

/// Alice sends `Y` to Bob; each keys `h(X, Y)` from its own copy of `X`.
pub fn pa_one_source(x_alice: &BitString, x_bob: &BitString, y: &BitString, h: &ExtractorHandle) -> Result<PaSession> {
    check_one_source(h)?;
    if x_alice.width() != x_bob.width() {
        return invalid(format!("secret widths differ: {} vs {}", x_alice.width(), x_bob.width()));
    }
    if x_alice != x_bob {
        return invalid("Alice and Bob hold different secrets");
    }
    let transcript = vec![Message { from: Party::Alice, payload: *y }];
    let alice_key = h.eval(&[*x_alice, *y])?;
    let bob_key = h.eval(&[*x_bob, transcript[0].payload])?;
    Ok(PaSession {
        protocol: PaProtocol::OneSource,
        handle: h.name.clone(),
        x: *x_alice,
        locals: vec![*y],
        register: vec![],
        transcript,
        alice_key,
        bob_key,
    })
}

/// Alice sends `Y₁`, then Bob sends `Y₂`; both key `h(Y₁, Y₂, X)`.
pub fn pa_two_sources(x: &BitString, y1: &BitString, y2: &BitString, h: &ExtractorHandle) -> Result<PaSession> {
    pa_two_sources_ordered(x, y1, y2, h, Party::Alice)
}

/// Protocol 2 with `first` speaking first.
pub fn pa_two_sources_ordered(x: &BitString, y1: &BitString, y2: &BitString, h: &ExtractorHandle, first: Party) -> Result<PaSession> {
    check_two_sources(h)?;
    let a = Message { from: Party::Alice, payload: *y1 };
    let b = Message { from: Party::Bob, payload: *y2 };
    let transcript = if first == Party::Alice { vec![a, b] } else { vec![b, a] };
    let heard = |from: Party| transcript.iter().find(|m| m.from == from).expect("both parties speak").payload;
    let alice_key = h.eval(&[*y1, heard(Party::Bob), *x])?;
    let bob_key = h.eval(&[heard(Party::Alice), *y2, *x])?;
    Ok(PaSession {
        protocol: PaProtocol::TwoSources,
        handle: h.name.clone(),
        x: *x,
        locals: vec![*y1, *y2],
        register: vec![],
        transcript,
        alice_key,
        bob_key,
    })
}

/// Source distributions for `[X, Y…]` and Eve's side information.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaModel {
    pub protocol: PaProtocol,
    /// Player 0 is `X`, then `Y` or `Y₁, Y₂`.
    pub sources: SourceModel,
}

impl PaModel {
    pub fn new(protocol: PaProtocol, x: FlatSource, locals: Vec<FlatSource>) -> Result<Self> {
        if locals.len() != protocol.local_sources() {
            return invalid(format!("{protocol:?} takes {} local sources, got {}", protocol.local_sources(), locals.len()));
        }
        let mut all = vec![x];
        all.extend(locals);
        let widths: Vec<u32> = all.iter().map(|s| s.width()).collect();
        Ok(PaModel { protocol, sources: SourceModel::new(all, LeakageScenario::trivial(&widths))? })
    }

    pub fn with_leakage(self, leakage: LeakageScenario) -> Result<Self> {
        Ok(PaModel { protocol: self.protocol, sources: self.sources.with_leakage(leakage)? })
    }

    /// The session for one realization of the sources.
    pub fn session(&self, draw: &Draw, h: &ExtractorHandle) -> Result<PaSession> {
        let w = |i: usize| self.sources.sources[i].width();
        let x = BitString::new(w(0), draw.x[0])?;
        let mut s = match self.protocol {
            PaProtocol::OneSource => pa_one_source(&x, &x, &BitString::new(w(1), draw.x[1])?, h)?,
            PaProtocol::TwoSources => pa_two_sources(&x, &BitString::new(w(1), draw.x[1])?, &BitString::new(w(2), draw.x[2])?, h)?,
        };
        s.register = draw.e.clone();
        Ok(s)
    }
}

/// Eve's view of a session: the key against `(transcript, register)`.
pub fn eve_observation(s: &PaSession) -> Observation {
    let mut key: Vec<u64> = s.transcript.iter().map(|m| ((m.from == Party::Bob) as u64) << 32 | m.payload.value() as u64).collect();
    key.extend(s.register.iter().map(|&e| e as u64));
    Observation { z: s.alice_key.value() as u64, z_width: s.alice_key.width(), key }
}

/// `Δ((K, T, E), (U, T, E))` over the model: exact by enumeration at micro
/// scale, `mc_distance` otherwise.
pub fn eavesdropper_distance(model: &PaModel, h: &ExtractorHandle, mode: EvalMode) -> Result<DistanceReport> {
    let view = format!("eve/{}", h.name);
    evaluate_security(&model.sources, &view, mode, &|draw, _| Ok(eve_observation(&model.session(draw, h)?)))
}

/// Worst case over flat sources of the given entropies with a leak family on
/// `X`, strong in every published input.
pub fn eavesdropper_worst_case(protocol: PaProtocol, h: &ExtractorHandle, k: &[u32], leak: Option<LeakFamily>, mode: OracleMode) -> Result<OracleReport> {
    if k.len() != h.input_widths.len() {
        return invalid("k profile must match the inputs of h");
    }
    match protocol {
        PaProtocol::OneSource => check_one_source(h)?,
        PaProtocol::TwoSources => check_two_sources(h)?,
    }
    if let Some(l) = &leak {
        if l.targets != [protocol.secret_index()] {
            return invalid("leakage family must target X alone");
        }
    }
    let strong = protocol.strong_indices();
    let inputs = (0..k.len()).map(|i| OracleInput::flat(h.input_widths[i], k[i]).strong(strong.contains(&i))).collect();
    let mut q = OracleQuery::new(inputs).with_mode(mode);
    if let Some(l) = leak {
        q = q.with_leak(l);
    }
    worst_case_error(&*h.truth_table()?, &q)
}

fn certified(arity: Arity, widths: Vec<u32>, k: Vec<u32>, seed: u64) -> Result<ExtractorHandle> {
    Ok(certify_random_table(&CertifyRequest::new(arity, widths, k, 1, 1.0, seed), None)?.handle)
}

/// Weak-seed handle on `X ∈ {0,1}⁶` and `Y ∈ {0,1}⁴`, one key bit, built from
/// certified random tables with `C = 6` so that `d = 1 ≤ k/C`.
pub fn micro_weak_seed(seed: u64) -> Result<Composite> {
    let seed = seed.wrapping_mul(4);
    let base = certified(Arity::Seeded, vec![6, 1], vec![6, 1], seed)?;
    let slots = BextSlots {
        cond: Condenser::identity(2)?,
        raz: certified(Arity::TwoSource, vec![2, 6], vec![1, 6], seed + 1)?,
        srext: certified(Arity::TwoSource, vec![2, 1], vec![1, 1], seed + 2)?,
    };
    let cfg = CompositionConfig { weak_seed_c: 6.0, ..Default::default() };
    weak_seed_transform(&base, &slots, 0.25, &cfg)
}

/// Three-source handle on `Y₁, Y₂ ∈ {0,1}²` and `X ∈ {0,1}⁴` with `k₃ = 3`.
pub fn micro_three_source(seed: u64) -> Result<Composite> {
    let seed = seed.wrapping_mul(4);
    let slots = BextSlots {
        cond: Condenser::identity(2)?,
        raz: certified(Arity::TwoSource, vec![2, 4], vec![1, 3], seed)?,
        srext: certified(Arity::TwoSource, vec![2, 1], vec![1, 1], seed + 1)?,
    };
    let last = certified(Arity::Seeded, vec![4, 1], vec![3, 1], seed + 2)?;
    three_source_handle(&slots, &last, 0.5, 3, &CompositionConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractors::Provenance;
    use std::sync::Arc;

    fn xor_seeded() -> ExtractorHandle {
        ExtractorHandle::from_fn("xor", Arity::Seeded, vec![3, 3], 1, vec![3, 2], 0.5, vec![1], Provenance::Explicit, Arc::new(|v: &[u32]| (v[0] & v[1]).count_ones() & 1)).unwrap()
    }

    #[test]
    fn log_withholds_keys() {
        let b = |v| BitString::new(3, v).unwrap();
        let s = pa_one_source(&b(5), &b(5), &b(3), &xor_seeded()).unwrap();
        let hidden = s.to_json(false);
        assert!(!hidden.contains("alice_key") && hidden.contains("\"hex\":\"3\""), "{hidden}");
        assert!(s.to_json(true).contains("bob_key"));
    }

    #[test]
    fn rejects_low_rate_seed_and_mismatch() {
        let b = |w, v| BitString::new(w, v).unwrap();
        let low = xor_seeded().with_declared(vec![3, 1], 0.5, vec![1]).unwrap();
        assert!(pa_one_source(&b(3, 1), &b(3, 1), &b(3, 1), &low).is_err());
        assert!(pa_one_source(&b(3, 1), &b(3, 2), &b(3, 1), &xor_seeded()).is_err());
        assert!(pa_one_source(&b(3, 1), &b(3, 1), &b(2, 1), &xor_seeded()).is_err());
    }
}
