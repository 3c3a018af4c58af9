//! Built-in adversary strategies.

use super::sched::{IrStrategy, PublicView, QrStrategy, RushRequest, SideInfo};
use crate::bits::BitString;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// How a faulty slot is filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RushRule {
    /// Send what an honest player would.
    Honest,
    Zero,
    /// Uniform over the slot width.
    Random,
    /// Honest value with the last bit flipped.
    Flip,
}

impl RushRule {
    fn apply(self, req: &RushRequest, rng: &mut ChaCha8Rng) -> BitString {
        let w = req.width;
        let v = match self {
            RushRule::Honest => req.honest_value.value(),
            RushRule::Zero => 0,
            RushRule::Random => rng.gen_range(0..1u32 << w),
            RushRule::Flip => req.honest_value.value() ^ 1,
        };
        BitString::new(w, v).expect("value fits the slot width")
    }
}

/// Corrupts a fixed set before round 1.
#[derive(Clone, Debug)]
pub struct StaticCorruption {
    pub players: Vec<usize>,
    pub rule: RushRule,
}

impl IrStrategy for StaticCorruption {
    fn name(&self) -> String {
        format!("static{:?}-{:?}", self.players, self.rule).to_lowercase()
    }

    fn corrupt(&mut self, view: &PublicView, _rng: &mut ChaCha8Rng) -> Vec<usize> {
        if view.round == 1 {
            self.players.clone()
        } else {
            Vec::new()
        }
    }

    fn rush(&mut self, _view: &PublicView, req: &RushRequest, rng: &mut ChaCha8Rng) -> BitString {
        self.rule.apply(req, rng)
    }
}

/// At each round boundary, corrupts a uniformly chosen honest player with
/// probability `rate` while the bound allows.
#[derive(Clone, Debug)]
pub struct AdaptiveRandom {
    pub rate: f64,
    pub rule: RushRule,
}

impl IrStrategy for AdaptiveRandom {
    fn name(&self) -> String {
        format!("adaptive-{}-{:?}", self.rate, self.rule).to_lowercase()
    }

    fn corrupt(&mut self, view: &PublicView, rng: &mut ChaCha8Rng) -> Vec<usize> {
        if view.faulty.len() >= view.t || !rng.gen_bool(self.rate) {
            return Vec::new();
        }
        let honest: Vec<usize> = (0..view.players).filter(|p| !view.faulty.contains(p)).collect();
        vec![honest[rng.gen_range(0..honest.len())]]
    }

    fn rush(&mut self, _view: &PublicView, req: &RushRequest, rng: &mut ChaCha8Rng) -> BitString {
        self.rule.apply(req, rng)
    }
}

pub type IrRushFn = Arc<dyn Fn(&PublicView, &RushRequest) -> BitString + Send + Sync>;
pub type QrRushFn = Arc<dyn Fn(&PublicView, &SideInfo, &RushRequest) -> BitString + Send + Sync>;

/// Static corruption with a deterministic rushing function of the public view.
#[derive(Clone)]
pub struct FnIr {
    pub label: String,
    pub players: Vec<usize>,
    pub rush: IrRushFn,
}

impl IrStrategy for FnIr {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn corrupt(&mut self, view: &PublicView, _rng: &mut ChaCha8Rng) -> Vec<usize> {
        if view.round == 1 {
            self.players.clone()
        } else {
            Vec::new()
        }
    }

    fn rush(&mut self, view: &PublicView, req: &RushRequest, _rng: &mut ChaCha8Rng) -> BitString {
        (self.rush)(view, req)
    }
}

/// Static corruption with a deterministic rushing function that also reads
/// the side-information register.
#[derive(Clone)]
pub struct FnQr {
    pub label: String,
    pub players: Vec<usize>,
    pub rush: QrRushFn,
}

impl QrStrategy for FnQr {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn corrupt(&mut self, view: &PublicView, _rng: &mut ChaCha8Rng) -> Vec<usize> {
        if view.round == 1 {
            self.players.clone()
        } else {
            Vec::new()
        }
    }

    fn rush(&mut self, view: &PublicView, side: &SideInfo, req: &RushRequest, _rng: &mut ChaCha8Rng) -> BitString {
        (self.rush)(view, side, req)
    }
}

/// QR strategy that ignores the register; lets IR strategies run through the
/// QR interface.
pub struct Blind<S: IrStrategy>(pub S);

impl<S: IrStrategy> QrStrategy for Blind<S> {
    fn name(&self) -> String {
        format!("blind-{}", self.0.name())
    }

    fn corrupt(&mut self, view: &PublicView, rng: &mut ChaCha8Rng) -> Vec<usize> {
        self.0.corrupt(view, rng)
    }

    fn rush(&mut self, view: &PublicView, _side: &SideInfo, req: &RushRequest, rng: &mut ChaCha8Rng) -> BitString {
        self.0.rush(view, req, rng)
    }
}
