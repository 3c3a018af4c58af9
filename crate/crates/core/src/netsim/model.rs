//! Player sources and side information for a network run.

use crate::error::{invalid, Error, Result};
use crate::leakage::LeakageScenario;
use crate::source::FlatSource;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Largest outcome space enumerated in exact evaluation.
pub const MAX_EXACT_OUTCOMES: u64 = 1 << 24;

/// One realization of every source and the side-information register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Draw {
    pub x: Vec<u32>,
    pub shared: Vec<u32>,
    /// `E_i` for each non-trivial leak map, in player order.
    pub e: Vec<u32>,
}

/// Independent flat sources, one per player, plus a leakage scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub sources: Vec<FlatSource>,
    pub leakage: LeakageScenario,
}

impl SourceModel {
    pub fn new(sources: Vec<FlatSource>, leakage: LeakageScenario) -> Result<Self> {
        leakage.validate()?;
        let widths: Vec<u32> = sources.iter().map(|s| s.width()).collect();
        if leakage.source_widths != widths {
            return invalid("leakage scenario widths do not match the sources");
        }
        Ok(SourceModel { sources, leakage })
    }

    /// Player `i` holds a flat `k`-source on a support drawn from stream `i`.
    pub fn random_flat(players: usize, n: u32, k: u32, seed: u64) -> Result<Self> {
        if k > n || n > 24 {
            return invalid(format!("need k ≤ n ≤ 24 (n = {n}, k = {k})"));
        }
        let sources = (0..players)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let support = sample(&mut rng, 1usize << n, 1usize << k).into_iter().map(|v| v as u32).collect();
                FlatSource::new(n, support)
            })
            .collect::<Result<Vec<_>>>()?;
        let widths: Vec<u32> = sources.iter().map(|s| s.width()).collect();
        Self::new(sources, LeakageScenario::trivial(&widths))
    }

    pub fn with_leakage(self, leakage: LeakageScenario) -> Result<Self> {
        Self::new(self.sources, leakage)
    }

    pub fn players(&self) -> usize {
        self.sources.len()
    }

    /// Widths of the register entries in [`Draw::e`].
    pub fn leak_widths(&self) -> Vec<u32> {
        self.leakage.maps.iter().filter(|m| !m.is_trivial()).map(|m| m.e_width).collect()
    }

    fn radices(&self) -> Vec<u64> {
        let mut r: Vec<u64> = self.sources.iter().map(|s| s.support().len() as u64).collect();
        r.extend(self.leakage.shared_widths.iter().map(|&w| 1u64 << w));
        r
    }

    /// Equally likely outcomes, or `None` past `u64`.
    pub fn outcome_count(&self) -> Option<u64> {
        self.radices().iter().try_fold(1u64, |a, &r| a.checked_mul(r))
    }

    pub fn check_exact(&self) -> Result<u64> {
        match self.outcome_count() {
            Some(c) if c <= MAX_EXACT_OUTCOMES => Ok(c),
            c => Err(Error::BudgetExceeded { required: c.map(u128::from).unwrap_or(u128::MAX), budget: MAX_EXACT_OUTCOMES as u128 }),
        }
    }

    fn realize(&self, x: Vec<u32>, shared: Vec<u32>) -> Draw {
        let e = self
            .leakage
            .maps
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_trivial())
            .map(|(i, m)| m.apply(x[i], shared[i]))
            .collect();
        Draw { x, shared, e }
    }

    /// Outcome `index` in mixed radix, last player's support fastest.
    pub fn outcome(&self, mut index: u64) -> Draw {
        let radices = self.radices();
        let mut digits = vec![0u64; radices.len()];
        for (d, &r) in digits.iter_mut().zip(&radices).rev() {
            *d = index % r;
            index /= r;
        }
        let p = self.sources.len();
        let x = (0..p).map(|i| self.sources[i].support()[digits[i] as usize]).collect();
        let shared = digits[p..].iter().map(|&d| d as u32).collect();
        self.realize(x, shared)
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Draw {
        let x = self.sources.iter().map(|s| s.support()[rng.gen_range(0..s.support().len())]).collect();
        let shared = self.leakage.shared_widths.iter().map(|&w| rng.gen_range(0..1u32 << w)).collect();
        self.realize(x, shared)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::{LeakMap, LeakModel};

    #[test]
    fn outcomes_cover_the_product() {
        let m = SourceModel::random_flat(3, 3, 1, 9).unwrap();
        assert_eq!(m.outcome_count(), Some(8));
        let all: Vec<Draw> = (0..8).map(|i| m.outcome(i)).collect();
        for (i, d) in all.iter().enumerate() {
            for (j, &x) in d.x.iter().enumerate() {
                assert!(m.sources[j].support().contains(&x));
            }
            assert!(all[..i].iter().all(|o| o != d));
        }
    }

    #[test]
    fn leak_register_is_realized() {
        let base = SourceModel::random_flat(2, 3, 2, 1).unwrap();
        let map = LeakMap::from_fn(3, 0, 1, |x, _| x & 1).unwrap();
        let sc = LeakageScenario { source_widths: vec![3, 3], shared_widths: vec![0, 0], maps: vec![LeakMap::trivial(3, 0), map], model: LeakModel::Oa };
        let m = base.with_leakage(sc).unwrap();
        assert_eq!(m.leak_widths(), vec![1]);
        let d = m.outcome(5);
        assert_eq!(d.e, vec![d.x[1] & 1]);
    }
}
