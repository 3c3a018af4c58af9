//! Monte-Carlo distance estimation for instances beyond enumeration.

use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const BOOTSTRAP_RESAMPLES: usize = 200;
pub const CI_LEVEL: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    /// Plug-in distance of `(Z, R)` from `U_m ⊗ R`.
    pub estimate: f64,
    /// Bootstrap deviation quantile plus the plug-in bias bound `½·√(cells/N)`.
    pub half_width: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub samples: usize,
    pub resamples: usize,
    /// Observed `(rest)` values times `2^m`.
    pub cells: usize,
}

/// Smallest sample count the sizing rule accepts.
pub fn required_samples(m: u32, tol: f64) -> usize {
    (100.0 * (1u64 << m) as f64 / (tol * tol)).ceil() as usize
}

fn plug_in(counts: &[u32], zdim: usize, n: f64) -> f64 {
    let mut acc = 0.0;
    for row in counts.chunks(zdim) {
        let tot: u32 = row.iter().sum();
        let q = tot as f64 / zdim as f64;
        for &c in row {
            acc += (c as f64 - q).abs();
        }
    }
    acc / (2.0 * n)
}

/// Estimates `Δ((Z, R), (U_m, R))` from `samples` independent draws of
/// `sampler`, which returns `(z, r)` with `z < 2^m`. Draw `i` uses stream `i`
/// of the generator seeded by `seed`.
pub fn mc_distance<F>(sampler: F, m: u32, samples: usize, tol: f64, seed: u64) -> Result<McReport>
where
    F: Fn(&mut ChaCha8Rng) -> (u32, u64) + Sync,
{
    if m == 0 || m > 16 {
        return invalid("output width must be in 1..=16");
    }
    if !(tol > 0.0 && tol <= 1.0) {
        return invalid("tolerance must be in (0,1]");
    }
    let need = required_samples(m, tol);
    if samples < need {
        return invalid(format!("N={samples} below the sizing rule 100·2^m/tol² = {need}"));
    }
    let zdim = 1usize << m;
    let draws: Vec<(u32, u64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            sampler(&mut rng)
        })
        .collect();
    let mut rows: HashMap<u64, usize> = HashMap::new();
    let mut cell_of = Vec::with_capacity(samples);
    for &(z, r) in &draws {
        if z as usize >= zdim {
            return invalid(format!("sample z={z} exceeds {m} bits"));
        }
        let next = rows.len();
        let row = *rows.entry(r).or_insert(next);
        cell_of.push((row * zdim + z as usize) as u32);
    }
    let cells = rows.len() * zdim;
    let mut counts = vec![0u32; cells];
    for &c in &cell_of {
        counts[c as usize] += 1;
    }
    let n = samples as f64;
    let estimate = plug_in(&counts, zdim, n);
    let mut devs: Vec<f64> = (0..BOOTSTRAP_RESAMPLES as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(samples as u64 + b);
            let mut c = vec![0u32; cells];
            for _ in 0..samples {
                c[cell_of[rng.gen_range(0..samples)] as usize] += 1;
            }
            (plug_in(&c, zdim, n) - estimate).abs()
        })
        .collect();
    devs.sort_by(|a, b| a.total_cmp(b));
    let q = devs[((CI_LEVEL * BOOTSTRAP_RESAMPLES as f64).ceil() as usize).min(BOOTSTRAP_RESAMPLES) - 1];
    let half_width = q + 0.5 * (cells as f64 / n).sqrt();
    Ok(McReport {
        estimate,
        half_width,
        ci_low: (estimate - half_width).max(0.0),
        ci_high: (estimate + half_width).min(1.0),
        level: CI_LEVEL,
        samples,
        resamples: BOOTSTRAP_RESAMPLES,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_sampler_within_half_width() {
        let r = mc_distance(|rng| (rng.gen_range(0..4), 0), 2, 40_000, 0.2, 3).unwrap();
        assert!(r.estimate <= r.half_width, "{r:?}");
    }

    #[test]
    fn constant_sampler_is_far() {
        let r = mc_distance(|_| (1, 5), 2, 10_000, 0.2, 3).unwrap();
        assert!(r.estimate >= 0.75 - r.half_width);
        assert!((r.estimate - 0.75).abs() < 1e-12);
    }

    #[test]
    fn sizing_rule_rejects_small_n() {
        assert!(mc_distance(|_| (0, 0), 1, 100, 0.1, 0).is_err());
        assert_eq!(required_samples(1, 0.1), 20_000);
    }

    #[test]
    fn deterministic_in_seed() {
        let f = |rng: &mut ChaCha8Rng| (rng.gen_range(0..2), rng.gen_range(0..3));
        let a = mc_distance(f, 1, 20_000, 0.1, 9).unwrap();
        let b = mc_distance(f, 1, 20_000, 0.1, 9).unwrap();
        assert_eq!(a, b);
    }
}
