//! Source classes: flat, block, and somewhere-random.

use crate::dist::{Distribution, JointDistribution, Prob};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Entropy comparisons tolerate this much float error.
const ENTROPY_EPS: f64 = 1e-9;

/// Uniform distribution over a support of size exactly 2^k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatSource {
    width: u32,
    support: Vec<u32>,
}

impl FlatSource {
    pub fn new(width: u32, mut support: Vec<u32>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if !support.len().is_power_of_two() {
            return invalid(format!("support size {} is not a power of two", support.len()));
        }
        if support.iter().any(|&s| (s as u64) >> width != 0) {
            return invalid("support element exceeds width");
        }
        Ok(Self { width, support })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn support(&self) -> &[u32] {
        &self.support
    }

    /// Min-entropy, which is exactly log₂ of the support size.
    pub fn k(&self) -> u32 {
        self.support.len().trailing_zeros()
    }

    pub fn distribution<P: Prob>(&self) -> Result<Distribution<P>> {
        Distribution::flat(self.width, &self.support)
    }
}

/// Per-block widths and conditional min-entropy thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSourceSpec {
    pub widths: Vec<u32>,
    pub thresholds: Vec<f64>,
}

/// Outcome of a block-source check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockVerdict {
    pub holds: bool,
    /// The (block, prefix) with the smallest `entropy − threshold`.
    pub worst_block: usize,
    pub worst_prefix: Vec<u32>,
    pub worst_entropy: f64,
    pub worst_slack: f64,
}

/// Checks that every block has conditional min-entropy at least its threshold
/// given each positive-probability assignment of the preceding blocks.
pub fn check_block_source<P: Prob>(j: &JointDistribution<P>, spec: &BlockSourceSpec) -> Result<BlockVerdict> {
    let parts = j.parts();
    if parts.len() != spec.widths.len() || spec.widths.len() != spec.thresholds.len() {
        return invalid("block count mismatch");
    }
    if parts.iter().zip(&spec.widths).any(|(p, &w)| p.width != w) {
        return invalid("block widths do not match spec");
    }
    let labels: Vec<&str> = parts.iter().map(|p| p.label.as_str()).collect();
    let mut worst = BlockVerdict { holds: true, worst_block: 0, worst_prefix: vec![], worst_entropy: f64::INFINITY, worst_slack: f64::INFINITY };
    for b in 0..labels.len() {
        // Max conditional mass per prefix over the marginal on blocks 0..=b.
        let m = j.marginal(&labels[..=b])?;
        let bw = spec.widths[b];
        for (prefix_idx, chunk) in m.mass().chunks(1usize << bw).enumerate() {
            let mut tot = P::zero();
            let mut best = P::zero();
            for v in chunk {
                tot = tot.add(v);
                if *v > best {
                    best = v.clone();
                }
            }
            if tot == P::zero() {
                continue;
            }
            let h = -(best.div(&tot)).to_f64().log2();
            let slack = h - spec.thresholds[b];
            if slack < worst.worst_slack {
                let prefix = if b == 0 {
                    vec![]
                } else {
                    crate::dist::Layout::from_widths(&spec.widths[..b]).unpack(prefix_idx)
                };
                worst = BlockVerdict { holds: true, worst_block: b, worst_prefix: prefix, worst_entropy: h, worst_slack: slack };
            }
        }
    }
    worst.holds = worst.worst_slack >= -ENTROPY_EPS;
    Ok(worst)
}

/// `rows` rows of `row_width` bits each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SomewhereRandomSpec {
    pub rows: u32,
    pub row_width: u32,
}

/// Elementary somewhere-random check: returns the first row (0-based) whose
/// marginal is exactly uniform, within the float tolerance for `f64`.
pub fn check_somewhere_random<P: Prob>(d: &Distribution<P>, spec: &SomewhereRandomSpec) -> Result<Option<usize>> {
    if d.width() != spec.rows * spec.row_width {
        return invalid("width does not match rows × row width");
    }
    let r = spec.row_width;
    for row in 0..spec.rows {
        let shift = (spec.rows - 1 - row) * r;
        let m = d.map(r, |x| (x >> shift) & crate::bits::mask(r))?;
        let u = Distribution::<P>::uniform(r)?;
        let dist = crate::dist::statistical_distance(&m, &u)?;
        let uniform = if P::is_exact() { dist == P::zero() } else { dist.to_f64() <= crate::dist::TOLERANCE };
        if uniform {
            return Ok(Some(row as usize));
        }
    }
    Ok(None)
}
