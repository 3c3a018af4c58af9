//! Network configuration: player counts, partition sizes and gadget parameters.

use crate::combinatorics::Frac;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Slack absorbed before taking a ceiling of a float product, so that
/// `(1+0.2)·5 = 6.000000000000001` still rounds to 6.
const CEIL_SLACK: f64 = 1e-9;

/// The entropy assumption `k > C·log p` is checked against this `C`.
pub const ENTROPY_LOG_FACTOR: f64 = 4.0;

fn ceil_tolerant(x: f64) -> usize {
    (x - CEIL_SLACK).ceil().max(0.0) as usize
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    /// ExtPub followed by the local ExtPri step.
    ExtPub,
    Geqr,
}

/// Gadget slot parameters. Fractions are exact strings such as `"1/3"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GadgetConfig {
    /// Output width of the independent-source extractor slot.
    pub iext_out: u32,
    /// Left side `N` of the AND-disperser; defaults to `|B|`.
    pub disperser_left: Option<u32>,
    pub disperser_delta: Frac,
    pub disperser_gamma: Frac,
    pub expander_degree: u32,
    pub expander_beta: Frac,
    pub oaext_out: u32,
    pub qtext_out: u32,
    /// Random configurations per sampled certification.
    pub certify_samples: usize,
    pub seed: u64,
}

impl Default for GadgetConfig {
    fn default() -> Self {
        let one = Frac { num: 1, den: 1 };
        GadgetConfig {
            iext_out: 2,
            disperser_left: None,
            disperser_delta: one,
            disperser_gamma: one,
            expander_degree: 1,
            expander_beta: one,
            oaext_out: 1,
            qtext_out: 1,
            certify_samples: 48,
            seed: 1,
        }
    }
}

/// A network of `p` players with corruption bound `t`, each holding an
/// `n`-bit source of min-entropy `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub protocol: ProtocolKind,
    pub p: usize,
    pub t: usize,
    pub n: u32,
    pub k: u32,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Explicit partition sizes; checked against the required values.
    #[serde(default)]
    pub a_size: Option<usize>,
    #[serde(default)]
    pub b_size: Option<usize>,
    /// IExt arity, which is also the GE-QR group size.
    #[serde(default = "default_d")]
    pub d: usize,
    /// GE-QR group count.
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub gadgets: GadgetConfig,
    /// Exposes the extractor-graph selection of `B` players; no security budget is attached.
    #[serde(default)]
    pub experimental_extractor_graph: bool,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_gamma() -> f64 {
    0.9
}

fn default_d() -> usize {
    2
}

/// Player sets `A`, `B`, `C` as contiguous index ranges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

/// GE-QR groups `A_1..A_s` and the remaining players `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Groups {
    pub groups: Vec<Vec<usize>>,
    pub b: Vec<usize>,
}

impl NetworkConfig {
    /// Toy ExtPub configuration: p=7, t=1, n=6, k=4, d=2.
    pub fn toy_ext_pub() -> Self {
        NetworkConfig {
            protocol: ProtocolKind::ExtPub,
            p: 7,
            t: 1,
            n: 6,
            k: 4,
            alpha: default_alpha(),
            gamma: default_gamma(),
            a_size: None,
            b_size: None,
            d: 2,
            s: None,
            gadgets: GadgetConfig { expander_degree: 3, oaext_out: 2, ..GadgetConfig::default() },
            experimental_extractor_graph: false,
        }
    }

    /// Toy GE-QR configuration: p=7, t=1, n=6, k=4, d=2, s=2.
    pub fn toy_geqr() -> Self {
        NetworkConfig { protocol: ProtocolKind::Geqr, s: Some(2), ..Self::toy_ext_pub() }
    }

    /// Micro GE-QR for exact rushing analysis: p=5, t=1, n=5, k=4, d=1, s=2,
    /// so the faulty group rushes 2 bits of `y`.
    pub fn micro_geqr() -> Self {
        NetworkConfig { p: 5, n: 5, k: 4, d: 1, s: Some(2), ..Self::toy_geqr() }
    }

    /// Micro GE-QR with two players in `B`: p=4, t=1, n=3, k=2, d=2, s=1.
    pub fn micro_hybrid() -> Self {
        NetworkConfig { p: 4, n: 3, k: 2, d: 2, s: Some(1), ..Self::toy_geqr() }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: NetworkConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `δ = (γ − α)/4`.
    pub fn delta(&self) -> f64 {
        (self.gamma - self.alpha) / 4.0
    }

    /// `⌈(1+α)t⌉`.
    pub fn required_a(&self) -> usize {
        ceil_tolerant((1.0 + self.alpha) * self.t as f64)
    }

    /// `⌈2(1+2δ)t⌉`.
    pub fn required_b(&self) -> usize {
        ceil_tolerant(2.0 * (1.0 + 2.0 * self.delta()) * self.t as f64)
    }

    /// `⌊√k⌋`, at least 1: width of each `y¹_j` and `y²_j` slice.
    pub fn slice_width(&self) -> u32 {
        ((self.k as f64).sqrt().floor() as u32).max(1)
    }

    /// `⌊k/s⌋`, at least 1: width of each GE-QR group seed.
    pub fn group_seed_width(&self) -> Result<u32> {
        let s = self.s.ok_or_else(|| Error::Config("GE-QR needs the group count s".into()))?;
        Ok((self.k / s.max(1) as u32).max(1))
    }

    /// Checks every structural invariant; violations are named.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.p == 0 {
            return fail("p must be positive".into());
        }
        if self.t > self.p {
            return fail(format!("t = {} exceeds p = {}", self.t, self.p));
        }
        if self.n == 0 || self.n > crate::bits::MAX_WIDTH || self.k > self.n {
            return fail(format!("need 0 < n ≤ {} and k ≤ n (n = {}, k = {})", crate::bits::MAX_WIDTH, self.n, self.k));
        }
        if self.d == 0 {
            return fail("d must be positive".into());
        }
        match self.protocol {
            ProtocolKind::ExtPub => {
                if !(self.alpha > 0.0 && self.alpha < self.gamma && self.gamma < 1.0) {
                    return fail(format!("need 0 < α < γ < 1 (α = {}, γ = {})", self.alpha, self.gamma));
                }
                let (ra, rb) = (self.required_a(), self.required_b());
                if let Some(a) = self.a_size {
                    if a != ra {
                        return fail(format!("|A| = (1+α)t violated: configured {a}, required ⌈(1+α)t⌉ = {ra}"));
                    }
                }
                if let Some(b) = self.b_size {
                    if b != rb {
                        return fail(format!("|B| = 2(1+2δ)t violated: configured {b}, required ⌈2(1+2δ)t⌉ = {rb}"));
                    }
                }
                if ra + rb > self.p {
                    return fail(format!("A,B,C partition violated: |A|+|B| = {} exceeds p = {}", ra + rb, self.p));
                }
                if rb == 0 {
                    return fail("|B| = 2(1+2δ)t violated: B is empty".into());
                }
            }
            ProtocolKind::Geqr => {
                let s = match self.s {
                    Some(s) if s > 0 => s,
                    _ => return fail("GE-QR needs a positive group count s".into()),
                };
                if self.p <= s * self.d + 1 {
                    return fail(format!("p > s·d + 1 violated: p = {}, s·d + 1 = {}", self.p, s * self.d + 1));
                }
            }
        }
        Ok(())
    }

    /// Advisory findings that do not block a run.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let bound = ENTROPY_LOG_FACTOR * (self.p as f64).log2();
        if (self.k as f64) < bound {
            w.push(format!("k = {} < 4·log₂p = {bound:.2}: the entropy assumption k > C·log p is not met at C = 4", self.k));
        }
        if self.experimental_extractor_graph {
            w.push("experimental extractor-graph selection enabled; no security budget is claimed".into());
        }
        w
    }

    pub fn partition(&self) -> Result<Partition> {
        if self.protocol != ProtocolKind::ExtPub {
            return Err(Error::Config("partition A/B/C applies to ExtPub".into()));
        }
        self.validate()?;
        let (a, b) = (self.required_a(), self.required_b());
        Ok(Partition { a: (0..a).collect(), b: (a..a + b).collect(), c: (a + b..self.p).collect() })
    }

    /// `A_i = {(i−1)d, …, id − 1}` in 0-based indices; `B` is everyone else.
    pub fn groups(&self) -> Result<Groups> {
        if self.protocol != ProtocolKind::Geqr {
            return Err(Error::Config("groups apply to GE-QR".into()));
        }
        self.validate()?;
        let s = self.s.expect("validated");
        let groups = (0..s).map(|i| (i * self.d..(i + 1) * self.d).collect()).collect();
        Ok(Groups { groups, b: (s * self.d..self.p).collect() })
    }
}
