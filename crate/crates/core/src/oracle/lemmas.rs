//! Exact evaluation of both sides of the supporting inequalities.

use crate::dist::{xor_project, JointDistribution, Prob};
use crate::error::{invalid, Error, Result};
use crate::exact::ExactValue;
use crate::leakage::{additivity_check, Leaked};
use crate::dist::Part;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaId {
    /// Conditioning on `Y` costs `log|Y| + log(1/ε)` bits except with probability `ε`.
    L2_2,
    /// XOR lemma with classical side information.
    L2_5,
    /// Per-player strong errors add up to the set error.
    L8_1,
    /// Entropy additivity across leaked sources.
    P3_2,
}

impl FromStr for LemmaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L2.2" | "L2_2" => Ok(LemmaId::L2_2),
            "L2.5" | "L2_5" => Ok(LemmaId::L2_5),
            "L8.1" | "L8_1" => Ok(LemmaId::L8_1),
            "P3.2" | "P3_2" => Ok(LemmaId::P3_2),
            _ => invalid(format!("unknown lemma id {s:?}")),
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaId::L2_2 => "L2.2",
            LemmaId::L2_5 => "L2.5",
            LemmaId::L8_1 => "L8.1",
            LemmaId::P3_2 => "P3.2",
        })
    }
}

/// Inputs per lemma.
#[derive(Clone, Debug)]
pub enum LemmaInstance {
    /// Joint over parts `x` and `y`.
    Conditioning { joint: JointDistribution<f64>, x: String, y: String, eps: f64 },
    /// Joint over `z` and the side-information parts `e`.
    Xor { joint: JointDistribution<f64>, z: String, e: Vec<String> },
    /// Exact joint; each player is `(z_label, x_label)`; `context` is `T` and
    /// the adversary view.
    Hybrid { joint: JointDistribution<BigRational>, players: Vec<(String, String)>, context: Vec<String> },
    Additivity { leaked: Leaked<f64>, subset: Vec<usize>, eps: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaVerdict {
    pub lemma: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_lhs: Option<ExactValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_rhs: Option<ExactValue>,
    /// Per-player strong errors (hybrid only).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub terms: Vec<ExactValue>,
}

fn verdict(id: LemmaId, lhs: f64, rhs: f64) -> LemmaVerdict {
    LemmaVerdict { lemma: id.to_string(), holds: lhs <= rhs + EPS, lhs, rhs, slack: rhs - lhs, exact_lhs: None, exact_rhs: None, terms: vec![] }
}

pub fn check_lemma(id: LemmaId, instance: &LemmaInstance) -> Result<LemmaVerdict> {
    match (id, instance) {
        (LemmaId::L2_2, LemmaInstance::Conditioning { joint, x, y, eps }) => conditioning(joint, x, y, *eps),
        (LemmaId::L2_5, LemmaInstance::Xor { joint, z, e }) => xor_lemma(joint, z, e),
        (LemmaId::L8_1, LemmaInstance::Hybrid { joint, players, context }) => hybrid(joint, players, context),
        (LemmaId::P3_2, LemmaInstance::Additivity { leaked, subset, eps }) => {
            let (lhs, rhs) = additivity_check(leaked, subset, *eps)?;
            // The inequality is H(X_S|E) ≥ bound; report it as bound ≤ H.
            Ok(verdict(id, rhs, lhs))
        }
        _ => invalid(format!("instance kind does not match lemma {id}")),
    }
}

/// `lhs = 1 − ε`, `rhs = Pr_y[H_min(X|Y=y) ≥ H_min(X) − log|Y| − log(1/ε)]`.
fn conditioning(j: &JointDistribution<f64>, x: &str, y: &str, eps: f64) -> Result<LemmaVerdict> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid("ε must be in (0,1)");
    }
    let hx = crate::dist::min_entropy(&j.marginal_distribution(x)?)?;
    let yw = j.width_of(y)?;
    let threshold = hx - yw as f64 - (1.0 / eps).log2();
    let py = j.marginal_distribution(y)?;
    let mut good = 0.0;
    for v in 0..1u32 << yw {
        let p = *py.prob(v);
        if p <= 0.0 {
            continue;
        }
        if let Some(c) = j.conditional(x, &[y], &[v])? {
            if crate::dist::min_entropy(&c)? >= threshold - EPS {
                good += p;
            }
        }
    }
    Ok(verdict(LemmaId::L2_2, 1.0 - eps, good))
}

/// `lhs = Δ(ZE, U⊗E)²`, `rhs = 2^{min(d,m)}·Σ_{S≠∅} Δ(Z_⊕S E, U₁⊗E)²`.
fn xor_lemma(j: &JointDistribution<f64>, z: &str, e: &[String]) -> Result<LemmaVerdict> {
    let mut labels: Vec<&str> = vec![z];
    labels.extend(e.iter().map(|s| s.as_str()));
    let j = j.marginal(&labels)?;
    let m = j.width_of(z)?;
    if m > 8 {
        return invalid("XOR lemma check limited to m ≤ 8");
    }
    let d: u32 = e.iter().map(|l| j.width_of(l)).sum::<Result<u32>>()?;
    let lhs = j.distance_from_uniform(z)?.powi(2);
    let mut sum = 0.0;
    for mask in 1u32..1 << m {
        let subset: Vec<u32> = (1..=m).filter(|&i| mask >> (m - i) & 1 == 1).collect();
        let p = xor_project(&j, z, &subset)?;
        sum += p.distance_from_uniform(z)?.powi(2);
    }
    Ok(verdict(LemmaId::L2_5, lhs, (1u64 << d.min(m)) as f64 * sum))
}

/// `Δ(Z_S X_{−S} C, U ⊗ X_{−S} C)` against `Σ_i Δ(Z_i X_{−i} C, U ⊗ X_{−i} C)`.
fn hybrid(j: &JointDistribution<BigRational>, players: &[(String, String)], context: &[String]) -> Result<LemmaVerdict> {
    if players.is_empty() {
        return invalid("no honest players");
    }
    let xs: Vec<&str> = players.iter().map(|p| p.1.as_str()).collect();
    let ctx: Vec<&str> = context.iter().map(|s| s.as_str()).collect();
    // Set error: all Z's against the xs of nobody in S (all players are in S).
    let mut set_labels: Vec<&str> = ctx.clone();
    let zs: Vec<&str> = players.iter().map(|p| p.0.as_str()).collect();
    set_labels.extend(zs.iter());
    let set_joint = j.marginal(&set_labels)?;
    let zw: u32 = zs.iter().map(|l| j.width_of(l)).sum::<Result<u32>>()?;
    let set_err = uniform_distance_of_tail(&set_joint, zw);
    let mut terms = Vec::new();
    let mut total = <BigRational as Zero>::zero();
    for (i, (z, _)) in players.iter().enumerate() {
        let mut labels: Vec<&str> = ctx.clone();
        labels.extend(xs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, x)| *x));
        labels.push(z.as_str());
        let e = j.marginal(&labels)?.distance_from_uniform(z)?;
        total = total + e.clone();
        terms.push(ExactValue::from_rational(&e));
    }
    let mut v = verdict(LemmaId::L8_1, set_err.to_f64_lossy(), total.to_f64_lossy());
    v.holds = set_err <= total;
    v.exact_lhs = Some(ExactValue::from_rational(&set_err));
    v.exact_rhs = Some(ExactValue::from_rational(&total));
    v.terms = terms;
    Ok(v)
}

/// Distance from uniform of the last `zw` bits jointly with the rest.
fn uniform_distance_of_tail<P: Prob>(j: &JointDistribution<P>, zw: u32) -> P {
    let u = P::from_ratio(1, 1u64 << zw);
    let mut acc = P::zero();
    for chunk in j.mass().chunks(1usize << zw) {
        let mut tot = P::zero();
        for m in chunk {
            tot = tot.add(m);
        }
        let q = tot.mul(&u);
        for m in chunk {
            if *m > q {
                acc = acc.add(&m.sub(&q));
            }
        }
    }
    acc
}

trait Lossy {
    fn to_f64_lossy(&self) -> f64;
}

impl Lossy for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        crate::exact::rational_to_f64(self)
    }
}

/// A random joint over `parts`: i.i.d. exponential weights raised to a power
/// drawn from `[1, 4]`, so trials range from near-uniform to concentrated.
pub fn random_joint(parts: Vec<Part>, rng: &mut ChaCha8Rng) -> Result<JointDistribution<f64>> {
    let total: u32 = parts.iter().map(|p| p.width).sum();
    let skew = rng.gen_range(1.0..=4.0);
    let w: Vec<f64> = (0..1usize << total).map(|_| (-(1.0 - rng.gen::<f64>()).ln()).powf(skew)).collect();
    let sum: f64 = w.iter().sum();
    JointDistribution::new(parts, w.into_iter().map(|x| x / sum).collect())
}

/// Outcome of [`lemma_trials`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub lemma: String,
    pub trials: usize,
    pub eps: Option<f64>,
    pub passed: usize,
    pub pass_rate: f64,
    pub min_slack: f64,
    /// Mean right-hand side; for L2.2 the mean probability of a good `y`.
    pub mean_rhs: f64,
}

/// Random instances of a classical lemma; trial `i` draws from stream `i` of
/// `seed`. L2.2 uses `X` of 8 bits and `Y` of 1 to 3 bits; L2.5 uses `Z` of 1
/// to `max_m` bits and `E` of 1 to 2 bits.
pub fn lemma_trials(id: LemmaId, trials: usize, eps: f64, max_m: u32, seed: u64) -> Result<TrialSummary> {
    if !(1..=3).contains(&max_m) {
        return invalid("max_m must be in 1..=3");
    }
    let mut passed = 0;
    let mut min_slack = f64::INFINITY;
    let mut rhs = 0.0;
    for i in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let inst = match id {
            LemmaId::L2_2 => {
                let yw = rng.gen_range(1..=3);
                let joint = random_joint(vec![Part::new("X", 8), Part::new("Y", yw)], &mut rng)?;
                LemmaInstance::Conditioning { joint, x: "X".into(), y: "Y".into(), eps }
            }
            LemmaId::L2_5 => {
                let (m, d) = (rng.gen_range(1..=max_m), rng.gen_range(1..=2));
                let joint = random_joint(vec![Part::new("Z", m), Part::new("E", d)], &mut rng)?;
                LemmaInstance::Xor { joint, z: "Z".into(), e: vec!["E".into()] }
            }
            _ => return invalid(format!("{id} has no random-trial generator")),
        };
        let v = check_lemma(id, &inst)?;
        passed += v.holds as usize;
        min_slack = min_slack.min(v.slack);
        rhs += v.rhs;
    }
    Ok(TrialSummary {
        lemma: id.to_string(),
        trials,
        eps: (id == LemmaId::L2_2).then_some(eps),
        passed,
        pass_rate: passed as f64 / trials.max(1) as f64,
        min_slack,
        mean_rhs: rhs / trials.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trials_are_reproducible() {
        let a = lemma_trials(LemmaId::L2_5, 20, 0.0, 3, 4).unwrap();
        assert_eq!(a, lemma_trials(LemmaId::L2_5, 20, 0.0, 3, 4).unwrap());
        assert_eq!(a.passed, 20);
        let b = lemma_trials(LemmaId::L2_2, 20, 0.25, 3, 4).unwrap();
        assert!(b.pass_rate >= 0.75 && b.mean_rhs >= 0.75);
        assert!(lemma_trials(LemmaId::L8_1, 1, 0.1, 3, 4).is_err());
    }

    #[test]
    fn ids_parse() {
        assert_eq!("L2.2".parse::<LemmaId>().unwrap(), LemmaId::L2_2);
        assert!("L9.9".parse::<LemmaId>().is_err());
    }

    #[test]
    fn xor_lemma_single_bit_is_tight_without_side_info() {
        let j = JointDistribution::new(vec![Part::new("Z", 1)], vec![0.8, 0.2]).unwrap();
        let v = check_lemma(LemmaId::L2_5, &LemmaInstance::Xor { joint: j, z: "Z".into(), e: vec![] }).unwrap();
        assert!(v.holds);
        assert!(v.slack.abs() < 1e-12);
    }

    #[test]
    fn hybrid_on_independent_uniform_players() {
        let q = BigRational::new(1.into(), 4.into());
        // Z1 = X1, Z2 = X2, both uniform bits: every error is zero.
        let j = JointDistribution::from_outcomes(
            vec![Part::new("X1", 1), Part::new("X2", 1), Part::new("Z1", 1), Part::new("Z2", 1)],
            (0..4u32).map(|v| (vec![v >> 1, v & 1, v >> 1, v & 1], q.clone())),
        )
        .unwrap();
        let inst = LemmaInstance::Hybrid { joint: j, players: vec![("Z1".into(), "X1".into()), ("Z2".into(), "X2".into())], context: vec![] };
        let v = check_lemma(LemmaId::L8_1, &inst).unwrap();
        assert!(v.holds);
        assert_eq!(v.exact_lhs.unwrap().exact, "0/1");
    }

    #[test]
    fn mismatched_instance_rejected() {
        let j = JointDistribution::new(vec![Part::new("Z", 1)], vec![0.5, 0.5]).unwrap();
        assert!(check_lemma(LemmaId::L2_2, &LemmaInstance::Xor { joint: j, z: "Z".into(), e: vec![] }).is_err());
    }
}
