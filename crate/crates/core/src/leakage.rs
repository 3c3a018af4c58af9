//! Classical side-information model for the OA and GE settings.
//!
//! Each source `X_i` owns a slice `A_i` of a shared register `A`, and a
//! deterministic map produces `E_i = f_i(X_i, A_i)`. The adversary holds
//! `(E_1, …, E_t)`. The entropy of source `i` is measured right after its own
//! leak: `k_i = H_min(X_i | E_i, A_{−i})`.

use crate::dist::{Distribution, JointDistribution, Part, Prob};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeakModel {
    /// Exactly one source leaks.
    Oa,
    /// Every source may leak, with entangled (here, correlated) registers.
    Ge,
}

/// A deterministic map `(x, a) → e`, tabulated at index `x << a_width | a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakMap {
    pub x_width: u32,
    pub a_width: u32,
    /// 0 for the trivial map.
    pub e_width: u32,
    pub table: Vec<u32>,
}

impl LeakMap {
    pub fn trivial(x_width: u32, a_width: u32) -> Self {
        LeakMap { x_width, a_width, e_width: 0, table: vec![0; 1usize << (x_width + a_width)] }
    }

    pub fn from_fn(x_width: u32, a_width: u32, e_width: u32, f: impl Fn(u32, u32) -> u32) -> Result<Self> {
        let mut table = Vec::with_capacity(1usize << (x_width + a_width));
        for x in 0..1u32 << x_width {
            for a in 0..1u32 << a_width {
                let e = f(x, a);
                if (e as u64) >> e_width != 0 {
                    return invalid(format!("leak output {e} exceeds declared width {e_width}"));
                }
                table.push(e);
            }
        }
        Ok(LeakMap { x_width, a_width, e_width, table })
    }

    pub fn is_trivial(&self) -> bool {
        self.e_width == 0
    }

    pub fn apply(&self, x: u32, a: u32) -> u32 {
        self.table[((x << self.a_width) | a) as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageScenario {
    pub source_widths: Vec<u32>,
    /// Widths of `A_1, …, A_t`; zero for sources without a shared slice.
    pub shared_widths: Vec<u32>,
    pub maps: Vec<LeakMap>,
    pub model: LeakModel,
}

impl LeakageScenario {
    pub fn trivial(source_widths: &[u32]) -> Self {
        LeakageScenario {
            source_widths: source_widths.to_vec(),
            shared_widths: vec![0; source_widths.len()],
            maps: source_widths.iter().map(|&w| LeakMap::trivial(w, 0)).collect(),
            model: LeakModel::Ge,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.source_widths.len();
        if self.shared_widths.len() != t || self.maps.len() != t {
            return invalid("scenario lists disagree on source count");
        }
        for (i, m) in self.maps.iter().enumerate() {
            if m.x_width != self.source_widths[i] || m.a_width != self.shared_widths[i] {
                return invalid(format!("leak map {i} has mismatched input widths"));
            }
            if m.table.iter().any(|&e| (e as u64) >> m.e_width != 0) {
                return invalid(format!("leak map {i} output exceeds declared width"));
            }
        }
        if self.model == LeakModel::Oa && self.maps.iter().filter(|m| !m.is_trivial()).count() != 1 {
            return invalid("OA scenario requires exactly one non-trivial leakage map");
        }
        Ok(())
    }

    pub fn shared_width(&self) -> u32 {
        self.shared_widths.iter().sum()
    }
}

/// Result of applying a scenario.
#[derive(Clone, Debug)]
pub struct Leaked<P: Prob> {
    /// Parts `X1..Xt` then `Ei` for every non-trivial map, in source order.
    pub joint: JointDistribution<P>,
    /// `k_i = H_min(X_i | E_i, A_{−i})`, per source.
    pub k: Vec<f64>,
    pub e_labels: Vec<String>,
}

pub fn x_label(i: usize) -> String {
    format!("X{}", i + 1)
}

pub fn e_label(i: usize) -> String {
    format!("E{}", i + 1)
}

fn a_label(i: usize) -> String {
    format!("A{}", i + 1)
}

/// Applies every leak map to independent sources and the shared register.
pub fn leakage_apply<P: Prob>(sources: &[Distribution<P>], sc: &LeakageScenario, shared: &Distribution<P>) -> Result<Leaked<P>> {
    sc.validate()?;
    let t = sources.len();
    if t != sc.source_widths.len() {
        return invalid("source count mismatch");
    }
    for (i, s) in sources.iter().enumerate() {
        if s.width() != sc.source_widths[i] {
            return invalid(format!("source {i} width mismatch"));
        }
    }
    let aw = sc.shared_width();
    if aw > 0 && shared.width() != aw {
        return invalid(format!("shared register width {} vs declared {aw}", shared.width()));
    }

    // Joint over (X.., A_i with non-zero width).
    let mut joint = sources[0].clone().into_joint(&x_label(0));
    for (i, s) in sources.iter().enumerate().skip(1) {
        joint = joint.product(&s.clone().into_joint(&x_label(i)))?;
    }
    let a_idx: Vec<usize> = (0..t).filter(|&i| sc.shared_widths[i] > 0).collect();
    if aw > 0 {
        let aparts: Vec<Part> = a_idx.iter().map(|&i| Part::new(&a_label(i), sc.shared_widths[i])).collect();
        let aj = JointDistribution::new(aparts, shared.mass().to_vec())?;
        joint = joint.product(&aj)?;
    }

    // Append E_i for non-trivial maps.
    let leaky: Vec<usize> = (0..t).filter(|&i| !sc.maps[i].is_trivial()).collect();
    let mut parts = joint.parts().to_vec();
    for &i in &leaky {
        parts.push(Part::new(&e_label(i), sc.maps[i].e_width));
    }
    let a_pos: Vec<Option<usize>> = (0..t).map(|i| a_idx.iter().position(|&j| j == i).map(|p| t + p)).collect();
    let full = joint.map(parts, |v| {
        let mut out = v.to_vec();
        for &i in &leaky {
            let a = a_pos[i].map(|p| v[p]).unwrap_or(0);
            out.push(sc.maps[i].apply(v[i], a));
        }
        out
    })?;

    let mut k = Vec::with_capacity(t);
    for i in 0..t {
        let mut given: Vec<String> = Vec::new();
        if !sc.maps[i].is_trivial() {
            given.push(e_label(i));
        }
        for &j in &a_idx {
            if j != i {
                given.push(a_label(j));
            }
        }
        let g: Vec<&str> = given.iter().map(|s| s.as_str()).collect();
        k.push(full.cond_min_entropy(&x_label(i), &g)?);
    }

    let mut keep: Vec<String> = (0..t).map(x_label).collect();
    let e_labels: Vec<String> = leaky.iter().map(|&i| e_label(i)).collect();
    keep.extend(e_labels.iter().cloned());
    let kr: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
    Ok(Leaked { joint: full.marginal(&kr)?, k, e_labels })
}

/// Classical check of the additivity bound: `H_min(X_S | E) ≥ Σ_{i∈S} k_i − (s−1)·log₂(2/ε²)`.
/// Returns `(lhs, rhs)`.
pub fn additivity_check<P: Prob>(leaked: &Leaked<P>, subset: &[usize], eps: f64) -> Result<(f64, f64)> {
    if subset.is_empty() || !(eps > 0.0 && eps < 1.0) {
        return invalid("subset must be non-empty and ε in (0,1)");
    }
    let xs: Vec<String> = subset.iter().map(|&i| x_label(i)).collect();
    let mut labels: Vec<&str> = xs.iter().map(|s| s.as_str()).collect();
    let e: Vec<&str> = leaked.e_labels.iter().map(|s| s.as_str()).collect();
    labels.extend(e.iter());
    let m = leaked.joint.marginal(&labels)?;
    // Merge the X_S parts into one target by guessing over their product.
    let xw: u32 = subset.iter().map(|&i| leaked.joint.width_of(&x_label(i))).sum::<Result<u32>>()?;
    let ew: u32 = e.iter().map(|l| leaked.joint.width_of(l)).sum::<Result<u32>>()?;
    let mut parts = vec![Part::new("XS", xw)];
    if ew > 0 {
        parts.push(Part::new("E", ew));
    }
    let merged = JointDistribution::new(parts, m.mass().to_vec())?;
    let lhs = if ew > 0 { merged.cond_min_entropy("XS", &["E"])? } else { merged.cond_min_entropy("XS", &[])? };
    let s = subset.len() as f64;
    let rhs = subset.iter().map(|&i| leaked.k[i]).sum::<f64>() - (s - 1.0) * (2.0 / (eps * eps)).log2();
    Ok((lhs, rhs))
}
