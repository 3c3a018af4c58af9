//! Explicit distributions over small outcome spaces, entropy and distance.
//!
//! Composite outcomes are packed with the first part in the most significant
//! bits, so a joint over `(X, E)` indexes as `x << width(E) | e`.

use crate::error::{invalid, Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt::Debug;

/// Composite outcome spaces are capped at 2^24 states.
pub const MAX_TOTAL_WIDTH: u32 = 24;
/// Exact-rational distributions are limited to this many bits.
pub const MAX_EXACT_WIDTH: u32 = 12;
/// Normalization tolerance for float masses.
pub const TOLERANCE: f64 = 1e-12;

/// Probability arithmetic shared by float and exact masses.
pub trait Prob: Clone + PartialEq + PartialOrd + Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: u64, den: u64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether `sum` counts as a normalized total.
    fn is_unit(sum: &Self) -> bool;
    fn is_exact() -> bool;
}

impl Prob for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_unit(sum: &Self) -> bool {
        (sum - 1.0).abs() <= TOLERANCE
    }
    fn is_exact() -> bool {
        false
    }
}

impl Prob for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_unit(sum: &Self) -> bool {
        sum.is_one()
    }
    fn is_exact() -> bool {
        true
    }
}

fn check_width<P: Prob>(width: u32) -> Result<()> {
    if width > MAX_TOTAL_WIDTH {
        return Err(Error::TooLarge { bits: width });
    }
    if P::is_exact() && width > MAX_EXACT_WIDTH {
        return invalid(format!("exact mode limited to {MAX_EXACT_WIDTH} bits, got {width}"));
    }
    Ok(())
}

fn validate_masses<P: Prob>(mass: &[P]) -> Result<()> {
    let zero = P::zero();
    let mut sum = P::zero();
    for m in mass {
        if *m < zero {
            return invalid("negative mass");
        }
        sum = sum.add(m);
    }
    if sum == zero {
        return invalid("zero-mass distribution");
    }
    if !P::is_unit(&sum) {
        return invalid(format!("masses sum to {} not 1", sum.to_f64()));
    }
    Ok(())
}

/// A distribution over `{0,1}^width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "P: Serialize", deserialize = "P: Deserialize<'de>"))]
pub struct Distribution<P = f64> {
    width: u32,
    mass: Vec<P>,
}

impl<P: Prob> Distribution<P> {
    pub fn new(width: u32, mass: Vec<P>) -> Result<Self> {
        check_width::<P>(width)?;
        if mass.len() != 1usize << width {
            return invalid(format!("expected {} masses, got {}", 1usize << width, mass.len()));
        }
        validate_masses(&mass)?;
        Ok(Self { width, mass })
    }

    pub fn uniform(width: u32) -> Result<Self> {
        check_width::<P>(width)?;
        let n = 1u64 << width;
        Ok(Self { width, mass: vec![P::from_ratio(1, n); n as usize] })
    }

    pub fn point(width: u32, x: u32) -> Result<Self> {
        check_width::<P>(width)?;
        if (x as u64) >> width != 0 {
            return invalid("point outside outcome space");
        }
        let mut mass = vec![P::zero(); 1usize << width];
        mass[x as usize] = P::one();
        Ok(Self { width, mass })
    }

    /// Uniform over `support` (duplicates rejected).
    pub fn flat(width: u32, support: &[u32]) -> Result<Self> {
        check_width::<P>(width)?;
        let mut mass = vec![P::zero(); 1usize << width];
        let p = P::from_ratio(1, support.len() as u64);
        for &s in support {
            let slot = mass.get_mut(s as usize).ok_or_else(|| Error::InvalidInput("support element out of range".into()))?;
            if *slot != P::zero() {
                return invalid("duplicate support element");
            }
            *slot = p.clone();
        }
        Self::new(width, mass)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn mass(&self) -> &[P] {
        &self.mass
    }

    pub fn prob(&self, x: u32) -> &P {
        &self.mass[x as usize]
    }

    pub fn support(&self) -> Vec<u32> {
        let zero = P::zero();
        (0..self.mass.len() as u32).filter(|&x| self.mass[x as usize] != zero).collect()
    }

    /// Push-forward through `f` into `{0,1}^out_width`.
    pub fn map(&self, out_width: u32, f: impl Fn(u32) -> u32) -> Result<Self> {
        check_width::<P>(out_width)?;
        let mut mass = vec![P::zero(); 1usize << out_width];
        for (x, m) in self.mass.iter().enumerate() {
            let y = f(x as u32) as usize;
            if y >= mass.len() {
                return invalid("map output exceeds declared width");
            }
            mass[y] = mass[y].add(m);
        }
        Ok(Self { width: out_width, mass })
    }

    pub fn into_joint(self, label: &str) -> JointDistribution<P> {
        JointDistribution { parts: vec![Part::new(label, self.width)], mass: self.mass }
    }
}

/// `min_x −log₂ P(x)` over the support.
pub fn min_entropy<P: Prob>(d: &Distribution<P>) -> Result<f64> {
    let mut best = P::zero();
    for m in &d.mass {
        if *m > best {
            best = m.clone();
        }
    }
    if best == P::zero() {
        return invalid("zero-mass distribution");
    }
    Ok(-best.to_f64().log2())
}

/// `Σ_{p(x)>q(x)} (p(x) − q(x))`.
pub fn statistical_distance<P: Prob>(p: &Distribution<P>, q: &Distribution<P>) -> Result<P> {
    if p.width != q.width {
        return invalid(format!("width mismatch {} vs {}", p.width, q.width));
    }
    Ok(positive_part_sum(&p.mass, &q.mass))
}

fn positive_part_sum<P: Prob>(p: &[P], q: &[P]) -> P {
    let mut acc = P::zero();
    for (a, b) in p.iter().zip(q) {
        if a > b {
            acc = acc.add(&a.sub(b));
        }
    }
    acc
}

/// A labelled component of a joint outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub label: String,
    pub width: u32,
}

impl Part {
    pub fn new(label: &str, width: u32) -> Self {
        Part { label: label.to_string(), width }
    }
}

/// A distribution over labelled parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "P: Serialize", deserialize = "P: Deserialize<'de>"))]
pub struct JointDistribution<P = f64> {
    parts: Vec<Part>,
    mass: Vec<P>,
}

impl<P: Prob> JointDistribution<P> {
    pub fn new(parts: Vec<Part>, mass: Vec<P>) -> Result<Self> {
        let total = total_width(&parts)?;
        check_width::<P>(total)?;
        if mass.len() != 1usize << total {
            return invalid(format!("expected {} masses, got {}", 1usize << total, mass.len()));
        }
        validate_masses(&mass)?;
        Ok(Self { parts, mass })
    }

    /// Builds a joint from weighted outcomes; each outcome lists one value per part.
    pub fn from_outcomes(parts: Vec<Part>, outcomes: impl IntoIterator<Item = (Vec<u32>, P)>) -> Result<Self> {
        let total = total_width(&parts)?;
        check_width::<P>(total)?;
        let mut mass = vec![P::zero(); 1usize << total];
        let layout = Layout::new(&parts);
        for (vals, w) in outcomes {
            let idx = layout.pack(&vals)?;
            mass[idx] = mass[idx].add(&w);
        }
        Self::new(parts, mass)
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn mass(&self) -> &[P] {
        &self.mass
    }

    pub fn total_width(&self) -> u32 {
        self.parts.iter().map(|p| p.width).sum()
    }

    pub fn part_index(&self, label: &str) -> Result<usize> {
        self.parts
            .iter()
            .position(|p| p.label == label)
            .ok_or_else(|| Error::InvalidInput(format!("no part labelled {label:?}")))
    }

    pub fn width_of(&self, label: &str) -> Result<u32> {
        Ok(self.parts[self.part_index(label)?].width)
    }

    /// Values of every part for composite outcome `idx`.
    pub fn unpack(&self, idx: usize) -> Vec<u32> {
        Layout::new(&self.parts).unpack(idx)
    }

    /// Independent product; `other`'s parts follow `self`'s.
    pub fn product(&self, other: &JointDistribution<P>) -> Result<Self> {
        for p in &other.parts {
            if self.parts.iter().any(|q| q.label == p.label) {
                return invalid(format!("duplicate label {:?}", p.label));
            }
        }
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        let total = total_width(&parts)?;
        check_width::<P>(total)?;
        let w2 = other.total_width();
        let mut mass = Vec::with_capacity(1usize << total);
        for a in &self.mass {
            for b in &other.mass {
                mass.push(a.mul(b));
            }
        }
        debug_assert_eq!(mass.len(), 1usize << (self.total_width() + w2));
        Ok(Self { parts, mass })
    }

    /// Marginal on `labels`, in the given order.
    pub fn marginal(&self, labels: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = labels.iter().map(|l| self.part_index(l)).collect::<Result<_>>()?;
        let mut seen = idx.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != idx.len() {
            return invalid("repeated label in marginal");
        }
        let parts: Vec<Part> = idx.iter().map(|&i| self.parts[i].clone()).collect();
        let layout = Layout::new(&self.parts);
        let out = Layout::new(&parts);
        let mut mass = vec![P::zero(); 1usize << out.total];
        let mut buf = Vec::with_capacity(idx.len());
        for (c, m) in self.mass.iter().enumerate() {
            if *m == P::zero() {
                continue;
            }
            let vals = layout.unpack(c);
            buf.clear();
            buf.extend(idx.iter().map(|&i| vals[i]));
            let o = out.pack(&buf).expect("values fit by construction");
            mass[o] = mass[o].add(m);
        }
        Ok(Self { parts, mass })
    }

    /// The single-part view of a one-part joint.
    pub fn to_distribution(&self) -> Distribution<P> {
        Distribution { width: self.total_width(), mass: self.mass.clone() }
    }

    pub fn marginal_distribution(&self, label: &str) -> Result<Distribution<P>> {
        Ok(self.marginal(&[label])?.to_distribution())
    }

    /// Relabels parts in place order.
    pub fn relabel(mut self, labels: &[&str]) -> Result<Self> {
        if labels.len() != self.parts.len() {
            return invalid("relabel arity mismatch");
        }
        for (p, l) in self.parts.iter_mut().zip(labels) {
            p.label = l.to_string();
        }
        Ok(self)
    }

    /// Push-forward of whole outcomes through `f`, which receives the per-part
    /// values and returns the per-part values of the new joint.
    pub fn map(&self, parts: Vec<Part>, f: impl Fn(&[u32]) -> Vec<u32>) -> Result<Self> {
        let total = total_width(&parts)?;
        check_width::<P>(total)?;
        let inl = Layout::new(&self.parts);
        let outl = Layout::new(&parts);
        let mut mass = vec![P::zero(); 1usize << total];
        for (c, m) in self.mass.iter().enumerate() {
            if *m == P::zero() {
                continue;
            }
            let o = outl.pack(&f(&inl.unpack(c)))?;
            mass[o] = mass[o].add(m);
        }
        Ok(Self { parts, mass })
    }

    /// The conditional distribution of `target` given `given = values`; `None` on
    /// a zero-probability condition.
    pub fn conditional(&self, target: &str, given: &[&str], values: &[u32]) -> Result<Option<Distribution<P>>> {
        let mut labels = given.to_vec();
        labels.push(target);
        let j = self.marginal(&labels)?;
        let tw = self.width_of(target)?;
        let layout = Layout::new(&j.parts[..given.len()]);
        let g = if given.is_empty() { 0 } else { layout.pack(values)? };
        let slice = &j.mass[g << tw..(g + 1) << tw];
        let mut tot = P::zero();
        for m in slice {
            tot = tot.add(m);
        }
        if tot == P::zero() {
            return Ok(None);
        }
        let mass = slice.iter().map(|m| m.div(&tot)).collect();
        Ok(Some(Distribution { width: tw, mass }))
    }

    /// `−log₂ Σ_e max_x P(target = x, given = e)`.
    pub fn cond_min_entropy(&self, target: &str, given: &[&str]) -> Result<f64> {
        let g = self.guessing_probability(target, given)?;
        Ok(-g.to_f64().log2())
    }

    /// Optimal probability of guessing `target` from `given`.
    pub fn guessing_probability(&self, target: &str, given: &[&str]) -> Result<P> {
        if given.contains(&target) {
            return invalid("target and given labels overlap");
        }
        let mut labels = given.to_vec();
        labels.push(target);
        let j = self.marginal(&labels)?;
        let tw = self.width_of(target)?;
        let mut acc = P::zero();
        for chunk in j.mass.chunks(1usize << tw) {
            let mut best = P::zero();
            for m in chunk {
                if *m > best {
                    best = m.clone();
                }
            }
            acc = acc.add(&best);
        }
        Ok(acc)
    }

    /// Distance of this joint from `U_{width(label)} ⊗ (marginal on the other parts)`.
    pub fn distance_from_uniform(&self, label: &str) -> Result<P> {
        let i = self.part_index(label)?;
        let mut order: Vec<&str> = self.parts.iter().filter(|p| p.label != label).map(|p| p.label.as_str()).collect();
        order.push(&self.parts[i].label);
        let j = self.marginal(&order)?;
        let zw = self.parts[i].width;
        let u = P::from_ratio(1, 1u64 << zw);
        let mut acc = P::zero();
        for chunk in j.mass.chunks(1usize << zw) {
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
        Ok(acc)
    }

    /// Distance between two joints with identical layout.
    pub fn statistical_distance(&self, other: &JointDistribution<P>) -> Result<P> {
        if self.parts != other.parts {
            return invalid("part layout mismatch");
        }
        Ok(positive_part_sum(&self.mass, &other.mass))
    }
}

/// Replaces part `label` by the XOR of its bits at 1-based positions `subset`
/// (position 1 is the leftmost bit); the new 1-bit part keeps the label.
pub fn xor_project<P: Prob>(d: &JointDistribution<P>, label: &str, subset: &[u32]) -> Result<JointDistribution<P>> {
    if subset.is_empty() {
        return invalid("empty XOR subset");
    }
    let i = d.part_index(label)?;
    let w = d.parts[i].width;
    if subset.iter().any(|&s| s == 0 || s > w) {
        return invalid(format!("subset index outside 1..={w}"));
    }
    let sel: u32 = subset.iter().fold(0, |m, &s| m | 1 << (w - s));
    let mut parts = d.parts.clone();
    parts[i].width = 1;
    d.map(parts, |vals| {
        let mut v = vals.to_vec();
        v[i] = (vals[i] & sel).count_ones() & 1;
        v
    })
}

fn total_width(parts: &[Part]) -> Result<u32> {
    if parts.is_empty() {
        return invalid("joint needs at least one part");
    }
    let mut t = 0u32;
    for p in parts {
        if p.width == 0 {
            return invalid(format!("part {:?} has zero width", p.label));
        }
        t += p.width;
    }
    if t > MAX_TOTAL_WIDTH {
        return Err(Error::TooLarge { bits: t });
    }
    Ok(t)
}

/// Packing of per-part values into composite indices.
#[derive(Clone, Debug)]
pub struct Layout {
    widths: Vec<u32>,
    offsets: Vec<u32>,
    pub total: u32,
}

impl Layout {
    pub fn new(parts: &[Part]) -> Self {
        Self::from_widths(&parts.iter().map(|p| p.width).collect::<Vec<_>>())
    }

    pub fn from_widths(widths: &[u32]) -> Self {
        let total: u32 = widths.iter().sum();
        let mut offsets = Vec::with_capacity(widths.len());
        let mut acc = total;
        for w in widths {
            acc -= w;
            offsets.push(acc);
        }
        Layout { widths: widths.to_vec(), offsets, total }
    }

    pub fn pack(&self, vals: &[u32]) -> Result<usize> {
        if vals.len() != self.widths.len() {
            return invalid("value count does not match part count");
        }
        let mut idx = 0usize;
        for ((&v, &w), &o) in vals.iter().zip(&self.widths).zip(&self.offsets) {
            if (v as u64) >> w != 0 {
                return invalid(format!("value {v} exceeds {w}-bit part"));
            }
            idx |= (v as usize) << o;
        }
        Ok(idx)
    }

    pub fn unpack(&self, idx: usize) -> Vec<u32> {
        self.widths
            .iter()
            .zip(&self.offsets)
            .map(|(&w, &o)| ((idx >> o) as u32) & crate::bits::mask(w))
            .collect()
    }
}

const MAGIC: &[u8; 4] = b"XDST";
const VERSION: u16 = 1;

impl JointDistribution<f64> {
    /// Versioned binary form: magic, version, total width, part count, per part
    /// (width, label length, label bytes), then little-endian f64 masses.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.total_width() as u8);
        out.push(self.parts.len() as u8);
        for p in &self.parts {
            out.push(p.width as u8);
            out.push(p.label.len() as u8);
            out.extend_from_slice(p.label.as_bytes());
        }
        for m in &self.mass {
            out.extend_from_slice(&m.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(m.to_string());
        if b.len() < 8 || &b[..4] != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != VERSION {
            return Err(bad("unsupported version"));
        }
        let total = b[6] as u32;
        let count = b[7] as usize;
        let mut pos = 8;
        let mut parts = Vec::with_capacity(count);
        for _ in 0..count {
            let w = *b.get(pos).ok_or_else(|| bad("truncated header"))? as u32;
            let l = *b.get(pos + 1).ok_or_else(|| bad("truncated header"))? as usize;
            let label = b.get(pos + 2..pos + 2 + l).ok_or_else(|| bad("truncated label"))?;
            parts.push(Part { label: String::from_utf8(label.to_vec()).map_err(|_| bad("label not utf-8"))?, width: w });
            pos += 2 + l;
        }
        if parts.iter().map(|p| p.width).sum::<u32>() != total {
            return Err(bad("width mismatch"));
        }
        let n = 1usize << total;
        let body = b.get(pos..).ok_or_else(|| bad("truncated body"))?;
        if body.len() != n * 8 {
            return Err(bad("mass array length"));
        }
        let mass = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Self::new(parts, mass)
    }
}

impl<P: Prob + Serialize> JointDistribution<P> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("joint serializes")
    }
}
