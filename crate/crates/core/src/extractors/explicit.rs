//! Explicit constructions: inner product, cyclic-shift DEOR family, Toeplitz hashing.

use super::{Arity, EvalFn, ExtractorHandle, Provenance};
use crate::bits::{mask, BitString};
use crate::error::{invalid, Result};
use std::sync::Arc;

pub fn ip_raw(x: u32, y: u32) -> u32 {
    (x & y).count_ones() & 1
}

/// GF(2) inner product.
pub fn ip_extract(x: &BitString, y: &BitString) -> Result<BitString> {
    if x.width() != y.width() {
        return invalid("inner product needs equal widths");
    }
    BitString::new(1, ip_raw(x.value(), y.value()))
}

fn rotl(y: u32, j: u32, n: u32) -> u32 {
    let j = j % n;
    if j == 0 {
        y
    } else {
        ((y << j) | (y >> (n - j))) & mask(n)
    }
}

/// Bit `j` (counted from the left, starting at 0) is `⟨x, rotl(y, j)⟩`.
pub fn deor_raw(x: u32, y: u32, n: u32, m: u32) -> u32 {
    (0..m).fold(0, |acc, j| (acc << 1) | ip_raw(x, rotl(y, j, n)))
}

pub fn deor_extract(x: &BitString, y: &BitString, m: u32) -> Result<BitString> {
    if x.width() != y.width() {
        return invalid("DEOR needs equal widths");
    }
    if m == 0 || m > x.width() {
        return invalid(format!("m={m} must be in 1..={}", x.width()));
    }
    BitString::new(m, deor_raw(x.value(), y.value(), x.width(), m))
}

/// `T·x` for the `m × n` Toeplitz matrix with first row = seed bits `1..n` and
/// first column continuing with seed bits `n+1..n+m−1`.
pub fn toeplitz_raw(x: u32, seed: u32, n: u32, m: u32) -> u32 {
    let d = n + m - 1;
    let s = |i: u32| (seed >> (d - i)) & 1; // 1-based seed bit
    let mut out = 0;
    for r in 0..m {
        let mut b = 0;
        for c in 0..n {
            let t = if c >= r { s(c - r + 1) } else { s(n + r - c) };
            b ^= t & (x >> (n - 1 - c)) & 1;
        }
        out = (out << 1) | b;
    }
    out
}

pub fn toeplitz_extract(x: &BitString, seed: &BitString, m: u32) -> Result<BitString> {
    let n = x.width();
    if m == 0 || seed.width() != n + m - 1 {
        return invalid(format!("Toeplitz seed must have width n+m−1 = {}", n + m - 1));
    }
    BitString::new(m, toeplitz_raw(x.value(), seed.value(), n, m))
}

/// Inner product on `n`-bit inputs, declared at full entropy until measured.
pub fn ip_handle(n: u32) -> Result<ExtractorHandle> {
    let f: EvalFn = Arc::new(|v: &[u32]| ip_raw(v[0], v[1]));
    ExtractorHandle::from_fn(format!("ip{n}"), Arity::TwoSource, vec![n, n], 1, vec![n, n], 1.0, vec![0, 1], Provenance::Explicit, f)
}

pub fn deor_handle(n: u32, m: u32) -> Result<ExtractorHandle> {
    if m == 0 || m > n {
        return invalid(format!("m={m} must be in 1..={n}"));
    }
    let f: EvalFn = Arc::new(move |v: &[u32]| deor_raw(v[0], v[1], n, m));
    ExtractorHandle::from_fn(format!("deor{n}x{m}"), Arity::TwoSource, vec![n, n], m, vec![n, n], 1.0, vec![0, 1], Provenance::Explicit, f)
}

/// Seeded Toeplitz hash with seed width `n+m−1`.
pub fn toeplitz_handle(n: u32, m: u32) -> Result<ExtractorHandle> {
    if m == 0 {
        return invalid("m must be ≥ 1");
    }
    let d = n + m - 1;
    let f: EvalFn = Arc::new(move |v: &[u32]| toeplitz_raw(v[0], v[1], n, m));
    ExtractorHandle::from_fn(format!("toeplitz{n}x{m}"), Arity::Seeded, vec![n, d], m, vec![n, d], 1.0, vec![1], Provenance::Explicit, f)
}

/// The XOR of output bits at 1-based positions `subset`.
pub fn strong_projection(h: &ExtractorHandle, subset: &[u32]) -> Result<ExtractorHandle> {
    if subset.is_empty() {
        return invalid("empty projection subset");
    }
    let m = h.out_width;
    if subset.iter().any(|&s| s == 0 || s > m) {
        return invalid(format!("projection index outside 1..={m}"));
    }
    let sel: u32 = subset.iter().fold(0, |acc, &s| acc | 1 << (m - s));
    let inner = h.func();
    let f: EvalFn = Arc::new(move |v: &[u32]| (inner(v) & sel).count_ones() & 1);
    let name = format!("{}[⊕{}]", h.name, subset.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    ExtractorHandle::from_fn(name, h.arity, h.input_widths.clone(), 1, h.k.clone(), h.eps, h.strong.clone(), h.provenance.clone(), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        BitString::from_bin(s).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(ip_extract(&b("1010"), &b("1100")).unwrap().value(), 1);
        assert_eq!(ip_extract(&b("1011"), &b("0000")).unwrap().value(), 0);
        assert!(ip_extract(&b("101"), &b("1100")).is_err());
    }

    #[test]
    fn deor_examples() {
        assert_eq!(deor_extract(&b("1010"), &b("1100"), 2).unwrap().to_bin(), "11");
        for x in 0..16 {
            for y in 0..16 {
                assert_eq!(deor_raw(x, y, 4, 1), ip_raw(x, y));
            }
        }
        assert!(deor_extract(&b("10"), &b("11"), 3).is_err());
    }

    #[test]
    fn toeplitz_examples() {
        assert_eq!(toeplitz_extract(&b("1011"), &b("00000"), 2).unwrap().value(), 0);
        assert_eq!(toeplitz_extract(&b("1"), &b("1"), 1).unwrap().value(), 1);
        assert_eq!(toeplitz_extract(&b("0"), &b("1"), 1).unwrap().value(), 0);
        assert!(toeplitz_extract(&b("1011"), &b("0000"), 2).is_err());
        // Matrix rows for n=3, m=2, seed s1..s4 = 1,0,0,1: row1 = (1,0,0), row2 = (1,1,0).
        assert_eq!(toeplitz_extract(&b("100"), &b("1001"), 2).unwrap().to_bin(), "11");
        assert_eq!(toeplitz_extract(&b("010"), &b("1001"), 2).unwrap().to_bin(), "01");
    }

    #[test]
    fn projection_examples() {
        let h = deor_handle(4, 2).unwrap();
        let p = strong_projection(&h, &[1, 2]).unwrap();
        for x in 0..16 {
            for y in 0..16 {
                assert_eq!(p.eval_raw(&[x, y]), ip_raw(x, y) ^ ip_raw(x, rotl(y, 1, 4)));
            }
        }
        let ip = ip_handle(3).unwrap();
        let same = strong_projection(&ip, &[1]).unwrap();
        assert_eq!(same.truth_table().unwrap().words(), ip.truth_table().unwrap().words());
        assert!(strong_projection(&ip, &[]).is_err());
        assert!(strong_projection(&ip, &[2]).is_err());
    }
}
