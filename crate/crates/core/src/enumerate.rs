//! Subset enumeration in colexicographic order.

/// `C(n, k)` without overflow for the sizes used here; saturates at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `0..n` (n ≤ 64) as bitmasks, colex order.
pub struct ColexMasks {
    next: Option<u64>,
    limit: u128,
}

impl ColexMasks {
    pub fn new(n: u32, k: u32) -> Self {
        assert!(n <= 64 && k <= n);
        let first = if k == 0 { 0 } else if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        ColexMasks { next: Some(first), limit: 1u128 << n }
    }
}

impl Iterator for ColexMasks {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        // Gosper's hack yields the next mask with the same popcount in colex order.
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = (cur as u128) + (c as u128);
            if r >= self.limit {
                None
            } else {
                let r = r as u64;
                Some((((r ^ cur) >> 2) / c) | r)
            }
        };
        Some(cur)
    }
}

/// Elements of a mask in increasing order.
pub fn mask_elements(mut m: u64) -> Vec<u32> {
    let mut v = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        v.push(m.trailing_zeros());
        m &= m - 1;
    }
    v
}

/// Calls `f` on every `k`-subset of `0..n` as a sorted element list, colex order.
pub fn for_each_k_subset(n: u32, k: u32, mut f: impl FnMut(&[u32])) {
    if k > n {
        return;
    }
    let k = k as usize;
    let mut c: Vec<u32> = (0..k as u32).collect();
    loop {
        f(&c);
        // Smallest j whose element can advance without colliding with c[j+1].
        let mut j = 0;
        while j < k {
            let limit = if j + 1 < k { c[j + 1] } else { n };
            if c[j] + 1 < limit {
                break;
            }
            j += 1;
        }
        if j == k {
            return;
        }
        c[j] += 1;
        for (i, v) in c.iter_mut().enumerate().take(j) {
            *v = i as u32;
        }
    }
}

/// All `k`-subsets of `0..n` as sorted element lists, colex order.
pub fn k_subsets(n: u32, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for_each_k_subset(n, k, |s| out.push(s.to_vec()));
    out
}

/// Restricted-growth strings of length `len` with at most `blocks` blocks: each
/// canonical labelling of a set partition appears once.
pub fn set_partitions(len: usize, blocks: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    if len == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut cur = vec![0u8; len];
    fn rec(i: usize, max: u8, blocks: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        let top = (max as usize + 1).min(blocks - 1) as u8;
        for v in 0..=top {
            cur[i] = v;
            rec(i + 1, max.max(v), blocks, cur, out);
        }
    }
    rec(1, 0, blocks.max(1), &mut cur, &mut out);
    out
}

/// Number of set partitions of `len` items into at most `blocks` blocks.
pub fn count_set_partitions(len: u64, blocks: u64) -> u128 {
    // Stirling numbers of the second kind, summed.
    let b = blocks.min(len) as usize;
    let mut row = vec![0u128; b + 1];
    row[0] = 1;
    for _ in 0..len {
        let mut next = vec![0u128; b + 1];
        for j in 1..=b {
            next[j] = row[j].saturating_mul(j as u128).saturating_add(row[j - 1]);
        }
        row = next;
    }
    row.iter().skip(1).fold(0u128, |a, &v| a.saturating_add(v)) + if len == 0 { 1 } else { 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colex_counts_and_order() {
        assert_eq!(ColexMasks::new(16, 8).count() as u128, binomial(16, 8));
        let v: Vec<u64> = ColexMasks::new(4, 2).collect();
        assert_eq!(v, vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(ColexMasks::new(5, 0).count(), 1);
        assert_eq!(ColexMasks::new(5, 5).count(), 1);
        assert_eq!(ColexMasks::new(64, 1).count(), 64);
    }

    #[test]
    fn list_subsets_match_masks() {
        let a = k_subsets(6, 3);
        let b: Vec<Vec<u32>> = ColexMasks::new(6, 3).map(mask_elements).collect();
        assert_eq!(a, b);
        assert_eq!(k_subsets(100, 1).len(), 100);
        assert_eq!(k_subsets(4, 0), vec![Vec::<u32>::new()]);
        assert_eq!(k_subsets(70, 70).len(), 1);
    }

    #[test]
    fn partitions() {
        // Bell numbers and truncated sums.
        assert_eq!(set_partitions(4, 4).len(), 15);
        assert_eq!(set_partitions(8, 2).len(), 128);
        assert_eq!(count_set_partitions(8, 2), 128);
        assert_eq!(count_set_partitions(4, 4), 15);
        assert_eq!(set_partitions(3, 1), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(64, 4), 635376);
        assert_eq!(binomial(3, 5), 0);
    }
}
