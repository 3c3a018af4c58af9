//! Truth tables: the canonical object the oracle measures.

use crate::dist::Layout;
use crate::error::{invalid, Error, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Largest composite input width of a table.
pub const MAX_TABLE_WIDTH: u32 = 24;

/// Outputs for every composite input; input 0 occupies the most significant bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    widths: Vec<u32>,
    out_width: u32,
    words: Vec<u32>,
}

impl TruthTable {
    pub fn new(widths: Vec<u32>, out_width: u32, words: Vec<u32>) -> Result<Self> {
        let total: u32 = widths.iter().sum();
        if total == 0 || total > MAX_TABLE_WIDTH {
            return Err(Error::TooLarge { bits: total });
        }
        if widths.contains(&0) {
            return invalid("zero-width table input");
        }
        if out_width == 0 || out_width > 24 {
            return invalid(format!("output width {out_width} outside 1..=24"));
        }
        if words.len() != 1usize << total {
            return invalid("word count does not match input widths");
        }
        if words.iter().any(|&w| (w as u64) >> out_width != 0) {
            return invalid("table word exceeds output width");
        }
        Ok(Self { widths, out_width, words })
    }

    /// Tabulates `f` over every input tuple.
    pub fn from_fn(widths: Vec<u32>, out_width: u32, f: impl Fn(&[u32]) -> u32 + Sync) -> Result<Self> {
        let total: u32 = widths.iter().sum();
        if total == 0 || total > MAX_TABLE_WIDTH {
            return Err(Error::TooLarge { bits: total });
        }
        let layout = Layout::from_widths(&widths);
        let words: Vec<u32> = (0..1usize << total).into_par_iter().map(|i| f(&layout.unpack(i))).collect();
        Self::new(widths, out_width, words)
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn out_width(&self) -> u32 {
        self.out_width
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn total_width(&self) -> u32 {
        self.widths.iter().sum()
    }

    pub fn index(&self, inputs: &[u32]) -> Result<usize> {
        Layout::from_widths(&self.widths).pack(inputs)
    }

    pub fn eval(&self, inputs: &[u32]) -> Result<u32> {
        Ok(self.words[self.index(inputs)?])
    }

    /// Bytes per stored word.
    pub fn word_bytes(&self) -> usize {
        self.out_width.div_ceil(8) as usize
    }

    /// Little-endian words, `word_bytes` each.
    pub fn to_bytes(&self) -> Vec<u8> {
        let wb = self.word_bytes();
        let mut out = Vec::with_capacity(self.words.len() * wb);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes()[..wb]);
        }
        out
    }

    pub fn from_bytes(widths: Vec<u32>, out_width: u32, bytes: &[u8]) -> Result<Self> {
        let wb = out_width.div_ceil(8) as usize;
        if wb == 0 || bytes.len() % wb != 0 {
            return invalid("table byte length");
        }
        let words = bytes
            .chunks_exact(wb)
            .map(|c| {
                let mut b = [0u8; 4];
                b[..wb].copy_from_slice(c);
                u32::from_le_bytes(b)
            })
            .collect();
        Self::new(widths, out_width, words)
    }

    /// SHA-256 of the table bytes, hex.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    /// The same table under a different split of its input bits.
    pub fn regroup(&self, widths: Vec<u32>) -> Result<Self> {
        if widths.iter().sum::<u32>() != self.total_width() {
            return invalid("regrouped widths must preserve the total");
        }
        Self::new(widths, self.out_width, self.words.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_bytes() {
        let t = TruthTable::from_fn(vec![2, 1], 3, |v| (v[0] << 1) | v[1]).unwrap();
        assert_eq!(t.eval(&[2, 1]).unwrap(), 5);
        assert_eq!(t.words()[0b101], 5);
        let b = t.to_bytes();
        assert_eq!(TruthTable::from_bytes(vec![2, 1], 3, &b).unwrap(), t);
        assert_eq!(t.digest().len(), 64);
    }
}
