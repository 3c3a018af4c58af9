//! Fixed-width binary words.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest width of a single word.
pub const MAX_WIDTH: u32 = 24;

/// A bit string of fixed width. Bit 1 (the first, leftmost bit) is the most
/// significant bit of `bits`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitString {
    width: u32,
    bits: u32,
}

impl BitString {
    pub fn new(width: u32, bits: u32) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return invalid(format!("width {width} outside 1..={MAX_WIDTH}"));
        }
        if (bits as u64) >> width != 0 {
            return invalid(format!("value {bits:#x} does not fit in {width} bits"));
        }
        Ok(Self { width, bits })
    }

    pub fn zeros(width: u32) -> Result<Self> {
        Self::new(width, 0)
    }

    /// Parses a string of '0'/'1' characters, first character most significant.
    pub fn from_bin(s: &str) -> Result<Self> {
        if s.len() > MAX_WIDTH as usize {
            return invalid("bit string too long");
        }
        let mut v = 0u32;
        for c in s.chars() {
            v = (v << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return invalid(format!("bad bit character {c:?}")),
                };
        }
        Self::new(s.len() as u32, v)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn value(&self) -> u32 {
        self.bits
    }

    /// Bit at 1-based position `i` counted from the left.
    pub fn bit(&self, i: u32) -> Result<bool> {
        if i == 0 || i > self.width {
            return invalid(format!("bit index {i} outside 1..={}", self.width));
        }
        Ok((self.bits >> (self.width - i)) & 1 == 1)
    }

    pub fn concat(&self, other: &BitString) -> Result<Self> {
        Self::new(self.width + other.width, (self.bits << other.width) | other.bits)
    }

    /// Concatenates parts left to right.
    pub fn concat_all(parts: &[BitString]) -> Result<Self> {
        let mut it = parts.iter();
        let mut acc = *it.next().ok_or_else(|| crate::Error::InvalidInput("empty concat".into()))?;
        for p in it {
            acc = acc.concat(p)?;
        }
        Ok(acc)
    }

    /// Bits at 1-based positions `start..start+len`.
    pub fn slice(&self, start: u32, len: u32) -> Result<Self> {
        if start == 0 || len == 0 || start - 1 + len > self.width {
            return invalid(format!(
                "slice {start}+{len} exceeds width {}",
                self.width
            ));
        }
        let shift = self.width - (start - 1 + len);
        Self::new(len, (self.bits >> shift) & mask(len))
    }

    /// The first `len` bits.
    pub fn prefix(&self, len: u32) -> Result<Self> {
        self.slice(1, len)
    }

    pub fn xor(&self, other: &BitString) -> Result<Self> {
        if self.width != other.width {
            return invalid("xor width mismatch");
        }
        Ok(Self { width: self.width, bits: self.bits ^ other.bits })
    }

    /// Cyclic rotation to the left by `j` positions.
    pub fn rotate_left(&self, j: u32) -> Self {
        let w = self.width;
        let j = j % w;
        let bits = if j == 0 { self.bits } else { ((self.bits << j) | (self.bits >> (w - j))) & mask(w) };
        Self { width: w, bits }
    }

    pub fn parity(&self) -> bool {
        self.bits.count_ones() % 2 == 1
    }

    /// Hex of the value, most significant digit first, padded to ⌈width/4⌉ digits.
    pub fn to_hex(&self) -> String {
        format!("{:0w$x}", self.bits, w = self.width.div_ceil(4) as usize)
    }

    pub fn to_bin(&self) -> String {
        format!("{:0w$b}", self.bits, w = self.width as usize)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_bin())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

pub(crate) fn mask(w: u32) -> u32 {
    if w >= 32 {
        u32::MAX
    } else {
        (1u32 << w) - 1
    }
}

/// Hex for an arbitrary-width word, most significant digit first.
pub fn hex_word(value: u64, width: u32) -> String {
    format!("{:0w$x}", value, w = width.div_ceil(4).max(1) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_and_slice() {
        let a = BitString::from_bin("101").unwrap();
        let b = BitString::from_bin("01").unwrap();
        let c = a.concat(&b).unwrap();
        assert_eq!(c.to_bin(), "10101");
        assert_eq!(c.slice(2, 3).unwrap().to_bin(), "010");
        assert!(c.slice(4, 3).is_err());
        assert!(c.bit(1).unwrap());
        assert!(!c.bit(2).unwrap());
    }

    #[test]
    fn rotation_and_hex() {
        let y = BitString::from_bin("1100").unwrap();
        assert_eq!(y.rotate_left(1).to_bin(), "1001");
        assert_eq!(y.rotate_left(4), y);
        assert_eq!(BitString::new(12, 0xabc).unwrap().to_hex(), "abc");
        assert_eq!(BitString::new(5, 1).unwrap().to_hex(), "01");
    }

    #[test]
    fn width_limits() {
        assert!(BitString::new(0, 0).is_err());
        assert!(BitString::new(25, 0).is_err());
        assert!(BitString::new(3, 8).is_err());
    }
}
