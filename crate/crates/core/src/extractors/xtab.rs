//! The XTAB certified-table file format.
//!
//! Layout (little-endian): `"XTAB"`, `u16` version, `u8` input count, `u8`
//! kind, `u8` output width, `u8` word bytes, input widths (`u8` each),
//! k-profile (`u8` each), `u64` seed, `u8` oracle mode, `u32` strong mask,
//! the table words, then a `u32` length and a trailing JSON record.

use super::{Arity, TruthTable};
use crate::error::{Error, Result};
use serde_json::Value;
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"XTAB";
pub const VERSION: u16 = 1;

/// Oracle mode byte: 0 exhaustive, 1 reduced (exact), 2 sampled, 3 uncertified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XtabHeader {
    pub arity: Arity,
    pub widths: Vec<u32>,
    pub k: Vec<u32>,
    pub m: u32,
    pub seed: u64,
    pub mode: u8,
    pub strong: Vec<usize>,
}

fn kind_byte(a: Arity) -> u8 {
    match a {
        Arity::Seeded => 0,
        Arity::TwoSource => 1,
        Arity::MultiSource => 2,
    }
}

fn fmt_err<T>(msg: &str) -> Result<T> {
    Err(Error::Format(msg.to_string()))
}

pub fn encode(h: &XtabHeader, table: &TruthTable, record: &Value) -> Result<Vec<u8>> {
    if h.widths != table.widths() || h.m != table.out_width() || h.k.len() != h.widths.len() {
        return fmt_err("header does not describe the table");
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(h.widths.len() as u8);
    out.push(kind_byte(h.arity));
    out.push(h.m as u8);
    out.push(table.word_bytes() as u8);
    out.extend(h.widths.iter().map(|&w| w as u8));
    out.extend(h.k.iter().map(|&k| k as u8));
    out.extend_from_slice(&h.seed.to_le_bytes());
    out.push(h.mode);
    let mask: u32 = h.strong.iter().fold(0, |m, &s| m | 1 << s);
    out.extend_from_slice(&mask.to_le_bytes());
    out.extend_from_slice(&table.to_bytes());
    let json = serde_json::to_vec(record).map_err(|e| Error::Format(e.to_string()))?;
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    Ok(out)
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.b.len() {
            return fmt_err("truncated XTAB file");
        }
        let s = &self.b[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

pub fn decode(bytes: &[u8]) -> Result<(XtabHeader, TruthTable, Value)> {
    let mut r = Reader { b: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return fmt_err("bad XTAB magic");
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported XTAB version {version}")));
    }
    let n = r.u8()? as usize;
    let arity = match r.u8()? {
        0 => Arity::Seeded,
        1 => Arity::TwoSource,
        2 => Arity::MultiSource,
        _ => return fmt_err("unknown XTAB kind"),
    };
    let m = r.u8()? as u32;
    let wb = r.u8()? as usize;
    let widths: Vec<u32> = r.take(n)?.iter().map(|&w| w as u32).collect();
    let k: Vec<u32> = r.take(n)?.iter().map(|&w| w as u32).collect();
    let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let mode = r.u8()?;
    let mask = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    let strong = (0..32).filter(|&i| mask >> i & 1 == 1).collect();
    let total: u32 = widths.iter().sum();
    if total > super::table::MAX_TABLE_WIDTH || wb != m.div_ceil(8) as usize {
        return fmt_err("inconsistent XTAB header");
    }
    let table = TruthTable::from_bytes(widths.clone(), m, r.take(wb << total)?)?;
    let len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
    let record: Value = serde_json::from_slice(r.take(len)?).map_err(|e| Error::Format(e.to_string()))?;
    if r.pos != bytes.len() {
        return fmt_err("trailing bytes after XTAB record");
    }
    Ok((XtabHeader { arity, widths, k, m, seed, mode, strong }, table, record))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_xtab(path: &Path, h: &XtabHeader, table: &TruthTable, record: &Value) -> Result<()> {
    write_atomic(path, &encode(h, table, record)?)
}

pub fn read_xtab(path: &Path) -> Result<(XtabHeader, TruthTable, Value)> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let t = TruthTable::from_fn(vec![3, 2], 2, |v| (v[0] ^ v[1]) & 3).unwrap();
        let h = XtabHeader { arity: Arity::TwoSource, widths: vec![3, 2], k: vec![2, 1], m: 2, seed: 99, mode: 1, strong: vec![1] };
        let rec = serde_json::json!({"a": 1});
        let b = encode(&h, &t, &rec).unwrap();
        assert_eq!(&b[..4], b"XTAB");
        let (h2, t2, r2) = decode(&b).unwrap();
        assert_eq!((h2, t2, r2), (h, t, rec));
        assert!(decode(&b[..b.len() - 1]).is_err());
    }
}
