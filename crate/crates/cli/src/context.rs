//! Output directory bookkeeping for one command.

use extractomat::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

pub struct Ctx {
    pub out: PathBuf,
    pub cache: PathBuf,
    pub seed: Option<u64>,
    /// Paths relative to `out`, in write order.
    pub outputs: Vec<String>,
    pub digests: BTreeSet<String>,
    /// Run facts that may differ between replays (timings, cache hits).
    pub notes: BTreeMap<String, Value>,
}

impl Ctx {
    pub fn new(out: &Path, cache: PathBuf) -> Self {
        Ctx { out: out.to_path_buf(), cache, seed: None, outputs: vec![], digests: BTreeSet::new(), notes: BTreeMap::new() }
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        if !self.outputs.iter().any(|o| o == rel) {
            self.outputs.push(rel.to_string());
        }
        Ok(path)
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        self.write(rel, s.as_bytes())
    }

    pub fn write_csv<T: Serialize>(&mut self, rel: &str, rows: &[T]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(vec![]);
        for r in rows {
            w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        self.write(rel, &bytes)
    }

    pub fn digest(&mut self, d: impl Into<String>) {
        self.digests.insert(d.into());
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.notes.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }
}

/// Serialize with fields that vary between runs removed.
pub fn without_keys(value: &impl Serialize, keys: &[&str]) -> Value {
    let mut v = serde_json::to_value(value).unwrap_or(Value::Null);
    strip(&mut v, keys);
    v
}

fn strip(v: &mut Value, keys: &[&str]) {
    match v {
        Value::Object(m) => {
            for k in keys {
                m.remove(*k);
            }
            m.values_mut().for_each(|x| strip(x, keys));
        }
        Value::Array(a) => a.iter_mut().for_each(|x| strip(x, keys)),
        _ => {}
    }
}
