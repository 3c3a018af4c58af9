//! Random truth tables with an oracle-measured error.

use super::xtab::{self, XtabHeader};
use super::{Arity, ExtractorHandle, Provenance, TruthTable};
use crate::bits::mask;
use crate::error::{invalid, Error, Result};
use crate::exact::{Dyadic, ExactValue};
use crate::oracle::{worst_case_error, LeakFamily, OracleInput, OracleMode, OracleQuery, OracleReport, StrongError, Witness, DEFAULT_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

/// Redraws after the first table before giving up.
pub const MAX_REDRAWS: u32 = 32;

pub const CACHE_ENV: &str = "EXTRACTOMAT_CACHE";

/// `$EXTRACTOMAT_CACHE`, else `$HOME/.cache/extractomat`, else a temp dir.
pub fn default_cache_dir() -> PathBuf {
    if let Ok(d) = std::env::var(CACHE_ENV) {
        if !d.is_empty() {
            return PathBuf::from(d);
        }
    }
    match std::env::var("HOME") {
        Ok(h) if !h.is_empty() => PathBuf::from(h).join(".cache").join("extractomat"),
        _ => std::env::temp_dir().join("extractomat"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyRequest {
    pub arity: Arity,
    pub widths: Vec<u32>,
    pub k: Vec<u32>,
    pub m: u32,
    /// Indices whose individual strong error is certified.
    pub strong: Vec<usize>,
    pub target: f64,
    pub mode: OracleMode,
    pub seed: u64,
    pub budget: u128,
    pub max_redraws: u32,
    #[serde(default)]
    pub leak: Option<LeakFamily>,
}

impl CertifyRequest {
    pub fn new(arity: Arity, widths: Vec<u32>, k: Vec<u32>, m: u32, target: f64, seed: u64) -> Self {
        let strong = if arity == Arity::Seeded { vec![1] } else { vec![] };
        CertifyRequest { arity, widths, k, m, strong, target, mode: OracleMode::Reduced, seed, budget: DEFAULT_BUDGET, max_redraws: MAX_REDRAWS, leak: None }
    }

    /// Two `n`-bit sources at entropy `k`.
    pub fn two_source(n: u32, k: u32, m: u32, target: f64, seed: u64) -> Self {
        Self::new(Arity::TwoSource, vec![n, n], vec![k, k], m, target, seed)
    }

    pub fn strong(mut self, strong: Vec<usize>) -> Self {
        self.strong = strong;
        self
    }

    pub fn mode(mut self, mode: OracleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn leak(mut self, leak: LeakFamily) -> Self {
        self.leak = Some(leak);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.widths.len();
        if n == 0 || self.k.len() != n {
            return invalid("k profile must match the input widths");
        }
        if self.k.iter().zip(&self.widths).any(|(k, w)| k > w) {
            return invalid("k exceeds input width");
        }
        if self.m == 0 || self.m > 16 {
            return invalid("output width must be in 1..=16");
        }
        if self.strong.iter().any(|&s| s >= n) {
            return invalid("strong index outside inputs");
        }
        if !(0.0..=1.0).contains(&self.target) {
            return invalid("target ε must be in [0,1]");
        }
        match self.arity {
            Arity::Seeded if n != 2 || self.k[1] != self.widths[1] => invalid("seeded tables take [x, seed] with a uniform seed"),
            Arity::TwoSource if n != 2 => invalid("two-source tables take two inputs"),
            _ => Ok(()),
        }
    }

    /// Stable key of everything that determines the outcome.
    pub fn param_key(&self) -> String {
        let json = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(json))[..32].to_string()
    }
}

/// Persisted outcome of one certification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationRecord {
    pub id: String,
    pub digest: String,
    pub arity: Arity,
    pub widths: Vec<u32>,
    pub k: Vec<u32>,
    pub m: u32,
    pub strong: Vec<usize>,
    pub oracle_mode: OracleMode,
    /// `exhaustive` (exact) or `sampled` (lower bound).
    pub mode: String,
    pub exact: bool,
    /// Worst individual strong error, or the plain error with no strong index.
    pub measured: ExactValue,
    pub strong_errors: Vec<StrongError>,
    pub witness: Witness,
    pub seed: u64,
    /// Generator stream of the accepted draw.
    pub draw: u32,
    pub attempts: u32,
    pub target: f64,
    #[serde(default)]
    pub leak: Option<LeakFamily>,
    pub enumerated: u64,
    pub timestamp: u64,
}

impl CertificationRecord {
    pub fn measured_f64(&self) -> f64 {
        self.measured.approx
    }

    pub fn measured_dyadic(&self) -> Dyadic {
        let r = self.measured.parse().expect("record value");
        let exp = r.denom().bits() - 1;
        Dyadic::new(r.numer().try_into().expect("numerator fits"), exp as u32)
    }
}

/// Draw `stream` of the table generator.
pub fn draw_table(widths: &[u32], m: u32, seed: u64, stream: u32) -> Result<TruthTable> {
    let total: u32 = widths.iter().sum();
    if total > super::table::MAX_TABLE_WIDTH {
        return Err(Error::TooLarge { bits: total });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    let words = (0..1usize << total).map(|_| rng.gen::<u32>() & mask(m)).collect();
    TruthTable::new(widths.to_vec(), m, words)
}

/// Measures the certified error of `table` under `req`'s parameters.
pub fn measure(table: &TruthTable, req: &CertifyRequest) -> Result<(Dyadic, OracleReport, Vec<StrongError>)> {
    let base: Vec<OracleInput> = req.widths.iter().zip(&req.k).map(|(&w, &k)| OracleInput::flat(w, k)).collect();
    let mut q = OracleQuery::new(base).with_mode(req.mode).with_budget(req.budget);
    if let Some(l) = &req.leak {
        q = q.with_leak(l.clone());
    }
    if req.strong.is_empty() {
        let r = worst_case_error(table, &q)?;
        return Ok((r.value, r, vec![]));
    }
    let mut best: Option<OracleReport> = None;
    let mut errs = Vec::new();
    for &s in &req.strong {
        let r = worst_case_error(table, &q.with_strong(&[s]))?;
        errs.push(StrongError { index: s, error: r.error.clone() });
        if best.as_ref().map(|b| r.value > b.value).unwrap_or(true) {
            best = Some(r);
        }
    }
    let best = best.unwrap();
    Ok((best.value, best, errs))
}

fn mode_byte(m: OracleMode) -> u8 {
    match m {
        OracleMode::Exhaustive => 0,
        OracleMode::Reduced => 1,
        OracleMode::Sampled { .. } => 2,
    }
}

fn handle_for(req: &CertifyRequest, table: TruthTable, rec: &CertificationRecord) -> Result<ExtractorHandle> {
    let name = format!("cert-{}", &rec.digest[..12]);
    let prov = Provenance::CertifiedTable { record_id: rec.id.clone(), measured: rec.measured.clone() };
    ExtractorHandle::from_table(name, req.arity, Arc::new(table), req.k.clone(), rec.measured_f64().min(1.0), req.strong.clone(), prov)
}

fn table_path(cache: &Path, digest: &str) -> PathBuf {
    cache.join("tables").join(format!("{digest}.xtab"))
}

fn index_path(cache: &Path, key: &str) -> PathBuf {
    cache.join("index").join(format!("{key}.json"))
}

/// Loads a certified table file.
pub fn load_certified(path: &Path) -> Result<(ExtractorHandle, CertificationRecord)> {
    let (h, table, rec) = xtab::read_xtab(path)?;
    let rec: CertificationRecord = serde_json::from_value(rec).map_err(|e| Error::Format(e.to_string()))?;
    if table.digest() != rec.digest {
        return Err(Error::Format(format!("{}: digest mismatch", path.display())));
    }
    let prov = Provenance::CertifiedTable { record_id: rec.id.clone(), measured: rec.measured.clone() };
    let handle = ExtractorHandle::from_table(format!("cert-{}", &rec.digest[..12]), h.arity, Arc::new(table), h.k, rec.measured_f64().min(1.0), h.strong, prov)?;
    Ok((handle, rec))
}

fn cache_lookup(cache: &Path, key: &str) -> Option<(ExtractorHandle, CertificationRecord, PathBuf)> {
    let idx = std::fs::read(index_path(cache, key)).ok()?;
    let v: serde_json::Value = serde_json::from_slice(&idx).ok()?;
    let digest = v.get("digest")?.as_str()?;
    let path = table_path(cache, digest);
    let (h, r) = load_certified(&path).ok()?;
    Some((h, r, path))
}

/// Outcome of [`certify_random_table`].
#[derive(Clone, Debug)]
pub struct Certified {
    pub handle: ExtractorHandle,
    pub record: CertificationRecord,
    /// Table file, when a cache directory was given.
    pub path: Option<PathBuf>,
    pub cache_hit: bool,
}

/// Draws tables until one meets `req.target`, at most `1 + max_redraws` draws.
/// With `cache`, reuses and persists records under `tables/` and `index/`.
pub fn certify_random_table(req: &CertifyRequest, cache: Option<&Path>) -> Result<Certified> {
    req.validate()?;
    let key = req.param_key();
    if let Some(dir) = cache {
        if let Some((handle, record, path)) = cache_lookup(dir, &key) {
            return Ok(Certified { handle, record, path: Some(path), cache_hit: true });
        }
    }
    let mut best = f64::INFINITY;
    for draw in 0..=req.max_redraws {
        let table = draw_table(&req.widths, req.m, req.seed, draw)?;
        let (value, report, errs) = measure(&table, req)?;
        best = best.min(value.to_f64());
        if value.to_f64() > req.target {
            continue;
        }
        let digest = table.digest();
        let record = CertificationRecord {
            id: format!("{}-{}", &digest[..16], &key[..8]),
            digest: digest.clone(),
            arity: req.arity,
            widths: req.widths.clone(),
            k: req.k.clone(),
            m: req.m,
            strong: req.strong.clone(),
            oracle_mode: req.mode,
            mode: if req.mode.is_exact() { "exhaustive" } else { "sampled" }.to_string(),
            exact: req.mode.is_exact(),
            measured: ExactValue::from_dyadic(value),
            strong_errors: errs,
            witness: report.witness,
            seed: req.seed,
            draw,
            attempts: draw + 1,
            target: req.target,
            leak: req.leak.clone(),
            enumerated: report.enumerated,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let mut path = None;
        if let Some(dir) = cache {
            let header = XtabHeader {
                arity: req.arity,
                widths: req.widths.clone(),
                k: req.k.clone(),
                m: req.m,
                seed: req.seed,
                mode: mode_byte(req.mode),
                strong: req.strong.clone(),
            };
            let p = table_path(dir, &digest);
            let json = serde_json::to_value(&record).map_err(|e| Error::Format(e.to_string()))?;
            xtab::write_xtab(&p, &header, &table, &json)?;
            let idx = serde_json::json!({ "digest": digest, "record_id": record.id });
            xtab::write_atomic(&index_path(dir, &key), idx.to_string().as_bytes())?;
            path = Some(p);
        }
        let handle = handle_for(req, table, &record)?;
        return Ok(Certified { handle, record, path, cache_hit: false });
    }
    Err(Error::TargetUnreachable { attempts: req.max_redraws + 1, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let a = draw_table(&[3, 3], 2, 5, 0).unwrap();
        assert_eq!(a, draw_table(&[3, 3], 2, 5, 0).unwrap());
        assert_ne!(a, draw_table(&[3, 3], 2, 5, 1).unwrap());
        assert!(a.words().iter().all(|&w| w < 4));
    }

    #[test]
    fn full_entropy_measures_bias() {
        let req = CertifyRequest::two_source(3, 3, 1, 1.0, 11);
        let c = certify_random_table(&req, None).unwrap();
        let ones = c.handle.truth_table().unwrap().words().iter().filter(|&&w| w == 1).count() as f64;
        assert!((c.record.measured_f64() - (ones / 64.0 - 0.5).abs()).abs() < 1e-15);
        assert_eq!(c.record.attempts, 1);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let req = CertifyRequest::two_source(3, 2, 1, 1.0, 4);
        let a = certify_random_table(&req, Some(dir.path())).unwrap();
        assert!(!a.cache_hit);
        let b = certify_random_table(&req, Some(dir.path())).unwrap();
        assert!(b.cache_hit);
        assert_eq!(a.record, b.record);
        assert_eq!(a.handle.truth_table().unwrap().words(), b.handle.truth_table().unwrap().words());
    }

    #[test]
    fn zero_target_is_unreachable() {
        let req = CertifyRequest { max_redraws: 2, ..CertifyRequest::two_source(2, 1, 1, 0.0, 1) };
        assert!(matches!(certify_random_table(&req, None), Err(Error::TargetUnreachable { attempts: 3, .. })));
    }
}
