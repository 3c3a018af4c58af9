//! Extractor handles: explicit constructions and certified random tables.

pub mod certify;
pub mod explicit;
pub mod table;
pub mod xtab;

pub use certify::{certify_random_table, load_certified, CertificationRecord, Certified, CertifyRequest};
pub use explicit::{deor_extract, ip_extract, strong_projection, toeplitz_extract};
pub use table::TruthTable;

use crate::bits::BitString;
use crate::error::{invalid, Result};
use crate::exact::ExactValue;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::{Arc, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arity {
    /// Inputs `[x, seed]`; the seed is uniform.
    Seeded,
    TwoSource,
    MultiSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    Explicit,
    CertifiedTable { record_id: String, measured: ExactValue },
    Composite { components: Vec<String> },
}

pub type EvalFn = Arc<dyn Fn(&[u32]) -> u32 + Send + Sync>;

/// A named extractor with declared parameters.
#[derive(Clone)]
pub struct ExtractorHandle {
    pub name: String,
    pub arity: Arity,
    pub input_widths: Vec<u32>,
    pub out_width: u32,
    /// Declared min-entropy per input; seeds declare their full width.
    pub k: Vec<u32>,
    pub eps: f64,
    pub provenance: Provenance,
    /// Input indices the extractor is declared strong for.
    pub strong: Vec<usize>,
    func: EvalFn,
    table: Arc<OnceLock<Arc<TruthTable>>>,
}

impl fmt::Debug for ExtractorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExtractorHandle")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("input_widths", &self.input_widths)
            .field("out_width", &self.out_width)
            .field("k", &self.k)
            .field("eps", &self.eps)
            .field("strong", &self.strong)
            .finish()
    }
}

impl ExtractorHandle {
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn(
        name: impl Into<String>,
        arity: Arity,
        input_widths: Vec<u32>,
        out_width: u32,
        k: Vec<u32>,
        eps: f64,
        strong: Vec<usize>,
        provenance: Provenance,
        func: EvalFn,
    ) -> Result<Self> {
        if input_widths.is_empty() || input_widths.contains(&0) {
            return invalid("every input needs a positive width");
        }
        if out_width == 0 {
            return invalid("output width must be ≥ 1");
        }
        if k.len() != input_widths.len() || k.iter().zip(&input_widths).any(|(k, w)| k > w) {
            return invalid("k profile must give one k ≤ width per input");
        }
        if !(0.0..=1.0).contains(&eps) {
            return invalid(format!("declared ε={eps} outside [0,1]"));
        }
        if strong.iter().any(|&s| s >= input_widths.len()) {
            return invalid("strong index outside inputs");
        }
        if arity == Arity::Seeded && input_widths.len() != 2 {
            return invalid("seeded extractors take [x, seed]");
        }
        if arity == Arity::TwoSource && input_widths.len() != 2 {
            return invalid("two-source extractors take two inputs");
        }
        Ok(Self { name: name.into(), arity, input_widths, out_width, k, eps, provenance, strong, func, table: Arc::new(OnceLock::new()) })
    }

    /// A handle backed directly by a table.
    #[allow(clippy::too_many_arguments)]
    pub fn from_table(
        name: impl Into<String>,
        arity: Arity,
        table: Arc<TruthTable>,
        k: Vec<u32>,
        eps: f64,
        strong: Vec<usize>,
        provenance: Provenance,
    ) -> Result<Self> {
        let t2 = table.clone();
        let widths = table.widths().to_vec();
        let offsets = offsets(&widths);
        let func: EvalFn = Arc::new(move |xs: &[u32]| {
            let mut idx = 0usize;
            for (x, o) in xs.iter().zip(&offsets) {
                idx |= (*x as usize) << o;
            }
            t2.words()[idx]
        });
        let h = Self::from_fn(name, arity, widths, table.out_width(), k, eps, strong, provenance, func)?;
        let _ = h.table.set(table);
        Ok(h)
    }

    pub fn seed_width(&self) -> Option<u32> {
        (self.arity == Arity::Seeded).then(|| self.input_widths[1])
    }

    /// Evaluates on raw input words (caller guarantees widths).
    pub fn eval_raw(&self, xs: &[u32]) -> u32 {
        (self.func)(xs)
    }

    pub fn eval(&self, xs: &[BitString]) -> Result<BitString> {
        if xs.len() != self.input_widths.len() {
            return invalid(format!("{} expects {} inputs, got {}", self.name, self.input_widths.len(), xs.len()));
        }
        for (i, (x, &w)) in xs.iter().zip(&self.input_widths).enumerate() {
            if x.width() != w {
                return invalid(format!("{} input {i}: width {} vs expected {w}", self.name, x.width()));
            }
        }
        let raw: Vec<u32> = xs.iter().map(|x| x.value()).collect();
        BitString::new(self.out_width, self.eval_raw(&raw))
    }

    /// The full truth table, tabulated once.
    pub fn truth_table(&self) -> Result<Arc<TruthTable>> {
        if let Some(t) = self.table.get() {
            return Ok(t.clone());
        }
        let f = self.func.clone();
        let t = Arc::new(TruthTable::from_fn(self.input_widths.clone(), self.out_width, move |v| f(v))?);
        let _ = self.table.set(t.clone());
        Ok(t)
    }

    pub fn func(&self) -> EvalFn {
        self.func.clone()
    }

    /// Same function, new declared parameters.
    pub fn with_declared(&self, k: Vec<u32>, eps: f64, strong: Vec<usize>) -> Result<Self> {
        let mut h = Self::from_fn(
            self.name.clone(),
            self.arity,
            self.input_widths.clone(),
            self.out_width,
            k,
            eps,
            strong,
            self.provenance.clone(),
            self.func.clone(),
        )?;
        h.table = self.table.clone();
        Ok(h)
    }
}

pub(crate) fn offsets(widths: &[u32]) -> Vec<u32> {
    let total: u32 = widths.iter().sum();
    let mut acc = total;
    widths
        .iter()
        .map(|w| {
            acc -= w;
            acc
        })
        .collect()
}
