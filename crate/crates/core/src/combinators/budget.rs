//! Error budgets: explicit ε terms plus named asymptotic residuals.

use crate::error::{invalid, Result};
use crate::exact::{parse_rational, ExactValue};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Constants standing in for the unspecified `Ω(·)` and `O(·)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualConstants {
    /// `Ω(x)` is read as `omega_num/omega_den · x`.
    pub omega_num: u32,
    pub omega_den: u32,
    /// `O(x)` is read as `big_o · x`.
    pub big_o: u32,
    /// False once any constant is overridden.
    pub defaults: bool,
}

impl Default for ResidualConstants {
    fn default() -> Self {
        ResidualConstants { omega_num: 1, omega_den: 20, big_o: 8, defaults: true }
    }
}

impl ResidualConstants {
    pub fn new(omega_num: u32, omega_den: u32, big_o: u32) -> Result<Self> {
        if omega_num == 0 || omega_den == 0 || big_o == 0 {
            return invalid("residual constants must be positive");
        }
        let d = Self::default();
        let defaults = omega_num * d.omega_den == d.omega_num * omega_den && big_o == d.big_o;
        Ok(ResidualConstants { omega_num, omega_den, big_o, defaults })
    }

    pub fn omega(&self) -> f64 {
        self.omega_num as f64 / self.omega_den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsTerm {
    pub coefficient: u64,
    pub symbol: String,
}

/// `2^{−Ω(argument)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualTerm {
    /// Display name, e.g. `2^{-Ω(k₃)}`.
    pub name: String,
    pub argument: u32,
}

impl ResidualTerm {
    pub fn value(&self, c: &ResidualConstants) -> f64 {
        (-(c.omega() * self.argument as f64)).exp2()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub terms: Vec<EpsTerm>,
    pub residuals: Vec<ResidualTerm>,
}

/// A budget evaluated under one ε assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub expression: String,
    pub terms: Vec<(String, f64)>,
    pub residuals: Vec<(String, f64)>,
    pub raw_total: f64,
    /// `min(raw_total, 1)`.
    pub total: f64,
    pub constants: ResidualConstants,
}

impl ErrorBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, coefficient: u64, symbol: &str) -> Self {
        self.terms.push(EpsTerm { coefficient, symbol: symbol.to_string() });
        self
    }

    pub fn residual(mut self, name: &str, argument: u32) -> Self {
        self.residuals.push(ResidualTerm { name: name.to_string(), argument });
        self
    }

    pub fn symbols(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.symbol.as_str()).collect()
    }

    pub fn expression(&self) -> String {
        let mut parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| if t.coefficient == 1 { t.symbol.clone() } else { format!("{}{}", t.coefficient, t.symbol) })
            .collect();
        parts.extend(self.residuals.iter().map(|r| r.name.clone()));
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }

    fn lookup<'a>(&self, eps: &'a BTreeMap<String, ExactValue>, symbol: &str) -> Result<&'a ExactValue> {
        eps.get(symbol).map_or_else(|| invalid(format!("no value assigned to {symbol}")), Ok)
    }

    /// Uncapped total.
    pub fn raw_total(&self, eps: &BTreeMap<String, ExactValue>, c: &ResidualConstants) -> Result<f64> {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.coefficient as f64 * self.lookup(eps, &t.symbol)?.approx;
        }
        Ok(s + self.residuals.iter().map(|r| r.value(c)).sum::<f64>())
    }

    pub fn total(&self, eps: &BTreeMap<String, ExactValue>, c: &ResidualConstants) -> Result<f64> {
        Ok(self.raw_total(eps, c)?.min(1.0))
    }

    pub fn report(&self, eps: &BTreeMap<String, ExactValue>, c: &ResidualConstants) -> Result<BudgetReport> {
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push((t.symbol.clone(), t.coefficient as f64 * self.lookup(eps, &t.symbol)?.approx));
        }
        let residuals = self.residuals.iter().map(|r| (r.name.clone(), r.value(c))).collect();
        let raw_total = self.raw_total(eps, c)?;
        Ok(BudgetReport { expression: self.expression(), terms, residuals, raw_total, total: raw_total.min(1.0), constants: c.clone() })
    }

    /// Exact test of `measured ≤ total`.
    ///
    /// The explicit part is summed exactly. A single residual is compared
    /// exactly as `r ≤ 2^{−a/b}`; several residuals are replaced by rational
    /// lower bounds, which keeps the test sound.
    pub fn admits(&self, measured: &BigRational, eps: &BTreeMap<String, ExactValue>, c: &ResidualConstants) -> Result<bool> {
        let mut explicit = BigRational::zero();
        for t in &self.terms {
            let v = self.lookup(eps, &t.symbol)?;
            let r = v.parse().map_or_else(|| invalid(format!("unparsable exact value for {}", t.symbol)), Ok)?;
            explicit += r * BigRational::from_integer(BigInt::from(t.coefficient));
        }
        if *measured <= explicit {
            return Ok(true);
        }
        let rest = measured - &explicit;
        if rest >= BigRational::one() {
            return Ok(false);
        }
        match self.residuals.as_slice() {
            [] => Ok(false),
            [r] => {
                let a = c.omega_num as u64 * r.argument as u64;
                Ok(crate::exact::rational_le_pow2_neg(&rest, a as u32, c.omega_den))
            }
            rs => {
                let mut lower = BigRational::zero();
                for r in rs {
                    let v = r.value(c) * (1.0 - 1e-12);
                    lower += BigRational::from_float(v).unwrap_or_else(BigRational::zero);
                }
                Ok(rest <= lower)
            }
        }
    }
}

/// An exact value from a declared float ε.
pub fn declared(eps: f64) -> ExactValue {
    let r = BigRational::from_float(eps).unwrap_or_else(BigRational::zero);
    ExactValue::from_rational(&r)
}

/// An exact value from a `"p/q"` string.
pub fn exact(s: &str) -> Result<ExactValue> {
    parse_rational(s).map(|r| ExactValue::from_rational(&r)).map_or_else(|| invalid(format!("bad rational {s}")), Ok)
}
