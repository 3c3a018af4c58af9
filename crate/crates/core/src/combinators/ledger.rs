//! Parameter ledger: each theorem's (n, k, m, ε) arithmetic as a replayable
//! derivation trace.

use super::budget::ResidualConstants;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Arithmetic over named reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Expr {
    Const { value: f64 },
    Var { name: String },
    Add { args: Vec<Expr> },
    Sub { a: Box<Expr>, b: Box<Expr> },
    Mul { args: Vec<Expr> },
    Div { a: Box<Expr>, b: Box<Expr> },
    Min { args: Vec<Expr> },
    Max { args: Vec<Expr> },
    Log2 { arg: Box<Expr> },
    Pow2 { arg: Box<Expr> },
    Sqrt { arg: Box<Expr> },
    Floor { arg: Box<Expr> },
}

fn c(value: f64) -> Expr {
    Expr::Const { value }
}
fn v(name: &str) -> Expr {
    Expr::Var { name: name.to_string() }
}
fn add(args: Vec<Expr>) -> Expr {
    Expr::Add { args }
}
fn sub(a: Expr, b: Expr) -> Expr {
    Expr::Sub { a: Box::new(a), b: Box::new(b) }
}
fn mul(args: Vec<Expr>) -> Expr {
    Expr::Mul { args }
}
fn div(a: Expr, b: Expr) -> Expr {
    Expr::Div { a: Box::new(a), b: Box::new(b) }
}
fn min(args: Vec<Expr>) -> Expr {
    Expr::Min { args }
}
fn max(args: Vec<Expr>) -> Expr {
    Expr::Max { args }
}
fn log2(a: Expr) -> Expr {
    Expr::Log2 { arg: Box::new(a) }
}
fn pow2(a: Expr) -> Expr {
    Expr::Pow2 { arg: Box::new(a) }
}
fn sqrt(a: Expr) -> Expr {
    Expr::Sqrt { arg: Box::new(a) }
}
fn floor(a: Expr) -> Expr {
    Expr::Floor { arg: Box::new(a) }
}

impl Expr {
    pub fn eval(&self, env: &BTreeMap<String, f64>) -> Result<f64> {
        let all = |args: &[Expr]| args.iter().map(|a| a.eval(env)).collect::<Result<Vec<f64>>>();
        Ok(match self {
            Expr::Const { value } => *value,
            Expr::Var { name } => *env.get(name).ok_or_else(|| Error::InvalidInput(format!("unbound symbol {name}")))?,
            Expr::Add { args } => all(args)?.into_iter().fold(0.0, |s, x| s + x),
            Expr::Mul { args } => all(args)?.into_iter().fold(1.0, |s, x| s * x),
            Expr::Sub { a, b } => a.eval(env)? - b.eval(env)?,
            Expr::Div { a, b } => a.eval(env)? / b.eval(env)?,
            Expr::Min { args } => all(args)?.into_iter().fold(f64::INFINITY, f64::min),
            Expr::Max { args } => all(args)?.into_iter().fold(f64::NEG_INFINITY, f64::max),
            Expr::Log2 { arg } => arg.eval(env)?.log2(),
            Expr::Pow2 { arg } => arg.eval(env)?.exp2(),
            Expr::Sqrt { arg } => arg.eval(env)?.sqrt(),
            Expr::Floor { arg } => arg.eval(env)?.floor(),
        })
    }
}

/// Renders `k1_p` as `k′₁`, `delta` as `δ`.
pub fn pretty(name: &str) -> String {
    let (base, primes) = match name.strip_suffix("_pp") {
        Some(b) => (b, "″"),
        None => match name.strip_suffix("_p") {
            Some(b) => (b, "′"),
            None => (name, ""),
        },
    };
    let split = base.find(|ch: char| ch.is_ascii_digit()).unwrap_or(base.len());
    let (stem, digits) = base.split_at(split);
    let stem = match stem {
        "delta" => "δ",
        "eps" => "ε",
        "alpha" => "α",
        "beta" => "β",
        "omega" => "Ω",
        s => s,
    };
    let sub: String = digits.chars().map(|ch| char::from_u32(0x2080 + ch.to_digit(10).unwrap_or(0)).unwrap_or(ch)).collect();
    format!("{stem}{primes}{sub}")
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |args: &[Expr], sep: &str| args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(sep);
        match self {
            Expr::Const { value } => write!(f, "{}", fmt_num(*value)),
            Expr::Var { name } => write!(f, "{}", pretty(name)),
            Expr::Add { args } => write!(f, "({})", join(args, " + ")),
            Expr::Mul { args } => write!(f, "{}", join(args, "·")),
            Expr::Sub { a, b } => write!(f, "({a} − {b})"),
            Expr::Div { a, b } => write!(f, "{a}/{b}"),
            Expr::Min { args } => write!(f, "min{{{}}}", join(args, ", ")),
            Expr::Max { args } => write!(f, "max{{{}}}", join(args, ", ")),
            Expr::Log2 { arg } => write!(f, "log({arg})"),
            Expr::Pow2 { arg } => write!(f, "2^({arg})"),
            Expr::Sqrt { arg } => write!(f, "√({arg})"),
            Expr::Floor { arg } => write!(f, "⌊{arg}⌋"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremId {
    Raz,
    RazGe,
    Bourgain,
    BourgainGe,
    Deor,
    DeorGe,
    LiftOneBit,
    SoaGe,
    Qmext,
    Qbext,
    Bext,
    WeakSeed,
    ThreeSource,
    IrToQr,
}

impl TheoremId {
    pub const ALL: [TheoremId; 14] = [
        TheoremId::Raz,
        TheoremId::RazGe,
        TheoremId::Bourgain,
        TheoremId::BourgainGe,
        TheoremId::Deor,
        TheoremId::DeorGe,
        TheoremId::LiftOneBit,
        TheoremId::SoaGe,
        TheoremId::Qmext,
        TheoremId::Qbext,
        TheoremId::Bext,
        TheoremId::WeakSeed,
        TheoremId::ThreeSource,
        TheoremId::IrToQr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TheoremId::Raz => "raz",
            TheoremId::RazGe => "raz-ge",
            TheoremId::Bourgain => "bourgain",
            TheoremId::BourgainGe => "bourgain-ge",
            TheoremId::Deor => "deor",
            TheoremId::DeorGe => "deor-ge",
            TheoremId::LiftOneBit => "lift-one-bit",
            TheoremId::SoaGe => "soa-ge",
            TheoremId::Qmext => "qmext",
            TheoremId::Qbext => "qbext",
            TheoremId::Bext => "bext",
            TheoremId::WeakSeed => "weak-seed",
            TheoremId::ThreeSource => "three-source",
            TheoremId::IrToQr => "ir-to-qr",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            TheoremId::Raz => "Raz two-source extractor",
            TheoremId::RazGe => "GE-secure Raz extractor",
            TheoremId::Bourgain => "Bourgain two-source extractor",
            TheoremId::BourgainGe => "GE-secure Bourgain extractor",
            TheoremId::Deor => "DEOR two-source extractor",
            TheoremId::DeorGe => "GE-secure DEOR extractor",
            TheoremId::LiftOneBit => "one-bit lift to OA security",
            TheoremId::SoaGe => "strong OA implies strong GE",
            TheoremId::Qmext => "QMExt with one extra source",
            TheoremId::Qbext => "QBExt alternating extraction",
            TheoremId::Bext => "BExt block+general extractor",
            TheoremId::WeakSeed => "weak-seed extractor",
            TheoremId::ThreeSource => "three-source extractor with short seeds",
            TheoremId::IrToQr => "IR to QR lift",
        }
    }

    /// Required input symbols, then optional ones.
    fn signature(&self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            TheoremId::Raz | TheoremId::RazGe => (&["n1", "n2", "k1", "k2", "delta"], &["m"]),
            TheoremId::Bourgain | TheoremId::BourgainGe => (&["n", "alpha"], &[]),
            TheoremId::Deor => (&["n", "k1", "k2", "m"], &[]),
            TheoremId::DeorGe => (&["n", "k1", "k2"], &[]),
            TheoremId::LiftOneBit => (&["n1", "k1", "n2", "k2", "m", "eps"], &["strong_x1", "strong_x2"]),
            TheoremId::SoaGe => (&["t", "s", "eps"], &[]),
            TheoremId::Qmext => (&["t", "n", "k", "l", "eps1", "eps2"], &[]),
            TheoremId::Qbext => (&["eps1", "eps2", "eps3", "k3"], &["seed_fraction", "omega"]),
            TheoremId::Bext => (&["n1", "k1", "n2", "k2", "n3", "k3", "k", "delta", "eps"], &["seed_fraction", "omega"]),
            TheoremId::WeakSeed => (&["k", "eps", "d", "delta"], &["C", "big_o", "omega"]),
            TheoremId::ThreeSource => (&["n", "k", "d", "delta", "eps"], &[]),
            TheoremId::IrToQr => (&["eps", "rush_bits"], &[]),
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown theorem id {s}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "≥")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "≤")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    /// `tol` is relative to the larger magnitude.
    fn holds(&self, l: f64, r: f64, tol: f64) -> bool {
        let slack = tol * l.abs().max(r.abs());
        match self {
            Relation::Ge => l >= r - slack,
            Relation::Gt => l > r - slack,
            Relation::Le => l <= r + slack,
            Relation::Lt => l < r + slack,
            Relation::Eq => (l - r).abs() <= slack,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    /// Relative float tolerance; zero for stated preconditions.
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub symbol: String,
    pub formula: String,
    pub expr: Expr,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub theorem: TheoremId,
    pub title: String,
    pub inputs: BTreeMap<String, f64>,
    pub outputs: BTreeMap<String, f64>,
    pub trace: Vec<Step>,
    /// The theorem's stated preconditions, all satisfied.
    pub constraints: Vec<ConstraintCheck>,
    /// Inequalities the proof relies on, evaluated on this instance.
    pub derived: Vec<ConstraintCheck>,
    pub warnings: Vec<String>,
    /// Names of inputs filled from configured defaults.
    pub defaulted: Vec<String>,
}

impl LedgerEntry {
    /// Re-evaluates the trace from the inputs and checks every value bit-for-bit.
    pub fn replay(&self) -> Result<()> {
        let mut env = self.inputs.clone();
        for s in &self.trace {
            let x = s.expr.eval(&env)?;
            if x.to_bits() != s.value.to_bits() {
                return invalid(format!("replay of {} gave {x}, stored {}", s.symbol, s.value));
            }
            env.insert(s.symbol.clone(), x);
        }
        for (k, val) in &self.outputs {
            if env.get(k).map(|x| x.to_bits()) != Some(val.to_bits()) {
                return invalid(format!("output {k} does not match its trace"));
            }
        }
        Ok(())
    }

    pub fn output(&self, symbol: &str) -> Result<f64> {
        self.outputs.get(symbol).copied().ok_or_else(|| Error::InvalidInput(format!("no output {symbol}")))
    }
}

/// Constants the ledger fills in when an input leaves them out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerDefaults {
    pub residuals: ResidualConstants,
    /// Fraction of `k₃` granted to the first stage seed.
    pub seed_fraction: f64,
    /// The constant `C` in `d ≤ k/C` for the weak-seed transform.
    pub weak_seed_c: f64,
}

impl Default for LedgerDefaults {
    fn default() -> Self {
        LedgerDefaults { residuals: ResidualConstants::default(), seed_fraction: 0.05, weak_seed_c: 64.0 }
    }
}

/// Derived inequalities are often equalities on paper; this absorbs rounding.
const DERIVED_TOLERANCE: f64 = 1e-12;

struct Chain {
    env: BTreeMap<String, f64>,
    trace: Vec<Step>,
    constraints: Vec<ConstraintCheck>,
    derived: Vec<ConstraintCheck>,
    outputs: Vec<String>,
    warnings: Vec<String>,
}

impl Chain {
    fn step(&mut self, symbol: &str, expr: Expr) -> Result<f64> {
        let value = expr.eval(&self.env)?;
        self.env.insert(symbol.to_string(), value);
        self.trace.push(Step { symbol: symbol.to_string(), formula: format!("{} = {expr}", pretty(symbol)), expr, value });
        Ok(value)
    }

    fn check(&self, name: &str, lhs: Expr, relation: Relation, rhs: Expr, tolerance: f64) -> Result<ConstraintCheck> {
        let (l, r) = (lhs.eval(&self.env)?, rhs.eval(&self.env)?);
        Ok(ConstraintCheck { name: name.to_string(), lhs: l, relation, rhs: r, tolerance, holds: relation.holds(l, r, tolerance) })
    }

    fn require(&mut self, name: &str, lhs: Expr, relation: Relation, rhs: Expr) -> Result<()> {
        let chk = self.check(name, lhs, relation, rhs, 0.0)?;
        self.constraints.push(chk);
        Ok(())
    }

    fn derive(&mut self, name: &str, lhs: Expr, relation: Relation, rhs: Expr) -> Result<()> {
        let chk = self.check(name, lhs, relation, rhs, DERIVED_TOLERANCE)?;
        if !chk.holds {
            self.warnings.push(format!("derived inequality fails on this instance: {name}"));
        }
        self.derived.push(chk);
        Ok(())
    }

    fn out(&mut self, symbols: &[&str]) {
        self.outputs.extend(symbols.iter().map(|s| s.to_string()));
    }

    /// Copies an input into the trace so it appears in the output record.
    fn pass(&mut self, symbols: &[&str]) -> Result<()> {
        for s in symbols {
            self.step(&format!("{s}_out"), v(s))?;
        }
        Ok(())
    }
}

use Relation::*;

/// Evaluates a theorem's parameter chain on `inputs`.
///
/// Every stated precondition is checked; all violations are reported together
/// as [`Error::ConstraintViolated`].
pub fn ledger_theorem(id: TheoremId, inputs: &BTreeMap<String, f64>, defaults: &LedgerDefaults) -> Result<LedgerEntry> {
    let (required, optional) = id.signature();
    for r in required {
        if !inputs.contains_key(*r) {
            return invalid(format!("{id} needs input {r}"));
        }
    }
    for k in inputs.keys() {
        if !required.contains(&k.as_str()) && !optional.contains(&k.as_str()) {
            return invalid(format!("{id} does not take input {k}"));
        }
    }
    if let Some((k, _)) = inputs.iter().find(|(_, x)| !x.is_finite()) {
        return invalid(format!("input {k} is not finite"));
    }
    let mut env = inputs.clone();
    let mut defaulted = vec![];
    let mut fill = |name: &str, value: f64| {
        if optional.contains(&name) && !env.contains_key(name) {
            env.insert(name.to_string(), value);
            defaulted.push(name.to_string());
        }
    };
    fill("seed_fraction", defaults.seed_fraction);
    fill("omega", defaults.residuals.omega());
    fill("big_o", defaults.residuals.big_o as f64);
    fill("C", defaults.weak_seed_c);
    fill("strong_x1", 1.0);
    fill("strong_x2", 0.0);
    let mut ch = Chain { env: env.clone(), trace: vec![], constraints: vec![], derived: vec![], outputs: vec![], warnings: vec![] };
    build(id, &mut ch)?;
    let violated: Vec<String> = ch.constraints.iter().filter(|c| !c.holds).map(|c| c.name.clone()).collect();
    if !violated.is_empty() {
        return Err(Error::ConstraintViolated(violated));
    }
    let outputs = ch.outputs.iter().map(|s| (s.clone(), ch.env[s])).collect();
    Ok(LedgerEntry {
        theorem: id,
        title: id.title().to_string(),
        inputs: env,
        outputs,
        trace: ch.trace,
        constraints: ch.constraints,
        derived: ch.derived,
        warnings: ch.warnings,
        defaulted,
    })
}

fn raz_constraints(ch: &mut Chain, ge: bool) -> Result<()> {
    ch.require("δ > 0", v("delta"), Gt, c(0.0))?;
    ch.require("δ < 1/2", v("delta"), Lt, c(0.5))?;
    ch.require("n₁ ≥ 6log n₁ + 2log n₂", v("n1"), Ge, add(vec![mul(vec![c(6.0), log2(v("n1"))]), mul(vec![c(2.0), log2(v("n2"))])]))?;
    ch.require(
        "k₁ ≥ (0.5+δ)n₁ + 3log n₁ + log n₂",
        v("k1"),
        Ge,
        add(vec![mul(vec![add(vec![c(0.5), v("delta")]), v("n1")]), mul(vec![c(3.0), log2(v("n1"))]), log2(v("n2"))]),
    )?;
    let (coef, name) = if ge { (6.0, "k₂ ≥ 6log(n₁−k₁)") } else { (5.0, "k₂ ≥ 5log(n₁−k₁)") };
    ch.require(name, v("k2"), Ge, mul(vec![c(coef), log2(sub(v("n1"), v("k1")))]))?;
    Ok(())
}

/// `scale·min{n₁/8, k₂/40} − 1`.
fn raz_m(scale: Expr, k2: &str) -> Expr {
    sub(mul(vec![scale, min(vec![div(v("n1"), c(8.0)), div(v(k2), c(40.0))])]), c(1.0))
}

fn build(id: TheoremId, ch: &mut Chain) -> Result<()> {
    match id {
        TheoremId::Raz | TheoremId::RazGe => {
            let ge = id == TheoremId::RazGe;
            raz_constraints(ch, ge)?;
            let scale = if ge { div(v("delta"), c(16.0)) } else { v("delta") };
            ch.step("m_max", raz_m(scale, "k2"))?;
            if ch.env.contains_key("m") {
                let name = if ge { "m ≤ (δ/16)·min{n₁/8, k₂/40} − 1" } else { "m ≤ δ·min{n₁/8, k₂/40} − 1" };
                ch.require(name, v("m"), Le, v("m_max"))?;
                ch.step("m_out", v("m"))?;
            } else {
                ch.step("m_out", v("m_max"))?;
            }
            let m_out = ch.env["m_out"];
            if m_out <= 0.0 {
                ch.warnings.push(format!("output length m = {m_out} is not positive"));
            }
            ch.step("eps", pow2(mul(vec![c(-1.5), v("m_out")])))?;
            ch.pass(&["n1", "k1", "n2", "k2"])?;
            ch.out(&["n1_out", "k1_out", "n2_out", "k2_out", "m_out", "eps"]);
            if ge {
                ch.step("k1_p", sub(v("k1"), mul(vec![c(5.0), v("m_out")])))?;
                ch.step("k2_p", sub(v("k2"), mul(vec![c(5.0), v("m_out")])))?;
                ch.step("delta_p", div(v("delta"), c(2.0)))?;
                ch.step("m_p", sub(mul(vec![v("delta_p"), min(vec![div(v("n1"), c(8.0)), div(v("k2_p"), c(40.0))])]), c(1.0)))?;
                ch.step("eps_p", pow2(mul(vec![c(-5.0), v("m_out")])))?;
                ch.step("lifted_k1", add(vec![v("k1_p"), log2(div(c(1.0), v("eps_p")))]))?;
                ch.step("lifted_k2", add(vec![v("k2_p"), log2(div(c(1.0), v("eps_p")))]))?;
                ch.step("lifted_eps", mul(vec![pow2(v("m_out")), sqrt(v("eps_p"))]))?;
                ch.out(&["k1_p", "k2_p", "delta_p", "m_p", "eps_p", "lifted_k1", "lifted_k2", "lifted_eps"]);
                ch.derive(
                    "k′₁ ≥ (0.5+δ′)n₁ + 3log n₁ + log n₂",
                    v("k1_p"),
                    Ge,
                    add(vec![mul(vec![add(vec![c(0.5), v("delta_p")]), v("n1")]), mul(vec![c(3.0), log2(v("n1"))]), log2(v("n2"))]),
                )?;
                ch.derive("k′₂ ≥ 5log(n₁−k₁)", v("k2_p"), Ge, mul(vec![c(5.0), log2(sub(v("n1"), v("k1")))]))?;
                ch.derive("ε′ ≥ 2^{-1.5m′}", v("eps_p"), Ge, pow2(mul(vec![c(-1.5), v("m_p")])))?;
                ch.derive("k₁ ≥ k′₁ + log(1/ε′)", v("k1"), Ge, v("lifted_k1"))?;
                ch.derive("k₂ ≥ k′₂ + log(1/ε′)", v("k2"), Ge, v("lifted_k2"))?;
                ch.derive("2^m·√ε′ ≤ ε", v("lifted_eps"), Le, v("eps"))?;
            }
        }
        TheoremId::Bourgain => {
            ch.require("α > 0", v("alpha"), Gt, c(0.0))?;
            ch.require("α < 1/2", v("alpha"), Lt, c(0.5))?;
            ch.step("k", mul(vec![sub(c(0.5), v("alpha")), v("n")]))?;
            ch.step("m", mul(vec![v("alpha"), v("n")]))?;
            ch.step("eps", pow2(mul(vec![c(-1.0), v("alpha"), v("n")])))?;
            ch.out(&["k", "m", "eps"]);
        }
        TheoremId::BourgainGe => {
            ch.require("α > 0", v("alpha"), Gt, c(0.0))?;
            ch.require("α < 1/2", v("alpha"), Lt, c(0.5))?;
            ch.step("beta", div(v("alpha"), c(5.0)))?;
            ch.step("k_p", mul(vec![sub(c(0.5), v("alpha")), v("n")]))?;
            ch.step("m_p", mul(vec![v("alpha"), v("n")]))?;
            ch.step("eps_p", pow2(mul(vec![c(-1.0), v("alpha"), v("n")])))?;
            ch.step("eps_pp", pow2(mul(vec![c(-4.0), v("beta"), v("n")])))?;
            ch.step("k", mul(vec![sub(c(0.5), v("beta")), v("n")]))?;
            ch.step("m", mul(vec![v("beta"), v("n")]))?;
            ch.step("eps", pow2(mul(vec![c(-1.0), v("beta"), v("n")])))?;
            ch.step("lifted_k", add(vec![v("k_p"), log2(div(c(1.0), v("eps_pp")))]))?;
            ch.step("lifted_eps", mul(vec![pow2(v("m")), sqrt(v("eps_pp"))]))?;
            ch.out(&["beta", "k", "m", "eps", "k_p", "m_p", "eps_p", "eps_pp", "lifted_k", "lifted_eps"]);
            ch.derive("ε″ ≥ ε′", v("eps_pp"), Ge, v("eps_p"))?;
            ch.derive("k ≥ k′ + log(1/ε″)", v("k"), Ge, v("lifted_k"))?;
            ch.derive("2^m·√ε″ ≤ ε", v("lifted_eps"), Le, v("eps"))?;
        }
        TheoremId::Deor => {
            ch.require("k₁ ≤ n", v("k1"), Le, v("n"))?;
            ch.require("k₂ ≤ n", v("k2"), Le, v("n"))?;
            ch.step("eps", pow2(div(sub(add(vec![v("k1"), v("k2"), c(1.0)]), add(vec![v("n"), v("m")])), c(-2.0))))?;
            ch.out(&["eps"]);
        }
        TheoremId::DeorGe => {
            ch.require("k₁+k₂ > n−1", add(vec![v("k1"), v("k2")]), Gt, sub(v("n"), c(1.0)))?;
            ch.require("k₁ ≤ n", v("k1"), Le, v("n"))?;
            ch.require("k₂ ≤ n", v("k2"), Le, v("n"))?;
            ch.step(
                "m",
                min(vec![
                    div(sub(add(vec![v("k1"), v("k2"), c(1.0)]), v("n")), c(20.0)),
                    div(v("k1"), c(4.0)),
                    div(v("k2"), c(4.0)),
                ]),
            )?;
            ch.step("eps", pow2(mul(vec![c(-1.0), v("m")])))?;
            ch.step("k1_p", sub(v("k1"), mul(vec![c(4.0), v("m")])))?;
            ch.step("k2_p", sub(v("k2"), mul(vec![c(4.0), v("m")])))?;
            ch.step("eps_p", pow2(mul(vec![c(-4.0), v("m")])))?;
            ch.step("deor_eps", pow2(div(sub(add(vec![v("k1_p"), v("k2_p"), c(1.0)]), add(vec![v("n"), v("m")])), c(-2.0))))?;
            ch.step("lifted_k1", add(vec![v("k1_p"), log2(div(c(1.0), v("eps_p")))]))?;
            ch.step("lifted_k2", add(vec![v("k2_p"), log2(div(c(1.0), v("eps_p")))]))?;
            ch.step("lifted_eps", mul(vec![pow2(v("m")), sqrt(v("eps_p"))]))?;
            ch.out(&["m", "eps", "k1_p", "k2_p", "eps_p", "deor_eps", "lifted_k1", "lifted_k2", "lifted_eps"]);
            ch.derive("DEOR error at (k′₁, k′₂, m) ≤ ε′", v("deor_eps"), Le, v("eps_p"))?;
            ch.derive("k₁ ≥ k′₁ + log(1/ε′)", v("k1"), Ge, v("lifted_k1"))?;
            ch.derive("k₂ ≥ k′₂ + log(1/ε′)", v("k2"), Ge, v("lifted_k2"))?;
            ch.derive("2^m·√ε′ ≤ ε", v("lifted_eps"), Le, v("eps"))?;
        }
        TheoremId::LiftOneBit => {
            ch.require("ε > 0", v("eps"), Gt, c(0.0))?;
            ch.require("ε ≤ 1", v("eps"), Le, c(1.0))?;
            ch.require("strong in X₁ or X₂", max(vec![v("strong_x1"), v("strong_x2")]), Eq, c(1.0))?;
            ch.step("lift", log2(div(c(1.0), v("eps"))))?;
            ch.step("k1_out", add(vec![v("k1"), mul(vec![v("strong_x2"), v("lift")])]))?;
            ch.step("k2_out", add(vec![v("k2"), mul(vec![v("strong_x1"), v("lift")])]))?;
            ch.step("eps_out", mul(vec![pow2(v("m")), sqrt(v("eps"))]))?;
            ch.pass(&["n1", "n2", "m"])?;
            ch.out(&["n1_out", "k1_out", "n2_out", "k2_out", "m_out", "eps_out"]);
        }
        TheoremId::SoaGe => {
            ch.require("|S| = t−1", v("s"), Eq, sub(v("t"), c(1.0)))?;
            ch.pass(&["eps"])?;
            ch.out(&["eps_out"]);
        }
        TheoremId::Qmext => {
            ch.require("t ≥ 1", v("t"), Ge, c(1.0))?;
            ch.step("sources", add(vec![v("t"), c(1.0)]))?;
            ch.step("eps", add(vec![v("eps1"), v("eps2")]))?;
            ch.step("strong_set_size", v("t"))?;
            ch.pass(&["n", "k", "l"])?;
            ch.out(&["sources", "n_out", "k_out", "l_out", "eps", "strong_set_size"]);
        }
        TheoremId::Qbext => {
            ch.require("k₃ ≥ 1", v("k3"), Ge, c(1.0))?;
            ch.step("r_width", max(vec![c(1.0), floor(mul(vec![v("seed_fraction"), v("k3")]))]))?;
            ch.step("extq_k", mul(vec![c(0.9), v("k3")]))?;
            ch.step("residual", pow2(mul(vec![c(-1.0), v("omega"), v("k3")])))?;
            ch.step(
                "eps",
                add(vec![mul(vec![c(4.0), v("eps1")]), mul(vec![c(2.0), v("eps2")]), v("eps3"), v("residual")]),
            )?;
            ch.step("eps_capped", min(vec![v("eps"), c(1.0)]))?;
            ch.out(&["r_width", "extq_k", "residual", "eps", "eps_capped"]);
        }
        TheoremId::Bext => {
            ch.require("δ > 0", v("delta"), Gt, c(0.0))?;
            ch.require("k₁ ≥ δn₁", v("k1"), Ge, mul(vec![v("delta"), v("n1")]))?;
            ch.require("min(k₁, k₂, k₃) ≥ k", min(vec![v("k1"), v("k2"), v("k3")]), Ge, v("k"))?;
            let lg = log2(max(vec![v("n1"), v("n2"), v("n3")]));
            ch.require("k ≥ log³(max(n₁, n₂, n₃))", v("k"), Ge, mul(vec![lg.clone(), lg.clone(), lg]))?;
            ch.step("row_budget", max(vec![c(1.0), floor(mul(vec![v("seed_fraction"), v("k3")]))]))?;
            ch.step("ext_k", mul(vec![c(0.9), v("k3")]))?;
            ch.step("residual", pow2(mul(vec![c(-1.0), v("omega"), v("k")])))?;
            ch.step("eps_out", add(vec![v("eps"), v("residual")]))?;
            ch.out(&["row_budget", "ext_k", "residual", "eps_out"]);
        }
        TheoremId::WeakSeed => {
            ch.require("δ > 0", v("delta"), Gt, c(0.0))?;
            ch.require("d ≤ k/C", v("d"), Le, div(v("k"), v("C")))?;
            ch.step("d_p", mul(vec![v("big_o"), v("d")]))?;
            ch.step("k_out", mul(vec![c(1.2), v("k")]))?;
            ch.step("residual", pow2(mul(vec![c(-1.0), v("omega"), v("d")])))?;
            ch.step("eps_out", add(vec![v("eps"), v("residual")]))?;
            ch.step("seed_entropy", mul(vec![add(vec![c(0.5), v("delta")]), v("d_p")]))?;
            ch.step("block_k1", mul(vec![v("delta"), v("d_p")]))?;
            ch.step("block_k2", div(mul(vec![v("delta"), v("d_p")]), c(2.0)))?;
            ch.step("split_failure", pow2(div(mul(vec![c(-1.0), v("delta"), v("d_p")]), c(2.0))))?;
            ch.out(&["d_p", "k_out", "residual", "eps_out", "seed_entropy", "block_k1", "block_k2", "split_failure"]);
            ch.derive("0.9·1.2k ≥ k", mul(vec![c(0.9), v("k_out")]), Ge, v("k"))?;
        }
        TheoremId::ThreeSource => {
            ch.require("δ > 0", v("delta"), Gt, c(0.0))?;
            ch.step("m", mul(vec![c(0.9), v("k")]))?;
            ch.step("block_k", mul(vec![v("delta"), v("d")]))?;
            ch.pass(&["eps"])?;
            ch.out(&["m", "block_k", "eps_out"]);
        }
        TheoremId::IrToQr => {
            ch.require("ε ≥ 0", v("eps"), Ge, c(0.0))?;
            ch.require("rushing width ≥ 0", v("rush_bits"), Ge, c(0.0))?;
            ch.step("eps_qr", mul(vec![pow2(v("rush_bits")), v("eps")]))?;
            ch.out(&["eps_qr"]);
        }
    }
    Ok(())
}

/// `(n₁, k₁, n₂, k₂, m, ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSourceParams {
    pub n1: f64,
    pub k1: f64,
    pub n2: f64,
    pub k2: f64,
    pub m: f64,
    pub eps: f64,
}

/// Lifts a classical strong two-source extractor's parameters to OA security.
pub fn ledger_lift_one_bit(p: TwoSourceParams, strong_x1: bool, strong_x2: bool) -> Result<TwoSourceParams> {
    let inputs: BTreeMap<String, f64> = [
        ("n1", p.n1),
        ("k1", p.k1),
        ("n2", p.n2),
        ("k2", p.k2),
        ("m", p.m),
        ("eps", p.eps),
        ("strong_x1", strong_x1 as u8 as f64),
        ("strong_x2", strong_x2 as u8 as f64),
    ]
    .into_iter()
    .map(|(k, x)| (k.to_string(), x))
    .collect();
    let e = ledger_theorem(TheoremId::LiftOneBit, &inputs, &LedgerDefaults::default())?;
    Ok(TwoSourceParams {
        n1: e.output("n1_out")?,
        k1: e.output("k1_out")?,
        n2: e.output("n2_out")?,
        k2: e.output("k2_out")?,
        m: e.output("m_out")?,
        eps: e.output("eps_out")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, x)| (k.to_string(), *x)).collect()
    }

    #[test]
    fn lift_formula() {
        let p = TwoSourceParams { n1: 16.0, k1: 8.0, n2: 16.0, k2: 8.0, m: 1.0, eps: (-8.0f64).exp2() };
        let l = ledger_lift_one_bit(p, true, false).unwrap();
        assert_eq!(l.k2, 16.0);
        assert_eq!(l.k1, 8.0);
        assert_eq!(l.eps, 2.0 * (-4.0f64).exp2());
        let both = ledger_lift_one_bit(p, true, true).unwrap();
        assert_eq!((both.k1, both.k2), (16.0, 16.0));
        let one = ledger_lift_one_bit(TwoSourceParams { eps: 1.0, m: 3.0, ..p }, true, false).unwrap();
        assert_eq!((one.k2, one.eps), (8.0, 8.0));
    }

    #[test]
    fn raz_ge_example() {
        let n1 = (1u64 << 20) as f64;
        let e = ledger_theorem(
            TheoremId::RazGe,
            &inputs(&[("delta", 0.1), ("n1", n1), ("n2", n1), ("k1", 0.7 * n1), ("k2", 200.0)]),
            &LedgerDefaults::default(),
        )
        .unwrap();
        let m = (0.1 / 16.0) * (n1 / 8.0).min(200.0 / 40.0) - 1.0;
        assert_eq!(e.output("m_out").unwrap(), m);
        assert_eq!(e.output("eps").unwrap(), (-1.5 * m).exp2());
        e.replay().unwrap();
        assert!(!e.warnings.is_empty());
    }

    #[test]
    fn deor_ge_example() {
        let e = ledger_theorem(TheoremId::DeorGe, &inputs(&[("n", 1000.0), ("k1", 600.0), ("k2", 600.0)]), &LedgerDefaults::default()).unwrap();
        assert_eq!(e.output("m").unwrap(), 201.0 / 20.0);
        assert_eq!(e.output("eps").unwrap(), (-(201.0f64 / 20.0)).exp2());
        assert!(e.derived.iter().all(|d| d.holds), "{:?}", e.derived);
    }

    #[test]
    fn ir_to_qr_factor() {
        let e = ledger_theorem(TheoremId::IrToQr, &inputs(&[("eps", 1e-6), ("rush_bits", 10.0)]), &LedgerDefaults::default()).unwrap();
        assert_eq!(e.output("eps_qr").unwrap(), 1024.0 * 1e-6);
    }

    #[test]
    fn violations_are_named() {
        let err = ledger_theorem(TheoremId::DeorGe, &inputs(&[("n", 100.0), ("k1", 20.0), ("k2", 20.0)]), &LedgerDefaults::default()).unwrap_err();
        match err {
            Error::ConstraintViolated(v) => assert_eq!(v, vec!["k₁+k₂ > n−1".to_string()]),
            e => panic!("{e}"),
        }
        assert!(ledger_theorem(TheoremId::Deor, &inputs(&[("n", 4.0)]), &LedgerDefaults::default()).is_err());
        assert!("nope".parse::<TheoremId>().is_err());
    }

    #[test]
    fn qbext_budget_terms() {
        let e = ledger_theorem(
            TheoremId::Qbext,
            &inputs(&[("eps1", 0.01), ("eps2", 0.02), ("eps3", 0.03), ("k3", 40.0)]),
            &LedgerDefaults::default(),
        )
        .unwrap();
        assert_eq!(e.output("r_width").unwrap(), 2.0);
        assert_eq!(e.output("residual").unwrap(), 0.25);
        assert!((e.output("eps").unwrap() - (0.04 + 0.04 + 0.03 + 0.25)).abs() < 1e-15);
        assert!(e.defaulted.contains(&"omega".to_string()));
    }

    #[test]
    fn pretty_names() {
        assert_eq!(pretty("k1_p"), "k′₁");
        assert_eq!(pretty("delta"), "δ");
        assert_eq!(pretty("eps_pp"), "ε″");
    }
}
