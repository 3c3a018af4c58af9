//! Multi-source randomness extractors at desk scale.
//!
//! Core model ([`bits`], [`dist`], [`source`], [`leakage`]), extractor leaves
//! ([`extractors`]), the exhaustive error [`oracle`], compositions and the
//! parameter ledger ([`combinators`]), bipartite gadgets ([`combinatorics`]),
//! the network protocol simulator ([`netsim`]) and privacy amplification
//! ([`pa`]).

pub mod bits;
pub mod combinators;
pub mod combinatorics;
pub mod dist;
pub mod enumerate;
pub mod error;
pub mod exact;
pub mod extractors;
pub mod leakage;
pub mod netsim;
pub mod oracle;
pub mod pa;
pub mod source;

pub use bits::BitString;
pub use dist::{min_entropy, statistical_distance, xor_project, Distribution, JointDistribution, Part, Prob};
pub use error::{Error, Result};
pub use exact::{Dyadic, ExactValue};
pub use leakage::{leakage_apply, LeakMap, LeakModel, LeakageScenario};
pub use source::{check_block_source, check_somewhere_random, BlockSourceSpec, FlatSource, SomewhereRandomSpec};
pub use extractors::{Arity, ExtractorHandle, Provenance, TruthTable};
pub use oracle::{OracleMode, OracleReport};
pub use num_rational::BigRational;
