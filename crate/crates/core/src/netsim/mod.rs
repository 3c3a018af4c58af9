//! Synchronous full-information network simulator with rushing adversaries.
//!
//! Every message is a broadcast. A run is single-threaded and deterministic
//! in `(config, sources, strategy, seed)`; ensembles parallelize across runs.

pub mod config;
pub mod gadgets;
pub mod model;
pub mod protocols;
pub mod sched;
pub mod security;
pub mod strategies;

pub use config::{GadgetConfig, Groups, NetworkConfig, Partition, ProtocolKind};
pub use gadgets::{ExtPubBudget, ExtPubGadgets, GeqrBudget, GeqrGadgets, SlotError};
pub use model::{Draw, SourceModel};
pub use protocols::{run_ext_net, run_ext_pri, run_ext_pub, run_geqr, ExtPubRun, GeqrRun, EXT_PUB_ROUNDS};
pub use sched::{rushing_violation, Adversary, Event, EventRecord, IrStrategy, ProtocolRun, PublicView, QrStrategy, RushRequest, SideInfo};
pub use security::{evaluate_security, geqr_rushing_optimum, hybrid_union, observe_set, observe_strong, DistanceReport, EvalMode, HybridReport, Observation, RushingOptimum};
