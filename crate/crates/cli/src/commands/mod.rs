pub mod certify;
pub mod eval;
pub mod ledger;
pub mod netsim;
pub mod pa;
pub mod search;

use extractomat::OracleMode;
use serde::Serialize;

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Exhaustive,
    Reduced,
    Sampled,
}

/// Oracle mode flags shared by `certify` and `eval`.
#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct OracleFlags {
    #[arg(long, value_enum, default_value = "reduced")]
    pub mode: ModeArg,
    /// Random configurations in sampled mode.
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
    /// Upper bound on enumeration steps.
    #[arg(long)]
    pub budget: Option<u128>,
}

impl OracleFlags {
    pub fn mode(&self, seed: u64) -> OracleMode {
        match self.mode {
            ModeArg::Exhaustive => OracleMode::Exhaustive,
            ModeArg::Reduced => OracleMode::Reduced,
            ModeArg::Sampled => OracleMode::Sampled { samples: self.samples, seed },
        }
    }

    pub fn budget(&self) -> u128 {
        self.budget.unwrap_or(extractomat::oracle::DEFAULT_BUDGET)
    }
}
