//! Deterministic two-chain UTXO simulator and protocol engine for
//! cross-chain atomic swaps.
//!
//! The crate is layered bottom-up:
//!
//! * [`conditions`]: the spending-condition algebra, its evaluator, redeem
//!   path enumeration and a textual script emitter/parser.
//! * [`ledger`]: two UTXO chains with mempools, a global round clock,
//!   conflicting transactions and fee-collecting miners.
//! * [`swaps`]: transaction builders and honest drivers for the 4-Swap
//!   protocol and the Tier-Nolan, Hedged and Grief-Free baselines.
//! * [`strategies`]: party strategies and miner policies, the round-based
//!   simulation runner and utility accounting.
//! * [`game`]: the extensive-form game over 4-Swap, backward induction,
//!   SPNE verification and the slashing / multi-miner checks.
//! * [`rpredicate`]: the timelock-relaxed redeem predicate and path
//!   reachability, used as an oracle against the condition evaluator.
//! * [`cli`]: scenario configuration and the `run`/`table`/`game`/`check`
//!   commands.

pub mod cli;
pub mod conditions;
pub mod game;
pub mod ledger;
pub mod rpredicate;
pub mod strategies;
pub mod swaps;
mod types;

pub use types::{Amount, Chain, Party, Round};
