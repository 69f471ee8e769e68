use std::fmt;

use serde::{Deserialize, Serialize};

/// Token amount in the smallest chain-native unit.
pub type Amount = u64;

/// Global round number.
pub type Round = u64;

/// One of the two chains taking part in a swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Chain {
    A,
    B,
}

impl Chain {
    pub const BOTH: [Chain; 2] = [Chain::A, Chain::B];

    pub fn index(self) -> usize {
        match self {
            Chain::A => 0,
            Chain::B => 1,
        }
    }

    pub fn other(self) -> Chain {
        match self {
            Chain::A => Chain::B,
            Chain::B => Chain::A,
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chain::A => f.write_str("A"),
            Chain::B => f.write_str("B"),
        }
    }
}

/// A participant: one of the two swapping parties or a numbered miner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    Miner(u8),
}

impl Party {
    pub fn is_miner(self) -> bool {
        matches!(self, Party::Miner(_))
    }

    /// The swap counterparty. Miners have none and map to themselves.
    pub fn counterparty(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
            m => m,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::A => f.write_str("A"),
            Party::B => f.write_str("B"),
            Party::Miner(i) => write!(f, "M{i}"),
        }
    }
}

impl std::str::FromStr for Party {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(Party::A),
            "B" => Ok(Party::B),
            _ => s
                .strip_prefix('M')
                .and_then(|n| n.parse().ok())
                .map(Party::Miner)
                .ok_or_else(|| format!("unknown party `{s}`")),
        }
    }
}
