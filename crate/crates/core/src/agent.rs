//! The two link endpoints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One side of a point-to-point link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Alice,
    Bob,
}

impl Agent {
    pub const BOTH: [Agent; 2] = [Agent::Alice, Agent::Bob];

    pub fn peer(self) -> Agent {
        match self {
            Agent::Alice => Agent::Bob,
            Agent::Bob => Agent::Alice,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Agent::Alice => 0,
            Agent::Bob => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Agent::Alice => "alice",
            Agent::Bob => "bob",
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Agent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alice" | "a" | "A" => Ok(Agent::Alice),
            "bob" | "b" | "B" => Ok(Agent::Bob),
            other => Err(format!("unknown agent `{other}`")),
        }
    }
}
