//! Slot-based register-swap link between two endpoints.

mod baseline;
mod credit;
mod delta;
mod sim;
mod slot;

pub use baseline::{run_baseline, BaselineParams, BaselineStats};
pub use credit::{credit_consume, credit_grant, CreditState, Direction, Refused};
pub use delta::{compute_delta, exact_delta_ns, Delta, LinkParams};
pub use sim::{parse_params, FaultSweep, LinkSim, LinkSimParams, LinkStats, SlotRecord};
pub use slot::{
    fault_vocabulary, resolve_silence, run_slot, run_slot_traced, EndpointView, FaultKind, FaultSpec, Lane,
    SilenceVerdict, SlotTick, SlotTrace, TICKS_PER_SLOT,
};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("invalid link parameter `{field}`: {msg}")]
    Validation { field: &'static str, msg: String },
    #[error("slot entered with mixed register pair {0}")]
    MixedEntry(String),
    #[error("fault tick {tick} outside 0..{ticks}")]
    FaultTick { tick: u32, ticks: u32 },
    #[error("bad sweep spec `{0}`")]
    Sweep(String),
    #[error("params file: {0}")]
    Params(String),
}

/// Opaque payload with an integer tag. The link never looks inside.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message {
    pub tag: u64,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn new(tag: u64) -> Self {
        Message { tag, payload: tag.to_le_bytes().to_vec() }
    }
}

/// What a register holds after a committed slot: both sides' offers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reconciled {
    pub from_a: Option<Message>,
    pub from_b: Option<Message>,
}

impl fmt::Display for Reconciled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |m: &Option<Message>| m.as_ref().map_or("-".to_string(), |m| m.tag.to_string());
        write!(f, "{},{}", s(&self.from_a), s(&self.from_b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegisterPair {
    pub a: Option<Reconciled>,
    pub b: Option<Reconciled>,
}

impl RegisterPair {
    pub fn empty() -> Self {
        RegisterPair::default()
    }

    /// `(M,M)` with equal contents or `(∅,∅)`.
    pub fn is_boundary_valid(&self) -> bool {
        match (&self.a, &self.b) {
            (None, None) => true,
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }
}

impl fmt::Display for RegisterPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |r: &Option<Reconciled>| r.as_ref().map_or("empty".to_string(), |v| v.to_string());
        write!(f, "({} | {})", s(&self.a), s(&self.b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeTag {
    Committed,
    Aborted { idle: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotOutcome {
    pub tag: OutcomeTag,
    pub slot_index: u64,
}

impl SlotOutcome {
    pub fn is_committed(&self) -> bool {
        self.tag == OutcomeTag::Committed
    }

    pub fn label(&self) -> &'static str {
        match self.tag {
            OutcomeTag::Committed => "committed",
            OutcomeTag::Aborted { idle: true } => "idle",
            OutcomeTag::Aborted { idle: false } => "aborted",
        }
    }
}
