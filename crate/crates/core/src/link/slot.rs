//! One slot of the register swap, simulated tick by tick.
//!
//! Each endpoint sends its frame at tick 0. Frames land at tick `T/2`, where
//! the receiver latches the peer's offer into a shadow register and answers
//! with an ack; acks land at tick `T`, the boundary. An endpoint commits iff
//! it holds the peer's frame and the peer's ack and saw no fault. Faults are
//! link events: both PHYs see loss of signal, a crashed peer, or a failed
//! frame check at the tick they strike.

use std::fmt;
use std::str::FromStr;

use super::{Delta, LinkError, Message, OutcomeTag, Reconciled, RegisterPair, SlotOutcome};
use crate::agent::Agent;

pub const TICKS_PER_SLOT: u32 = 16;
const HALF: u32 = TICKS_PER_SLOT / 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaultKind {
    /// The lane from `endpoint` to its peer goes dark.
    LinkCut,
    /// `endpoint` halts and restarts empty at the boundary.
    Crash,
    /// Whatever `endpoint` has in flight fails its frame check.
    Corruption,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub tick: u32,
    pub endpoint: Agent,
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            FaultKind::LinkCut => "linkcut",
            FaultKind::Crash => "crash",
            FaultKind::Corruption => "corrupt",
        };
        write!(f, "{k}@{}:{}", self.tick, self.endpoint)
    }
}

impl FromStr for FaultSpec {
    type Err = LinkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LinkError::Sweep(s.to_owned());
        let (k, rest) = s.split_once('@').ok_or_else(bad)?;
        let (t, e) = rest.split_once(':').ok_or_else(bad)?;
        let kind = match k {
            "linkcut" => FaultKind::LinkCut,
            "crash" => FaultKind::Crash,
            "corrupt" => FaultKind::Corruption,
            _ => return Err(bad()),
        };
        let tick: u32 = t.parse().map_err(|_| bad())?;
        if tick >= TICKS_PER_SLOT {
            return Err(LinkError::FaultTick { tick, ticks: TICKS_PER_SLOT });
        }
        Ok(FaultSpec { kind, tick, endpoint: e.parse().map_err(|_| bad())? })
    }
}

/// `None` followed by every kind × tick × endpoint: 97 entries.
pub fn fault_vocabulary() -> Vec<Option<FaultSpec>> {
    let mut v = vec![None];
    for kind in [FaultKind::LinkCut, FaultKind::Crash, FaultKind::Corruption] {
        for tick in 0..TICKS_PER_SLOT {
            for endpoint in Agent::BOTH {
                v.push(Some(FaultSpec { kind, tick, endpoint }));
            }
        }
    }
    v
}

/// What one endpoint can see of itself at a tick.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EndpointView {
    pub agent: Agent,
    pub tick: u32,
    pub offer: Option<Message>,
    pub sent: bool,
    /// The peer's frame once latched; the inner option is the peer's offer.
    pub shadow: Option<Option<Message>>,
    pub acked: bool,
    pub fault_seen: bool,
    pub crashed: bool,
    pub register: Option<Reconciled>,
    pub outcome: Option<OutcomeTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lane {
    Idle,
    Frame,
    Ack,
    Dark,
    Garbled,
}

/// Global state at one tick: both endpoints and what each lane carries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlotTick {
    pub views: [EndpointView; 2],
    pub lanes: [Lane; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotTrace {
    pub slot_index: u64,
    pub fault: Option<FaultSpec>,
    /// Ticks `0..=T`; the last entry is the boundary.
    pub ticks: Vec<SlotTick>,
    pub pair: RegisterPair,
    pub outcomes: [SlotOutcome; 2],
}

impl SlotTrace {
    pub fn boundary_index(&self) -> usize {
        self.ticks.len() - 1
    }
}

struct Endpoint {
    view: EndpointView,
    lane_cut: bool,
    garbled: bool,
}

pub fn run_slot(
    pair: &RegisterPair,
    offer_a: Option<Message>,
    offer_b: Option<Message>,
    fault: Option<FaultSpec>,
    slot_index: u64,
) -> Result<(RegisterPair, SlotOutcome), LinkError> {
    let t = run_slot_traced(pair, offer_a, offer_b, fault, slot_index)?;
    Ok((t.pair, t.outcomes[0]))
}

pub fn run_slot_traced(
    pair: &RegisterPair,
    offer_a: Option<Message>,
    offer_b: Option<Message>,
    fault: Option<FaultSpec>,
    slot_index: u64,
) -> Result<SlotTrace, LinkError> {
    if !pair.is_boundary_valid() {
        return Err(LinkError::MixedEntry(pair.to_string()));
    }
    if let Some(f) = fault {
        if f.tick >= TICKS_PER_SLOT {
            return Err(LinkError::FaultTick { tick: f.tick, ticks: TICKS_PER_SLOT });
        }
    }
    let idle = offer_a.is_none() && offer_b.is_none();
    let mk = |agent, offer| Endpoint {
        view: EndpointView {
            agent,
            tick: 0,
            offer,
            sent: false,
            shadow: None,
            acked: false,
            fault_seen: false,
            crashed: false,
            register: None,
            outcome: None,
        },
        lane_cut: false,
        garbled: false,
    };
    let mut ep = [mk(Agent::Alice, offer_a), mk(Agent::Bob, offer_b)];
    let mut ticks = Vec::with_capacity(TICKS_PER_SLOT as usize + 1);

    for tick in 0..=TICKS_PER_SLOT {
        if let Some(f) = fault.filter(|f| f.tick == tick) {
            let i = f.endpoint.index();
            match f.kind {
                FaultKind::LinkCut => ep[i].lane_cut = true,
                FaultKind::Crash => ep[i].view.crashed = true,
                FaultKind::Corruption => ep[i].garbled = true,
            }
            for e in ep.iter_mut() {
                e.view.fault_seen = true;
            }
        }

        // arrivals, then departures
        for rx in 0..2 {
            let tx = 1 - rx;
            let lost = ep[tx].lane_cut || ep[tx].garbled || ep[tx].view.crashed && !ep[tx].view.sent;
            if ep[rx].view.crashed || lost {
                continue;
            }
            if tick == HALF && ep[tx].view.sent {
                ep[rx].view.shadow = Some(ep[tx].view.offer.clone());
            }
            if tick == TICKS_PER_SLOT && ep[rx].view.sent && ep[tx].view.shadow.is_some() && !ep[tx].view.crashed {
                ep[rx].view.acked = true;
            }
        }
        if tick == 0 {
            for e in ep.iter_mut().filter(|e| !e.view.crashed) {
                e.view.sent = true;
            }
        }

        if tick == TICKS_PER_SLOT {
            let value = Reconciled { from_a: ep[0].view.offer.clone(), from_b: ep[1].view.offer.clone() };
            for e in ep.iter_mut() {
                let v = &mut e.view;
                let ok = !v.crashed && !v.fault_seen && v.shadow.is_some() && v.acked;
                let (reg, tag) = if ok && !idle {
                    (Some(value.clone()), OutcomeTag::Committed)
                } else {
                    (None, OutcomeTag::Aborted { idle })
                };
                // a crashed endpoint comes back empty at the boundary
                v.crashed = false;
                v.register = reg;
                v.outcome = Some(tag);
            }
        }

        let lane = |e: &Endpoint| {
            if e.lane_cut || (e.view.crashed && tick > 0) {
                Lane::Dark
            } else if e.garbled {
                Lane::Garbled
            } else if tick < HALF && e.view.sent {
                Lane::Frame
            } else if (HALF..TICKS_PER_SLOT).contains(&tick) && e.view.shadow.is_some() {
                Lane::Ack
            } else {
                Lane::Idle
            }
        };
        for e in ep.iter_mut() {
            e.view.tick = tick;
        }
        ticks.push(SlotTick { views: [ep[0].view.clone(), ep[1].view.clone()], lanes: [lane(&ep[0]), lane(&ep[1])] });
    }

    let out = |e: &Endpoint| SlotOutcome { tag: e.view.outcome.expect("boundary reached"), slot_index };
    let outcomes = [out(&ep[0]), out(&ep[1])];
    let pair = RegisterPair { a: ep[0].view.register.clone(), b: ep[1].view.register.clone() };
    Ok(SlotTrace { slot_index, fault, ticks, pair, outcomes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SilenceVerdict {
    Pending,
    /// Nothing arrived within Δ, so the peer sent nothing.
    NegativeDefinitive,
}

/// Verdict on a slot from which no register update has arrived.
pub fn resolve_silence(_slot_index: u64, elapsed_ns: u64, delta: Delta) -> SilenceVerdict {
    if elapsed_ns >= delta.nanoseconds {
        SilenceVerdict::NegativeDefinitive
    } else {
        SilenceVerdict::Pending
    }
}
