//! Enumerated trace sets for the three timing models.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::{knowledge_at, EpistemicState, KnowledgeError, Observable, TraceSet};
use crate::agent::Agent;
use crate::link::{
    fault_vocabulary, run_slot_traced, EndpointView, FaultSpec, Message, OutcomeTag, RegisterPair, SlotTick,
    TICKS_PER_SLOT,
};

pub const DEFAULT_TRACE_CEILING: usize = 1 << 20;

impl Observable for SlotTick {
    type View = EndpointView;
    fn view(&self, agent: Agent) -> EndpointView {
        self.views[agent.index()].clone()
    }
}

type SlotKey = (bool, bool, Option<FaultSpec>);

fn keyed_slot_traces() -> (TraceSet<SlotTick>, Vec<SlotKey>) {
    let mut traces = Vec::new();
    let mut keys = Vec::new();
    for (oa, ob) in [(false, false), (true, false), (false, true), (true, true)] {
        for f in fault_vocabulary() {
            let t =
                run_slot_traced(&RegisterPair::empty(), oa.then(|| Message::new(1)), ob.then(|| Message::new(2)), f, 0)
                    .expect("empty entry pair and in-range faults");
            traces.push(t.ticks);
            keys.push((oa, ob, f));
        }
    }
    (TraceSet { traces, boundary_period: Some(TICKS_PER_SLOT as usize) }, keys)
}

/// One slot for every offer pattern and every fault in the vocabulary:
/// 4 × 97 traces of `T + 1` ticks, with boundaries every `T` ticks.
pub fn bisync_slot_traces() -> TraceSet<SlotTick> {
    keyed_slot_traces().0
}

/// "The slot resolves as `target`", read off the slot's final tick.
pub fn outcome_fact(target: OutcomeTag) -> impl Fn(&[SlotTick], usize) -> bool {
    move |trace, _| trace.last().and_then(|t| t.views[0].outcome) == Some(target)
}

fn slot_table() -> &'static HashMap<SlotKey, EpistemicState> {
    static TABLE: OnceLock<HashMap<SlotKey, EpistemicState>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (set, keys) = keyed_slot_traces();
        let boundary = TICKS_PER_SLOT as usize;
        let mut table = HashMap::new();
        let targets = [OutcomeTag::Committed, OutcomeTag::Aborted { idle: false }, OutcomeTag::Aborted { idle: true }];
        for target in targets {
            let fact = outcome_fact(target);
            let ks = knowledge_at(&set, boundary, &fact).expect("boundary within every slot trace");
            for ((t, k), key) in set.traces.iter().zip(ks).zip(&keys) {
                if fact(t, boundary) {
                    table.insert(*key, k);
                }
            }
        }
        table
    })
}

/// Knowledge of a slot's own outcome at its closing boundary.
pub fn bisync_slot_knowledge(offer_a: bool, offer_b: bool, fault: Option<FaultSpec>) -> EpistemicState {
    *slot_table().get(&(offer_a, offer_b, fault)).expect("every offer pattern and fault is enumerated")
}

/// Global state of the acknowledged-send chain: each delivery makes the
/// receiver answer, so exactly one message is always in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AsyncState {
    pub step: usize,
    pub delivered: u32,
}

impl Observable for AsyncState {
    type View = u32;
    fn view(&self, agent: Agent) -> u32 {
        // Alice sends the even-numbered messages, Bob the odd ones
        match agent {
            Agent::Alice => self.delivered / 2,
            Agent::Bob => self.delivered.div_ceil(2),
        }
    }
}

/// Every schedule of `depth` steps where each step either delivers the
/// message in flight or lets it sit: `2^depth` traces.
pub fn async_ack_chain(depth: usize, ceiling: usize) -> Result<TraceSet<AsyncState>, KnowledgeError> {
    let count =
        1usize.checked_shl(depth as u32).filter(|&c| c <= ceiling).ok_or(KnowledgeError::Ceiling { ceiling })?;
    let traces = (0..count)
        .map(|bits| {
            let mut s = AsyncState { step: 0, delivered: 0 };
            let mut t = vec![s];
            for step in 0..depth {
                if bits >> step & 1 == 1 {
                    s.delivered += 1;
                }
                s.step = step + 1;
                t.push(s);
            }
            t
        })
        .collect();
    Ok(TraceSet { traces, boundary_period: None })
}

/// Alice may send one frame; if she does it lands in some round `1..=bound`
/// and Bob then commits or refuses it. Nothing comes back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SyncState {
    pub round: usize,
    pub sent: bool,
    pub delivered: bool,
    pub committed: Option<bool>,
}

impl Observable for SyncState {
    type View = (bool, bool, Option<bool>);
    fn view(&self, agent: Agent) -> Self::View {
        match agent {
            Agent::Alice => (self.sent, false, None),
            Agent::Bob => (false, self.delivered, self.committed),
        }
    }
}

pub fn sync_unilateral(bound: usize) -> TraceSet<SyncState> {
    let mut traces = Vec::new();
    let idle: Vec<SyncState> =
        (0..=bound).map(|round| SyncState { round, sent: false, delivered: false, committed: None }).collect();
    traces.push(idle);
    for d in 1..=bound {
        for commit in [true, false] {
            traces.push(
                (0..=bound)
                    .map(|round| SyncState {
                        round,
                        sent: true,
                        delivered: round >= d,
                        committed: (round >= d).then_some(commit),
                    })
                    .collect(),
            );
        }
    }
    TraceSet { traces, boundary_period: Some(1) }
}
