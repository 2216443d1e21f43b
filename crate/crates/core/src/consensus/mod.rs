//! Two-process consensus on top of the link and the timing models.

mod number;

pub use number::{consensus_number_demo, explore, ConsensusNumberReport, Exploration, RwWitness, SwapCheck};

use std::fmt;

use thiserror::Error;

use crate::agent::Agent;
use crate::link::{
    fault_vocabulary, resolve_silence, run_slot_traced, FaultKind, FaultSpec, LinkError, Message, RegisterPair,
    SilenceVerdict,
};
use crate::timing::{
    find_bivalent_run, BivalentRun, Classifier, Config, ProtocolSpec, TimingError, TimingModel, Valence,
};

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("swap consensus needs slot boundaries; {0} has none")]
    SchedulerViolation(String),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Timing(#[from] TimingError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapConsensusRun {
    pub inputs: [u8; 2],
    /// Slot index and fault, at most one.
    pub fault: Option<(u64, FaultSpec)>,
    pub decisions: [Option<u8>; 2],
    /// Slots elapsed when each endpoint decided, counting from 1.
    pub decided_after: [Option<u64>; 2],
    pub slots: u64,
}

impl SwapConsensusRun {
    pub fn agreement(&self) -> bool {
        match self.decisions {
            [Some(a), Some(b)] => a == b,
            _ => true,
        }
    }

    pub fn validity(&self) -> bool {
        self.decisions.iter().flatten().all(|v| self.inputs.contains(v))
    }

    /// Every endpoint that never crashed decided.
    pub fn terminated(&self) -> bool {
        let crashed = self.fault.filter(|(_, f)| f.kind == FaultKind::Crash).map(|(_, f)| f.endpoint);
        Agent::BOTH.iter().all(|a| Some(*a) == crashed || self.decisions[a.index()].is_some())
    }

    pub fn faulted_slots(&self) -> u64 {
        u64::from(self.fault.is_some())
    }

    pub fn within_bound(&self) -> bool {
        self.decided_after.iter().flatten().all(|&s| s <= 1 + self.faulted_slots())
    }
}

impl fmt::Display for SwapConsensusRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = |v: Option<u8>| v.map_or("-".to_string(), |v| v.to_string());
        let s = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        let fault = self.fault.map_or("none".to_string(), |(slot, f)| format!("slot{slot}:{f}"));
        write!(
            f,
            "inputs={},{} fault={} decide_a={} decide_b={} after_a={} after_b={} slots={} agreement={} validity={}",
            self.inputs[0],
            self.inputs[1],
            fault,
            d(self.decisions[0]),
            d(self.decisions[1]),
            s(self.decided_after[0]),
            s(self.decided_after[1]),
            self.slots,
            if self.agreement() { "ok" } else { "VIOLATED" },
            if self.validity() { "ok" } else { "VIOLATED" },
        )
    }
}

/// Each live endpoint offers its input every slot until one commits; a
/// commit decides Alice's value at both ends. A crashed endpoint stays down.
/// With at most one faulty slot, an aborted slot followed by a silent one
/// means the peer is gone, and the survivor decides its own input.
pub fn run_swap_consensus(
    model: &TimingModel,
    inputs: [u8; 2],
    fault: Option<(u64, FaultSpec)>,
    max_slots: u64,
) -> Result<SwapConsensusRun, ConsensusError> {
    let TimingModel::Bisynchronous { delta } = model else {
        return Err(ConsensusError::SchedulerViolation(model.to_string()));
    };
    let mut run = SwapConsensusRun { inputs, fault, decisions: [None; 2], decided_after: [None; 2], slots: 0 };
    let mut down: Option<Agent> = None;
    let mut prev_aborted = false;
    for slot in 0..max_slots {
        if run.terminated() {
            break;
        }
        let offer = |a: Agent| {
            (down != Some(a) && run.decisions[a.index()].is_none()).then(|| Message::new(u64::from(inputs[a.index()])))
        };
        let this_fault = match (fault, down) {
            (Some((s, f)), _) if s == slot => Some(f),
            (_, Some(a)) => Some(FaultSpec { kind: FaultKind::Crash, tick: 0, endpoint: a }),
            _ => None,
        };
        let t = run_slot_traced(&RegisterPair::empty(), offer(Agent::Alice), offer(Agent::Bob), this_fault, slot)?;
        run.slots = slot + 1;
        if let Some(f) = this_fault.filter(|f| f.kind == FaultKind::Crash) {
            down = Some(f.endpoint);
        }
        let last = t.ticks.last().expect("slot has ticks");
        for a in Agent::BOTH {
            let i = a.index();
            if down == Some(a) || run.decisions[i].is_some() {
                continue;
            }
            let reg = match a {
                Agent::Alice => &t.pair.a,
                Agent::Bob => &t.pair.b,
            };
            if let Some(reg) = reg {
                run.decisions[i] = reg.from_a.as_ref().map(|m| m.tag as u8);
                run.decided_after[i] = Some(slot + 1);
            } else if prev_aborted
                && last.views[i].shadow.is_none()
                && resolve_silence(slot, delta.nanoseconds, *delta) == SilenceVerdict::NegativeDefinitive
            {
                run.decisions[i] = Some(inputs[i]);
                run.decided_after[i] = Some(slot + 1);
            }
        }
        prev_aborted = !t.outcomes[0].is_committed();
    }
    Ok(run)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SwapSweepReport {
    pub runs: Vec<SwapConsensusRun>,
}

impl SwapSweepReport {
    pub fn agreement_violations(&self) -> usize {
        self.runs.iter().filter(|r| !r.agreement()).count()
    }
    pub fn validity_violations(&self) -> usize {
        self.runs.iter().filter(|r| !r.validity()).count()
    }
    pub fn unterminated(&self) -> usize {
        self.runs.iter().filter(|r| !r.terminated()).count()
    }
    pub fn late(&self) -> usize {
        self.runs.iter().filter(|r| !r.within_bound()).count()
    }
    pub fn clean(&self) -> bool {
        self.agreement_violations() + self.validity_violations() + self.unterminated() + self.late() == 0
    }
}

/// Every input pair against no fault and every single fault in slot 0 or 1.
pub fn swap_consensus_sweep(model: &TimingModel) -> Result<SwapSweepReport, ConsensusError> {
    let mut report = SwapSweepReport::default();
    for inputs in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        for slot in 0..2u64 {
            for f in fault_vocabulary() {
                if f.is_none() && slot > 0 {
                    continue;
                }
                report.runs.push(run_swap_consensus(model, inputs, f.map(|f| (slot, f)), 8)?);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub enum RwAdversaryOutcome {
    /// Every prefix of the schedule was certified bivalent.
    NonTermination(BivalentRun),
    /// The start was not bivalent, so the construction does not apply.
    Inapplicable(Valence),
    /// The adversary ran out of bivalent moves before the horizon.
    Stuck,
}

/// Pit the bivalency adversary against a register protocol.
pub fn run_rw_consensus_under_adversary(
    spec: &ProtocolSpec,
    model: TimingModel,
    inputs: [u8; 2],
    steps: usize,
    depth: usize,
) -> Result<RwAdversaryOutcome, ConsensusError> {
    let mut cl = Classifier::new(spec, model, depth);
    let start = Config::initial(spec, inputs);
    let v = cl.classify(&start)?.valence;
    if v != Valence::Bivalent {
        return Ok(RwAdversaryOutcome::Inapplicable(v));
    }
    Ok(match find_bivalent_run(&mut cl, &start, steps)? {
        Some(run) => RwAdversaryOutcome::NonTermination(run),
        None => RwAdversaryOutcome::Stuck,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::Delta;
    use crate::timing::{builtin_protocol, parse_protocol};

    const BISYNC: TimingModel = TimingModel::Bisynchronous { delta: Delta { nanoseconds: 111 } };

    #[test]
    fn clean_run_decides_in_one_slot() {
        let r = run_swap_consensus(&BISYNC, [1, 0], None, 8).unwrap();
        assert_eq!(r.decisions, [Some(1), Some(1)]);
        assert_eq!(r.decided_after, [Some(1), Some(1)]);
    }

    #[test]
    fn cut_costs_one_slot() {
        let f = "linkcut@3:bob".parse().unwrap();
        let r = run_swap_consensus(&BISYNC, [0, 1], Some((0, f)), 8).unwrap();
        assert_eq!(r.decisions, [Some(0), Some(0)]);
        assert_eq!(r.decided_after, [Some(2), Some(2)]);
    }

    #[test]
    fn survivor_decides_own_input() {
        let f = "crash@5:alice".parse().unwrap();
        let r = run_swap_consensus(&BISYNC, [0, 1], Some((0, f)), 8).unwrap();
        assert_eq!(r.decisions, [None, Some(1)]);
        assert_eq!(r.decided_after[1], Some(2));
        assert!(r.terminated() && r.agreement() && r.within_bound());
    }

    #[test]
    fn early_silence_is_not_a_crash() {
        // Bob hears nothing in slot 0, but nothing was aborted before it
        let f = "linkcut@0:alice".parse().unwrap();
        let r = run_swap_consensus(&BISYNC, [0, 1], Some((0, f)), 8).unwrap();
        assert_eq!(r.decisions, [Some(0), Some(0)]);
    }

    #[test]
    fn sweep_is_clean() {
        let rep = swap_consensus_sweep(&BISYNC).unwrap();
        assert_eq!(rep.runs.len(), 4 * (97 + 96));
        assert!(rep.clean(), "{:?}", rep.runs.iter().find(|r| !r.agreement() || !r.within_bound() || !r.terminated()));
    }

    #[test]
    fn decisions_are_irrevocable() {
        // a run cut short after k slots is a prefix of the full run
        for r in swap_consensus_sweep(&BISYNC).unwrap().runs {
            for k in 1..=r.slots {
                let part = run_swap_consensus(&BISYNC, r.inputs, r.fault, k).unwrap();
                for i in 0..2 {
                    if let Some(v) = part.decisions[i] {
                        assert_eq!(r.decisions[i], Some(v), "{r} after {k} slots");
                        assert_eq!(r.decided_after[i], part.decided_after[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn other_models_are_rejected() {
        for m in [TimingModel::Asynchronous, TimingModel::Synchronous { bound: 2 }] {
            assert!(matches!(run_swap_consensus(&m, [0, 1], None, 4), Err(ConsensusError::SchedulerViolation(_))));
        }
    }

    #[test]
    fn rw_adversary_outcomes() {
        let s = parse_protocol(builtin_protocol("rw-flipflop").unwrap()).unwrap();
        match run_rw_consensus_under_adversary(&s, TimingModel::Asynchronous, [0, 1], 50, 10).unwrap() {
            RwAdversaryOutcome::NonTermination(run) => assert_eq!(run.steps.len(), 50),
            o => panic!("{o:?}"),
        }
        assert!(matches!(
            run_rw_consensus_under_adversary(&s, TimingModel::Asynchronous, [0, 0], 50, 10).unwrap(),
            RwAdversaryOutcome::Inapplicable(_)
        ));
    }

    #[test]
    fn run_line_format() {
        let r = run_swap_consensus(&BISYNC, [1, 0], None, 8).unwrap();
        assert_eq!(
            r.to_string(),
            "inputs=1,0 fault=none decide_a=1 decide_b=1 after_a=1 after_b=1 slots=1 agreement=ok validity=ok"
        );
    }
}
