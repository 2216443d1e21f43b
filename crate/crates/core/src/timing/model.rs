//! Configurations and the per-model scheduling rules.

use std::fmt;

use super::protocol::{ProtocolSpec, Source, Sym};
use super::{TimingError, TimingModel};

/// At most this many participants may crash.
pub const CRASH_BUDGET: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Envelope {
    pub from: usize,
    pub to: usize,
    pub msg: Sym,
    pub sent_round: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Config {
    pub states: Vec<Sym>,
    pub crashed: Vec<bool>,
    pub decided: Vec<Option<u8>>,
    /// Kept sorted.
    pub in_flight: Vec<Envelope>,
    /// Starts at 1; messages present at time zero carry round 0.
    pub round: u32,
}

/// What the valence search memoizes on: the configuration with message
/// timestamps reduced to what the model can tell apart.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigKey {
    states: Vec<Sym>,
    crashed: Vec<bool>,
    decided: Vec<Option<u8>>,
    msgs: Vec<(usize, usize, Sym, u32)>,
}

impl Config {
    pub fn initial(spec: &ProtocolSpec, inputs: [u8; 2]) -> Config {
        let n = spec.processes.len();
        let states = (0..n)
            .map(|p| {
                let input = if spec.is_participant(p) { Some(inputs[p]) } else { None };
                spec.init[&(p, input)]
            })
            .collect();
        let mut in_flight: Vec<Envelope> =
            spec.start.iter().map(|&(p, msg)| Envelope { from: p, to: p, msg, sent_round: 0 }).collect();
        in_flight.sort();
        Config { states, crashed: vec![false; n], decided: vec![None; n], in_flight, round: 1 }
    }

    pub fn crashes(&self) -> u32 {
        self.crashed.iter().filter(|&&c| c).count() as u32
    }

    /// Decision values present anywhere in the configuration.
    pub fn decisions(&self) -> [bool; 2] {
        let mut d = [false; 2];
        for v in self.decided.iter().flatten() {
            d[*v as usize] = true;
        }
        d
    }

    /// Every live participant has decided.
    pub fn settled(&self, spec: &ProtocolSpec) -> bool {
        (0..spec.participants).all(|p| self.crashed[p] || self.decided[p].is_some())
    }

    pub fn key(&self, model: &TimingModel) -> ConfigKey {
        let mut msgs: Vec<(usize, usize, Sym, u32)> = self
            .in_flight
            .iter()
            .map(|e| {
                let tag = match model {
                    TimingModel::Asynchronous => 0,
                    TimingModel::Synchronous { .. } => self.round - e.sent_round,
                    TimingModel::Bisynchronous { .. } => u32::from(e.sent_round < self.round),
                };
                (e.from, e.to, e.msg, tag)
            })
            .collect();
        msgs.sort();
        ConfigKey { states: self.states.clone(), crashed: self.crashed.clone(), decided: self.decided.clone(), msgs }
    }

    pub fn render(&self, spec: &ProtocolSpec) -> String {
        let procs: Vec<String> = (0..spec.processes.len())
            .map(|p| {
                let mut s = format!("{}={}", spec.processes[p], spec.name_of(self.states[p]));
                if self.crashed[p] {
                    s.push('!');
                }
                if let Some(v) = self.decided[p] {
                    s.push_str(&format!("/d{v}"));
                }
                s
            })
            .collect();
        let msgs: Vec<String> = self
            .in_flight
            .iter()
            .map(|e| {
                format!("{}>{}:{}@{}", spec.processes[e.from], spec.processes[e.to], spec.name_of(e.msg), e.sent_round)
            })
            .collect();
        format!("r{} [{}] {{{}}}", self.round, procs.join(" "), msgs.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    /// Deliver the oldest in-flight copy of this message.
    Deliver {
        from: usize,
        to: usize,
        msg: Sym,
    },
    Crash(usize),
    Boundary,
}

impl Step {
    pub fn render(&self, spec: &ProtocolSpec) -> String {
        match *self {
            Step::Deliver { from, to, msg } => {
                format!("deliver {} {} {}", spec.processes[from], spec.processes[to], spec.name_of(msg))
            }
            Step::Crash(p) => format!("crash {}", spec.processes[p]),
            Step::Boundary => "boundary".to_owned(),
        }
    }

    pub fn parse(spec: &ProtocolSpec, s: &str) -> Result<Step, TimingError> {
        let bad = || TimingError::Step(s.to_owned());
        let proc = |n: &str| spec.process_index(n).ok_or_else(bad);
        let toks: Vec<&str> = s.split_whitespace().collect();
        match toks.as_slice() {
            ["boundary"] => Ok(Step::Boundary),
            ["crash", p] => Ok(Step::Crash(proc(p)?)),
            ["deliver", f, t, m] => {
                Ok(Step::Deliver { from: proc(f)?, to: proc(t)?, msg: spec.sym(m).ok_or_else(bad)? })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Deliver { from, to, msg } => write!(f, "deliver#{from}>{to}:{msg}"),
            Step::Crash(p) => write!(f, "crash#{p}"),
            Step::Boundary => write!(f, "boundary"),
        }
    }
}

fn violation(model: &TimingModel, step: &Step, reason: impl Into<String>) -> TimingError {
    TimingError::SchedulerViolation { model: model.to_string(), step: step.to_string(), reason: reason.into() }
}

fn deliverable(model: &TimingModel, cfg: &Config, e: &Envelope) -> bool {
    match model {
        TimingModel::Bisynchronous { .. } => e.sent_round < cfg.round,
        _ => true,
    }
}

fn overdue(model: &TimingModel, cfg: &Config, e: &Envelope) -> bool {
    match model {
        TimingModel::Synchronous { bound } => cfg.round - e.sent_round > *bound,
        _ => false,
    }
}

/// Whether closing the round now would break the model's delivery promise.
fn boundary_blocked(model: &TimingModel, cfg: &Config) -> Option<&'static str> {
    match model {
        TimingModel::Asynchronous => None,
        TimingModel::Synchronous { bound } => cfg
            .in_flight
            .iter()
            .any(|e| cfg.round + 1 - e.sent_round > *bound)
            .then_some("a message would miss its bound"),
        TimingModel::Bisynchronous { .. } => {
            cfg.in_flight.iter().any(|e| e.sent_round < cfg.round).then_some("messages due this slot are undelivered")
        }
    }
}

fn apply(spec: &ProtocolSpec, cfg: &mut Config, proc: usize, from: Source, msg: Sym) {
    let Some(rule) = spec.rule(proc, cfg.states[proc], from, msg) else {
        return;
    };
    cfg.states[proc] = rule.next;
    for &(to, m) in &rule.sends {
        if !cfg.crashed[to] {
            cfg.in_flight.push(Envelope { from: proc, to, msg: m, sent_round: cfg.round });
        }
    }
    if cfg.decided[proc].is_none() {
        cfg.decided[proc] = rule.decide;
    }
}

/// Apply one step, or report why the model forbids it.
pub fn schedule_step(
    spec: &ProtocolSpec,
    model: &TimingModel,
    cfg: &Config,
    step: &Step,
) -> Result<Config, TimingError> {
    let mut next = cfg.clone();
    match *step {
        Step::Deliver { from, to, msg } => {
            let pos = cfg
                .in_flight
                .iter()
                .enumerate()
                .filter(|(_, e)| e.from == from && e.to == to && e.msg == msg)
                .min_by_key(|(_, e)| e.sent_round)
                .map(|(i, _)| i)
                .ok_or_else(|| violation(model, step, "no such message in flight"))?;
            let e = cfg.in_flight[pos];
            if !deliverable(model, cfg, &e) {
                return Err(violation(model, step, "message was sent this slot"));
            }
            if !overdue(model, cfg, &e) && cfg.in_flight.iter().any(|o| overdue(model, cfg, o)) {
                return Err(violation(model, step, "an overdue message must be delivered first"));
            }
            next.in_flight.remove(pos);
            apply(spec, &mut next, to, Source::Proc(from), msg);
        }
        Step::Crash(p) => {
            if !spec.is_participant(p) || cfg.crashed[p] {
                return Err(violation(model, step, "only live participants crash"));
            }
            if cfg.crashes() >= CRASH_BUDGET {
                return Err(violation(model, step, "crash budget spent"));
            }
            next.crashed[p] = true;
            // nothing addressed to a crashed process is ever processed
            next.in_flight.retain(|e| e.to != p);
        }
        Step::Boundary => {
            if let Some(reason) = boundary_blocked(model, cfg) {
                return Err(violation(model, step, reason));
            }
            next.round += 1;
            if matches!(model, TimingModel::Bisynchronous { .. }) {
                let snapshot: Vec<Option<u8>> = (0..spec.participants)
                    .map(|p| if cfg.crashed[p] { None } else { spec.published(p, cfg.states[p]) })
                    .collect();
                if let Some(sym) = spec.slot_sym(&snapshot) {
                    for p in 0..spec.participants {
                        if !next.crashed[p] {
                            apply(spec, &mut next, p, Source::Slot, sym);
                        }
                    }
                }
            }
        }
    }
    next.in_flight.sort();
    Ok(next)
}

/// Legal steps in canonical order: deliveries, then the boundary, then
/// crashes. An asynchronous boundary changes nothing and is left out.
pub fn legal_steps(spec: &ProtocolSpec, model: &TimingModel, cfg: &Config) -> Vec<Step> {
    let any_overdue = cfg.in_flight.iter().any(|e| overdue(model, cfg, e));
    let mut steps: Vec<Step> = cfg
        .in_flight
        .iter()
        .filter(|e| deliverable(model, cfg, e) && (!any_overdue || overdue(model, cfg, e)))
        .map(|e| Step::Deliver { from: e.from, to: e.to, msg: e.msg })
        .collect();
    steps.dedup();
    if !matches!(model, TimingModel::Asynchronous) && boundary_blocked(model, cfg).is_none() {
        steps.push(Step::Boundary);
    }
    if cfg.crashes() < CRASH_BUDGET {
        steps.extend((0..spec.participants).filter(|&p| !cfg.crashed[p]).map(Step::Crash));
    }
    steps
}

#[cfg(test)]
mod tests {
    use super::super::protocol::{builtin_protocol, parse_protocol};
    use super::*;
    use crate::link::Delta;

    fn spec(n: &str) -> ProtocolSpec {
        parse_protocol(builtin_protocol(n).unwrap()).unwrap()
    }

    const BISYNC: TimingModel = TimingModel::Bisynchronous { delta: Delta { nanoseconds: 111 } };

    fn go(s: &ProtocolSpec, p: usize) -> Step {
        Step::Deliver { from: p, to: p, msg: s.sym("go").unwrap() }
    }

    #[test]
    fn initial_config() {
        let s = spec("rw-flipflop");
        let c = Config::initial(&s, [0, 1]);
        assert_eq!(c.in_flight.len(), 2);
        assert_eq!(s.name_of(c.states[0]), "idle0");
        assert_eq!(s.name_of(c.states[1]), "idle1");
        assert_eq!(s.name_of(c.states[2]), "c__");
        assert_eq!(c.round, 1);
    }

    #[test]
    fn bisync_holds_fresh_messages_until_next_slot() {
        let s = spec("rw-flipflop");
        let c = Config::initial(&s, [0, 1]);
        let c = schedule_step(&s, &BISYNC, &c, &go(&s, 0)).unwrap();
        let write = Step::Deliver { from: 0, to: 2, msg: s.sym("write0").unwrap() };
        let e = schedule_step(&s, &BISYNC, &c, &write).unwrap_err();
        assert!(matches!(e, TimingError::SchedulerViolation { .. }));
        // p1's go is still due
        assert!(schedule_step(&s, &BISYNC, &c, &Step::Boundary).is_err());
        assert!(!legal_steps(&s, &BISYNC, &c).contains(&write));
        // async lets it through
        assert!(schedule_step(&s, &TimingModel::Asynchronous, &c, &write).is_ok());
    }

    #[test]
    fn bisync_boundary_publishes_snapshot() {
        let s = spec("rw-flipflop");
        let mut c = Config::initial(&s, [1, 0]);
        for p in 0..2 {
            c = schedule_step(&s, &BISYNC, &c, &go(&s, p)).unwrap();
        }
        let c = schedule_step(&s, &BISYNC, &c, &Step::Boundary).unwrap();
        assert_eq!(c.decided[..2], [Some(1), Some(1)]);
        assert_eq!(c.round, 2);
    }

    #[test]
    fn crashed_peer_is_blank_in_snapshot() {
        let s = spec("rw-flipflop");
        let c = Config::initial(&s, [0, 1]);
        let c = schedule_step(&s, &BISYNC, &c, &Step::Crash(0)).unwrap();
        assert!(c.in_flight.iter().all(|e| e.to != 0));
        let c = schedule_step(&s, &BISYNC, &c, &go(&s, 1)).unwrap();
        let c = schedule_step(&s, &BISYNC, &c, &Step::Boundary).unwrap();
        assert_eq!(c.decided[1], Some(1));
        assert!(schedule_step(&s, &BISYNC, &c, &Step::Crash(1)).is_err());
    }

    #[test]
    fn sync_bound_forces_delivery() {
        let s = spec("swap");
        let m = TimingModel::Synchronous { bound: 1 };
        let c = Config::initial(&s, [0, 1]);
        // initial messages are one round old
        assert!(schedule_step(&s, &m, &c, &Step::Boundary).is_err());
        let m2 = TimingModel::Synchronous { bound: 2 };
        let c2 = schedule_step(&s, &m2, &c, &Step::Boundary).unwrap();
        // now overdue-free, but closing again would miss the bound
        assert!(schedule_step(&s, &m2, &c2, &Step::Boundary).is_err());
    }

    #[test]
    fn overdue_messages_come_first() {
        let s = spec("swap");
        let m = TimingModel::Synchronous { bound: 1 };
        let mut c = Config::initial(&s, [0, 1]);
        c.round = 3;
        c.in_flight[0].sent_round = 2;
        let legal = legal_steps(&s, &m, &c);
        let overdue = c.in_flight[1];
        assert!(legal.contains(&Step::Deliver { from: overdue.from, to: overdue.to, msg: overdue.msg }));
        let fresh = c.in_flight[0];
        let e = schedule_step(&s, &m, &c, &Step::Deliver { from: fresh.from, to: fresh.to, msg: fresh.msg });
        assert!(e.is_err());
    }

    #[test]
    fn keys_forget_what_the_model_cannot_see() {
        let s = spec("swap");
        let mut a = Config::initial(&s, [0, 1]);
        let mut b = a.clone();
        a.round = 5;
        b.round = 9;
        assert_eq!(a.key(&TimingModel::Asynchronous), b.key(&TimingModel::Asynchronous));
        assert_eq!(a.key(&BISYNC), b.key(&BISYNC));
        assert_ne!(a.key(&TimingModel::Synchronous { bound: 9 }), b.key(&TimingModel::Synchronous { bound: 9 }));
    }

    #[test]
    fn step_text_round_trip() {
        let s = spec("rw-flipflop");
        for st in ["deliver p0 mem write1", "crash p1", "boundary"] {
            assert_eq!(Step::parse(&s, st).unwrap().render(&s), st);
        }
        assert!(Step::parse(&s, "deliver p0 nowhere x").is_err());
    }

    #[test]
    fn unmatched_delivery_is_consumed() {
        let s = spec("swap");
        let mut c = Config::initial(&s, [0, 1]);
        let stray = s.sym("old1").unwrap();
        c.in_flight.push(Envelope { from: 2, to: 0, msg: stray, sent_round: 0 });
        c.in_flight.sort();
        let n =
            schedule_step(&s, &TimingModel::Asynchronous, &c, &Step::Deliver { from: 2, to: 0, msg: stray }).unwrap();
        assert_eq!(n.states, c.states);
        assert_eq!(n.in_flight.len(), c.in_flight.len() - 1);
    }

    proptest::proptest! {
        /// Random legal walks stay legal and never let a process change its mind.
        #[test]
        fn walks_preserve_decisions(choices in proptest::collection::vec(0usize..8, 0..60), model in 0u8..3, inputs in (0u8..2, 0u8..2)) {
            let s = spec("rw-flipflop");
            let m = match model { 0 => TimingModel::Asynchronous, 1 => TimingModel::Synchronous { bound: 2 }, _ => BISYNC };
            let mut c = Config::initial(&s, [inputs.0, inputs.1]);
            for ch in choices {
                let legal = legal_steps(&s, &m, &c);
                if legal.is_empty() { break; }
                let n = schedule_step(&s, &m, &c, &legal[ch % legal.len()]).unwrap();
                for p in 0..c.decided.len() {
                    if let Some(v) = c.decided[p] {
                        proptest::prop_assert_eq!(n.decided[p], Some(v));
                    }
                }
                proptest::prop_assert!(n.crashes() <= CRASH_BUDGET);
                c = n;
            }
        }

        /// A bisynchronous schedule is also legal under a one-round bound and
        /// under asynchrony, and drives processes through the same states.
        #[test]
        fn bisync_schedules_replay_under_weaker_models(
            choices in proptest::collection::vec(0usize..8, 0..60),
            proto in 0usize..4,
            inputs in (0u8..2, 0u8..2),
        ) {
            // slot rules would make the boundary itself model-specific
            let s = spec(["rw-wait", "rw-eager", "swap", "decide-zero"][proto]);
            proptest::prop_assert!(!s.has_slot_rules());
            let weaker = [TimingModel::Synchronous { bound: 1 }, TimingModel::Asynchronous];
            let start = Config::initial(&s, [inputs.0, inputs.1]);
            let mut c = start.clone();
            let mut replays = [start.clone(), start];
            for ch in choices {
                let legal = legal_steps(&s, &BISYNC, &c);
                if legal.is_empty() { break; }
                let step = &legal[ch % legal.len()];
                c = schedule_step(&s, &BISYNC, &c, step).unwrap();
                for (m, r) in weaker.iter().zip(replays.iter_mut()) {
                    let n = schedule_step(&s, m, r, step);
                    proptest::prop_assert!(n.is_ok(), "{} rejects {}: {:?}", m, step.render(&s), n);
                    *r = n.unwrap();
                    proptest::prop_assert_eq!(&r.states, &c.states);
                    proptest::prop_assert_eq!(&r.decided, &c.decided);
                }
            }
        }
    }
}
