//! Depth-bounded valence classification.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use super::model::{legal_steps, schedule_step, Config, ConfigKey};
use super::protocol::ProtocolSpec;
use super::{TimingError, TimingModel};

pub const DEFAULT_NODE_CEILING: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valence {
    ZeroValent,
    OneValent,
    Bivalent,
    /// The horizon was too short to tell.
    Undetermined,
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Valence::ZeroValent => "0-valent",
            Valence::OneValent => "1-valent",
            Valence::Bivalent => "bivalent",
            Valence::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValenceReport {
    pub valence: Valence,
    pub nodes: usize,
    /// Some configuration at the horizon could still move and had a live
    /// participant without a decision.
    pub open_frontier: bool,
}

/// Classifier with a memo shared across calls.
pub struct Classifier<'a> {
    spec: &'a ProtocolSpec,
    model: TimingModel,
    depth: usize,
    ceiling: usize,
    memo: HashMap<ConfigKey, ValenceReport>,
}

impl<'a> Classifier<'a> {
    pub fn new(spec: &'a ProtocolSpec, model: TimingModel, depth: usize) -> Self {
        Classifier { spec, model, depth, ceiling: DEFAULT_NODE_CEILING, memo: HashMap::new() }
    }

    pub fn with_ceiling(mut self, ceiling: usize) -> Self {
        self.ceiling = ceiling;
        self
    }

    pub fn model(&self) -> &TimingModel {
        &self.model
    }

    pub fn spec(&self) -> &'a ProtocolSpec {
        self.spec
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    pub fn classify(&mut self, cfg: &Config) -> Result<ValenceReport, TimingError> {
        let key = cfg.key(&self.model);
        if let Some(r) = self.memo.get(&key) {
            return Ok(*r);
        }
        let r = classify_valence(self.spec, &self.model, cfg, self.depth, self.ceiling)?;
        self.memo.insert(key, r);
        Ok(r)
    }
}

/// Breadth-first search of every schedule up to `depth` steps. Bivalent as
/// soon as both values are reachable; `v`-valent when only `v` shows up and
/// nothing at the horizon is still open.
pub fn classify_valence(
    spec: &ProtocolSpec,
    model: &TimingModel,
    start: &Config,
    depth: usize,
    ceiling: usize,
) -> Result<ValenceReport, TimingError> {
    let mut seen = [false; 2];
    let mut open_frontier = false;
    let mut visited: HashSet<ConfigKey> = HashSet::new();
    let mut queue = VecDeque::new();
    visited.insert(start.key(model));
    queue.push_back((start.clone(), 0usize));
    while let Some((cfg, d)) = queue.pop_front() {
        let dec = cfg.decisions();
        seen[0] |= dec[0];
        seen[1] |= dec[1];
        if seen == [true, true] {
            return Ok(ValenceReport { valence: Valence::Bivalent, nodes: visited.len(), open_frontier });
        }
        let steps = legal_steps(spec, model, &cfg);
        if d == depth {
            open_frontier |= !steps.is_empty() && !cfg.settled(spec);
            continue;
        }
        for step in steps {
            let next = schedule_step(spec, model, &cfg, &step).expect("legal_steps only yields legal steps");
            if visited.insert(next.key(model)) {
                if visited.len() > ceiling {
                    let seen_vals = (0..2u8).filter(|&v| seen[v as usize]).collect();
                    return Err(TimingError::Ceiling { ceiling, seen: seen_vals, depth: d + 1 });
                }
                queue.push_back((next, d + 1));
            }
        }
    }
    let valence = match (seen, open_frontier) {
        ([true, false], false) => Valence::ZeroValent,
        ([false, true], false) => Valence::OneValent,
        _ => Valence::Undetermined,
    };
    Ok(ValenceReport { valence, nodes: visited.len(), open_frontier })
}

#[cfg(test)]
mod tests {
    use super::super::model::Step;
    use super::super::protocol::{builtin_protocol, parse_protocol};
    use super::*;
    use crate::link::Delta;

    fn spec(n: &str) -> ProtocolSpec {
        parse_protocol(builtin_protocol(n).unwrap()).unwrap()
    }

    const BISYNC: TimingModel = TimingModel::Bisynchronous { delta: Delta { nanoseconds: 111 } };

    #[test]
    fn trivial_protocol_is_zero_valent() {
        let s = spec("decide-zero");
        for inputs in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let c = Config::initial(&s, inputs);
            let r = classify_valence(&s, &TimingModel::Asynchronous, &c, 10, DEFAULT_NODE_CEILING).unwrap();
            assert_eq!(r.valence, Valence::ZeroValent);
        }
    }

    #[test]
    fn mixed_inputs_are_bivalent_under_async() {
        let s = spec("rw-flipflop");
        let c = Config::initial(&s, [0, 1]);
        let r = classify_valence(&s, &TimingModel::Asynchronous, &c, 12, DEFAULT_NODE_CEILING).unwrap();
        assert_eq!(r.valence, Valence::Bivalent);
    }

    #[test]
    fn shallow_horizon_is_undetermined() {
        let s = spec("rw-flipflop");
        let c = Config::initial(&s, [0, 0]);
        let r = classify_valence(&s, &TimingModel::Asynchronous, &c, 2, DEFAULT_NODE_CEILING).unwrap();
        assert_eq!(r.valence, Valence::Undetermined);
        assert!(r.open_frontier);
    }

    #[test]
    fn bisync_post_slot_configurations_are_univalent() {
        for name in ["rw-flipflop", "swap-slot"] {
            let s = spec(name);
            for inputs in [[0, 0], [0, 1], [1, 0], [1, 1]] {
                // every configuration right after the first boundary
                let mut stack = vec![Config::initial(&s, inputs)];
                let mut post = Vec::new();
                while let Some(c) = stack.pop() {
                    for st in legal_steps(&s, &BISYNC, &c) {
                        let n = schedule_step(&s, &BISYNC, &c, &st).unwrap();
                        if st == Step::Boundary {
                            post.push(n);
                        } else {
                            stack.push(n);
                        }
                    }
                }
                assert!(!post.is_empty());
                for c in post {
                    let r = classify_valence(&s, &BISYNC, &c, 16, DEFAULT_NODE_CEILING).unwrap();
                    assert!(
                        matches!(r.valence, Valence::ZeroValent | Valence::OneValent),
                        "{name} {inputs:?} {}",
                        c.render(&s)
                    );
                }
            }
        }
    }

    #[test]
    fn ceiling_reports_partial_progress() {
        let s = spec("rw-flipflop");
        let c = Config::initial(&s, [0, 0]);
        let e = classify_valence(&s, &TimingModel::Asynchronous, &c, 30, 20).unwrap_err();
        assert!(matches!(e, TimingError::Ceiling { ceiling: 20, .. }));
    }

    #[test]
    fn memo_is_reused() {
        let s = spec("rw-flipflop");
        let mut cl = Classifier::new(&s, TimingModel::Asynchronous, 8);
        let c = Config::initial(&s, [0, 1]);
        let a = cl.classify(&c).unwrap();
        let b = cl.classify(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(cl.memo_len(), 1);
    }

    proptest::proptest! {
        /// A verdict reached at depth d survives looking one step further.
        #[test]
        fn deeper_search_agrees(
            choices in proptest::collection::vec(0usize..8, 0..12),
            proto in 0usize..3,
            model in 0u8..3,
            d in 2usize..7,
        ) {
            let s = spec(["rw-flipflop", "rw-eager", "swap-slot"][proto]);
            let m = match model { 0 => TimingModel::Asynchronous, 1 => TimingModel::Synchronous { bound: 2 }, _ => BISYNC };
            let mut c = Config::initial(&s, [0, 1]);
            for ch in choices {
                let legal = super::super::model::legal_steps(&s, &m, &c);
                if legal.is_empty() { break; }
                c = super::super::model::schedule_step(&s, &m, &c, &legal[ch % legal.len()]).unwrap();
            }
            let shallow = classify_valence(&s, &m, &c, d, DEFAULT_NODE_CEILING).unwrap().valence;
            let deep = classify_valence(&s, &m, &c, d + 1, DEFAULT_NODE_CEILING).unwrap().valence;
            if shallow != Valence::Undetermined {
                proptest::prop_assert_eq!(shallow, deep);
            }
        }
    }
}
