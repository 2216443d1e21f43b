//! The dual-diamond net of the bilateral swap and its exhaustive analysis.

mod analysis;
mod format;
mod net;

pub use analysis::{
    check_boundary_dichotomy, check_ownership_conservation, check_safety, check_symmetry, marking_hash, reachability,
    reachability_with_ceiling, CheckReport, ReachabilityGraph, DEFAULT_STATE_CEILING,
};
pub use format::{parse_net, print_net};
pub use net::{
    DualDiamondNet, Marking, Owner, OwnershipPattern, PetriNet, Place, PlaceId, PlaceKind, PlaceRole, Transition,
    TransitionId,
};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::agent::Agent;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PetriError {
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
    #[error("marking has no count for place `{0}`")]
    MissingPlace(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("firing `{transition}` overflows place `{place}`")]
    CapacityExceeded { transition: String, place: String },
    #[error("reachability exceeded {ceiling} states")]
    StateCeiling { ceiling: usize },
    #[error("invalid net: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Local moves of one agent's diamond: offer, abort and release.
const DIAMOND: &[(&str, &[&str], &[&str])] = &[
    ("offer", &["idle", "own.none", "ab.free"], &["offer", "own.a", "ping"]),
    ("abort", &["offer", "own.a", "ping"], &["idle", "own.none", "ab.free"]),
    ("release", &["commit", "own.both", "ab.free"], &["idle", "own.b", "ping"]),
];

/// Moves triggered by the peer's frame.
const HEARTBEAT: &[(&str, &[&str], &[&str])] = &[
    ("accept", &["idle", "own.b", "pong", "ab.free"], &["commit", "own.both", "ping", "ba.free"]),
    ("confirm", &["offer", "own.both", "pong"], &["commit", "own.both", "ba.free"]),
    ("drain", &["offer", "own.both", "pong", "ab.free"], &["idle", "own.b", "ping", "ba.free"]),
    ("settle", &["commit", "own.a", "pong"], &["idle", "own.none", "ba.free"]),
    ("reoffer", &["commit", "own.a", "pong", "ab.free"], &["offer", "own.a", "ping", "ba.free"]),
];

const LOCAL_STATES: [&str; 3] = ["idle", "offer", "commit"];

fn prefix(agent: Agent) -> &'static str {
    match agent {
        Agent::Alice => "a",
        Agent::Bob => "b",
    }
}

/// Alice's templates are written from her side; Bob's are the relabeled copy.
fn localize(p: &str, agent: Agent) -> String {
    if LOCAL_STATES.contains(&p) {
        return format!("{}.{p}", prefix(agent));
    }
    if agent == Agent::Alice {
        return p.to_owned();
    }
    match p {
        "ping" => "pong",
        "pong" => "ping",
        "ab.free" => "ba.free",
        "ba.free" => "ab.free",
        "own.a" => "own.b",
        "own.b" => "own.a",
        other => other,
    }
    .to_owned()
}

/// Builds the shipped 1-safe bilateral-swap net.
///
/// Each agent owns three local-state places and controls three diamond
/// transitions plus five heartbeat transitions. The shared places are the two
/// frames on the wire, their complement places, and four ownership places
/// whose single token records which registers hold the message.
pub fn build_dual_diamond() -> DualDiamondNet {
    let mut places = Vec::new();
    for agent in Agent::BOTH {
        for s in LOCAL_STATES {
            places.push(Place {
                id: PlaceId(format!("{}.{s}", prefix(agent))),
                owner: Owner::Agent(agent),
                kind: PlaceKind::Epi,
                role: PlaceRole::State,
            });
        }
    }
    let shared = |id: &str, role| Place { id: PlaceId::from(id), owner: Owner::Shared, kind: PlaceKind::Ont, role };
    places.push(shared("ping", PlaceRole::Frame { sender: Agent::Alice }));
    places.push(shared("pong", PlaceRole::Frame { sender: Agent::Bob }));
    places.push(shared("ab.free", PlaceRole::Channel));
    places.push(shared("ba.free", PlaceRole::Channel));
    for (id, alice, bob) in
        [("own.none", false, false), ("own.a", true, false), ("own.b", false, true), ("own.both", true, true)]
    {
        places.push(shared(id, PlaceRole::Ownership(OwnershipPattern { alice, bob })));
    }

    let mut transitions = Vec::new();
    let mut mirror_transitions = Vec::new();
    for (name, ins, outs) in DIAMOND.iter().chain(HEARTBEAT) {
        for agent in Agent::BOTH {
            let arcs = |ps: &[&str]| ps.iter().map(|p| (PlaceId(localize(p, agent)), 1)).collect::<BTreeMap<_, _>>();
            transitions.push(Transition {
                id: TransitionId(format!("{}.{name}", prefix(agent))),
                controller: agent,
                inputs: arcs(ins),
                outputs: arcs(outs),
            });
        }
        mirror_transitions.push((TransitionId(format!("a.{name}")), TransitionId(format!("b.{name}"))));
    }

    let mut mirror_places: Vec<(PlaceId, PlaceId)> =
        LOCAL_STATES.iter().map(|s| (PlaceId(format!("a.{s}")), PlaceId(format!("b.{s}")))).collect();
    for (a, b) in [("ping", "pong"), ("ab.free", "ba.free"), ("own.a", "own.b")] {
        mirror_places.push((PlaceId::from(a), PlaceId::from(b)));
    }

    let mut net = PetriNet {
        name: "dual-diamond".into(),
        capacity: 1,
        places,
        transitions,
        initial: Marking::default(),
        mirror_places,
        mirror_transitions,
    };
    net.initial =
        net.marking_of(["a.idle", "b.idle", "own.none", "ab.free", "ba.free"]).expect("initial places are declared");
    net
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let net = build_dual_diamond();
        net.validate().unwrap();
        assert_eq!(net.transitions.len(), 16);
        for agent in Agent::BOTH {
            let own: Vec<_> = net.places.iter().filter(|p| p.owner == Owner::Agent(agent)).collect();
            assert_eq!(own.len(), 3);
            let ctl: Vec<_> = net.transitions.iter().filter(|t| t.controller == agent).collect();
            assert_eq!(ctl.len(), 8);
            assert_eq!(ctl.iter().filter(|t| !net.is_heartbeat(t)).count(), 3);
        }
    }

    #[test]
    fn enabled_at_initial_is_the_two_offers() {
        let net = build_dual_diamond();
        let en = net.enabled(&net.initial).unwrap();
        let ids: Vec<_> = en.iter().map(|t| t.0.as_str()).collect();
        assert_eq!(ids, ["a.offer", "b.offer"]);
    }

    #[test]
    fn all_zero_enables_nothing() {
        let net = build_dual_diamond();
        assert!(net.enabled(&net.empty_marking()).unwrap().is_empty());
    }

    #[test]
    fn unknown_place_is_structural_error() {
        let net = build_dual_diamond();
        let mut m = net.initial.clone();
        m.0.insert(PlaceId::from("nowhere"), 0);
        assert_eq!(net.enabled(&m), Err(PetriError::UnknownPlace("nowhere".into())));
        let mut m = net.initial.clone();
        m.0.remove(&PlaceId::from("ping"));
        assert_eq!(net.enabled(&m), Err(PetriError::MissingPlace("ping".into())));
    }

    #[test]
    fn firing_is_local() {
        let net = build_dual_diamond();
        for t in net.enabled(&net.initial).unwrap() {
            let next = net.fire(&net.initial, &t).unwrap();
            let tr = net.transition(&t).unwrap();
            for p in &net.places {
                if !tr.inputs.contains_key(&p.id) && !tr.outputs.contains_key(&p.id) {
                    assert_eq!(next.get(&p.id), net.initial.get(&p.id));
                }
            }
        }
    }

    #[test]
    fn disabled_fire_errors() {
        let net = build_dual_diamond();
        let t = TransitionId::from("a.release");
        assert_eq!(net.fire(&net.initial, &t), Err(PetriError::NotEnabled("a.release".into())));
    }

    #[test]
    fn capacity_overflow_is_reported() {
        let mut net = build_dual_diamond();
        let t = net.transitions.iter_mut().find(|t| t.id.0 == "a.offer").unwrap();
        t.outputs.insert(PlaceId::from("ba.free"), 1);
        let err = net.fire(&net.initial, &TransitionId::from("a.offer")).unwrap_err();
        assert!(matches!(err, PetriError::CapacityExceeded { .. }));
    }
}
