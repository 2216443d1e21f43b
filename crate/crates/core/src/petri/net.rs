//! Place/transition net structure and the standard firing rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::agent::Agent;

use super::PetriError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub String);

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PlaceId {
    fn from(s: &str) -> Self {
        PlaceId(s.to_owned())
    }
}

impl From<&str> for TransitionId {
    fn from(s: &str) -> Self {
        TransitionId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Owner {
    Agent(Agent),
    Shared,
}

impl Owner {
    pub fn mirrored(self) -> Owner {
        match self {
            Owner::Agent(a) => Owner::Agent(a.peer()),
            Owner::Shared => Owner::Shared,
        }
    }
}

/// Epistemic (per-agent knowledge) places versus ownership-side places.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaceKind {
    Epi,
    Ont,
}

/// Which register holds the message while a token sits in an ownership place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OwnershipPattern {
    pub alice: bool,
    pub bob: bool,
}

impl OwnershipPattern {
    pub const EMPTY: OwnershipPattern = OwnershipPattern { alice: false, bob: false };
    pub const BOTH: OwnershipPattern = OwnershipPattern { alice: true, bob: true };

    /// `(M,M)` or `(∅,∅)`.
    pub fn is_unambiguous(self) -> bool {
        self.alice == self.bob
    }

    pub fn mirrored(self) -> OwnershipPattern {
        OwnershipPattern { alice: self.bob, bob: self.alice }
    }
}

impl fmt::Display for OwnershipPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |b: bool| if b { 'M' } else { '_' };
        write!(f, "{}{}", c(self.alice), c(self.bob))
    }
}

/// Structural role of a place, used by the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaceRole {
    /// Local protocol state of the owning agent.
    State,
    /// A heartbeat frame on the wire, emitted by `sender`.
    Frame { sender: Agent },
    /// Complement place marking an idle wire direction.
    Channel,
    /// Holds the ownership token; the pattern says which registers hold `M`.
    Ownership(OwnershipPattern),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub id: PlaceId,
    pub owner: Owner,
    pub kind: PlaceKind,
    pub role: PlaceRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: TransitionId,
    pub controller: Agent,
    pub inputs: BTreeMap<PlaceId, u32>,
    pub outputs: BTreeMap<PlaceId, u32>,
}

/// Token count per place.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Marking(pub BTreeMap<PlaceId, u32>);

impl Marking {
    pub fn get(&self, p: &PlaceId) -> u32 {
        self.0.get(p).copied().unwrap_or(0)
    }

    pub fn marked(&self) -> impl Iterator<Item = &PlaceId> {
        self.0.iter().filter(|(_, &n)| n > 0).map(|(p, _)| p)
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&n| u64::from(n)).sum()
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        f.write_str("{")?;
        for (p, n) in self.0.iter().filter(|(_, &n)| n > 0) {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            if *n == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}:{n}")?;
            }
        }
        f.write_str("}")
    }
}

/// A place/transition net with a declared per-place capacity and an
/// Alice/Bob relabeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    pub name: String,
    pub capacity: u32,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub initial: Marking,
    /// Pairs exchanged by the Alice/Bob relabeling; anything not listed maps
    /// to itself.
    pub mirror_places: Vec<(PlaceId, PlaceId)>,
    pub mirror_transitions: Vec<(TransitionId, TransitionId)>,
}

/// The bilateral-swap net.
pub type DualDiamondNet = PetriNet;

impl PetriNet {
    pub fn place(&self, id: &PlaceId) -> Option<&Place> {
        self.places.iter().find(|p| &p.id == id)
    }

    pub fn transition(&self, id: &TransitionId) -> Option<&Transition> {
        self.transitions.iter().find(|t| &t.id == id)
    }

    pub fn ownership_places(&self) -> impl Iterator<Item = (&PlaceId, OwnershipPattern)> {
        self.places.iter().filter_map(|p| match p.role {
            PlaceRole::Ownership(pat) => Some((&p.id, pat)),
            _ => None,
        })
    }

    pub fn frame_places(&self) -> impl Iterator<Item = &Place> {
        self.places.iter().filter(|p| matches!(p.role, PlaceRole::Frame { .. }))
    }

    /// A marking with every place explicitly at zero.
    pub fn empty_marking(&self) -> Marking {
        Marking(self.places.iter().map(|p| (p.id.clone(), 0)).collect())
    }

    /// Builds a full marking from the listed places (one token each).
    pub fn marking_of<'a>(&self, marked: impl IntoIterator<Item = &'a str>) -> Result<Marking, PetriError> {
        let mut m = self.empty_marking();
        for p in marked {
            let slot = m.0.get_mut(&PlaceId::from(p)).ok_or_else(|| PetriError::UnknownPlace(p.to_owned()))?;
            *slot += 1;
        }
        Ok(m)
    }

    /// Checks that `m` covers exactly the places of this net.
    pub fn validate_marking(&self, m: &Marking) -> Result<(), PetriError> {
        for p in m.0.keys() {
            if self.place(p).is_none() {
                return Err(PetriError::UnknownPlace(p.0.clone()));
            }
        }
        for p in &self.places {
            if !m.0.contains_key(&p.id) {
                return Err(PetriError::MissingPlace(p.id.0.clone()));
            }
        }
        Ok(())
    }

    fn is_enabled_unchecked(&self, t: &Transition, m: &Marking) -> bool {
        t.inputs.iter().all(|(p, &n)| m.get(p) >= n)
    }

    /// Transitions whose every input place holds at least its multiplicity.
    pub fn enabled(&self, m: &Marking) -> Result<BTreeSet<TransitionId>, PetriError> {
        self.validate_marking(m)?;
        Ok(self.transitions.iter().filter(|t| self.is_enabled_unchecked(t, m)).map(|t| t.id.clone()).collect())
    }

    /// Fires `t` in `m`: subtract the inputs, add the outputs.
    pub fn fire(&self, m: &Marking, t: &TransitionId) -> Result<Marking, PetriError> {
        self.validate_marking(m)?;
        let tr = self.transition(t).ok_or_else(|| PetriError::UnknownTransition(t.0.clone()))?;
        if !self.is_enabled_unchecked(tr, m) {
            return Err(PetriError::NotEnabled(t.0.clone()));
        }
        let mut next = m.clone();
        for (p, n) in &tr.inputs {
            *next.0.get_mut(p).expect("validated") -= n;
        }
        for (p, n) in &tr.outputs {
            let slot = next.0.get_mut(p).expect("validated");
            *slot += n;
            if *slot > self.capacity {
                return Err(PetriError::CapacityExceeded { transition: t.0.clone(), place: p.0.clone() });
            }
        }
        Ok(next)
    }

    /// Structural checks: unique ids, arcs referencing declared places,
    /// nonempty presets/postsets, and a well-formed mirror table.
    pub fn validate(&self) -> Result<(), PetriError> {
        let mut seen = BTreeSet::new();
        for p in &self.places {
            if !seen.insert(p.id.clone()) {
                return Err(PetriError::Invalid(format!("duplicate place `{}`", p.id)));
            }
        }
        let mut seen_t = BTreeSet::new();
        for t in &self.transitions {
            if !seen_t.insert(t.id.clone()) {
                return Err(PetriError::Invalid(format!("duplicate transition `{}`", t.id)));
            }
            if t.inputs.is_empty() || t.outputs.is_empty() {
                return Err(PetriError::Invalid(format!("transition `{}` needs inputs and outputs", t.id)));
            }
            for (p, &n) in t.inputs.iter().chain(t.outputs.iter()) {
                if self.place(p).is_none() {
                    return Err(PetriError::UnknownPlace(p.0.clone()));
                }
                if n == 0 {
                    return Err(PetriError::Invalid(format!("zero multiplicity on `{}` -> `{p}`", t.id)));
                }
            }
        }
        self.validate_marking(&self.initial)?;
        if self.initial.0.values().any(|&n| n > self.capacity) {
            return Err(PetriError::Invalid("initial marking exceeds capacity".into()));
        }
        for (a, b) in &self.mirror_places {
            for p in [a, b] {
                if self.place(p).is_none() {
                    return Err(PetriError::UnknownPlace(p.0.clone()));
                }
            }
        }
        for (a, b) in &self.mirror_transitions {
            for t in [a, b] {
                if self.transition(t).is_none() {
                    return Err(PetriError::UnknownTransition(t.0.clone()));
                }
            }
        }
        Ok(())
    }

    /// Copy of the net with one transition deleted (mirror entries naming it
    /// are dropped too).
    pub fn without_transition(&self, t: &TransitionId) -> PetriNet {
        let mut net = self.clone();
        net.transitions.retain(|tr| &tr.id != t);
        net.mirror_transitions.retain(|(a, b)| a != t && b != t);
        net
    }

    /// Heartbeat transitions are driven by the arrival of the peer's frame;
    /// the rest are locally initiated moves of the controller's diamond.
    pub fn is_heartbeat(&self, t: &Transition) -> bool {
        t.inputs.keys().any(
            |p| matches!(self.place(p).map(|pl| pl.role), Some(PlaceRole::Frame { sender }) if sender != t.controller),
        )
    }
}
