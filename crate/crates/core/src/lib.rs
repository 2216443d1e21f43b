//! Deterministic simulation of bisynchronous point-to-point links.
//!
//! The crate bundles the analyses that sit around a slot-based register-swap
//! link: a Petri net of the swap, the slot engine with credit flow control,
//! timing models with a bivalency adversary, an epistemic evaluator,
//! two-process consensus demos, a king-graph mesh with local healing, and a
//! harness that runs them as reproducible experiments.

pub mod agent;
pub mod consensus;
pub mod des;
pub mod harness;
pub mod knowledge;
pub mod link;
pub mod mesh;
pub mod petri;
pub mod timing;

pub use agent::Agent;
