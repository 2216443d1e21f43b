//! Timing models, protocol automata and the bivalency adversary.

mod adversary;
mod model;
mod protocol;
mod valence;

pub use adversary::{find_bivalent_run, BivalentRun};
pub use model::{legal_steps, schedule_step, Config, ConfigKey, Envelope, Step};
pub use protocol::{builtin_protocol, parse_protocol, Primitive, ProtocolSpec, Rule, Source, Sym, BUILTIN_RW};
pub use valence::{classify_valence, Classifier, Valence, ValenceReport, DEFAULT_NODE_CEILING};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::link::Delta;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimingError {
    #[error("protocol line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("step `{step}` illegal under {model}: {reason}")]
    SchedulerViolation { model: String, step: String, reason: String },
    #[error("valence search hit {ceiling} configurations (seen decisions {seen:?}, depth reached {depth})")]
    Ceiling { ceiling: usize, seen: Vec<u8>, depth: usize },
    #[error("bad timing model `{0}`")]
    Model(String),
    #[error("bad step `{0}`")]
    Step(String),
}

/// `Synchronous::bound` counts rounds; `Bisynchronous` rounds are slots of Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimingModel {
    Asynchronous,
    Synchronous { bound: u32 },
    Bisynchronous { delta: Delta },
}

impl TimingModel {
    pub fn validate(&self) -> Result<(), TimingError> {
        match self {
            TimingModel::Synchronous { bound: 0 } => Err(TimingError::Model("sync bound must be positive".into())),
            TimingModel::Bisynchronous { delta } if delta.nanoseconds == 0 => {
                Err(TimingError::Model("bisync delta must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn short(&self) -> &'static str {
        match self {
            TimingModel::Asynchronous => "async",
            TimingModel::Synchronous { .. } => "sync",
            TimingModel::Bisynchronous { .. } => "bisync",
        }
    }
}

impl fmt::Display for TimingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimingModel::Asynchronous => write!(f, "async"),
            TimingModel::Synchronous { bound } => write!(f, "sync:{bound}"),
            TimingModel::Bisynchronous { delta } => write!(f, "bisync:{}", delta.nanoseconds),
        }
    }
}

impl FromStr for TimingModel {
    type Err = TimingError;

    /// `async`, `sync:<rounds>` or `bisync:<delta ns>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TimingError::Model(s.to_owned());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let m = match (head, arg) {
            ("async", None) => TimingModel::Asynchronous,
            ("sync", Some(a)) => TimingModel::Synchronous { bound: a.parse().map_err(|_| bad())? },
            ("bisync", Some(a)) => {
                TimingModel::Bisynchronous { delta: Delta { nanoseconds: a.parse().map_err(|_| bad())? } }
            }
            _ => return Err(bad()),
        };
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trip() {
        for s in ["async", "sync:3", "bisync:111"] {
            assert_eq!(s.parse::<TimingModel>().unwrap().to_string(), s);
        }
        for s in ["sync", "sync:0", "bisync:0", "async:1", "lockstep"] {
            assert!(s.parse::<TimingModel>().is_err(), "{s}");
        }
    }
}
