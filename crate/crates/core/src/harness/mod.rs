//! Reproducible experiments over every module, written as line-oriented
//! artifacts plus a summary of invariant-check tallies.

mod config;
mod experiment;
mod table1;

pub use config::{
    AdversarySection, ConsensusSection, ExperimentConfig, KnowledgeSection, LinkSection, MeshSection, OutputSection,
    PetriSection, Section, DEMO_CONFIG,
};
pub use experiment::{load_artifacts, run_experiment, write_artifacts, Artifacts, ExperimentResult};
pub use table1::{table1_report, Cell, Table1, Table1Row};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("io: {0}")]
    Io(String),
    #[error("{module}: {msg}")]
    Module { module: &'static str, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub name: String,
    pub checked: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub seed: u64,
    pub tallies: Vec<Tally>,
}

impl Summary {
    pub fn tally(&mut self, name: &str, checked: u64, violations: u64) {
        self.tallies.push(Tally { name: name.to_owned(), checked, violations });
    }

    pub fn violations(&self) -> u64 {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    /// 0 when every check passed, 1 on any violation.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.passed())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment seed={}", self.seed)?;
        for t in &self.tallies {
            writeln!(f, "check={} checked={} violations={}", t.name, t.checked, t.violations)?;
        }
        writeln!(
            f,
            "result={} checks={} violations={}",
            if self.passed() { "pass" } else { "fail" },
            self.tallies.len(),
            self.violations()
        )
    }
}

/// Exit status for errors that stopped a run before it could be judged.
pub const EXIT_ERROR: i32 = 2;
