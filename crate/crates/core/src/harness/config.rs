//! Experiment configuration. Every section except `seed` is optional; a
//! missing section skips that part of the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::link::{BaselineParams, FaultSweep, LinkError, LinkParams, LinkSimParams};
use crate::timing::{builtin_protocol, parse_protocol, ProtocolSpec, TimingModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub petri: Option<PetriSection>,
    pub link: Option<LinkSection>,
    pub baseline: Option<BaselineParams>,
    pub knowledge: Option<KnowledgeSection>,
    pub adversary: Option<AdversarySection>,
    pub consensus: Option<ConsensusSection>,
    pub mesh: Option<MeshSection>,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Restrict a run to these sections; all configured sections when empty.
    #[serde(skip)]
    pub only: Vec<Section>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Section {
    Petri,
    Link,
    Baseline,
    Knowledge,
    Adversary,
    Consensus,
    Mesh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PetriSection {
    /// Net file; the built-in dual diamond when absent.
    pub net: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    /// `none`, `exhaustive` or `sample:<n>`.
    pub faults: String,
    pub slots: u64,
    pub credit_capacity: u32,
    pub drain_every: u64,
    pub offer_probability: f64,
    pub wire: LinkParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeSection {
    /// Steps of the asynchronous acknowledgement chain.
    pub async_depth: usize,
    /// Rounds of the synchronous deadline example.
    pub sync_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    /// Built-in name or path to a `.proto` file.
    pub protocol: String,
    /// `async`, `sync:<rounds>`, `bisync` (the link's Δ) or `bisync:<ns>`.
    pub model: String,
    pub inputs: [u8; 2],
    pub steps: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsensusSection {
    pub model: String,
    pub max_slots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub rows: usize,
    pub cols: usize,
    /// Failure script lines, `<slot> fail|restore <cell> <cell>`.
    #[serde(default)]
    pub failures: Vec<String>,
    pub poll_ns: Vec<u64>,
    pub clos_ns: u64,
    pub count_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".to_owned() }
    }
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config { field: field.into(), msg: msg.into() }
}

impl LinkSection {
    pub fn sim_params(&self) -> LinkSimParams {
        LinkSimParams {
            link: self.wire,
            slots: self.slots,
            credit_capacity: self.credit_capacity,
            drain_every: self.drain_every,
            offer_probability: self.offer_probability,
        }
    }

    pub fn sweep(&self) -> Result<FaultSweep, HarnessError> {
        self.faults.parse().map_err(|e: LinkError| invalid("link.faults", e.to_string()))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| invalid("(file)", e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    /// Whether `s` is both configured and selected.
    pub fn runs(&self, s: Section) -> bool {
        let configured = match s {
            Section::Petri => self.petri.is_some(),
            Section::Link => self.link.is_some(),
            Section::Baseline => self.baseline.is_some(),
            Section::Knowledge => self.knowledge.is_some(),
            Section::Adversary => self.adversary.is_some(),
            Section::Consensus => self.consensus.is_some(),
            Section::Mesh => self.mesh.is_some(),
        };
        configured && (self.only.is_empty() || self.only.contains(&s))
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if let Some(l) = &self.link {
            l.sim_params().validate().map_err(|e| match e {
                LinkError::Validation { field, msg }
                    if matches!(field, "credit_capacity" | "drain_every" | "offer_probability") =>
                {
                    invalid(format!("link.{field}"), msg)
                }
                LinkError::Validation { field, msg } => invalid(format!("link.wire.{field}"), msg),
                e => invalid("link", e.to_string()),
            })?;
            l.sweep()?;
        }
        if let Some(k) = &self.knowledge {
            if !(1..=20).contains(&k.async_depth) {
                return Err(invalid("knowledge.async_depth", "must be in 1..=20"));
            }
            if k.sync_bound == 0 {
                return Err(invalid("knowledge.sync_bound", "must be positive"));
            }
        }
        if let Some(a) = &self.adversary {
            self.model("adversary.model", &a.model)?;
            if a.inputs.iter().any(|&v| v > 1) {
                return Err(invalid("adversary.inputs", "inputs are 0 or 1"));
            }
            if a.depth == 0 {
                return Err(invalid("adversary.depth", "must be positive"));
            }
            self.protocol(&a.protocol)?;
        }
        if let Some(c) = &self.consensus {
            self.model("consensus.model", &c.model)?;
            if c.max_slots == 0 {
                return Err(invalid("consensus.max_slots", "must be positive"));
            }
        }
        if let Some(m) = &self.mesh {
            if m.rows == 0 || m.cols == 0 {
                return Err(invalid("mesh.rows", "grid must be at least 1x1"));
            }
            if m.poll_ns.contains(&0) {
                return Err(invalid("mesh.poll_ns", "poll periods must be positive"));
            }
            if m.count_sizes.iter().any(|&n| n == 0 || n > 12) {
                return Err(invalid("mesh.count_sizes", "sizes must be in 1..=12"));
            }
            let g = crate::mesh::KingGraph::new(m.rows, m.cols).map_err(|e| invalid("mesh.rows", e.to_string()))?;
            crate::mesh::parse_failure_script(&g, &m.failures.join("\n"))
                .map_err(|e| invalid("mesh.failures", e.to_string()))?;
        }
        Ok(())
    }

    /// Parse a model string; a bare `bisync` takes Δ from the link section.
    pub fn model(&self, field: &str, s: &str) -> Result<TimingModel, HarnessError> {
        if s == "bisync" {
            let wire = self.link.as_ref().map_or_else(LinkParams::default, |l| l.wire);
            let delta = crate::link::compute_delta(&wire).map_err(|e| invalid(field, e.to_string()))?;
            return Ok(TimingModel::Bisynchronous { delta });
        }
        s.parse().map_err(|e: crate::timing::TimingError| invalid(field, e.to_string()))
    }

    pub fn protocol(&self, name: &str) -> Result<ProtocolSpec, HarnessError> {
        let text = match builtin_protocol(name) {
            Some(t) => t.to_owned(),
            None => std::fs::read_to_string(self.resolve(name))
                .map_err(|e| invalid("adversary.protocol", format!("{name}: {e}")))?,
        };
        parse_protocol(&text).map_err(|e| invalid("adversary.protocol", e.to_string()))
    }
}

/// The configuration shipped as `configs/demo.toml`.
pub const DEMO_CONFIG: &str = include_str!("../../../../configs/demo.toml");

#[cfg(test)]
mod tests {
    use super::*;

    fn demo() -> ExperimentConfig {
        ExperimentConfig::parse(DEMO_CONFIG, Path::new(".")).unwrap()
    }

    #[test]
    fn demo_parses_and_round_trips() {
        let c = demo();
        let again = ExperimentConfig::parse(&c.to_toml(), Path::new(".")).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn errors_carry_field_paths() {
        let mut text = DEMO_CONFIG.replace("offer_probability = 0.8", "offer_probability = 1.5");
        let e = ExperimentConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(matches!(&e, HarnessError::Config { field, .. } if field == "link.offer_probability"), "{e}");

        text = DEMO_CONFIG.replace("model = \"async\"", "model = \"eventually\"");
        let e = ExperimentConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(matches!(&e, HarnessError::Config { field, .. } if field == "adversary.model"), "{e}");

        let e = ExperimentConfig::parse("seed = 1\nbogus = 2\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn only_filters_sections() {
        let mut c = demo();
        assert!(c.runs(Section::Mesh));
        c.only = vec![Section::Petri];
        assert!(c.runs(Section::Petri) && !c.runs(Section::Mesh) && !c.runs(Section::Link));
        c.petri = None;
        assert!(!c.runs(Section::Petri));
    }

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::parse("seed = 3\n", Path::new(".")).unwrap();
        assert!(c.link.is_none() && c.mesh.is_none());
        assert_eq!(c.output.dir, "out");
    }

    #[test]
    fn bare_bisync_uses_link_delta() {
        let c = demo();
        match c.model("x", "bisync").unwrap() {
            TimingModel::Bisynchronous { delta } => assert_eq!(delta.nanoseconds, 111),
            m => panic!("{m}"),
        }
    }
}
