use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bisync::harness::{
    load_artifacts, run_experiment, table1_report, write_artifacts, ExperimentConfig, Section, DEMO_CONFIG, EXIT_ERROR,
};
use clap::{Args, Parser, Subcommand};

/// Deterministic simulation lab for bisynchronous links.
///
/// Every subcommand reads an experiment config (the bundled demo when
/// `--config` is absent), runs the relevant sections, writes artifacts to
/// the output directory and exits 0 when all checks pass, 1 on a violation
/// and 2 on an error.
#[derive(Parser, Debug)]
#[command(name = "bisync", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory; defaults to `output.dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Reachability and invariant checks on the slot Petri net.
    Petri {
        #[command(subcommand)]
        action: PetriAction,
        #[command(flatten)]
        common: Common,
    },
    /// Slot link simulation with fault injection, plus the baseline and knowledge traces.
    Link {
        #[command(subcommand)]
        action: LinkAction,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a schedule that keeps a protocol bivalent.
    Adversary {
        /// Built-in protocol name or `.proto` path.
        #[arg(long)]
        protocol: Option<String>,
        /// `async`, `sync:<rounds>`, `bisync` or `bisync:<ns>`.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        /// Two inputs, e.g. `0,1`.
        #[arg(long, value_parser = parse_inputs)]
        inputs: Option<[u8; 2]>,
        #[command(flatten)]
        common: Common,
    },
    /// Swap consensus over the single-fault sweep and the consensus-number demo.
    Consensus {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        max_slots: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// King-graph mesh repair and spanning-tree counts.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
        #[command(flatten)]
        common: Common,
    },
    /// Run every configured section, or tabulate an existing artifact directory.
    Report {
        /// Read artifacts from this directory instead of running.
        #[arg(long)]
        from: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand, Debug, Clone)]
enum PetriAction {
    /// Print the reachable markings.
    Reach {
        #[arg(long)]
        net: Option<PathBuf>,
    },
    /// Print only the invariant checks.
    Check {
        #[arg(long)]
        net: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug, Clone)]
enum LinkAction {
    Sim {
        /// Link section as a standalone TOML file (the `[link]` table body).
        #[arg(long)]
        params: Option<PathBuf>,
        /// `none`, `exhaustive` or `sample:<n>`.
        #[arg(long)]
        faults: Option<String>,
        #[arg(long)]
        slots: Option<u64>,
    },
}

#[derive(Subcommand, Debug, Clone)]
enum MeshAction {
    /// Apply the failure script and report each repair.
    Heal {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        /// Extra script lines, `<slot> fail|restore <cell> <cell>`.
        #[arg(long = "fail")]
        failures: Vec<String>,
    },
    /// Spanning-tree counts for n x n grids.
    Count {
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
}

fn parse_inputs(s: &str) -> Result<[u8; 2], String> {
    let v: Vec<u8> =
        s.split(',').map(|t| t.trim().parse::<u8>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err("expected two comma-separated inputs".into()),
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::parse(DEMO_CONFIG, Path::new("."))?,
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn missing(section: &str) -> anyhow::Error {
    anyhow::anyhow!("config has no [{section}] section")
}

/// An artifact to print, restricted to lines starting with one of the
/// prefixes (all lines when there are none).
type Show<'a> = (&'a str, &'a [&'a str]);

/// Run `cfg`, write artifacts and print `show` plus the summary.
fn execute(cfg: &ExperimentConfig, common: &Common, show: &[Show]) -> Result<i32> {
    cfg.validate()?;
    let res = run_experiment(cfg)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    write_artifacts(&dir, &res.artifacts)?;
    for (name, prefixes) in show {
        for line in res.artifacts.get(*name).into_iter().flat_map(|b| b.lines()) {
            if prefixes.is_empty() || prefixes.iter().any(|p| line.starts_with(p)) {
                println!("{line}");
            }
        }
    }
    print!("{}", res.summary);
    Ok(res.summary.exit_code())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Petri { action, common } => {
            let mut cfg = load(&common)?;
            let (net, show): (_, Show) = match action {
                PetriAction::Reach { net } => (net, ("petri_reach.txt", &[])),
                PetriAction::Check { net } => (net, ("petri_reach.txt", &["net ", "check="])),
            };
            let sec = cfg.petri.get_or_insert(bisync::harness::PetriSection { net: None });
            if let Some(n) = net {
                sec.net = Some(n.to_string_lossy().into_owned());
                cfg.base_dir = PathBuf::from(".");
            }
            cfg.only = vec![Section::Petri];
            execute(&cfg, &common, &[show])
        }
        Cmd::Link { action: LinkAction::Sim { params, faults, slots }, common } => {
            let mut cfg = load(&common)?;
            if let Some(p) = params {
                let text = std::fs::read_to_string(&p).with_context(|| p.display().to_string())?;
                cfg.link = Some(toml::from_str(&text).with_context(|| format!("{}: link params", p.display()))?);
            }
            let link = cfg.link.as_mut().ok_or_else(|| missing("link"))?;
            if let Some(f) = faults {
                link.faults = f;
            }
            if let Some(s) = slots {
                link.slots = s;
            }
            cfg.only = vec![Section::Link, Section::Baseline, Section::Knowledge];
            execute(&cfg, &common, &[("link_trace.txt", &["stats "]), ("baseline.txt", &[]), ("knowledge.txt", &[])])
        }
        Cmd::Adversary { protocol, model, steps, depth, inputs, common } => {
            let mut cfg = load(&common)?;
            if protocol.is_some() {
                cfg.base_dir = PathBuf::from(".");
            }
            let a = cfg.adversary.as_mut().ok_or_else(|| missing("adversary"))?;
            if let Some(p) = protocol {
                a.protocol = p;
            }
            if let Some(m) = model {
                a.model = m;
            }
            if let Some(s) = steps {
                a.steps = s;
            }
            if let Some(d) = depth {
                a.depth = d;
            }
            if let Some(i) = inputs {
                a.inputs = i;
            }
            cfg.only = vec![Section::Adversary];
            execute(&cfg, &common, &[("adversary_schedule.txt", &[])])
        }
        Cmd::Consensus { model, max_slots, common } => {
            let mut cfg = load(&common)?;
            let c = cfg.consensus.as_mut().ok_or_else(|| missing("consensus"))?;
            if let Some(m) = model {
                c.model = m;
            }
            if let Some(n) = max_slots {
                c.max_slots = n;
            }
            cfg.only = vec![Section::Consensus];
            execute(&cfg, &common, &[("consensus.txt", &["sweep ", "violation ", "swap ", "rw "])])
        }
        Cmd::Mesh { action, common } => {
            let mut cfg = load(&common)?;
            let m = cfg.mesh.as_mut().ok_or_else(|| missing("mesh"))?;
            let show: Show = match action {
                MeshAction::Heal { rows, cols, failures } => {
                    if let Some(r) = rows {
                        m.rows = r;
                    }
                    if let Some(c) = cols {
                        m.cols = c;
                    }
                    if rows.is_some() || cols.is_some() {
                        m.failures.clear();
                    }
                    m.failures.extend(failures);
                    ("mesh_trace.txt", &["mesh ", "script ", "sweep "])
                }
                MeshAction::Count { sizes } => {
                    if !sizes.is_empty() {
                        m.count_sizes = sizes;
                    }
                    ("mesh_trace.txt", &["count ", "growth ", "visibility "])
                }
            };
            cfg.only = vec![Section::Mesh];
            execute(&cfg, &common, &[show])
        }
        Cmd::Report { from: Some(dir), .. } => {
            let art = load_artifacts(&dir)?;
            if art.is_empty() {
                bail!("{}: no artifacts", dir.display());
            }
            print!("{}", table1_report(&art).render());
            Ok(0)
        }
        Cmd::Report { from: None, common } => {
            let cfg = load(&common)?;
            execute(&cfg, &common, &[("table1.txt", &[])])
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
