//! The experiment runner.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{table1_report, ExperimentConfig, HarnessError, Section, Summary};
use crate::consensus::{consensus_number_demo, run_swap_consensus, swap_consensus_sweep, ConsensusError};
use crate::knowledge::{
    async_ack_chain, bisync_slot_traces, knowledge_at, outcome_fact, sync_unilateral, DEFAULT_TRACE_CEILING,
};
use crate::link::{compute_delta, run_baseline, LinkParams, LinkSim, OutcomeTag, TICKS_PER_SLOT};
use crate::mesh::{
    count_spanning_trees, growth_is_superexponential, growth_table, heal_outage_ns, parse_failure_script,
    run_failure_script, single_failure_sweep, visibility, HealScope, KingGraph, Mesh, SpanningTree,
};
use crate::petri::{
    build_dual_diamond, check_boundary_dichotomy, check_ownership_conservation, check_safety, check_symmetry,
    marking_hash, parse_net, reachability,
};
use crate::timing::{find_bivalent_run, Classifier, Config, Valence};

/// File name → contents, in name order.
pub type Artifacts = BTreeMap<String, String>;

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub artifacts: Artifacts,
    pub summary: Summary,
}

fn module(module: &'static str) -> impl Fn(String) -> HarnessError {
    move |msg| HarnessError::Module { module, msg }
}

/// Run every configured section. Nothing here reads the clock or the
/// environment, so equal configs give equal artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let mut art = Artifacts::new();
    let mut sum = Summary { seed: cfg.seed, tallies: Vec::new() };
    let wire = cfg.link.as_ref().map_or_else(LinkParams::default, |l| l.wire);
    let delta_ns = compute_delta(&wire).map_err(|e| module("link")(e.to_string()))?.nanoseconds;

    if let (true, Some(p)) = (cfg.runs(Section::Petri), &cfg.petri) {
        art.insert("petri_reach.txt".into(), petri(cfg, p.net.as_deref(), &mut sum)?);
    }
    if let (true, Some(l)) = (cfg.runs(Section::Link), &cfg.link) {
        let sim = LinkSim::new(l.sim_params(), l.sweep()?, cfg.seed).map_err(|e| module("link")(e.to_string()))?;
        let (records, st) = sim.run().map_err(|e| module("link")(e.to_string()))?;
        let mut out = String::new();
        for r in &records {
            writeln!(out, "{r}").unwrap();
        }
        writeln!(
            out,
            "stats slots={} offered={} committed={} refused={} aborted_known={} silent_drops={} silence_verdicts={} \
             boundary_violations={} outcome_mismatches={} late_slots={} boundaries={} ck_boundaries={} max_resolution_ns={} delta_ns={}",
            st.slots, st.offered, st.committed, st.refused, st.aborted_known, st.silent_drops, st.silence_verdicts,
            st.boundary_violations, st.outcome_mismatches, st.late_slots, st.boundaries, st.ck_boundaries,
            st.max_resolution_ns, delta_ns
        )
        .unwrap();
        art.insert("link_trace.txt".into(), out);
        sum.tally("link.accounting", st.offered, u64::from(!st.accounted()));
        sum.tally("link.silent_drops", st.offered, st.silent_drops);
        sum.tally("link.boundary_dichotomy", st.boundaries, st.boundary_violations);
        sum.tally("link.outcome_agreement", st.slots, st.outcome_mismatches);
        sum.tally("link.slot_deadline", st.slots, st.late_slots);
        sum.tally("link.common_knowledge", st.boundaries, st.boundaries - st.ck_boundaries);
    }
    if let (true, Some(b)) = (cfg.runs(Section::Baseline), &cfg.baseline) {
        let s = run_baseline(b, cfg.seed);
        art.insert(
            "baseline.txt".into(),
            format!(
                "stats transmissions={} delivered={} duplicates={} silent_drops={} overflow_drops={} timeout_guesses={} \
                 false_timeouts={} given_up={} max_delivery_delay_ns={}\n",
                s.transmissions, s.delivered, s.duplicates, s.silent_drops, s.overflow_drops, s.timeout_guesses,
                s.false_timeouts, s.given_up, s.max_delivery_delay_ns
            ),
        );
    }
    if let (true, Some(k)) = (cfg.runs(Section::Knowledge), &cfg.knowledge) {
        art.insert("knowledge.txt".into(), knowledge(k.async_depth, k.sync_bound, &mut sum)?);
    }
    if let (true, Some(a)) = (cfg.runs(Section::Adversary), &cfg.adversary) {
        let spec = cfg.protocol(&a.protocol)?;
        let model = cfg.model("adversary.model", &a.model)?;
        let mut cl = Classifier::new(&spec, model, a.depth);
        let start = Config::initial(&spec, a.inputs);
        let err = module("adversary");
        let start_valence = cl.classify(&start).map_err(|e| err(e.to_string()))?.valence;
        let run = find_bivalent_run(&mut cl, &start, a.steps).map_err(|e| err(e.to_string()))?;
        let mut out = format!(
            "adversary protocol={} model={} inputs={},{} depth={} start={}\n",
            spec.name, model, a.inputs[0], a.inputs[1], a.depth, start_valence
        );
        let (steps, certified, outcome) = match &run {
            Some(r) => {
                let mut ok = 0u64;
                for c in &r.configs {
                    ok += u64::from(cl.classify(c).map_err(|e| err(e.to_string()))?.valence == Valence::Bivalent);
                }
                out.push_str(&r.render(&cl));
                sum.tally("adversary.prefix_bivalent", r.configs.len() as u64, r.configs.len() as u64 - ok);
                (r.steps.len(), ok, "nontermination")
            }
            None => (0, 0, if start_valence == Valence::Bivalent { "stuck" } else { "inapplicable" }),
        };
        writeln!(
            out,
            "summary requested={} steps={} bivalent_prefixes={} outcome={}",
            a.steps, steps, certified, outcome
        )
        .unwrap();
        art.insert("adversary_schedule.txt".into(), out);
    }
    if let (true, Some(c)) = (cfg.runs(Section::Consensus), &cfg.consensus) {
        let model = cfg.model("consensus.model", &c.model)?;
        let mut out = String::new();
        match run_swap_consensus(&model, [0, 1], None, c.max_slots) {
            Err(ConsensusError::SchedulerViolation(m)) => {
                writeln!(out, "violation scheduler model={m} reason=swap consensus requires bisynchronous slots")
                    .unwrap();
                sum.tally("consensus.model", 1, 1);
            }
            Err(e) => return Err(module("consensus")(e.to_string())),
            Ok(_) => {
                let rep = swap_consensus_sweep(&model).map_err(|e| module("consensus")(e.to_string()))?;
                for r in &rep.runs {
                    writeln!(out, "{r}").unwrap();
                }
                let n = rep.runs.len() as u64;
                writeln!(
                    out,
                    "sweep runs={} agreement_violations={} validity_violations={} unterminated={} late={}",
                    n,
                    rep.agreement_violations(),
                    rep.validity_violations(),
                    rep.unterminated(),
                    rep.late()
                )
                .unwrap();
                sum.tally("consensus.model", 1, 0);
                sum.tally("consensus.agreement", n, rep.agreement_violations() as u64);
                sum.tally("consensus.validity", n, rep.validity_violations() as u64);
                sum.tally("consensus.termination", n, rep.unterminated() as u64);
                sum.tally("consensus.decision_bound", n, rep.late() as u64);
            }
        }
        let demo = consensus_number_demo().map_err(|e| module("consensus")(e.to_string()))?;
        out.push_str(&demo.render());
        sum.tally("consensus.number", 1 + demo.rw.len() as u64, u64::from(!demo.holds()));
        art.insert("consensus.txt".into(), out);
    }
    if let (true, Some(m)) = (cfg.runs(Section::Mesh), &cfg.mesh) {
        art.insert("mesh_trace.txt".into(), mesh(m, delta_ns, &mut sum)?);
    }

    let table = table1_report(&art);
    art.insert("table1.txt".into(), table.render());
    art.insert("summary.txt".into(), sum.to_string());
    Ok(ExperimentResult { artifacts: art, summary: sum })
}

fn petri(cfg: &ExperimentConfig, net: Option<&str>, sum: &mut Summary) -> Result<String, HarnessError> {
    let err = module("petri");
    let net = match net {
        Some(p) => {
            let text = std::fs::read_to_string(cfg.resolve(p)).map_err(|e| HarnessError::Io(format!("{p}: {e}")))?;
            parse_net(&text).map_err(|e| err(e.to_string()))?
        }
        None => build_dual_diamond(),
    };
    let g = reachability(&net).map_err(|e| err(e.to_string()))?;
    let mut out = format!(
        "net name={} places={} transitions={} states={} edges={}\n",
        net.name,
        net.places.len(),
        net.transitions.len(),
        g.nodes.len(),
        g.edges.len()
    );
    for (i, m) in g.nodes.iter().enumerate() {
        writeln!(out, "state {i} hash={} marking={m}", marking_hash(m)).unwrap();
    }
    for (a, t, b) in &g.edges {
        writeln!(out, "edge {a} {t} {b}").unwrap();
    }
    for rep in [
        check_ownership_conservation(&net, &g),
        check_boundary_dichotomy(&net, &g),
        check_safety(&net, &g),
        check_symmetry(&net, &g),
    ] {
        out.push_str(&rep.render());
        sum.tally(&format!("petri.{}", rep.name), rep.checked as u64, rep.violations as u64);
    }
    Ok(out)
}

fn knowledge(async_depth: usize, sync_bound: usize, sum: &mut Summary) -> Result<String, HarnessError> {
    let err = module("knowledge");
    let mut out = String::new();

    let set = bisync_slot_traces();
    let boundary = TICKS_PER_SLOT as usize;
    let (mut ck, mut asym, mut chain_bad, mut chain_checked) = (0u64, 0u64, 0u64, 0u64);
    let targets = [OutcomeTag::Committed, OutcomeTag::Aborted { idle: false }, OutcomeTag::Aborted { idle: true }];
    for target in targets {
        let fact = outcome_fact(target);
        let ks = knowledge_at(&set, boundary, &fact).map_err(|e| err(e.to_string()))?;
        for (t, k) in set.traces.iter().zip(ks) {
            if fact(t, boundary) {
                ck += u64::from(k.common_knowledge);
                asym += u64::from(k.asymmetric);
                chain_bad += u64::from(!k.chain_holds());
                chain_checked += 1;
            }
        }
    }
    let n = set.len() as u64;
    writeln!(out, "bisync traces={n} boundary_index={boundary} ck={ck} asymmetric={asym}").unwrap();
    sum.tally("knowledge.bisync_ck", n, n - ck);

    let chain = async_ack_chain(async_depth, DEFAULT_TRACE_CEILING).map_err(|e| err(e.to_string()))?;
    let (mut points, mut ck_async, mut asym_async) = (0u64, 0u64, 0u64);
    for k in 1..=async_depth as u32 {
        for i in 0..=async_depth {
            let ks = knowledge_at(&chain, i, |t: &[crate::knowledge::AsyncState], i| t[i].delivered >= k)
                .map_err(|e| err(e.to_string()))?;
            for s in ks {
                points += 1;
                ck_async += u64::from(s.common_knowledge);
                asym_async += u64::from(s.asymmetric);
                chain_bad += u64::from(!s.chain_holds());
                chain_checked += 1;
            }
        }
    }
    writeln!(
        out,
        "async depth={async_depth} traces={} points={points} ck={ck_async} asymmetric={asym_async}",
        chain.len()
    )
    .unwrap();
    sum.tally("knowledge.async_no_ck", points, ck_async);

    let sync = sync_unilateral(sync_bound);
    let ks = knowledge_at(&sync, sync_bound, |t: &[crate::knowledge::SyncState], i| t[i].committed == Some(true))
        .map_err(|e| err(e.to_string()))?;
    let sync_asym = ks.iter().filter(|k| k.asymmetric).count();
    let sync_ck = ks.iter().filter(|k| k.common_knowledge).count();
    chain_bad += ks.iter().filter(|k| !k.chain_holds()).count() as u64;
    writeln!(out, "sync bound={sync_bound} traces={} ck={sync_ck} asymmetric={sync_asym}", sync.len()).unwrap();
    sum.tally("knowledge.chain", chain_checked + ks.len() as u64, chain_bad);
    Ok(out)
}

fn mesh(m: &super::MeshSection, delta_ns: u64, sum: &mut Summary) -> Result<String, HarnessError> {
    let err = module("mesh");
    let g = KingGraph::new(m.rows, m.cols).map_err(|e| err(e.to_string()))?;
    let mut out = format!("mesh rows={} cols={} root={} delta_ns={delta_ns}\n", m.rows, m.cols, g.root());

    let (sweep, events) = single_failure_sweep(&g).map_err(|e| err(e.to_string()))?;
    for ev in &events {
        writeln!(out, "single {ev}").unwrap();
    }
    writeln!(
        out,
        "sweep tree_edges={} local_one_slot={} escalated={} other={}",
        sweep.tree_edges, sweep.healed_local_in_one, sweep.escalated, sweep.other
    )
    .unwrap();
    sum.tally("mesh.single_failure_local", (sweep.tree_edges - sweep.escalated) as u64, sweep.other as u64);

    let script = parse_failure_script(&g, &m.failures.join("\n")).map_err(|e| err(e.to_string()))?;
    let mut mesh = Mesh::new(g.clone());
    let evs = run_failure_script(&mut mesh, &script).map_err(|e| err(e.to_string()))?;
    let mut bad = 0u64;
    for ev in &evs {
        writeln!(out, "script {ev}").unwrap();
        if !ev.spans && ev.scope != HealScope::Escalated {
            bad += 1;
        }
    }
    let connected = SpanningTree::bfs(&g, mesh.tree.root, &mesh.down).depth.iter().all(Option::is_some);
    if connected && !mesh.tree.spans(&mesh.down) {
        bad += 1;
    }
    sum.tally("mesh.script_spans", evs.len() as u64, bad);

    if !m.count_sizes.is_empty() {
        let rows = growth_table(&m.count_sizes);
        for r in &rows {
            let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.3}"));
            writeln!(out, "count n={} trees={} ratio={ratio}", r.n, r.count).unwrap();
        }
        let increasing = rows.windows(2).all(|w| w[1].count > w[0].count);
        let superexp = rows.len() < 3 || growth_is_superexponential(&rows);
        writeln!(out, "growth increasing={increasing} superexponential={superexp}").unwrap();
        sum.tally("mesh.kirchhoff_growth", rows.len() as u64, u64::from(!(increasing && superexp)));
        // 2x2 has a known count
        if m.count_sizes.contains(&2) {
            sum.tally("mesh.kirchhoff_2x2", 1, u64::from(count_spanning_trees(2, 2) != 16.into()));
        }
    }

    let heal_ns = heal_outage_ns(1, delta_ns);
    let (mut slower, mut seen) = (0u64, 0u64);
    for &p in &m.poll_ns {
        let v = visibility(heal_ns, p);
        let c = visibility(m.clos_ns, p);
        writeln!(
            out,
            "visibility poll_ns={p} heal_ns={heal_ns} heal_visible={} heal_hits={}..{} clos_ns={} clos_visible={} clos_hits={}..{}",
            v.visible(),
            v.min_hits,
            v.max_hits,
            m.clos_ns,
            c.visible(),
            c.min_hits,
            c.max_hits
        )
        .unwrap();
        if p > delta_ns {
            slower += 1;
            seen += u64::from(v.visible());
        }
    }
    sum.tally("mesh.invisible_above_delta", slower, seen);
    Ok(out)
}

pub fn write_artifacts(dir: &Path, artifacts: &Artifacts) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    for (name, body) in artifacts {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

/// Read back whichever known artifacts exist in `dir`.
pub fn load_artifacts(dir: &Path) -> Result<Artifacts, HarnessError> {
    if !dir.is_dir() {
        return Err(HarnessError::Io(format!("{} is not a directory", dir.display())));
    }
    let mut art = Artifacts::new();
    for name in [
        "petri_reach.txt",
        "link_trace.txt",
        "baseline.txt",
        "knowledge.txt",
        "adversary_schedule.txt",
        "consensus.txt",
        "mesh_trace.txt",
        "summary.txt",
    ] {
        let p = dir.join(name);
        if p.exists() {
            let body = std::fs::read_to_string(&p).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
            art.insert(name.to_owned(), body);
        }
    }
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::super::DEMO_CONFIG;
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text, Path::new(".")).unwrap()
    }

    #[test]
    fn demo_is_clean_and_deterministic() {
        let c = cfg(DEMO_CONFIG);
        let a = run_experiment(&c).unwrap();
        assert!(a.summary.passed(), "{}", a.summary);
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.artifacts, b.artifacts);
        for name in [
            "petri_reach.txt",
            "link_trace.txt",
            "adversary_schedule.txt",
            "consensus.txt",
            "mesh_trace.txt",
            "table1.txt",
        ] {
            assert!(a.artifacts.contains_key(name), "{name}");
        }
    }

    #[test]
    fn async_swap_is_a_scheduler_violation() {
        let c = cfg("seed = 1\n[consensus]\nmodel = \"async\"\nmax_slots = 4\n");
        let r = run_experiment(&c).unwrap();
        assert!(!r.summary.passed());
        assert_eq!(r.summary.exit_code(), 1);
        assert!(r.artifacts["consensus.txt"].starts_with("violation scheduler model=async"));
    }

    #[test]
    fn different_seeds_differ() {
        let base = "[link]\nfaults = \"sample:4\"\nslots = 64\ncredit_capacity = 2\ndrain_every = 3\noffer_probability = 0.6\n\
                    [link.wire]\ncable_length_m = 10.0\npropagation_ns_per_m = 5.0\nframe_bits = 512.0\nline_rate_bps = 100e9\n";
        let a = run_experiment(&cfg(&format!("seed = 1\n{base}"))).unwrap();
        let b = run_experiment(&cfg(&format!("seed = 2\n{base}"))).unwrap();
        assert_ne!(a.artifacts["link_trace.txt"], b.artifacts["link_trace.txt"]);
        assert!(a.summary.passed() && b.summary.passed());
    }

    #[test]
    fn artifacts_survive_disk() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_experiment(&cfg("seed = 5\n[petri]\n[knowledge]\nasync_depth = 6\nsync_bound = 2\n")).unwrap();
        write_artifacts(dir.path(), &r.artifacts).unwrap();
        let back = load_artifacts(dir.path()).unwrap();
        assert_eq!(back["petri_reach.txt"], r.artifacts["petri_reach.txt"]);
        assert!(load_artifacts(&dir.path().join("missing")).is_err());
    }
}
