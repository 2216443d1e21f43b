use std::path::Path;
use std::process::{Command, Output};

fn bisync(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisync")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn demo_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.toml")
}

#[test]
fn petri_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bisync(&["petri", "check"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("transitions=16 states=8"), "{s}");
    assert!(s.contains("result=pass"));
    assert!(dir.path().join("petri_reach.txt").exists());
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn link_sim_without_faults() {
    let dir = tempfile::tempdir().unwrap();
    let o = bisync(&["link", "sim", "--faults", "none", "--slots", "32", "--seed", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("stats slots=32 "), "{s}");
    assert!(s.contains("silent_drops=0"));
}

#[test]
fn link_params_file() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("link.toml");
    std::fs::write(
        &params,
        "faults = \"none\"\nslots = 8\ncredit_capacity = 2\ndrain_every = 1\noffer_probability = 1.0\n\
         [wire]\ncable_length_m = 2.0\npropagation_ns_per_m = 5.0\nframe_bits = 512.0\nline_rate_bps = 100e9\n",
    )
    .unwrap();
    let o = bisync(&["link", "sim", "--params", params.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("stats slots=8 "));
}

#[test]
fn adversary_short_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = bisync(&["adversary", "--steps", "50", "--depth", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("summary requested=50 steps=50 bivalent_prefixes=51 outcome=nontermination"), "{s}");
}

#[test]
fn async_consensus_is_a_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = bisync(&["consensus", "--model", "async"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violation scheduler"));
}

#[test]
fn mesh_count_and_heal() {
    let dir = tempfile::tempdir().unwrap();
    let o = bisync(&["mesh", "count", "--sizes", "2,3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("count n=2 trees=16 "), "{s}");
    assert!(s.contains("count n=3 trees=17745 "));

    let o = bisync(&["mesh", "heal", "--rows", "4", "--cols", "4", "--fail", "1 fail 0,0 0,1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mesh rows=4 cols=4"));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\n[link]\nfaults = \"sometimes\"\n").unwrap();
    let o = bisync(&["report", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = bisync(&["report", "--from", dir.path().join("absent").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_from_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("async.toml");
    std::fs::write(
        &cfg,
        "seed = 9\n[adversary]\nprotocol = \"rw-flipflop\"\nmodel = \"async\"\ninputs = [0, 1]\nsteps = 20\ndepth = 10\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = bisync(&["report", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let o = bisync(&["report", "--from", out.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("row=asynchrony | conventional: adversary_undecided_steps=20"), "{s}");
    for line in s.lines() {
        assert!(line.ends_with("oae: not-measured"), "{line}");
    }
}

#[test]
fn demo_config_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo_path();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = bisync(&["report", "--config", cfg.to_str().unwrap()], d);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() >= 9);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}
