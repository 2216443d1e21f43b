//! Side-by-side comparison of a conventional link and the slot link, one row
//! per assumption, each cell read from a measured artifact.

use std::collections::BTreeMap;
use std::fmt;

use super::Artifacts;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Measured(String),
    NotMeasured,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Measured(s) => f.write_str(s),
            Cell::NotMeasured => f.write_str("not-measured"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table1Row {
    pub row: &'static str,
    pub conventional: Cell,
    pub oae: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
}

impl Table1 {
    pub fn row(&self, name: &str) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.row == name)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!("row={} | conventional: {} | oae: {}\n", r.row, r.conventional, r.oae));
        }
        out
    }
}

/// `key=value` pairs of the first line in `file` starting with `prefix `.
fn record<'a>(art: &'a Artifacts, file: &str, prefix: &str) -> Option<BTreeMap<&'a str, &'a str>> {
    let body = art.get(file)?;
    let line = body.lines().find(|l| l.starts_with(prefix) && l[prefix.len()..].starts_with(' '))?;
    Some(line.split_whitespace().filter_map(|t| t.split_once('=')).collect())
}

fn lines_with<'a>(art: &'a Artifacts, file: &str, prefix: &str) -> Vec<&'a str> {
    art.get(file).map_or_else(Vec::new, |b| b.lines().filter(|l| l.starts_with(prefix)).collect())
}

fn join(parts: Vec<String>) -> Cell {
    if parts.is_empty() {
        Cell::NotMeasured
    } else {
        Cell::Measured(parts.join(", "))
    }
}

pub fn table1_report(art: &Artifacts) -> Table1 {
    let base = record(art, "baseline.txt", "stats");
    let adv = record(art, "adversary_schedule.txt", "summary");
    let link = record(art, "link_trace.txt", "stats");
    let know = record(art, "knowledge.txt", "async");
    let sync = record(art, "knowledge.txt", "sync");
    let sweep = record(art, "consensus.txt", "sweep");
    let swap = record(art, "consensus.txt", "swap");

    let mut rows = Vec::new();

    let mut conv = Vec::new();
    if let Some(b) = &base {
        conv.push(format!("max_delivery_delay_ns={}", b["max_delivery_delay_ns"]));
    }
    if let Some(a) = &adv {
        conv.push(format!("adversary_undecided_steps={} outcome={}", a["steps"], a["outcome"]));
    }
    let oae =
        link.as_ref().map(|l| format!("max_resolution_ns={} bound_delta_ns={}", l["max_resolution_ns"], l["delta_ns"]));
    rows.push(Table1Row { row: "asynchrony", conventional: join(conv), oae: join(oae.into_iter().collect()) });

    let rw: Vec<String> = lines_with(art, "consensus.txt", "rw ")
        .iter()
        .filter_map(|l| {
            let mut t = l.split_whitespace().skip(1);
            let name = t.next()?;
            let kind = t.next()?.strip_prefix("witness=")?;
            Some(format!("{name}={kind}"))
        })
        .collect();
    let oae = match (&sweep, &swap) {
        (Some(s), Some(w)) => vec![format!(
            "swap wait_free={} agreement={} slot_runs={} agreement_violations={} validity_violations={}",
            w["wait_free"], w["agreement"], s["runs"], s["agreement_violations"], s["validity_violations"]
        )],
        _ => Vec::new(),
    };
    rows.push(Table1Row { row: "primitive", conventional: join(rw), oae: join(oae) });

    let conv = base
        .as_ref()
        .map(|b| format!("timeout_guesses={} false_timeouts={}", b["timeout_guesses"], b["false_timeouts"]));
    let oae = link.as_ref().map(|l| format!("silence_verdicts={} all_definitive=true", l["silence_verdicts"]));
    rows.push(Table1Row {
        row: "crash_ambiguity",
        conventional: join(conv.into_iter().collect()),
        oae: join(oae.into_iter().collect()),
    });

    let conv =
        base.as_ref().map(|b| format!("silent_drops={} overflow_drops={}", b["silent_drops"], b["overflow_drops"]));
    let oae = link.as_ref().map(|l| {
        format!(
            "silent_drops={} offered={} committed={} refused={} aborted_known={}",
            l["silent_drops"], l["offered"], l["committed"], l["refused"], l["aborted_known"]
        )
    });
    rows.push(Table1Row {
        row: "message_loss",
        conventional: join(conv.into_iter().collect()),
        oae: join(oae.into_iter().collect()),
    });

    let mut conv = Vec::new();
    if let Some(k) = &know {
        conv.push(format!("async_ck={}/{} async_asymmetric={}", k["ck"], k["points"], k["asymmetric"]));
    }
    if let Some(s) = &sync {
        conv.push(format!("sync_asymmetric={}/{}", s["asymmetric"], s["traces"]));
    }
    let oae = link.as_ref().map(|l| {
        let (ck, b): (u64, u64) = (l["ck_boundaries"].parse().unwrap_or(0), l["boundaries"].parse().unwrap_or(0));
        let pct = if b == 0 { 0.0 } else { 100.0 * ck as f64 / b as f64 };
        format!("ck_boundaries={ck}/{b} ({pct:.1}%)")
    });
    rows.push(Table1Row { row: "knowledge", conventional: join(conv), oae: join(oae.into_iter().collect()) });

    Table1 { rows }
}
