//! Local repair of the spanning tree after link failures.

use std::collections::BTreeSet;
use std::fmt;

use super::graph::{Cell, Edge, KingGraph, SpanningTree};
use super::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HealScope {
    /// Only the orphaned cell changed its parent.
    LocalOnly,
    /// No local alternate; the tree was rebuilt from the root.
    Escalated,
    /// The edge was not in the tree.
    NotNeeded,
}

impl fmt::Display for HealScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HealScope::LocalOnly => "local",
            HealScope::Escalated => "escalated",
            HealScope::NotNeeded => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HealEvent {
    pub slot: u64,
    pub edge: Edge,
    pub child: Option<Cell>,
    pub new_parent: Option<Cell>,
    /// `None` when the repair left local scope.
    pub slots_to_heal: Option<u32>,
    pub scope: HealScope,
    pub changed_cells: usize,
    pub spans: bool,
}

impl fmt::Display for HealEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = |v: Option<Cell>| v.map_or("-".to_string(), |v| v.to_string());
        write!(
            f,
            "slot={} edge={} child={} new_parent={} heal_slots={} scope={} changed={} spans={}",
            self.slot,
            self.edge,
            o(self.child),
            o(self.new_parent),
            self.slots_to_heal.map_or("unresolved".to_string(), |s| s.to_string()),
            self.scope,
            self.changed_cells,
            self.spans
        )
    }
}

/// Tree plus the set of failed links.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub graph: KingGraph,
    pub tree: SpanningTree,
    pub down: BTreeSet<Edge>,
}

impl Mesh {
    pub fn new(graph: KingGraph) -> Mesh {
        let root = graph.root();
        let down = BTreeSet::new();
        let tree = SpanningTree::bfs(&graph, root, &down);
        Mesh { graph, tree, down }
    }

    /// Live neighbours no deeper than `x`, other than its parent, by
    /// `(depth, id)`. None of them can sit below `x`.
    pub fn alternates(&self, x: Cell) -> Vec<Cell> {
        let Some(dx) = self.tree.depth[x] else {
            return Vec::new();
        };
        let mut alts: Vec<Cell> = self
            .graph
            .neighbours(x)
            .iter()
            .copied()
            .filter(|&y| Some(y) != self.tree.parent[x] && !self.down.contains(&Edge::new(x, y)))
            .filter(|&y| self.tree.depth[y].is_some_and(|d| d <= dx))
            .collect();
        alts.sort_by_key(|&y| (self.tree.depth[y], y));
        alts
    }

    /// Fail every edge in `edges` at once; orphans repair in cell-id order.
    pub fn fail(&mut self, slot: u64, edges: &[Edge]) -> Result<Vec<HealEvent>, MeshError> {
        for (i, e) in edges.iter().enumerate() {
            if !self.graph.neighbours(e.0).contains(&e.1) {
                return Err(MeshError::NoEdge(*e));
            }
            if self.down.contains(e) || edges[..i].contains(e) {
                return Err(MeshError::AlreadyDown(*e));
            }
        }
        let mut orphans: Vec<(Cell, Edge)> = Vec::new();
        let mut events = Vec::new();
        for &e in edges {
            self.down.insert(e);
            if self.tree.is_tree_edge(e) {
                let child = if self.tree.parent[e.0] == Some(e.1) { e.0 } else { e.1 };
                orphans.push((child, e));
            } else {
                events.push(HealEvent {
                    slot,
                    edge: e,
                    child: None,
                    new_parent: None,
                    slots_to_heal: Some(0),
                    scope: HealScope::NotNeeded,
                    changed_cells: 0,
                    spans: false,
                });
            }
        }
        orphans.sort();
        for (x, e) in orphans {
            if !self.tree.is_tree_edge(e) {
                // an earlier rebuild in this slot already routed around it
                events.push(HealEvent {
                    slot,
                    edge: e,
                    child: Some(x),
                    new_parent: self.tree.parent[x],
                    slots_to_heal: Some(0),
                    scope: HealScope::NotNeeded,
                    changed_cells: 0,
                    spans: false,
                });
                continue;
            }
            let before = self.tree.parent.clone();
            let ev = match self.alternates(x).first() {
                Some(&y) => {
                    self.tree.parent[x] = Some(y);
                    self.tree.recompute_depths();
                    HealEvent {
                        slot,
                        edge: e,
                        child: Some(x),
                        new_parent: Some(y),
                        slots_to_heal: Some(1),
                        scope: HealScope::LocalOnly,
                        changed_cells: 0,
                        spans: false,
                    }
                }
                None => {
                    self.tree = SpanningTree::bfs(&self.graph, self.tree.root, &self.down);
                    let p = self.tree.parent[x];
                    HealEvent {
                        slot,
                        edge: e,
                        child: Some(x),
                        new_parent: p,
                        slots_to_heal: None,
                        scope: HealScope::Escalated,
                        changed_cells: 0,
                        spans: false,
                    }
                }
            };
            let changed = before.iter().zip(&self.tree.parent).filter(|(a, b)| a != b).count();
            events.push(HealEvent { changed_cells: changed, ..ev });
        }
        let spans = self.tree.spans(&self.down);
        for ev in &mut events {
            ev.spans = spans;
        }
        Ok(events)
    }

    pub fn restore(&mut self, e: Edge) {
        self.down.remove(&e);
    }
}

/// One scripted action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptAction {
    Fail(Edge),
    Restore(Edge),
}

/// `<slot> fail <cell> <cell>` or `<slot> restore <cell> <cell>`, cells as
/// `r,c` or ids; `#` starts a comment. Slots must not decrease.
pub fn parse_failure_script(g: &KingGraph, text: &str) -> Result<Vec<(u64, ScriptAction)>, MeshError> {
    let mut out = Vec::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| MeshError::Script { line: i + 1, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [slot, verb, a, b] = toks.as_slice() else {
            return Err(bad(format!("expected `<slot> fail|restore <cell> <cell>`, got `{line}`")));
        };
        let slot: u64 = slot.parse().map_err(|_| bad(format!("bad slot `{slot}`")))?;
        if slot < last {
            return Err(bad("slots must not decrease".into()));
        }
        last = slot;
        let (a, b) =
            (g.parse_cell(a).map_err(|e| bad(e.to_string()))?, g.parse_cell(b).map_err(|e| bad(e.to_string()))?);
        if !g.neighbours(a).contains(&b) {
            return Err(bad(format!("cells {a} and {b} are not adjacent")));
        }
        let e = Edge::new(a, b);
        out.push((
            slot,
            match *verb {
                "fail" => ScriptAction::Fail(e),
                "restore" => ScriptAction::Restore(e),
                v => return Err(bad(format!("unknown action `{v}`"))),
            },
        ));
    }
    Ok(out)
}

/// Play a script; failures sharing a slot are applied together.
pub fn run_failure_script(mesh: &mut Mesh, script: &[(u64, ScriptAction)]) -> Result<Vec<HealEvent>, MeshError> {
    let mut events = Vec::new();
    let mut i = 0;
    while i < script.len() {
        let slot = script[i].0;
        let mut fails = Vec::new();
        while i < script.len() && script[i].0 == slot {
            match &script[i].1 {
                ScriptAction::Fail(e) => fails.push(*e),
                ScriptAction::Restore(e) => mesh.restore(*e),
            }
            i += 1;
        }
        if !fails.is_empty() {
            events.extend(mesh.fail(slot, &fails)?);
        }
    }
    Ok(events)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SingleFailureSweep {
    pub tree_edges: usize,
    pub healed_local_in_one: usize,
    pub escalated: usize,
    pub other: usize,
}

/// Fail each tree edge of a fresh mesh on its own.
pub fn single_failure_sweep(g: &KingGraph) -> Result<(SingleFailureSweep, Vec<HealEvent>), MeshError> {
    let base = Mesh::new(g.clone());
    let mut s = SingleFailureSweep::default();
    let mut all = Vec::new();
    for e in base.tree.tree_edges() {
        let mut m = base.clone();
        let evs = m.fail(0, &[e])?;
        s.tree_edges += 1;
        for ev in evs {
            match (ev.scope, ev.slots_to_heal, ev.changed_cells, ev.spans) {
                (HealScope::LocalOnly, Some(1), 1, true) => s.healed_local_in_one += 1,
                (HealScope::Escalated, ..) => s.escalated += 1,
                _ => s.other += 1,
            }
            all.push(ev);
        }
    }
    Ok((s, all))
}
