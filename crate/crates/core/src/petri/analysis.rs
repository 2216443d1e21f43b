//! Breadth-first reachability and the property checks run over it.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::net::{Marking, OwnershipPattern, PetriNet, PlaceId, PlaceRole, TransitionId};
use super::PetriError;

pub const DEFAULT_STATE_CEILING: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    pub nodes: Vec<Marking>,
    /// `(from, transition, to)` as node indices, in discovery order.
    pub edges: Vec<(usize, TransitionId, usize)>,
}

impl ReachabilityGraph {
    pub fn index_of(&self, m: &Marking) -> Option<usize> {
        self.nodes.iter().position(|n| n == m)
    }
}

pub fn reachability(net: &PetriNet) -> Result<ReachabilityGraph, PetriError> {
    reachability_with_ceiling(net, DEFAULT_STATE_CEILING)
}

pub fn reachability_with_ceiling(net: &PetriNet, ceiling: usize) -> Result<ReachabilityGraph, PetriError> {
    net.validate_marking(&net.initial)?;
    let mut index: HashMap<Marking, usize> = HashMap::new();
    let mut nodes = vec![net.initial.clone()];
    index.insert(net.initial.clone(), 0);
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let m = nodes[i].clone();
        for t in net.enabled(&m)? {
            let next = net.fire(&m, &t)?;
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if nodes.len() >= ceiling {
                        return Err(PetriError::StateCeiling { ceiling });
                    }
                    let j = nodes.len();
                    index.insert(next.clone(), j);
                    nodes.push(next);
                    queue.push_back(j);
                    j
                }
            };
            edges.push((i, t, j));
        }
    }
    Ok(ReachabilityGraph { nodes, edges })
}

/// First 8 bytes of SHA-256 over the canonical `place=count;` rendering.
pub fn marking_hash(m: &Marking) -> String {
    let mut canon = String::new();
    for (p, n) in &m.0 {
        let _ = write!(canon, "{p}={n};");
    }
    let digest = Sha256::digest(canon.as_bytes());
    digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    /// One line per inspected marking or per violation.
    pub lines: Vec<String>,
    pub checked: usize,
    pub violations: usize,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        CheckReport { name, passed: true, lines: Vec::new(), checked: 0, violations: 0 }
    }

    fn fail(&mut self, line: String) {
        self.passed = false;
        self.violations += 1;
        self.lines.push(line);
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "check={} result={} checked={} violations={}\n",
            self.name,
            if self.passed { "pass" } else { "fail" },
            self.checked,
            self.violations
        );
        for l in &self.lines {
            out.push_str("  ");
            out.push_str(l);
            out.push('\n');
        }
        out
    }
}

fn ownership_total(net: &PetriNet, m: &Marking) -> u32 {
    net.ownership_places().map(|(p, _)| m.get(p)).sum()
}

pub fn check_ownership_conservation(net: &PetriNet, graph: &ReachabilityGraph) -> CheckReport {
    let mut r = CheckReport::new("ownership-conservation");
    let expected = ownership_total(net, &net.initial);
    for m in &graph.nodes {
        r.checked += 1;
        let total = ownership_total(net, m);
        if total == expected {
            r.lines.push(format!("{} total={total}", marking_hash(m)));
        } else {
            r.fail(format!("{} total={total} expected={expected} marking={m}", marking_hash(m)));
        }
    }
    r
}

fn is_boundary(net: &PetriNet, m: &Marking) -> bool {
    net.frame_places().all(|p| m.get(&p.id) == 0)
}

fn pattern(net: &PetriNet, m: &Marking) -> Option<OwnershipPattern> {
    let mut marked = net.ownership_places().filter(|(p, _)| m.get(p) > 0);
    let first = marked.next().map(|(_, pat)| pat);
    if marked.next().is_some() {
        None
    } else {
        first
    }
}

/// Every marking with no frame on the wire shows `(M,M)` or `(∅,∅)`.
pub fn check_boundary_dichotomy(net: &PetriNet, graph: &ReachabilityGraph) -> CheckReport {
    let mut r = CheckReport::new("boundary-dichotomy");
    for m in graph.nodes.iter().filter(|m| is_boundary(net, m)) {
        r.checked += 1;
        match pattern(net, m) {
            Some(pat) if pat.is_unambiguous() => r.lines.push(format!("{} boundary own={pat}", marking_hash(m))),
            Some(pat) => r.fail(format!("{} boundary own={pat} marking={m}", marking_hash(m))),
            None => r.fail(format!("{} boundary own=? marking={m}", marking_hash(m))),
        }
    }
    if r.checked == 0 {
        r.fail("no boundary marking reachable".into());
    }
    r
}

pub fn check_safety(_net: &PetriNet, graph: &ReachabilityGraph) -> CheckReport {
    let mut r = CheckReport::new("one-safe");
    for m in &graph.nodes {
        r.checked += 1;
        if let Some((p, n)) = m.0.iter().find(|(_, &n)| n > 1) {
            r.fail(format!("{} place={p} tokens={n}", marking_hash(m)));
        }
    }
    r
}

struct Relabel {
    places: BTreeMap<PlaceId, PlaceId>,
    transitions: BTreeMap<TransitionId, TransitionId>,
}

impl Relabel {
    fn new(net: &PetriNet) -> Self {
        let mut places = BTreeMap::new();
        for (a, b) in &net.mirror_places {
            places.insert(a.clone(), b.clone());
            places.insert(b.clone(), a.clone());
        }
        let mut transitions = BTreeMap::new();
        for (a, b) in &net.mirror_transitions {
            transitions.insert(a.clone(), b.clone());
            transitions.insert(b.clone(), a.clone());
        }
        Relabel { places, transitions }
    }

    fn place(&self, p: &PlaceId) -> PlaceId {
        self.places.get(p).cloned().unwrap_or_else(|| p.clone())
    }

    fn transition(&self, t: &TransitionId) -> TransitionId {
        self.transitions.get(t).cloned().unwrap_or_else(|| t.clone())
    }

    fn marking(&self, m: &Marking) -> Marking {
        Marking(m.0.iter().map(|(p, &n)| (self.place(p), n)).collect())
    }
}

fn mirrored_role(role: PlaceRole) -> PlaceRole {
    match role {
        PlaceRole::Frame { sender } => PlaceRole::Frame { sender: sender.peer() },
        PlaceRole::Ownership(pat) => PlaceRole::Ownership(pat.mirrored()),
        other => other,
    }
}

/// Checks that the Alice/Bob relabeling is an involutive automorphism of the
/// net and maps the reachability graph onto itself.
pub fn check_symmetry(net: &PetriNet, graph: &ReachabilityGraph) -> CheckReport {
    let mut r = CheckReport::new("alice-bob-symmetry");
    let map = Relabel::new(net);

    for p in &net.places {
        r.checked += 1;
        let q = map.place(&p.id);
        if map.place(&q) != p.id {
            r.fail(format!("place {} not involutive", p.id));
            continue;
        }
        match net.place(&q) {
            Some(qp) if qp.owner == p.owner.mirrored() && qp.kind == p.kind && qp.role == mirrored_role(p.role) => {}
            _ => r.fail(format!("place {} -> {q} does not exchange agent tags", p.id)),
        }
    }
    for t in &net.transitions {
        r.checked += 1;
        let u = map.transition(&t.id);
        let Some(ut) = net.transition(&u) else {
            r.fail(format!("transition {} has no image", t.id));
            continue;
        };
        let ins: BTreeMap<_, _> = t.inputs.iter().map(|(p, &n)| (map.place(p), n)).collect();
        let outs: BTreeMap<_, _> = t.outputs.iter().map(|(p, &n)| (map.place(p), n)).collect();
        if ut.controller != t.controller.peer() || ut.inputs != ins || ut.outputs != outs {
            r.fail(format!("transition {} -> {u} is not its mirror", t.id));
        }
    }
    if map.marking(&net.initial) != net.initial {
        r.fail("initial marking is not symmetric".into());
    }

    let index: HashMap<&Marking, usize> = graph.nodes.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let edge_set: std::collections::HashSet<(usize, &TransitionId, usize)> =
        graph.edges.iter().map(|(a, t, b)| (*a, t, *b)).collect();
    for (a, t, b) in &graph.edges {
        r.checked += 1;
        let ma = map.marking(&graph.nodes[*a]);
        let mb = map.marking(&graph.nodes[*b]);
        let mt = map.transition(t);
        match (index.get(&ma), index.get(&mb)) {
            (Some(&ia), Some(&ib)) if edge_set.contains(&(ia, &mt, ib)) => {}
            _ => r.fail(format!(
                "edge {} -{t}-> {} has no mirror edge",
                marking_hash(&graph.nodes[*a]),
                marking_hash(&graph.nodes[*b])
            )),
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::super::build_dual_diamond;
    use super::*;
    use std::collections::BTreeSet;

    /// Independent oracle: reachable sets of marked places, explored with
    /// plain set arithmetic and no use of `enabled`/`fire`.
    fn oracle(net: &PetriNet) -> (BTreeSet<BTreeSet<String>>, usize) {
        let start: BTreeSet<String> = net.initial.marked().map(|p| p.0.clone()).collect();
        let mut seen = BTreeSet::from([start.clone()]);
        let mut stack = vec![start];
        let mut edges = 0;
        while let Some(s) = stack.pop() {
            for t in &net.transitions {
                if t.inputs.keys().all(|p| s.contains(&p.0)) {
                    let mut n = s.clone();
                    for p in t.inputs.keys() {
                        n.remove(&p.0);
                    }
                    for p in t.outputs.keys() {
                        assert!(n.insert(p.0.clone()), "not 1-safe at {}", t.id);
                    }
                    edges += 1;
                    if seen.insert(n.clone()) {
                        stack.push(n);
                    }
                }
            }
        }
        (seen, edges)
    }

    #[test]
    fn eight_states_matches_oracle() {
        let net = build_dual_diamond();
        let g = reachability(&net).unwrap();
        let (states, edges) = oracle(&net);
        assert_eq!(g.nodes.len(), 8);
        assert_eq!(states.len(), 8);
        assert_eq!(g.edges.len(), edges);
        let ours: BTreeSet<BTreeSet<String>> =
            g.nodes.iter().map(|m| m.marked().map(|p| p.0.clone()).collect()).collect();
        assert_eq!(ours, states);
    }

    #[test]
    fn every_transition_fires_somewhere() {
        let net = build_dual_diamond();
        let g = reachability(&net).unwrap();
        let fired: BTreeSet<_> = g.edges.iter().map(|(_, t, _)| t.clone()).collect();
        assert_eq!(fired.len(), 16);
    }

    #[test]
    fn shipped_net_passes_all_checks() {
        let net = build_dual_diamond();
        let g = reachability(&net).unwrap();
        for r in [
            check_ownership_conservation(&net, &g),
            check_boundary_dichotomy(&net, &g),
            check_safety(&net, &g),
            check_symmetry(&net, &g),
        ] {
            assert!(r.passed, "{}", r.render());
        }
    }

    #[test]
    fn boundaries_are_exactly_the_two_outcomes() {
        let net = build_dual_diamond();
        let g = reachability(&net).unwrap();
        let pats: BTreeSet<String> =
            g.nodes.iter().filter(|m| is_boundary(&net, m)).map(|m| pattern(&net, m).unwrap().to_string()).collect();
        assert_eq!(pats, BTreeSet::from(["MM".to_string(), "__".to_string()]));
    }

    #[test]
    fn extra_ownership_token_breaks_conservation() {
        let text = "net leaky\ncapacity 1\n\
            place a.idle alice epi state\nplace a.done alice epi state\n\
            place own.none shared ont own:__\nplace own.both shared ont own:MM\n\
            transition a.dup alice in a.idle:1 own.none:1 out a.done:1 own.none:1 own.both:1\n\
            initial a.idle:1 own.none:1\n";
        let net = super::super::parse_net(text).unwrap();
        let g = reachability(&net).unwrap();
        let r = check_ownership_conservation(&net, &g);
        assert!(!r.passed);
        assert_eq!(r.violations, 1);
        assert!(r.lines.iter().any(|l| l.contains("total=2") && l.contains("a.done")));
    }

    #[test]
    fn deleting_any_transition_is_detected() {
        let base = build_dual_diamond();
        for t in &base.transitions {
            let net = base.without_transition(&t.id);
            let g = reachability(&net).unwrap();
            let detected = net.transitions.len() != 16
                && (g.nodes.len() != 8
                    || !check_ownership_conservation(&net, &g).passed
                    || !check_boundary_dichotomy(&net, &g).passed
                    || !check_symmetry(&net, &g).passed);
            assert!(detected, "deleting {} went unnoticed", t.id);
        }
    }

    #[test]
    fn accept_deletion_changes_state_count() {
        let base = build_dual_diamond();
        let g = reachability(&base.without_transition(&TransitionId::from("a.accept"))).unwrap();
        assert_eq!(g.nodes.len(), 7);
    }

    #[test]
    fn ceiling_is_enforced() {
        let net = build_dual_diamond();
        assert_eq!(reachability_with_ceiling(&net, 3).unwrap_err(), PetriError::StateCeiling { ceiling: 3 });
    }

    #[test]
    fn no_transitions_is_trivially_conserving() {
        let mut net = build_dual_diamond();
        net.transitions.clear();
        let g = reachability(&net).unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert!(check_ownership_conservation(&net, &g).passed);
    }

    #[test]
    fn hash_is_stable() {
        let net = build_dual_diamond();
        let h = marking_hash(&net.initial);
        assert_eq!(h.len(), 16);
        assert_eq!(h, marking_hash(&net.initial.clone()));
    }

    #[test]
    fn relabel_is_involution() {
        let net = build_dual_diamond();
        let map = Relabel::new(&net);
        for p in &net.places {
            assert_eq!(map.place(&map.place(&p.id)), p.id);
        }
        for t in &net.transitions {
            assert_eq!(map.transition(&map.transition(&t.id)), t.id);
        }
    }
}
