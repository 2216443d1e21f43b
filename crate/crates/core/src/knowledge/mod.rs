//! Knowledge over finite trace sets under perfect recall.
//!
//! Agent `i` cannot tell two traces apart at index `n` when its views agree at
//! every index up to `n`. `K_i φ` holds when φ holds on every trace in `i`'s
//! class. Common knowledge holds when φ holds across the whole connected
//! component of the union of both agents' relations, which for a finite set
//! is exactly the greatest fixpoint of "everyone knows".

mod traces;

pub use traces::{
    async_ack_chain, bisync_slot_knowledge, bisync_slot_traces, outcome_fact, sync_unilateral, AsyncState, SyncState,
    DEFAULT_TRACE_CEILING,
};

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

use crate::agent::Agent;
use crate::timing::TimingModel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KnowledgeError {
    #[error("index {index} is not a round boundary (period {period})")]
    NotBoundary { index: usize, period: usize },
    #[error("index {index} beyond trace length {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("trace enumeration reached {ceiling} traces")]
    Ceiling { ceiling: usize },
    #[error("trace {0} not in set")]
    NoTrace(usize),
}

/// Global states that can be projected onto one agent.
pub trait Observable {
    type View: Clone + Eq + Hash;
    fn view(&self, agent: Agent) -> Self::View;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentView<V> {
    pub agent: Agent,
    pub index: usize,
    /// The agent's own components at `index`.
    pub visible: V,
    /// Everything it has seen, `0..=index`.
    pub history: Vec<V>,
}

pub fn observe<S: Observable>(agent: Agent, trace: &[S], index: usize) -> Result<AgentView<S::View>, KnowledgeError> {
    if index >= trace.len() {
        return Err(KnowledgeError::OutOfRange { index, len: trace.len() });
    }
    let history: Vec<S::View> = trace[..=index].iter().map(|s| s.view(agent)).collect();
    Ok(AgentView { agent, index, visible: history[index].clone(), history })
}

/// All runs of one system, all of the same length.
#[derive(Debug, Clone)]
pub struct TraceSet<S> {
    pub traces: Vec<Vec<S>>,
    /// Boundaries fall at multiples of this; `None` means every index.
    pub boundary_period: Option<usize>,
}

impl<S> TraceSet<S> {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        self.boundary_period.map_or(true, |p| index % p == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EpistemicState {
    /// `K_i φ`, indexed by agent.
    pub knows_own_outcome: [bool; 2],
    /// `K_i K_j φ`.
    pub knows_peer_knows: [bool; 2],
    pub common_knowledge: bool,
    /// The agents disagree on whether they know φ.
    pub asymmetric: bool,
}

impl EpistemicState {
    /// `CK ⇒ both KK ⇒ both K`.
    pub fn chain_holds(&self) -> bool {
        let kk = self.knows_peer_knows.iter().all(|&b| b);
        let k = self.knows_own_outcome.iter().all(|&b| b);
        (!self.common_knowledge || kk) && (!kk || k)
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Per-agent class ids of every trace at `index`.
fn classes<S: Observable>(set: &TraceSet<S>, index: usize, agent: Agent) -> Vec<usize> {
    let mut ids: HashMap<Vec<S::View>, usize> = HashMap::new();
    set.traces
        .iter()
        .map(|t| {
            let hist: Vec<S::View> = t[..=index].iter().map(|s| s.view(agent)).collect();
            let n = ids.len();
            *ids.entry(hist).or_insert(n)
        })
        .collect()
}

/// Knowledge of `fact` at `index` for every trace, without checking that the
/// index is a boundary.
pub fn knowledge_at<S, F>(set: &TraceSet<S>, index: usize, fact: F) -> Result<Vec<EpistemicState>, KnowledgeError>
where
    S: Observable,
    F: Fn(&[S], usize) -> bool,
{
    let n = set.traces.len();
    for t in &set.traces {
        if index >= t.len() {
            return Err(KnowledgeError::OutOfRange { index, len: t.len() });
        }
    }
    let holds: Vec<bool> = set.traces.iter().map(|t| fact(t, index)).collect();
    let cls = [classes(set, index, Agent::Alice), classes(set, index, Agent::Bob)];

    // K_i φ is constant on each class of i
    let mut k = [vec![true; n], vec![true; n]];
    for a in 0..2 {
        let mut class_ok: HashMap<usize, bool> = HashMap::new();
        for t in 0..n {
            let e = class_ok.entry(cls[a][t]).or_insert(true);
            *e &= holds[t];
        }
        for t in 0..n {
            k[a][t] = class_ok[&cls[a][t]];
        }
    }
    // K_i K_j φ
    let mut kk = [vec![true; n], vec![true; n]];
    for a in 0..2 {
        let b = 1 - a;
        let mut class_ok: HashMap<usize, bool> = HashMap::new();
        for t in 0..n {
            let e = class_ok.entry(cls[a][t]).or_insert(true);
            *e &= k[b][t];
        }
        for t in 0..n {
            kk[a][t] = class_ok[&cls[a][t]];
        }
    }
    // common knowledge: φ on the whole component
    let mut dsu = Dsu::new(n);
    for c in &cls {
        let mut first: HashMap<usize, usize> = HashMap::new();
        for (t, &id) in c.iter().enumerate() {
            match first.get(&id) {
                Some(&r) => dsu.union(r, t),
                None => {
                    first.insert(id, t);
                }
            }
        }
    }
    let mut comp_ok: HashMap<usize, bool> = HashMap::new();
    let roots: Vec<usize> = (0..n).map(|t| dsu.find(t)).collect();
    for t in 0..n {
        *comp_ok.entry(roots[t]).or_insert(true) &= holds[t];
    }

    Ok((0..n)
        .map(|t| EpistemicState {
            knows_own_outcome: [k[0][t], k[1][t]],
            knows_peer_knows: [kk[0][t], kk[1][t]],
            common_knowledge: comp_ok[&roots[t]],
            asymmetric: k[0][t] != k[1][t],
        })
        .collect())
}

/// Knowledge of `fact` in trace `trace` at `index`, which must be a boundary
/// unless the model is asynchronous.
pub fn evaluate_knowledge<S, F>(
    model: &TimingModel,
    set: &TraceSet<S>,
    trace: usize,
    index: usize,
    fact: F,
) -> Result<EpistemicState, KnowledgeError>
where
    S: Observable,
    F: Fn(&[S], usize) -> bool,
{
    if trace >= set.len() {
        return Err(KnowledgeError::NoTrace(trace));
    }
    if !matches!(model, TimingModel::Asynchronous) && !set.is_boundary(index) {
        return Err(KnowledgeError::NotBoundary { index, period: set.boundary_period.unwrap_or(1) });
    }
    Ok(knowledge_at(set, index, fact)?[trace])
}
