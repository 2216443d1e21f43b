//! Exhaustive exploration: swap solves two-process consensus wait-free,
//! every shipped read/write protocol fails somewhere.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::timing::{
    builtin_protocol, legal_steps, parse_protocol, schedule_step, Config, ProtocolSpec, Step, TimingError, TimingModel,
    BUILTIN_RW,
};

/// Reachable configuration graph from all four input pairs.
pub struct Exploration {
    pub configs: Vec<Config>,
    pub edges: Vec<Vec<(Step, usize)>>,
    /// BFS tree: parent and the step taken from it.
    pub parent: Vec<Option<(usize, Step)>>,
    pub inputs: Vec<[u8; 2]>,
}

pub fn explore(spec: &ProtocolSpec, model: &TimingModel, ceiling: usize) -> Result<Exploration, TimingError> {
    let mut ex = Exploration { configs: Vec::new(), edges: Vec::new(), parent: Vec::new(), inputs: Vec::new() };
    let mut index = HashMap::new();
    let mut queue = VecDeque::new();
    for inputs in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        let c = Config::initial(spec, inputs);
        let k = (inputs, c.key(model));
        if let std::collections::hash_map::Entry::Vacant(e) = index.entry(k) {
            e.insert(ex.configs.len());
            queue.push_back(ex.configs.len());
            ex.configs.push(c);
            ex.edges.push(Vec::new());
            ex.parent.push(None);
            ex.inputs.push(inputs);
        }
    }
    while let Some(i) = queue.pop_front() {
        let cfg = ex.configs[i].clone();
        let inputs = ex.inputs[i];
        for step in legal_steps(spec, model, &cfg) {
            let next = schedule_step(spec, model, &cfg, &step)?;
            let k = (inputs, next.key(model));
            let j = match index.get(&k) {
                Some(&j) => j,
                None => {
                    if ex.configs.len() >= ceiling {
                        return Err(TimingError::Ceiling { ceiling, seen: Vec::new(), depth: 0 });
                    }
                    let j = ex.configs.len();
                    index.insert(k, j);
                    ex.configs.push(next);
                    ex.edges.push(Vec::new());
                    ex.parent.push(Some((i, step)));
                    ex.inputs.push(inputs);
                    queue.push_back(j);
                    j
                }
            };
            ex.edges[i].push((step, j));
        }
    }
    Ok(ex)
}

impl Exploration {
    pub fn path_to(&self, mut i: usize) -> Vec<Step> {
        let mut steps = Vec::new();
        while let Some((p, s)) = self.parent[i] {
            steps.push(s);
            i = p;
        }
        steps.reverse();
        steps
    }

    /// A cycle through configurations where some live participant is still
    /// undecided: `(node on the cycle, steps around it)`.
    pub fn undecided_cycle(&self, spec: &ProtocolSpec) -> Option<(usize, Vec<Step>)> {
        let open: Vec<bool> = self.configs.iter().map(|c| !c.settled(spec)).collect();
        // 0 unvisited, 1 on stack, 2 done
        let mut color = vec![0u8; self.configs.len()];
        for root in 0..self.configs.len() {
            if color[root] != 0 || !open[root] {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            let mut via: Vec<Step> = Vec::new();
            color[root] = 1;
            while let Some(&mut (node, ref mut next_edge)) = stack.last_mut() {
                if let Some(&(step, to)) = self.edges[node].get(*next_edge) {
                    *next_edge += 1;
                    if !open[to] {
                        continue;
                    }
                    match color[to] {
                        0 => {
                            color[to] = 1;
                            stack.push((to, 0));
                            via.push(step);
                        }
                        1 => {
                            let at = stack.iter().position(|&(n, _)| n == to).expect("grey node is on the stack");
                            let mut cycle: Vec<Step> = via[at..].to_vec();
                            cycle.push(step);
                            return Some((to, cycle));
                        }
                        _ => {}
                    }
                } else {
                    color[node] = 2;
                    stack.pop();
                    via.pop();
                }
            }
        }
        None
    }

    /// A reachable configuration holding two different decisions.
    pub fn disagreement(&self) -> Option<usize> {
        self.configs.iter().position(|c| c.decisions() == [true, true])
    }

    pub fn invalid_decision(&self) -> Option<usize> {
        (0..self.configs.len()).find(|&i| self.configs[i].decided.iter().flatten().any(|v| !self.inputs[i].contains(v)))
    }

    /// Terminal configurations where a live participant never decided.
    pub fn stuck(&self, spec: &ProtocolSpec) -> Option<usize> {
        (0..self.configs.len()).find(|&i| self.edges[i].is_empty() && !self.configs[i].settled(spec))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapCheck {
    pub configurations: usize,
    pub agreement: bool,
    pub validity: bool,
    /// No undecided cycle and no undecided dead end.
    pub wait_free: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RwWitness {
    Disagreement {
        inputs: [u8; 2],
        schedule: Vec<String>,
    },
    Lasso {
        inputs: [u8; 2],
        prefix: Vec<String>,
        cycle: Vec<String>,
    },
    Blocked {
        inputs: [u8; 2],
        schedule: Vec<String>,
    },
    /// Nothing found: the protocol would be a counterexample.
    None,
}

impl fmt::Display for RwWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RwWitness::Disagreement { inputs, schedule } => {
                write!(f, "disagreement inputs={},{} schedule=[{}]", inputs[0], inputs[1], schedule.join("; "))
            }
            RwWitness::Lasso { inputs, prefix, cycle } => write!(
                f,
                "lasso inputs={},{} prefix=[{}] cycle=[{}]",
                inputs[0],
                inputs[1],
                prefix.join("; "),
                cycle.join("; ")
            ),
            RwWitness::Blocked { inputs, schedule } => {
                write!(f, "blocked inputs={},{} schedule=[{}]", inputs[0], inputs[1], schedule.join("; "))
            }
            RwWitness::None => write!(f, "none"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusNumberReport {
    pub swap: SwapCheck,
    pub rw: Vec<(String, RwWitness)>,
}

impl ConsensusNumberReport {
    pub fn holds(&self) -> bool {
        let s = &self.swap;
        s.agreement && s.validity && s.wait_free && self.rw.iter().all(|(_, w)| *w != RwWitness::None)
    }

    pub fn render(&self) -> String {
        let s = &self.swap;
        let mut out = format!(
            "swap configurations={} agreement={} validity={} wait_free={}\n",
            s.configurations, s.agreement, s.validity, s.wait_free
        );
        for (name, w) in &self.rw {
            out.push_str(&format!("rw {name} witness={w}\n"));
        }
        out
    }
}

fn names(spec: &ProtocolSpec, steps: &[Step]) -> Vec<String> {
    steps.iter().map(|s| s.render(spec)).collect()
}

fn rw_witness(spec: &ProtocolSpec, ex: &Exploration) -> RwWitness {
    if let Some(i) = ex.disagreement() {
        return RwWitness::Disagreement { inputs: ex.inputs[i], schedule: names(spec, &ex.path_to(i)) };
    }
    if let Some((i, cycle)) = ex.undecided_cycle(spec) {
        return RwWitness::Lasso {
            inputs: ex.inputs[i],
            prefix: names(spec, &ex.path_to(i)),
            cycle: names(spec, &cycle),
        };
    }
    if let Some(i) = ex.stuck(spec) {
        return RwWitness::Blocked { inputs: ex.inputs[i], schedule: names(spec, &ex.path_to(i)) };
    }
    RwWitness::None
}

/// Asynchronous, one crash allowed.
pub fn consensus_number_demo() -> Result<ConsensusNumberReport, TimingError> {
    let model = TimingModel::Asynchronous;
    let ceiling = 1_000_000;
    let swap = parse_protocol(builtin_protocol("swap").expect("shipped"))?;
    let ex = explore(&swap, &model, ceiling)?;
    let swap = SwapCheck {
        configurations: ex.configs.len(),
        agreement: ex.disagreement().is_none(),
        validity: ex.invalid_decision().is_none(),
        wait_free: ex.undecided_cycle(&swap).is_none() && ex.stuck(&swap).is_none(),
    };
    let mut rw = Vec::new();
    for name in BUILTIN_RW {
        let spec = parse_protocol(builtin_protocol(name).expect("shipped"))?;
        let ex = explore(&spec, &model, ceiling)?;
        rw.push((name.to_owned(), rw_witness(&spec, &ex)));
    }
    Ok(ConsensusNumberReport { swap, rw })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_holds() {
        let r = consensus_number_demo().unwrap();
        assert!(r.holds(), "{}", r.render());
        let by_name: HashMap<&str, &RwWitness> = r.rw.iter().map(|(n, w)| (n.as_str(), w)).collect();
        assert!(matches!(by_name["rw-eager"], RwWitness::Disagreement { .. }));
        assert!(matches!(by_name["rw-flipflop"], RwWitness::Lasso { .. }));
        assert!(matches!(by_name["rw-wait"], RwWitness::Lasso { .. }));
    }

    #[test]
    fn witnesses_replay() {
        let model = TimingModel::Asynchronous;
        for name in BUILTIN_RW {
            let spec = parse_protocol(builtin_protocol(name).unwrap()).unwrap();
            let ex = explore(&spec, &model, 1_000_000).unwrap();
            match rw_witness(&spec, &ex) {
                RwWitness::Disagreement { inputs, schedule } => {
                    let mut c = Config::initial(&spec, inputs);
                    for s in &schedule {
                        c = schedule_step(&spec, &model, &c, &Step::parse(&spec, s).unwrap()).unwrap();
                    }
                    assert_eq!(c.decisions(), [true, true]);
                }
                RwWitness::Lasso { inputs, prefix, cycle } => {
                    let mut c = Config::initial(&spec, inputs);
                    for s in &prefix {
                        c = schedule_step(&spec, &model, &c, &Step::parse(&spec, s).unwrap()).unwrap();
                    }
                    let entry = c.key(&model);
                    for s in &cycle {
                        c = schedule_step(&spec, &model, &c, &Step::parse(&spec, s).unwrap()).unwrap();
                        assert!(!c.settled(&spec));
                    }
                    assert_eq!(c.key(&model), entry);
                }
                w => panic!("{name}: {w}"),
            }
        }
    }

    #[test]
    fn decide_zero_breaks_validity() {
        let spec = parse_protocol(builtin_protocol("decide-zero").unwrap()).unwrap();
        let ex = explore(&spec, &TimingModel::Asynchronous, 1000).unwrap();
        let i = ex.invalid_decision().unwrap();
        assert_eq!(ex.inputs[i], [1, 1]);
    }

    #[test]
    fn explore_ceiling() {
        let spec = parse_protocol(builtin_protocol("rw-flipflop").unwrap()).unwrap();
        assert!(explore(&spec, &TimingModel::Asynchronous, 10).is_err());
    }
}
