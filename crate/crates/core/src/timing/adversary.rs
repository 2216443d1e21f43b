//! Greedy adversary that keeps a run bivalent for as long as it can.

use super::model::{legal_steps, schedule_step, Config, Step};
use super::valence::{Classifier, Valence};
use super::TimingError;

#[derive(Debug, Clone)]
pub struct BivalentRun {
    pub steps: Vec<Step>,
    /// `configs[i]` is the configuration after `steps[..i]`; all bivalent.
    pub configs: Vec<Config>,
    pub classified: usize,
}

impl BivalentRun {
    pub fn render(&self, cl: &Classifier<'_>) -> String {
        let mut out = String::new();
        for (i, st) in self.steps.iter().enumerate() {
            out.push_str(&format!("{i} {} valence=bivalent\n", st.render(cl.spec())));
        }
        out
    }
}

/// A schedule of exactly `steps` steps whose every prefix is bivalent, or
/// `None` if the start is not bivalent or the adversary runs out of moves.
/// At each step the first bivalent successor in canonical order wins.
pub fn find_bivalent_run(
    cl: &mut Classifier<'_>,
    start: &Config,
    steps: usize,
) -> Result<Option<BivalentRun>, TimingError> {
    if cl.classify(start)?.valence != Valence::Bivalent {
        return Ok(None);
    }
    let spec = cl.spec();
    let model = *cl.model();
    let mut run = BivalentRun { steps: Vec::with_capacity(steps), configs: vec![start.clone()], classified: 1 };
    let mut cur = start.clone();
    for _ in 0..steps {
        let mut chosen = None;
        for step in legal_steps(spec, &model, &cur) {
            let next = schedule_step(spec, &model, &cur, &step)?;
            run.classified += 1;
            if cl.classify(&next)?.valence == Valence::Bivalent {
                chosen = Some((step, next));
                break;
            }
        }
        let Some((step, next)) = chosen else {
            return Ok(None);
        };
        run.steps.push(step);
        run.configs.push(next.clone());
        cur = next;
    }
    Ok(Some(run))
}

#[cfg(test)]
mod tests {
    use super::super::protocol::{builtin_protocol, parse_protocol, ProtocolSpec};
    use super::super::TimingModel;
    use super::*;
    use crate::link::Delta;

    fn spec(n: &str) -> ProtocolSpec {
        parse_protocol(builtin_protocol(n).unwrap()).unwrap()
    }

    #[test]
    fn async_run_stays_bivalent() {
        let s = spec("rw-flipflop");
        let mut cl = Classifier::new(&s, TimingModel::Asynchronous, 10);
        let start = Config::initial(&s, [0, 1]);
        let run = find_bivalent_run(&mut cl, &start, 200).unwrap().expect("async admits a long bivalent run");
        assert_eq!(run.steps.len(), 200);
        // replay independently
        let mut c = start;
        for st in &run.steps {
            c = schedule_step(&s, &TimingModel::Asynchronous, &c, st).unwrap();
            assert!(c.decided.iter().all(|d| d.is_none()));
        }
        assert!(run.render(&cl).lines().count() == 200);
    }

    #[test]
    fn bisync_adversary_runs_out_within_one_slot() {
        let s = spec("rw-flipflop");
        let model = TimingModel::Bisynchronous { delta: Delta { nanoseconds: 111 } };
        for inputs in [[0, 1], [1, 0]] {
            let mut cl = Classifier::new(&s, model, 16);
            let start = Config::initial(&s, inputs);
            // the go deliveries keep the crash choice open, then the slot closes
            assert!(find_bivalent_run(&mut cl, &start, 2).unwrap().is_some());
            assert!(find_bivalent_run(&mut cl, &start, 3).unwrap().is_none());
        }
    }

    #[test]
    fn univalent_start_yields_none() {
        let s = spec("decide-zero");
        let mut cl = Classifier::new(&s, TimingModel::Asynchronous, 6);
        assert!(find_bivalent_run(&mut cl, &Config::initial(&s, [0, 1]), 5).unwrap().is_none());
    }
}
