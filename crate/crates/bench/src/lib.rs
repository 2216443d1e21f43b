//! Fixed inputs shared by the benchmarks.

use bisync::link::{fault_vocabulary, run_slot_traced, Message, RegisterPair};
use bisync::timing::{builtin_protocol, parse_protocol, Config, ProtocolSpec};

pub fn flipflop() -> ProtocolSpec {
    parse_protocol(builtin_protocol("rw-flipflop").expect("built in")).expect("fixture parses")
}

pub fn flipflop_start(spec: &ProtocolSpec) -> Config {
    Config::initial(spec, [0, 1])
}

/// One slot per fault in the vocabulary, both sides offering; returns the
/// number of ticks simulated.
pub fn slot_sweep() -> usize {
    let pair = RegisterPair::empty();
    fault_vocabulary()
        .into_iter()
        .map(|f| {
            let t = run_slot_traced(&pair, Some(Message::new(1)), Some(Message::new(2)), f, 0).expect("valid slot");
            t.ticks.len()
        })
        .sum()
}
