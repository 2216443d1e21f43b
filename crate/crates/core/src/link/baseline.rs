//! Conventional fire-and-forget link for comparison: no credits, random loss
//! and delay, and a retransmission timer that has to guess.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::des::{EventKind, EventQueue, SimClock};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineParams {
    pub frames: u64,
    pub send_interval_ns: u64,
    pub base_delay_ns: u64,
    /// Uniform extra delay in `0..jitter_ns`.
    pub jitter_ns: u64,
    /// Chance a frame sits in a queue for `stall_ns` extra.
    pub stall_probability: f64,
    pub stall_ns: u64,
    pub loss_probability: f64,
    pub buffer_capacity: usize,
    pub drain_interval_ns: u64,
    pub rto_ns: u64,
    pub max_retries: u32,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            frames: 512,
            send_interval_ns: 100,
            base_delay_ns: 60,
            jitter_ns: 40,
            stall_probability: 0.02,
            stall_ns: 5_000,
            loss_probability: 0.01,
            buffer_capacity: 8,
            drain_interval_ns: 150,
            rto_ns: 1_000,
            max_retries: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BaselineStats {
    pub transmissions: u64,
    pub delivered: u64,
    pub duplicates: u64,
    /// Frames that vanished (wire loss or receiver overflow) with nobody told.
    pub silent_drops: u64,
    pub overflow_drops: u64,
    pub timeout_guesses: u64,
    /// Timeouts fired for frames that had in fact arrived.
    pub false_timeouts: u64,
    pub given_up: u64,
    pub max_delivery_delay_ns: u64,
}

#[derive(Debug, Clone)]
enum Ev {
    Send(u64),
    Arrive { frame: u64, sent_at: u64 },
    Ack(u64),
    Timeout { frame: u64, attempt: u32 },
    Drain,
}

pub fn run_baseline(p: &BaselineParams, seed: u64) -> BaselineStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = EventQueue::new(SimClock::new());
    let mut s = BaselineStats::default();
    let mut buffer: VecDeque<u64> = VecDeque::new();
    let mut received: BTreeMap<u64, bool> = BTreeMap::new();
    let mut acked: BTreeMap<u64, bool> = BTreeMap::new();
    let mut attempts: BTreeMap<u64, u32> = BTreeMap::new();
    let first_sent: BTreeMap<u64, u64> = (0..p.frames).map(|i| (i, i * p.send_interval_ns)).collect();

    let delay = |rng: &mut ChaCha8Rng| {
        let mut d = p.base_delay_ns + if p.jitter_ns > 0 { rng.random_range(0..p.jitter_ns) } else { 0 };
        if rng.random_bool(p.stall_probability) {
            d += p.stall_ns;
        }
        d
    };

    for i in 0..p.frames {
        q.schedule(i * p.send_interval_ns, EventKind::Delivery, Ev::Send(i)).expect("future");
    }
    if p.drain_interval_ns > 0 {
        q.schedule(p.drain_interval_ns, EventKind::Poll, Ev::Drain).expect("future");
    }

    let horizon = p.frames * p.send_interval_ns
        + (p.max_retries as u64 + 2) * (p.rto_ns + p.stall_ns + p.base_delay_ns + p.jitter_ns);
    while let Some(ev) = q.pop() {
        let now = q.now();
        match ev.payload {
            Ev::Send(f) => {
                s.transmissions += 1;
                let attempt = attempts.entry(f).or_insert(0);
                *attempt += 1;
                let attempt = *attempt;
                if rng.random_bool(p.loss_probability) {
                    s.silent_drops += 1;
                } else {
                    let d = delay(&mut rng);
                    q.schedule(now + d, EventKind::Delivery, Ev::Arrive { frame: f, sent_at: now }).expect("future");
                }
                q.schedule(now + p.rto_ns, EventKind::Fault, Ev::Timeout { frame: f, attempt }).expect("future");
            }
            Ev::Arrive { frame, sent_at } => {
                if buffer.len() >= p.buffer_capacity {
                    s.overflow_drops += 1;
                    s.silent_drops += 1;
                    continue;
                }
                let _ = sent_at;
                if received.insert(frame, true).is_some() {
                    s.duplicates += 1;
                } else {
                    s.delivered += 1;
                    s.max_delivery_delay_ns = s.max_delivery_delay_ns.max(now - first_sent[&frame]);
                    buffer.push_back(frame);
                }
                let d = delay(&mut rng);
                q.schedule(now + d, EventKind::Delivery, Ev::Ack(frame)).expect("future");
            }
            Ev::Ack(f) => {
                acked.insert(f, true);
            }
            Ev::Timeout { frame, attempt } => {
                if acked.contains_key(&frame) || attempts.get(&frame) != Some(&attempt) {
                    continue;
                }
                s.timeout_guesses += 1;
                if received.contains_key(&frame) {
                    s.false_timeouts += 1;
                }
                if attempt > p.max_retries {
                    s.given_up += 1;
                } else {
                    q.schedule(now, EventKind::Delivery, Ev::Send(frame)).expect("now");
                }
            }
            Ev::Drain => {
                buffer.pop_front();
                if now < horizon {
                    q.schedule(now + p.drain_interval_ns, EventKind::Poll, Ev::Drain).expect("future");
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventional_link_drops_and_guesses() {
        let s = run_baseline(&BaselineParams::default(), 42);
        assert!(s.silent_drops > 0, "{s:?}");
        assert!(s.timeout_guesses > 0);
        assert!(s.false_timeouts > 0);
        assert!(s.max_delivery_delay_ns > BaselineParams::default().rto_ns);
    }

    #[test]
    fn deterministic() {
        assert_eq!(run_baseline(&BaselineParams::default(), 9), run_baseline(&BaselineParams::default(), 9));
    }

    #[test]
    fn perfect_wire_with_room_is_clean() {
        let p = BaselineParams {
            loss_probability: 0.0,
            stall_probability: 0.0,
            buffer_capacity: 10_000,
            ..Default::default()
        };
        let s = run_baseline(&p, 1);
        assert_eq!(s.silent_drops, 0);
        assert_eq!(s.delivered, p.frames);
    }
}
