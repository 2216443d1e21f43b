//! Discrete-event core: a monotone clock and a `(time, insertion)` ordered queue.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesError {
    #[error("event scheduled at {at} ns but clock is at {now} ns")]
    Past { at: u64, now: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimClock {
    now: u64,
    slot_ns: Option<u64>,
}

impl SimClock {
    pub fn new() -> Self {
        SimClock::default()
    }

    /// A clock whose slot index is `now / delta`.
    pub fn slotted(delta_ns: u64) -> Self {
        SimClock { now: 0, slot_ns: Some(delta_ns.max(1)) }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn slot_index(&self) -> Option<u64> {
        self.slot_ns.map(|d| self.now / d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    SlotStart,
    SlotBoundary,
    Delivery,
    Fault,
    Poll,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<P> {
    pub time: u64,
    pub seq: u64,
    pub kind: EventKind,
    pub payload: P,
}

struct Entry<P>(Event<P>);

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        (self.0.time, self.0.seq) == (other.0.time, other.0.seq)
    }
}
impl<P> Eq for Entry<P> {}
impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.time, self.0.seq).cmp(&(other.0.time, other.0.seq))
    }
}

/// Pending events plus the clock they drive. Popping an event advances the
/// clock to its time; nothing may be scheduled before `now`.
pub struct EventQueue<P> {
    clock: SimClock,
    heap: BinaryHeap<Reverse<Entry<P>>>,
    next_seq: u64,
    processed: u64,
}

impl<P> EventQueue<P> {
    pub fn new(clock: SimClock) -> Self {
        EventQueue { clock, heap: BinaryHeap::new(), next_seq: 0, processed: 0 }
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn now(&self) -> u64 {
        self.clock.now
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, at: u64, kind: EventKind, payload: P) -> Result<u64, DesError> {
        if at < self.clock.now {
            return Err(DesError::Past { at, now: self.clock.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry(Event { time: at, seq, kind, payload })));
        Ok(seq)
    }

    pub fn schedule_in(&mut self, delay: u64, kind: EventKind, payload: P) -> Result<u64, DesError> {
        self.schedule(self.clock.now.saturating_add(delay), kind, payload)
    }

    pub fn pop(&mut self) -> Option<Event<P>> {
        let Reverse(Entry(ev)) = self.heap.pop()?;
        debug_assert!(ev.time >= self.clock.now);
        self.clock.now = ev.time;
        self.processed += 1;
        Some(ev)
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse(Entry(e))| e.time)
    }
}
