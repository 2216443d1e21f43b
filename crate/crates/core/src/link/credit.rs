//! Per-direction transmit credits.

use std::fmt;

use super::LinkError;
use crate::agent::Agent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    AtoB,
    BtoA,
}

impl Direction {
    pub fn from_sender(a: Agent) -> Direction {
        match a {
            Agent::Alice => Direction::AtoB,
            Agent::Bob => Direction::BtoA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CreditState {
    pub a_to_b: u32,
    pub b_to_a: u32,
    pub capacity: u32,
}

/// A send attempt with no credit. The frame never enters the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Refused(pub Direction);

impl fmt::Display for Refused {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no credit for {:?}", self.0)
    }
}

impl CreditState {
    /// Both directions start full.
    pub fn full(capacity: u32) -> Result<Self, LinkError> {
        if capacity == 0 {
            return Err(LinkError::Validation { field: "credit_capacity", msg: "must be positive".into() });
        }
        Ok(CreditState { a_to_b: capacity, b_to_a: capacity, capacity })
    }

    pub fn get(&self, d: Direction) -> u32 {
        match d {
            Direction::AtoB => self.a_to_b,
            Direction::BtoA => self.b_to_a,
        }
    }

    fn with(mut self, d: Direction, v: u32) -> Self {
        match d {
            Direction::AtoB => self.a_to_b = v,
            Direction::BtoA => self.b_to_a = v,
        }
        self
    }
}

pub fn credit_consume(c: CreditState, d: Direction) -> Result<CreditState, Refused> {
    match c.get(d) {
        0 => Err(Refused(d)),
        n => Ok(c.with(d, n - 1)),
    }
}

pub fn credit_grant(c: CreditState, d: Direction, n: u32) -> Result<CreditState, LinkError> {
    if n == 0 {
        return Err(LinkError::Validation { field: "grant", msg: "must be positive".into() });
    }
    let next = c.get(d).checked_add(n).filter(|&v| v <= c.capacity).ok_or_else(|| LinkError::Validation {
        field: "grant",
        msg: format!("{} + {n} exceeds capacity {}", c.get(d), c.capacity),
    })?;
    Ok(c.with(d, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn consume_and_refuse() {
        let c = CreditState { a_to_b: 1, b_to_a: 0, capacity: 4 };
        let c = credit_consume(c, Direction::AtoB).unwrap();
        assert_eq!(c.a_to_b, 0);
        assert_eq!(credit_consume(c, Direction::AtoB), Err(Refused(Direction::AtoB)));
        assert_eq!(credit_consume(c, Direction::BtoA), Err(Refused(Direction::BtoA)));
    }

    #[test]
    fn grant_past_capacity_is_invalid() {
        let c = CreditState::full(3).unwrap();
        assert!(credit_grant(c, Direction::AtoB, 1).is_err());
        assert!(credit_grant(c, Direction::AtoB, 0).is_err());
        let c = credit_consume(c, Direction::BtoA).unwrap();
        assert_eq!(credit_grant(c, Direction::BtoA, 1).unwrap(), CreditState::full(3).unwrap());
        assert!(CreditState::full(0).is_err());
    }

    proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1u32..8, ops in proptest::collection::vec((any::<bool>(), any::<bool>(), 1u32..4), 0..64)) {
            let mut c = CreditState::full(cap).unwrap();
            for (consume, ab, n) in ops {
                let d = if ab { Direction::AtoB } else { Direction::BtoA };
                let before = c.get(d);
                if consume {
                    match credit_consume(c, d) {
                        Ok(next) => { prop_assert_eq!(next.get(d), before - 1); c = next; }
                        Err(_) => prop_assert_eq!(before, 0),
                    }
                } else if let Ok(next) = credit_grant(c, d, n) {
                    prop_assert_eq!(next.get(d), before + n);
                    c = next;
                } else {
                    prop_assert!(before + n > cap);
                }
                prop_assert!(c.a_to_b <= cap && c.b_to_a <= cap);
            }
        }
    }
}
