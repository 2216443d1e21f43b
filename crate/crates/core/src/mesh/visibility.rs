//! Whether a periodic poller is guaranteed to catch an outage.

/// Default reconvergence of a routed Clos fabric, ns.
pub const CLOS_RECONVERGENCE_NS: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visibility {
    pub outage_ns: u64,
    pub poll_ns: u64,
    /// Polls landing in `[t, t + outage)` for the least lucky phase.
    pub min_hits: u64,
    /// ... and for the luckiest one.
    pub max_hits: u64,
}

impl Visibility {
    /// Seen whatever the poller's phase.
    pub fn visible(&self) -> bool {
        self.min_hits >= 1
    }
}

/// Polls at `φ + k·P` against a half-open outage of length `L`: at least
/// `⌊L/P⌋` and at most `⌈L/P⌉` of them land inside.
pub fn visibility(outage_ns: u64, poll_ns: u64) -> Visibility {
    assert!(poll_ns > 0, "poll period must be positive");
    Visibility { outage_ns, poll_ns, min_hits: outage_ns / poll_ns, max_hits: outage_ns.div_ceil(poll_ns) }
}

/// Local heal of `slots` slots of `delta_ns` each.
pub fn heal_outage_ns(slots: u32, delta_ns: u64) -> u64 {
    u64::from(slots) * delta_ns
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Try every integer phase.
    fn hits_oracle(outage: u64, poll: u64) -> (u64, u64) {
        let (mut lo, mut hi) = (u64::MAX, 0);
        for phase in 0..poll {
            let n = (0..outage).filter(|t| (t + phase) % poll == 0).count() as u64;
            lo = lo.min(n);
            hi = hi.max(n);
        }
        (lo, hi)
    }

    #[test]
    fn local_heal_hides_from_slower_polls() {
        let delta = 111;
        let out = heal_outage_ns(1, delta);
        for poll in [delta + 1, 1000, 1_000_000, 1_000_000_000] {
            assert!(!visibility(out, poll).visible());
        }
        assert!(visibility(out, delta).visible());
        assert!(visibility(CLOS_RECONVERGENCE_NS, 1_000_000).visible());
        assert_eq!(visibility(CLOS_RECONVERGENCE_NS, 1_000_000).min_hits, 50);
    }

    proptest::proptest! {
        #[test]
        fn matches_phase_sweep(outage in 0u64..300, poll in 1u64..60) {
            let v = visibility(outage, poll);
            proptest::prop_assert_eq!((v.min_hits, v.max_hits), hits_oracle(outage, poll));
        }
    }
}
