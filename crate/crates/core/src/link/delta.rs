//! Slot duration from the physical link parameters.

use serde::{Deserialize, Serialize};

use super::LinkError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Delta {
    pub nanoseconds: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub cable_length_m: f64,
    pub propagation_ns_per_m: f64,
    pub frame_bits: f64,
    pub line_rate_bps: f64,
    #[serde(default)]
    pub processing_allowance_ns: f64,
}

impl Default for LinkParams {
    /// A short copper run at 100 Gb/s: Δ = 111 ns.
    fn default() -> Self {
        LinkParams {
            cable_length_m: 10.0,
            propagation_ns_per_m: 5.0,
            frame_bits: 512.0,
            line_rate_bps: 100e9,
            processing_allowance_ns: 0.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), LinkError> {
        let positive = |field, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(LinkError::Validation { field, msg: format!("must be positive and finite, got {v}") })
            }
        };
        let non_negative = |field, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(LinkError::Validation { field, msg: format!("must be non-negative and finite, got {v}") })
            }
        };
        positive("cable_length_m", self.cable_length_m)?;
        positive("propagation_ns_per_m", self.propagation_ns_per_m)?;
        // zero-bit frames model a pure propagation round trip
        non_negative("frame_bits", self.frame_bits)?;
        positive("line_rate_bps", self.line_rate_bps)?;
        non_negative("processing_allowance_ns", self.processing_allowance_ns)?;
        Ok(())
    }
}

/// Round-trip propagation plus serialization of the frame and its
/// acknowledgement plus the processing allowance, in fractional ns.
pub fn exact_delta_ns(p: &LinkParams) -> f64 {
    2.0 * p.cable_length_m * p.propagation_ns_per_m
        + 2.0 * p.frame_bits / p.line_rate_bps * 1e9
        + p.processing_allowance_ns
}

/// Δ rounded up to a whole nanosecond so the slot never undershoots the
/// physics. A 1e-6 ns guard keeps exact integers from rounding up on
/// floating-point noise.
pub fn compute_delta(p: &LinkParams) -> Result<Delta, LinkError> {
    p.validate()?;
    let exact = exact_delta_ns(p);
    let ns = (exact - 1e-6).ceil().max(1.0);
    if ns > u64::MAX as f64 {
        return Err(LinkError::Validation { field: "cable_length_m", msg: "slot duration overflows".into() });
    }
    Ok(Delta { nanoseconds: ns as u64 })
}
