//! FSA-state / superframe / slot hierarchy.
//!
//! A horizon is cut into FSA states of fixed length; each state holds `M`
//! superframes and each superframe `K` slots. All indices are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub fsa_length_s: f64,
    pub superframe_length_s: f64,
    pub slot_length_s: f64,
    pub horizon_fsa_count: u32,
}

/// Position of a slot inside the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotCoord {
    pub fsa: u32,
    pub superframe: u32,
    pub slot: u32,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            fsa_length_s: 300.0,
            superframe_length_s: 60.0,
            slot_length_s: 3.0,
            horizon_fsa_count: 2016,
        }
    }
}

fn exact_ratio(num: f64, den: f64) -> Option<u32> {
    if !(num.is_finite() && den.is_finite()) || den <= 0.0 || num <= 0.0 {
        return None;
    }
    let q = (num / den).round();
    if q >= 1.0 && (q * den - num).abs() <= 1e-9 * num.max(1.0) {
        Some(q as u32)
    } else {
        None
    }
}

impl TimeGrid {
    pub fn new(
        fsa_length_s: f64,
        superframe_length_s: f64,
        slot_length_s: f64,
        horizon_fsa_count: u32,
    ) -> Result<Self> {
        let grid = TimeGrid {
            fsa_length_s,
            superframe_length_s,
            slot_length_s,
            horizon_fsa_count,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if exact_ratio(self.fsa_length_s, self.superframe_length_s).is_none() {
            return Err(CpdError::invalid(
                "time.superframe_length_s",
                format!(
                    "fsa length {} s is not an integer multiple of superframe length {} s",
                    self.fsa_length_s, self.superframe_length_s
                ),
            ));
        }
        if exact_ratio(self.superframe_length_s, self.slot_length_s).is_none() {
            return Err(CpdError::invalid(
                "time.slot_length_s",
                format!(
                    "superframe length {} s is not an integer multiple of slot length {} s",
                    self.superframe_length_s, self.slot_length_s
                ),
            ));
        }
        if self.horizon_fsa_count == 0 {
            return Err(CpdError::invalid(
                "time.horizon_fsa_count",
                "horizon must hold at least one FSA state",
            ));
        }
        Ok(())
    }

    /// Superframes per FSA state (`M`).
    pub fn superframes_per_fsa(&self) -> u32 {
        exact_ratio(self.fsa_length_s, self.superframe_length_s).unwrap_or(1)
    }

    /// Slots per superframe (`K`).
    pub fn slots_per_superframe(&self) -> u32 {
        exact_ratio(self.superframe_length_s, self.slot_length_s).unwrap_or(1)
    }

    pub fn slots_per_fsa(&self) -> u32 {
        self.superframes_per_fsa() * self.slots_per_superframe()
    }

    pub fn total_slots(&self) -> u64 {
        self.horizon_fsa_count as u64 * self.slots_per_fsa() as u64
    }

    pub fn flatten(&self, c: SlotCoord) -> Option<u64> {
        let m = self.superframes_per_fsa();
        let k = self.slots_per_superframe();
        if c.fsa >= self.horizon_fsa_count || c.superframe >= m || c.slot >= k {
            return None;
        }
        Some((c.fsa as u64 * m as u64 + c.superframe as u64) * k as u64 + c.slot as u64)
    }

    pub fn unflatten(&self, index: u64) -> Option<SlotCoord> {
        if index >= self.total_slots() {
            return None;
        }
        let k = self.slots_per_superframe() as u64;
        let m = self.superframes_per_fsa() as u64;
        let slot = (index % k) as u32;
        let sf_global = index / k;
        Some(SlotCoord {
            fsa: (sf_global / m) as u32,
            superframe: (sf_global % m) as u32,
            slot,
        })
    }

    pub fn fsa_start(&self, fsa: u32) -> f64 {
        fsa as f64 * self.fsa_length_s
    }

    pub fn superframe_start(&self, fsa: u32, superframe: u32) -> f64 {
        self.fsa_start(fsa) + superframe as f64 * self.superframe_length_s
    }

    pub fn superframe_midpoint(&self, fsa: u32, superframe: u32) -> f64 {
        self.superframe_start(fsa, superframe) + 0.5 * self.superframe_length_s
    }

    /// `count` epochs spread evenly over FSA `fsa`, endpoints included.
    pub fn fsa_sample_epochs(&self, fsa: u32, count: u32) -> Vec<f64> {
        let start = self.fsa_start(fsa);
        match count {
            0 => Vec::new(),
            1 => vec![start + 0.5 * self.fsa_length_s],
            n => (0..n)
                .map(|i| start + self.fsa_length_s * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_give_five_superframes_of_twenty_slots() {
        let g = TimeGrid::default();
        assert_eq!(g.superframes_per_fsa(), 5);
        assert_eq!(g.slots_per_superframe(), 20);
        assert_eq!(g.slots_per_fsa(), 100);
    }

    #[test]
    fn non_divisible_slot_rejected() {
        let err = TimeGrid::new(300.0, 60.0, 7.0, 1).unwrap_err();
        assert!(err.to_string().contains("slot_length_s"), "{err}");
        assert!(TimeGrid::new(300.0, 70.0, 7.0, 1).is_err());
    }

    #[test]
    fn sample_epochs_cover_the_state() {
        let g = TimeGrid::default();
        assert_eq!(g.fsa_sample_epochs(2, 3), vec![600.0, 750.0, 900.0]);
        assert_eq!(g.superframe_midpoint(1, 2), 300.0 + 120.0 + 30.0);
    }

    proptest! {
        #[test]
        fn flatten_unflatten_are_inverse(fsa in 0u32..40, sf in 0u32..5, slot in 0u32..20) {
            let g = TimeGrid { horizon_fsa_count: 40, ..TimeGrid::default() };
            let c = SlotCoord { fsa, superframe: sf, slot };
            let i = g.flatten(c).unwrap();
            prop_assert_eq!(g.unflatten(i), Some(c));
            prop_assert_eq!(g.flatten(g.unflatten(i).unwrap()), Some(i));
        }

        #[test]
        fn out_of_horizon_rejected(idx in 4000u64..10_000) {
            let g = TimeGrid { horizon_fsa_count: 40, ..TimeGrid::default() };
            prop_assert!(g.unflatten(idx).is_none());
        }
    }
}
