//! Service capacity: the largest per-user run count one superframe can
//! deliver with no penalty.

use serde::{Deserialize, Serialize};

use crate::cpd;
use crate::error::{CpdError, Result};
use crate::milp::{Backend, SolveOptions};
use crate::scenario::Scenario;
use crate::service::{derive_fsa_request, SuperframeRequest};
use crate::visibility;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub c: u32,
    pub penalty_sum: u32,
    pub utilization: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub fsa: u32,
    /// Largest `c` with zero penalty for every user.
    pub c: u32,
    /// Structural ceiling `⌊d·K / b⌋` over the users.
    pub ceiling: u32,
    pub probes: Vec<Probe>,
}

/// Binary search over `c`, applied to every user of `scenario` at once, on
/// superframe 0 of `fsa`.
pub fn capacity_probe(scenario: &Scenario, fsa: u32, backend: &dyn Backend, opts: &SolveOptions) -> Result<CapacityResult> {
    let raw = visibility::fsa_visibility(scenario, fsa);
    let y_prime = visibility::preprocess_users(&raw, &scenario.requirements, scenario)?;
    let base: SuperframeRequest = derive_fsa_request(&scenario.requirements, fsa).into();
    if base.is_empty() {
        return Err(CpdError::invalid("users", format!("no user requests in fsa {fsa}")));
    }
    let k = scenario.grid.slots_per_superframe();
    let ceiling = base.entries.iter().map(|e| e.d * k / e.b).min().unwrap_or(0);
    let sats = raw.satellites().collect();
    let mut probes = Vec::new();

    let mut run = |c: u32| -> Result<bool> {
        let mut us = base.clone();
        us.entries.iter_mut().for_each(|e| e.c = c);
        let model = cpd::build_model(&y_prime, &us, &scenario.ilp, k, 0)?;
        let sol = cpd::solve(&model, backend, opts)?;
        let plan = cpd::extract_plan(&model, &sol)?;
        log::info!("capacity probe c = {c}: penalty {}", sol.penalty_sum);
        probes.push(Probe {
            c,
            penalty_sum: sol.penalty_sum,
            utilization: crate::metrics::utilization(std::slice::from_ref(&plan), &sats, k),
            wall_time_s: sol.wall_time.as_secs_f64(),
        });
        Ok(sol.penalty_sum == 0)
    };

    // The ceiling is the usual answer, so try it before bisecting.
    let mut lo = ceiling;
    if ceiling > 0 && !run(ceiling)? {
        let mut hi = ceiling - 1;
        lo = 0;
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if run(mid)? {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
    }
    Ok(CapacityResult { fsa, c: lo, ceiling, probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::exhaustive::Exhaustive;

    const TINY: &str = r#"{
      "name": "tiny",
      "epoch": "2000-01-01T12:00:00Z",
      "time": {"fsa_length_s": 9, "superframe_length_s": 9, "slot_length_s": 3, "horizon_fsa_count": 1},
      "constellation": {"geo": {"longitudes_deg": [80, 110.5, 140], "pointing_half_angle_deg": 80}},
      "ground_stations": [{"name": "Sanya", "lat_deg": 18.23, "lon_deg": 109.02}],
      "users": [{"name": "U", "kind": "geo", "longitude_deg": 60, "requirement": [1, 3, 1, 1]}],
      "ilp": {"l_min": 0, "t_m": 3}
    }"#;

    // b = K keeps the serving satellite busy every slot, hence no ranging floor
    #[test]
    fn one_full_length_run_fills_the_superframe() {
        let s = Scenario::from_json(TINY).unwrap();
        let r = capacity_probe(&s, 0, &Exhaustive::default(), &SolveOptions::default()).unwrap();
        assert_eq!(r.ceiling, 1);
        assert_eq!(r.c, 1);
    }

    #[test]
    fn back_to_back_runs_on_one_satellite_lower_capacity() {
        // Two terminals, single-slot runs: a satellite cannot serve adjacent
        // slots, so the middle slot gets one run and the ceiling of 6 drops to 5.
        let s = Scenario::from_json(&TINY.replace("[1, 3, 1, 1]", "[1, 1, 1, 2]")).unwrap();
        let r = capacity_probe(&s, 0, &Exhaustive::default(), &SolveOptions::default()).unwrap();
        assert_eq!(r.ceiling, 6);
        assert_eq!(r.c, 5);
        assert!(r.probes.len() > 1);
    }
}
