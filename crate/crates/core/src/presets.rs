//! Bundled BeiDou scenario and the reference user-demand cases.

use std::fmt;
use std::str::FromStr;

use crate::error::{CpdError, Result};
use crate::scenario::{PlacementSpec, Scenario, UserKind, UserSpec};

/// BeiDou-3 style constellation: Walker 24/3/1 MEO, 3 GEO, 3 IGSO, 3 stations.
pub const BEIDOU_SCN: &str = include_str!("../data/beidou.scn");

pub fn beidou() -> Scenario {
    Scenario::from_json(BEIDOU_SCN).expect("bundled scenario is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// No users.
    Case0,
    /// Two GEO and two IGSO users at capacity, single-slot runs.
    Case1,
    /// L3, L4, L5 and DRO users at capacity, two-slot runs.
    Case2,
    Case1Star,
    Case2Star,
    Case3Star,
    /// Logical cislunar user asking for one two-slot run per FSA.
    Logical1,
    /// Logical cislunar user asking for three two-slot runs per FSA.
    Logical3,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Case0,
        Preset::Case1,
        Preset::Case2,
        Preset::Case1Star,
        Preset::Case2Star,
        Preset::Case3Star,
        Preset::Logical1,
        Preset::Logical3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Case0 => "case0",
            Preset::Case1 => "case1",
            Preset::Case2 => "case2",
            Preset::Case1Star => "case1*",
            Preset::Case2Star => "case2*",
            Preset::Case3Star => "case3*",
            Preset::Logical1 => "logical1",
            Preset::Logical3 => "logical3",
        }
    }

    pub fn users(self) -> Vec<UserSpec> {
        match self {
            Preset::Case0 | Preset::Case1Star => vec![],
            Preset::Case1 => near_earth_users([1, 1, 20, 1]),
            Preset::Case2 => cislunar_users([1, 2, 10, 1]),
            Preset::Case2Star => near_earth_users([1, 1, 4, 1]),
            Preset::Case3Star => {
                let mut u = near_earth_users([1, 1, 4, 1]);
                u.extend(cislunar_users([1, 2, 4, 1]));
                u
            }
            Preset::Logical1 => vec![logical_user([1, 2, 1, 1])],
            Preset::Logical3 => vec![logical_user([1, 2, 3, 1])],
        }
    }

    /// `base` with its user list replaced by this preset's demand.
    pub fn apply(self, base: &Scenario) -> Result<Scenario> {
        base.with_users(self.users())
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CpdError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_suffix("-star").map(|k| format!("{k}*")).unwrap_or(key);
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| CpdError::invalid("preset", format!("unknown preset `{s}`")))
    }
}

fn user(placement: PlacementSpec, requirement: [u32; 4]) -> UserSpec {
    UserSpec {
        placement,
        requirement,
        logical: false,
        members: vec![],
    }
}

fn geo(name: &str, lon: f64) -> PlacementSpec {
    PlacementSpec {
        longitude_deg: Some(lon),
        ..PlacementSpec::of_kind(name, UserKind::Geo)
    }
}

fn igso(name: &str, crossing: f64, phase: f64) -> PlacementSpec {
    PlacementSpec {
        inclination_deg: Some(55.0),
        crossing_longitude_deg: Some(crossing),
        phase_deg: Some(phase),
        ..PlacementSpec::of_kind(name, UserKind::Igso)
    }
}

fn cislunar(suffix: &str) -> [PlacementSpec; 4] {
    [
        PlacementSpec::of_kind(format!("U_L3{suffix}"), UserKind::LpL3),
        PlacementSpec::of_kind(format!("U_L4{suffix}"), UserKind::LpL4),
        PlacementSpec::of_kind(format!("U_L5{suffix}"), UserKind::LpL5),
        PlacementSpec::of_kind(format!("U_DRO{suffix}"), UserKind::Dro),
    ]
}

fn near_earth_users(req: [u32; 4]) -> Vec<UserSpec> {
    vec![
        user(geo("U_GEO_1", 20.0), req),
        user(geo("U_GEO_2", -100.0), req),
        user(igso("U_IGSO_1", -60.0, 0.0), req),
        user(igso("U_IGSO_2", 40.0, 180.0), req),
    ]
}

fn cislunar_users(req: [u32; 4]) -> Vec<UserSpec> {
    cislunar("_1").into_iter().map(|p| user(p, req)).collect()
}

fn logical_user(req: [u32; 4]) -> UserSpec {
    UserSpec {
        placement: PlacementSpec::of_kind("U_l", UserKind::Logical),
        requirement: req,
        logical: true,
        members: cislunar("").into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::NodeKind;

    #[test]
    fn bundled_scenario_has_thirty_satellites_and_three_stations() {
        let s = beidou();
        assert_eq!(s.satellite_ids().len(), 30);
        assert_eq!(s.ground_station_ids().len(), 3);
        assert_eq!(s.nodes.iter().filter(|n| n.kind == NodeKind::GnssMeo).count(), 24);
        assert_eq!(s.grid.slots_per_superframe(), 20);
        assert_eq!(s.ilp.l_min, 11);
    }

    #[test]
    fn every_preset_builds_and_round_trips_its_name() {
        let base = beidou();
        for p in Preset::ALL {
            let s = p.apply(&base).unwrap();
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert_eq!(s.requirements.len(), p.users().len());
        }
        assert_eq!("CASE2-star".parse::<Preset>().unwrap(), Preset::Case2Star);
        assert!("case9".parse::<Preset>().is_err());
    }

    #[test]
    fn demand_vectors() {
        let s = Preset::Case3Star.apply(&beidou()).unwrap();
        let reqs: Vec<_> = s.requirements.iter().map(|r| [r.a, r.b, r.c, r.d]).collect();
        assert_eq!(&reqs[..4], &[[1, 1, 4, 1]; 4]);
        assert_eq!(&reqs[4..], &[[1, 2, 4, 1]; 4]);
        let s = Preset::Logical3.apply(&beidou()).unwrap();
        assert!(s.requirements[0].logical);
        assert_eq!(s.requirements[0].member_ids.len(), 4);
    }
}
