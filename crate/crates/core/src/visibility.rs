//! Per-FSA visibility matrix, anchor classification and user preprocessing.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::ephemeris::EARTH_RADIUS_KM;
use crate::error::{CpdError, Result};
use crate::scenario::{NodeId, NodeKind, PointingAxis, Scenario, UserRequirement};

/// True iff the segment `p1`–`p2` stays farther than `occluder_radius` from the origin.
pub fn los_clear(p1: &Vector3<f64>, p2: &Vector3<f64>, occluder_radius: f64) -> bool {
    let d = p2 - p1;
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 { (-p1.dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p1 + t * d).norm() > occluder_radius
}

/// Angle in degrees between `target - from` and the boresight axis at `from`.
pub fn off_axis_angle_deg(from: &Vector3<f64>, target: &Vector3<f64>, axis: PointingAxis) -> f64 {
    let los = target - from;
    let boresight = match axis {
        PointingAxis::Zenith => from.normalize(),
        PointingAxis::Nadir => -from.normalize(),
    };
    (los.normalize().dot(&boresight)).clamp(-1.0, 1.0).acos().to_degrees()
}

/// True iff `target` lies inside the cone of half-angle `cone_half_angle_deg`
/// about the boresight of a terminal at `from`.
pub fn within_pointing(
    from: &Vector3<f64>,
    target: &Vector3<f64>,
    cone_half_angle_deg: f64,
    axis: PointingAxis,
) -> bool {
    off_axis_angle_deg(from, target, axis) <= cone_half_angle_deg + 1e-9
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMatrix {
    pub fsa_index: u32,
    n: usize,
    y: Vec<bool>,
    pub anchors: BTreeSet<NodeId>,
    pub non_anchors: BTreeSet<NodeId>,
    /// Member rows folded into a logical user by preprocessing.
    pub removed: BTreeSet<NodeId>,
}

impl VisibilityMatrix {
    pub fn new(fsa_index: u32, n: usize) -> Self {
        VisibilityMatrix {
            fsa_index,
            n,
            y: vec![false; n * n],
            anchors: BTreeSet::new(),
            non_anchors: BTreeSet::new(),
            removed: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> bool {
        i < self.n && j < self.n && self.y[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`; the diagonal is never set.
    pub fn set(&mut self, i: NodeId, j: NodeId, visible: bool) {
        if i == j {
            return;
        }
        self.y[i * self.n + j] = visible;
        self.y[j * self.n + i] = visible;
    }

    pub fn neighbors(&self, i: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }

    pub fn satellites(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.anchors.union(&self.non_anchors).copied()
    }

    pub fn is_satellite(&self, id: NodeId) -> bool {
        self.anchors.contains(&id) || self.non_anchors.contains(&id)
    }

    /// Number of GNSS satellites visible from satellite `sat`.
    pub fn visible_satellite_count(&self, sat: NodeId) -> usize {
        self.neighbors(sat).filter(|j| self.is_satellite(*j)).count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| !self.get(i, i) && (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// CSV rows `fsa,node_a,node_b,visible` over the upper triangle.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| CpdError::Solver(format!("csv write: {e}"));
        if header {
            w.write_record(["fsa", "node_a", "node_b", "visible"]).map_err(err)?;
        }
        for i in 0..self.n {
            for j in i + 1..self.n {
                w.serialize((self.fsa_index, i, j, self.get(i, j) as u8)).map_err(err)?;
            }
        }
        w.flush().map_err(|e| CpdError::Solver(format!("csv write: {e}")))?;
        Ok(())
    }
}

/// Visibility of every node pair over FSA `fsa_index`.
///
/// A pair is visible only if the link holds at every sample epoch.
pub fn fsa_visibility(scenario: &Scenario, fsa_index: u32) -> VisibilityMatrix {
    let n = scenario.nodes.len();
    let cfg = &scenario.visibility;
    let occluder = EARTH_RADIUS_KM + cfg.occultation_margin_km;
    let epochs = scenario.grid.fsa_sample_epochs(fsa_index, cfg.sample_epochs);
    let mut vm = VisibilityMatrix::new(fsa_index, n);
    vm.y.iter_mut().for_each(|v| *v = true);
    for i in 0..n {
        vm.y[i * n + i] = false;
    }

    for t in epochs {
        let pos: Vec<Option<Vector3<f64>>> = (0..n).map(|id| scenario.state(id, t).map(|s| s.position)).collect();
        for i in 0..n {
            for j in i + 1..n {
                if !vm.get(i, j) {
                    continue;
                }
                let ok = match (&pos[i], &pos[j]) {
                    (Some(pi), Some(pj)) => pair_visible(scenario, i, j, pi, pj, occluder),
                    _ => false,
                };
                if !ok {
                    vm.set(i, j, false);
                }
            }
        }
    }

    let gs = scenario.ground_station_ids();
    for sat in scenario.satellite_ids() {
        if gs.iter().any(|&g| vm.get(sat, g)) {
            vm.anchors.insert(sat);
        } else {
            vm.non_anchors.insert(sat);
        }
    }
    vm
}

fn pair_visible(s: &Scenario, i: NodeId, j: NodeId, pi: &Vector3<f64>, pj: &Vector3<f64>, occluder: f64) -> bool {
    let (ni, nj) = (&s.nodes[i], &s.nodes[j]);
    let axis = s.visibility.pointing_axis;
    let cone_ok = |from: &Vector3<f64>, to: &Vector3<f64>, cone: Option<f64>, axis| match cone {
        Some(c) => within_pointing(from, to, c, axis),
        None => true,
    };
    use NodeKind::*;
    match (ni.kind, nj.kind) {
        (GroundStation, GroundStation) | (GroundStation, User) | (User, GroundStation) => false,
        (GroundStation, _) => cone_ok(pi, pj, ni.pointing_half_angle_deg, PointingAxis::Zenith),
        (_, GroundStation) => cone_ok(pj, pi, nj.pointing_half_angle_deg, PointingAxis::Zenith),
        _ => {
            los_clear(pi, pj, occluder)
                && cone_ok(pi, pj, ni.pointing_half_angle_deg, axis)
                && cone_ok(pj, pi, nj.pointing_half_angle_deg, axis)
        }
    }
}

/// Visibility for several FSA states, computed in parallel.
pub fn horizon_visibility(scenario: &Scenario, fsas: &[u32]) -> Vec<VisibilityMatrix> {
    fsas.par_iter().map(|&f| fsa_visibility(scenario, f)).collect()
}

/// Zeroes user–user visibility and folds each logical user's members into it.
pub fn preprocess_users(vm: &VisibilityMatrix, users: &[UserRequirement], scenario: &Scenario) -> Result<VisibilityMatrix> {
    let mut out = vm.clone();
    let user_ids: Vec<NodeId> = scenario.nodes.iter().filter(|n| n.kind == NodeKind::User).map(|n| n.id).collect();
    for (a, &u) in user_ids.iter().enumerate() {
        for &v in &user_ids[a + 1..] {
            out.set(u, v, false);
        }
    }
    for req in users.iter().filter(|r| r.logical) {
        if req.member_ids.is_empty() {
            return Err(CpdError::EmptyLogicalUser(req.user_id));
        }
        for j in 0..out.n {
            if j == req.user_id {
                continue;
            }
            let any = req.member_ids.iter().any(|&m| vm.get(m, j) && !user_ids.contains(&j));
            out.set(req.user_id, j, any);
        }
        for &m in &req.member_ids {
            for j in 0..out.n {
                out.set(m, j, false);
            }
            out.removed.insert(m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ephemeris::{gs_position, propagate, KeplerElements};
    use crate::scenario::Scenario;

    fn sample_segment_min(p1: &Vector3<f64>, p2: &Vector3<f64>, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| (p1 + (p2 - p1) * (i as f64 / samples as f64)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn line_of_sight_examples() {
        let r = EARTH_RADIUS_KM;
        let a = Vector3::new(27899.0, 0.0, 0.0);
        let b = Vector3::new(42164.0, 0.0, 0.0);
        assert!(los_clear(&a, &b, r));
        let p = Vector3::new(1.1 * r, 0.0, 0.0);
        assert!(!los_clear(&p, &-p, r));
    }

    #[test]
    fn line_of_sight_matches_sampling_oracle() {
        let meo = KeplerElements::circular(27899.0, 55.0, 0.0, 0.0);
        let model = crate::ephemeris::MoonModel::default();
        for i in 0..200 {
            let t = i as f64 * 997.0;
            let sat = propagate(&meo, t).position;
            let l4 = model.libration_point(crate::ephemeris::LibrationPoint::L4, t).position;
            let oracle = sample_segment_min(&sat, &l4, 1000);
            // skip cases within the sampling resolution of the occluder boundary
            if (oracle - EARTH_RADIUS_KM).abs() < 450.0 {
                continue;
            }
            assert_eq!(los_clear(&sat, &l4, EARTH_RADIUS_KM), oracle > EARTH_RADIUS_KM, "t={t}");
        }
    }

    #[test]
    fn pointing_examples() {
        let sat = Vector3::new(27899.0, 0.0, 0.0);
        let up = Vector3::new(40000.0, 0.0, 0.0);
        let down = Vector3::new(10000.0, 0.0, 0.0);
        assert!(within_pointing(&sat, &up, 0.1, PointingAxis::Zenith));
        assert!(!within_pointing(&sat, &down, 89.0, PointingAxis::Zenith));
        assert!(within_pointing(&sat, &down, 0.1, PointingAxis::Nadir));
    }

    #[test]
    fn ground_station_five_degree_elevation_boundary() {
        // Satellite placed analytically at 5 deg elevation from GS (0, 0).
        let gs = gs_position(0.0, 0.0, 0.0, 0.0).position;
        let r_sat = 27899.0_f64;
        let el = 5.0_f64.to_radians();
        // law of sines: central angle = 90 - el - asin(R cos(el) / r)
        let nadir = (EARTH_RADIUS_KM * el.cos() / r_sat).asin();
        let central = std::f64::consts::FRAC_PI_2 - el - nadir;
        let sat = Vector3::new(r_sat * central.cos(), r_sat * central.sin(), 0.0);
        let ang = off_axis_angle_deg(&gs, &sat, PointingAxis::Zenith);
        assert!((ang - 85.0).abs() < 1e-9, "{ang}");
        assert!(within_pointing(&gs, &sat, 85.0, PointingAxis::Zenith));
        let beyond = Vector3::new(r_sat * (central + 1e-4).cos(), r_sat * (central + 1e-4).sin(), 0.0);
        assert!(!within_pointing(&gs, &beyond, 85.0, PointingAxis::Zenith));
    }

    fn two_sat_scenario(extra_users: &str) -> Scenario {
        let text = format!(
            r#"{{
            "time": {{"fsa_length_s": 300, "superframe_length_s": 60, "slot_length_s": 3, "horizon_fsa_count": 20}},
            "constellation": {{"walker": {{"total": 8, "planes": 1, "phasing": 0, "altitude_km": 21528, "inclination_deg": 55}},
                              "geo": {{"longitudes_deg": [110.5]}}}},
            "ground_stations": [{{"name": "Sanya", "lat_deg": 18.23, "lon_deg": 109.02}},
                                {{"name": "Eq", "lat_deg": 0.0, "lon_deg": 110.5}}],
            "users": [{extra_users}]
        }}"#
        );
        Scenario::from_json(&text).unwrap()
    }

    #[test]
    fn co_orbital_neighbours_45_deg_apart_see_each_other() {
        let s = two_sat_scenario("");
        for fsa in 0..20 {
            let vm = fsa_visibility(&s, fsa);
            assert!(vm.is_symmetric());
            // satellites 0 and 1 are 45 deg apart in one plane; 0 and 2 are 90 deg apart
            assert!(!vm.get(0, 1), "fsa {fsa}");
            assert!(vm.get(0, 2), "fsa {fsa}");
            assert!(vm.anchors.contains(&8), "GEO over the station is an anchor");
        }
    }

    #[test]
    fn co_orbital_visibility_against_geometry_oracle() {
        let s = two_sat_scenario("");
        let vm = fsa_visibility(&s, 3);
        for (a, b) in [(0usize, 1usize), (0, 2), (0, 3), (0, 4), (1, 5)] {
            let want = s.grid.fsa_sample_epochs(3, 3).iter().all(|&t| {
                let pa = s.state(a, t).unwrap().position;
                let pb = s.state(b, t).unwrap().position;
                let central = pa.angle(&pb).to_degrees();
                // equal radii: off-nadir angle = 90 - central/2; earth clear iff r cos(central/2) > R
                let off_nadir = 90.0 - central / 2.0;
                let clear = pa.norm() * (central / 2.0).to_radians().cos() > EARTH_RADIUS_KM;
                off_nadir <= 60.0 && clear
            });
            assert_eq!(vm.get(a, b), want, "pair ({a},{b})");
        }
    }

    #[test]
    fn preprocessing_zeroes_users_and_unions_members() {
        let s = two_sat_scenario(
            r#"{"name": "UA", "kind": "geo", "longitude_deg": -70, "requirement": [1,1,1,1]},
               {"name": "UB", "kind": "geo", "longitude_deg": -69, "requirement": [1,1,1,1]},
               {"name": "Ul", "kind": "logical", "logical": true, "requirement": [1,2,1,1],
                "members": [{"name": "L3", "kind": "lp-l3"}, {"name": "L4", "kind": "lp-l4"},
                            {"name": "L5", "kind": "lp-l5"}, {"name": "DRO", "kind": "dro"}]},
               {"name": "Us", "kind": "logical", "logical": true, "requirement": [1,2,1,1],
                "members": [{"name": "L4b", "kind": "lp-l4"}]}"#,
        );
        let ua = s.find("UA").unwrap();
        let ub = s.find("UB").unwrap();
        let ul = s.find("Ul").unwrap();
        let us = s.find("Us").unwrap();
        let raw = fsa_visibility(&s, 0);
        assert!(raw.get(ua, ub), "nearby GEO users see each other before preprocessing");
        let pre = preprocess_users(&raw, &s.requirements, &s).unwrap();
        assert!(!pre.get(ua, ub));
        assert!(pre.is_symmetric());
        let members = &s.requirement(ul).unwrap().member_ids;
        for sat in s.satellite_ids() {
            let want = members.iter().any(|&m| raw.get(m, sat));
            assert_eq!(pre.get(ul, sat), want);
            let single = s.requirement(us).unwrap().member_ids[0];
            assert_eq!(pre.get(us, sat), raw.get(single, sat));
        }
        for &m in members {
            assert!(pre.removed.contains(&m));
            assert_eq!(pre.neighbors(m).count(), 0);
        }
        for u in [ua, ub, ul, us] {
            assert!(pre.neighbors(u).all(|j| pre.is_satellite(j)));
        }
        let mut bad = s.requirements.clone();
        bad[2].member_ids.clear();
        assert!(matches!(preprocess_users(&raw, &bad, &s), Err(CpdError::EmptyLogicalUser(_))));
    }

    #[test]
    fn adding_a_station_never_shrinks_anchors() {
        let s = two_sat_scenario("");
        let mut file = s.source().clone();
        file.ground_stations.truncate(1);
        let fewer = Scenario::from_file(file).unwrap();
        for fsa in 0..10 {
            let small = fsa_visibility(&fewer, fsa);
            let big = fsa_visibility(&s, fsa);
            assert!(small.anchors.is_subset(&big.anchors));
        }
    }

    #[test]
    fn csv_dump_has_upper_triangle_rows() {
        let s = two_sat_scenario("");
        let vm = fsa_visibility(&s, 0);
        let mut buf = Vec::new();
        vm.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let n = s.nodes.len();
        assert_eq!(text.lines().count(), 1 + n * (n - 1) / 2);
        assert_eq!(text.lines().next().unwrap(), "fsa,node_a,node_b,visible");
    }
}
