//! Scenario description: nodes, time hierarchy, user requirements and ILP
//! parameters, plus the JSON scenario file that declares them.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ephemeris::{
    self, geosynchronous_radius, EciState, KeplerElements, LibrationPoint, MoonModel,
    DEFAULT_DRO_RADIUS_KM, EARTH_RADIUS_KM,
};
use crate::error::{CpdError, Result};
use crate::time::TimeGrid;

/// Dense node index, assigned in declaration order.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    GnssMeo,
    GnssGeo,
    GnssIgso,
    GroundStation,
    User,
}

impl NodeKind {
    pub fn is_gnss(self) -> bool {
        matches!(self, NodeKind::GnssMeo | NodeKind::GnssGeo | NodeKind::GnssIgso)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Motion {
    Kepler(KeplerElements),
    Geodetic { lat_deg: f64, lon_deg: f64, alt_km: f64 },
    Libration(LibrationPoint),
    Dro { radius_km: f64 },
    /// Logical user: visibility is the union over the listed member nodes.
    Aggregate(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub motion: Motion,
    pub terminal_count: u32,
    /// Half-angle of the ISL pointing cone; `None` means unrestricted.
    pub pointing_half_angle_deg: Option<f64>,
    /// Set for member nodes of a logical user.
    pub member_of: Option<NodeId>,
}

/// `(U_n, [a, b, c, d])`: every `a` FSA states the user wants `c` links of
/// `b` consecutive slots, with at most `d` simultaneous terminals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRequirement {
    pub user_id: NodeId,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub logical: bool,
    pub member_ids: Vec<NodeId>,
}

impl UserRequirement {
    pub fn new(user_id: NodeId, [a, b, c, d]: [u32; 4]) -> Self {
        UserRequirement {
            user_id,
            a,
            b,
            c,
            d,
            logical: false,
            member_ids: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequirementViolation {
    pub user_id: NodeId,
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for RequirementViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "user {}: {} ({})", self.user_id, self.field, self.message)
    }
}

/// Checks every requirement against its bounds; returns the violations found.
pub fn validate_requirements(reqs: &[UserRequirement], grid: &TimeGrid) -> Vec<RequirementViolation> {
    let k = grid.slots_per_superframe();
    let mut out = Vec::new();
    let mut push = |r: &UserRequirement, field, message: String| {
        out.push(RequirementViolation {
            user_id: r.user_id,
            field,
            message,
        })
    };
    for r in reqs {
        if r.a < 1 {
            push(r, "a", "a >= 1 violated".into());
        }
        if r.b < 1 || r.b > k {
            push(r, "b", format!("1 <= b <= K={k} violated (b={})", r.b));
        }
        if r.c < 1 {
            push(r, "c", "c >= 1 violated".into());
        }
        if r.d < 1 {
            push(r, "d", "d >= 1 violated".into());
        }
        if r.logical == r.member_ids.is_empty() {
            push(r, "member_ids", "member list must be non-empty iff the user is logical".into());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Leave ties among optimal plans to the backend.
    None,
    /// Among optimal plans prefer more established links (idle terminals filled).
    Links,
    /// Among optimal plans prefer more distinct ranging partners.
    Ranging,
}

/// What to do when a satellite sees fewer GNSS partners than `l_min`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangingFloor {
    /// Keep `l_min`; the superframe is infeasible.
    #[default]
    Strict,
    /// Lower that satellite's floor to its visible partner count.
    ClampToVisible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IlpParams {
    #[serde(default = "defaults::l_min")]
    pub l_min: u32,
    #[serde(default = "defaults::t_m")]
    pub t_m: u32,
    /// Penalty weight `C` on unmet user runs.
    #[serde(default = "defaults::penalty", rename = "c")]
    pub penalty: f64,
    #[serde(default = "defaults::m_big")]
    pub m_big: u32,
    #[serde(default = "defaults::time_limit")]
    pub time_limit_s: f64,
    #[serde(default)]
    pub gap_tolerance: f64,
    #[serde(default)]
    pub seed: u32,
    #[serde(default = "defaults::tie_break")]
    pub tie_break: TieBreak,
    #[serde(default)]
    pub ranging_floor: RangingFloor,
}

impl Default for IlpParams {
    fn default() -> Self {
        IlpParams {
            l_min: defaults::l_min(),
            t_m: defaults::t_m(),
            penalty: defaults::penalty(),
            m_big: defaults::m_big(),
            time_limit_s: defaults::time_limit(),
            gap_tolerance: 0.0,
            seed: 0,
            tie_break: defaults::tie_break(),
            ranging_floor: RangingFloor::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointingAxis {
    Nadir,
    Zenith,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilityConfig {
    #[serde(default = "defaults::sample_epochs")]
    pub sample_epochs: u32,
    #[serde(default)]
    pub occultation_margin_km: f64,
    #[serde(default = "defaults::axis")]
    pub pointing_axis: PointingAxis,
    #[serde(default = "defaults::gs_cone")]
    pub gs_pointing_half_angle_deg: f64,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        VisibilityConfig {
            sample_epochs: defaults::sample_epochs(),
            occultation_margin_km: 0.0,
            pointing_axis: defaults::axis(),
            gs_pointing_half_angle_deg: defaults::gs_cone(),
        }
    }
}

mod defaults {
    use super::*;
    pub fn l_min() -> u32 {
        11
    }
    pub fn t_m() -> u32 {
        3
    }
    pub fn penalty() -> f64 {
        1000.0
    }
    pub fn m_big() -> u32 {
        30
    }
    pub fn time_limit() -> f64 {
        600.0
    }
    pub fn tie_break() -> TieBreak {
        TieBreak::Ranging
    }
    pub fn sample_epochs() -> u32 {
        3
    }
    pub fn axis() -> PointingAxis {
        PointingAxis::Nadir
    }
    pub fn gs_cone() -> f64 {
        85.0
    }
    pub fn meo_cone() -> f64 {
        60.0
    }
    pub fn geo_cone() -> f64 {
        45.0
    }
    pub fn epoch() -> String {
        "2000-01-01T12:00:00Z".into()
    }
    pub fn igso_count() -> u32 {
        3
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    #[serde(default = "defaults::epoch")]
    pub epoch: String,
    pub time: TimeSection,
    #[serde(default)]
    pub constellation: ConstellationSection,
    #[serde(default)]
    pub ground_stations: Vec<GroundStationSpec>,
    #[serde(default)]
    pub users: Vec<UserSpec>,
    #[serde(default)]
    pub ilp: IlpParams,
    #[serde(default)]
    pub visibility: VisibilityConfig,
    #[serde(default)]
    pub moon: MoonModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub fsa_length_s: f64,
    pub superframe_length_s: f64,
    pub slot_length_s: f64,
    pub horizon_fsa_count: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walker: Option<WalkerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub igso: Option<IgsoSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkerSpec {
    pub total: u32,
    pub planes: u32,
    pub phasing: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    #[serde(default = "defaults::meo_cone")]
    pub pointing_half_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoSpec {
    pub longitudes_deg: Vec<f64>,
    #[serde(default = "defaults::geo_cone")]
    pub pointing_half_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IgsoSpec {
    #[serde(default = "defaults::igso_count")]
    pub count: u32,
    pub inclination_deg: f64,
    /// Spacing of the ascending nodes (also the phase step between satellites).
    pub spacing_deg: f64,
    /// Longitude at which every satellite crosses the equator northbound.
    pub crossing_longitude_deg: f64,
    #[serde(default = "defaults::geo_cone")]
    pub pointing_half_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStationSpec {
    pub name: String,
    pub lat_deg: f64,
    pub lon_deg: f64,
    #[serde(default)]
    pub alt_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserKind {
    Geo,
    Igso,
    LpL3,
    LpL4,
    LpL5,
    Dro,
    CustomEphemeris,
    /// Aggregated constellation; placement comes from `members`.
    Logical,
}

/// Placement of one user node (also used for logical-user members).
// no deny_unknown_fields: serde does not support it together with flatten
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSpec {
    pub name: String,
    pub kind: UserKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclination_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing_longitude_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<KeplerElements>,
}

impl PlacementSpec {
    pub fn of_kind(name: impl Into<String>, kind: UserKind) -> Self {
        PlacementSpec {
            name: name.into(),
            kind,
            longitude_deg: None,
            inclination_deg: None,
            crossing_longitude_deg: None,
            phase_deg: None,
            radius_km: None,
            elements: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    #[serde(flatten)]
    pub placement: PlacementSpec,
    /// `[a, b, c, d]`
    pub requirement: [u32; 4],
    #[serde(default)]
    pub logical: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<PlacementSpec>,
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub epoch: DateTime<Utc>,
    pub grid: TimeGrid,
    pub nodes: Vec<Node>,
    pub requirements: Vec<UserRequirement>,
    pub ilp: IlpParams,
    pub visibility: VisibilityConfig,
    pub moon: MoonModel,
    source: ScenarioFile,
}

fn igso_elements(inclination_deg: f64, crossing_longitude_deg: f64, phase_deg: f64) -> KeplerElements {
    // The node sits over `crossing_longitude` when the argument of latitude is 0.
    KeplerElements::circular(
        geosynchronous_radius(),
        inclination_deg,
        (crossing_longitude_deg + phase_deg).rem_euclid(360.0),
        (-phase_deg).rem_euclid(360.0),
    )
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CpdError::invalid(field, "must be finite"))
    }
}

fn placement_motion(p: &PlacementSpec, field: &str) -> Result<Motion> {
    let need = |v: Option<f64>, name: &str| -> Result<f64> {
        let f = format!("{field}.{name}");
        finite(&f, v.ok_or_else(|| CpdError::invalid(&f, "required for this user kind"))?)
    };
    Ok(match p.kind {
        UserKind::Geo => Motion::Kepler(KeplerElements::circular(
            geosynchronous_radius(),
            0.0,
            0.0,
            need(p.longitude_deg, "longitude_deg")?.rem_euclid(360.0),
        )),
        UserKind::Igso => Motion::Kepler(igso_elements(
            need(p.inclination_deg, "inclination_deg")?,
            need(p.crossing_longitude_deg, "crossing_longitude_deg")?,
            p.phase_deg.unwrap_or(0.0),
        )),
        UserKind::LpL3 => Motion::Libration(LibrationPoint::L3),
        UserKind::LpL4 => Motion::Libration(LibrationPoint::L4),
        UserKind::LpL5 => Motion::Libration(LibrationPoint::L5),
        UserKind::Dro => {
            let r = finite(&format!("{field}.radius_km"), p.radius_km.unwrap_or(DEFAULT_DRO_RADIUS_KM))?;
            if !(r > 0.0 && r < ephemeris::LUNAR_DISTANCE_KM) {
                return Err(CpdError::invalid(
                    format!("{field}.radius_km"),
                    "must lie strictly between 0 and the lunar distance",
                ));
            }
            Motion::Dro { radius_km: r }
        }
        UserKind::CustomEphemeris => {
            let el = p.elements.ok_or_else(|| {
                CpdError::invalid(format!("{field}.elements"), "required for custom-ephemeris users")
            })?;
            el.validate().map_err(|e| match e {
                CpdError::Invalid { field: f, message } => {
                    CpdError::invalid(format!("{field}.elements.{f}"), message)
                }
                other => other,
            })?;
            Motion::Kepler(el)
        }
        UserKind::Logical => {
            return Err(CpdError::invalid(
                format!("{field}.kind"),
                "`logical` is only valid on a user with `logical: true` and members",
            ))
        }
    })
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let grid = TimeGrid {
            fsa_length_s: file.time.fsa_length_s,
            superframe_length_s: file.time.superframe_length_s,
            slot_length_s: file.time.slot_length_s,
            horizon_fsa_count: file.time.horizon_fsa_count,
        };
        grid.validate()?;
        let epoch = DateTime::parse_from_rfc3339(&file.epoch)
            .map_err(|e| CpdError::invalid("epoch", e.to_string()))?
            .with_timezone(&Utc);

        let mut nodes: Vec<Node> = Vec::new();
        let push = |nodes: &mut Vec<Node>, name: String, kind, motion, terminals, cone, member_of| {
            let id = nodes.len();
            nodes.push(Node {
                id,
                name,
                kind,
                motion,
                terminal_count: terminals,
                pointing_half_angle_deg: cone,
                member_of,
            });
            id
        };
        let cone = |field: &str, v: f64| -> Result<Option<f64>> {
            if v > 0.0 && v <= 180.0 {
                Ok(Some(v))
            } else {
                Err(CpdError::invalid(field, "pointing half-angle must lie in (0, 180]"))
            }
        };

        if let Some(w) = &file.constellation.walker {
            finite("constellation.walker.altitude_km", w.altitude_km)?;
            finite("constellation.walker.inclination_deg", w.inclination_deg)?;
            if w.altitude_km <= 0.0 {
                return Err(CpdError::invalid("constellation.walker.altitude_km", "must be positive"));
            }
            let c = cone("constellation.walker.pointing_half_angle_deg", w.pointing_half_angle_deg)?;
            for (i, el) in ephemeris::walker_delta(w.total, w.planes, w.phasing, w.altitude_km, w.inclination_deg)?
                .into_iter()
                .enumerate()
            {
                push(&mut nodes, format!("MEO{:02}", i + 1), NodeKind::GnssMeo, Motion::Kepler(el), 1, c, None);
            }
        }
        if let Some(g) = &file.constellation.geo {
            let c = cone("constellation.geo.pointing_half_angle_deg", g.pointing_half_angle_deg)?;
            for (i, lon) in g.longitudes_deg.iter().enumerate() {
                let lon = finite("constellation.geo.longitudes_deg", *lon)?;
                let el = KeplerElements::circular(geosynchronous_radius(), 0.0, 0.0, lon.rem_euclid(360.0));
                push(&mut nodes, format!("GEO{}", i + 1), NodeKind::GnssGeo, Motion::Kepler(el), 1, c, None);
            }
        }
        if let Some(g) = &file.constellation.igso {
            let c = cone("constellation.igso.pointing_half_angle_deg", g.pointing_half_angle_deg)?;
            finite("constellation.igso.spacing_deg", g.spacing_deg)?;
            finite("constellation.igso.inclination_deg", g.inclination_deg)?;
            finite("constellation.igso.crossing_longitude_deg", g.crossing_longitude_deg)?;
            for i in 0..g.count {
                let el = igso_elements(g.inclination_deg, g.crossing_longitude_deg, g.spacing_deg * i as f64);
                push(&mut nodes, format!("IGSO{}", i + 1), NodeKind::GnssIgso, Motion::Kepler(el), 1, c, None);
            }
        }
        for (i, gs) in file.ground_stations.iter().enumerate() {
            let field = format!("ground_stations[{i}]");
            if !(gs.lat_deg.abs() <= 90.0) {
                return Err(CpdError::invalid(format!("{field}.lat_deg"), "|lat| <= 90 violated"));
            }
            finite(&format!("{field}.lon_deg"), gs.lon_deg)?;
            finite(&format!("{field}.alt_km"), gs.alt_km)?;
            let gs_cone = cone("visibility.gs_pointing_half_angle_deg", file.visibility.gs_pointing_half_angle_deg)?;
            push(
                &mut nodes,
                gs.name.clone(),
                NodeKind::GroundStation,
                Motion::Geodetic {
                    lat_deg: gs.lat_deg,
                    lon_deg: gs.lon_deg,
                    alt_km: gs.alt_km,
                },
                1,
                gs_cone,
                None,
            );
        }

        let mut requirements = Vec::new();
        for (i, u) in file.users.iter().enumerate() {
            let field = format!("users[{i}]");
            let [a, b, c, d] = u.requirement;
            let logical = u.logical || u.placement.kind == UserKind::Logical;
            if logical {
                if u.placement.kind != UserKind::Logical {
                    return Err(CpdError::invalid(format!("{field}.kind"), "logical users must use kind `logical`"));
                }
                if u.members.is_empty() {
                    return Err(CpdError::invalid(format!("{field}.members"), "logical user needs at least one member"));
                }
                let id = push(&mut nodes, u.placement.name.clone(), NodeKind::User, Motion::Aggregate(vec![]), d, None, None);
                let mut members = Vec::new();
                for (j, m) in u.members.iter().enumerate() {
                    let motion = placement_motion(m, &format!("{field}.members[{j}]"))?;
                    members.push(push(&mut nodes, m.name.clone(), NodeKind::User, motion, 1, None, Some(id)));
                }
                nodes[id].motion = Motion::Aggregate(members.clone());
                requirements.push(UserRequirement {
                    user_id: id,
                    a,
                    b,
                    c,
                    d,
                    logical: true,
                    member_ids: members,
                });
            } else {
                if !u.members.is_empty() {
                    return Err(CpdError::invalid(format!("{field}.members"), "only logical users carry members"));
                }
                let motion = placement_motion(&u.placement, &field)?;
                let id = push(&mut nodes, u.placement.name.clone(), NodeKind::User, motion, d, None, None);
                requirements.push(UserRequirement::new(id, [a, b, c, d]));
            }
        }
        if let Some(v) = validate_requirements(&requirements, &grid).first() {
            let idx = requirements.iter().position(|r| r.user_id == v.user_id).unwrap_or(0);
            return Err(CpdError::invalid(format!("users[{idx}].requirement.{}", v.field), v.message.clone()));
        }

        let ilp = file.ilp.clone();
        if ilp.m_big <= grid.slots_per_superframe() {
            return Err(CpdError::invalid(
                "ilp.m_big",
                format!("M_big = {} must exceed K = {}", ilp.m_big, grid.slots_per_superframe()),
            ));
        }
        if ilp.t_m < 1 {
            return Err(CpdError::invalid("ilp.t_m", "T_m >= 1 violated"));
        }
        if !(ilp.penalty.is_finite() && ilp.penalty >= 0.0) {
            return Err(CpdError::invalid("ilp.c", "penalty must be finite and non-negative"));
        }
        if !(ilp.time_limit_s > 0.0) {
            return Err(CpdError::invalid("ilp.time_limit_s", "must be positive"));
        }
        if !(0.0..1.0).contains(&ilp.gap_tolerance) {
            return Err(CpdError::invalid("ilp.gap_tolerance", "must lie in [0, 1)"));
        }
        let vis = &file.visibility;
        if vis.sample_epochs < 1 {
            return Err(CpdError::invalid("visibility.sample_epochs", "at least one sample epoch"));
        }
        finite("visibility.occultation_margin_km", vis.occultation_margin_km)?;
        let moon = file.moon;
        if !(moon.distance_km > EARTH_RADIUS_KM && moon.period_s > 0.0 && moon.inclination_deg.is_finite() && moon.phase_deg.is_finite()) {
            return Err(CpdError::invalid("moon", "distance must exceed the Earth radius and period be positive"));
        }

        Ok(Scenario {
            name: file.name.clone(),
            epoch,
            grid,
            nodes,
            requirements,
            ilp,
            visibility: vis.clone(),
            moon,
            source: file,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| CpdError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Scenario::from_file(file)
    }

    pub fn source(&self) -> &ScenarioFile {
        &self.source
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.source).expect("scenario file serializes")
    }

    /// Rebuilds this scenario with a replaced user list.
    pub fn with_users(&self, users: Vec<UserSpec>) -> Result<Self> {
        let mut file = self.source.clone();
        file.users = users;
        Scenario::from_file(file)
    }

    pub fn with_ilp(&self, ilp: IlpParams) -> Result<Self> {
        let mut file = self.source.clone();
        file.ilp = ilp;
        Scenario::from_file(file)
    }

    pub fn with_horizon(&self, fsa_count: u32) -> Result<Self> {
        let mut file = self.source.clone();
        file.time.horizon_fsa_count = fsa_count;
        Scenario::from_file(file)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn satellites(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.kind.is_gnss())
    }

    pub fn satellite_ids(&self) -> Vec<NodeId> {
        self.satellites().map(|n| n.id).collect()
    }

    pub fn ground_station_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::GroundStation).map(|n| n.id).collect()
    }

    pub fn requirement(&self, user: NodeId) -> Option<&UserRequirement> {
        self.requirements.iter().find(|r| r.user_id == user)
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.name == name).map(|n| n.id)
    }

    /// Inertial state of a node with its own ephemeris. Logical users have none.
    pub fn state(&self, id: NodeId, t: f64) -> Option<EciState> {
        let node = self.nodes.get(id)?;
        Some(match &node.motion {
            Motion::Kepler(el) => ephemeris::propagate(el, t),
            Motion::Geodetic { lat_deg, lon_deg, alt_km } => ephemeris::gs_position(*lat_deg, *lon_deg, *alt_km, t),
            Motion::Libration(p) => self.moon.libration_point(*p, t),
            Motion::Dro { radius_km } => self.moon.dro(*radius_km, t),
            Motion::Aggregate(_) => return None,
        })
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CpdError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::default()
    }

    #[test]
    fn requirement_examples() {
        assert!(validate_requirements(&[UserRequirement::new(0, [3, 2, 4, 1])], &grid()).is_empty());
        let v = validate_requirements(&[UserRequirement::new(0, [0, 2, 4, 1])], &grid());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "a");
        let v = validate_requirements(&[UserRequirement::new(0, [1, 2, 4, 0])], &grid());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "d");
        let v = validate_requirements(&[UserRequirement::new(0, [1, 25, 4, 1])], &grid());
        assert_eq!(v[0].field, "b");
        let v = validate_requirements(&[UserRequirement::new(0, [1, 2, 0, 1])], &grid());
        assert_eq!(v[0].field, "c");
        let mut logical = UserRequirement::new(0, [1, 2, 1, 1]);
        logical.logical = true;
        assert_eq!(validate_requirements(&[logical], &grid())[0].field, "member_ids");
    }

    const MINIMAL: &str = r#"{
        "time": {"fsa_length_s": 300, "superframe_length_s": 60, "slot_length_s": 3, "horizon_fsa_count": 4},
        "constellation": {"walker": {"total": 4, "planes": 2, "phasing": 0, "altitude_km": 21528, "inclination_deg": 55}},
        "ground_stations": [{"name": "Sanya", "lat_deg": 18.23, "lon_deg": 109.02}],
        "users": [
            {"name": "U1", "kind": "geo", "longitude_deg": 20, "requirement": [3, 2, 4, 1]},
            {"name": "Ul", "kind": "logical", "logical": true, "requirement": [1, 2, 1, 1],
             "members": [{"name": "L3", "kind": "lp-l3"}, {"name": "DRO", "kind": "dro"}]}
        ]
    }"#;

    #[test]
    fn minimal_scenario_ids_in_declaration_order() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.nodes.len(), 4 + 1 + 1 + 3);
        assert!(s.nodes.iter().enumerate().all(|(i, n)| n.id == i));
        assert_eq!(s.satellite_ids(), vec![0, 1, 2, 3]);
        assert!(s.satellites().all(|n| n.terminal_count == 1));
        let ul = s.find("Ul").unwrap();
        let req = s.requirement(ul).unwrap();
        assert!(req.logical);
        assert_eq!(req.member_ids, vec![ul + 1, ul + 2]);
        assert_eq!(s.nodes[ul + 2].member_of, Some(ul));
        assert!(s.state(ul, 0.0).is_none());
        assert_eq!(s.ilp, IlpParams::default());
    }

    #[test]
    fn round_trip_is_structural() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("\"slot_length_s\": 3", "\"slot_length_s\": 7");
        let e = Scenario::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("slot_length_s"), "{e}");

        let bad = MINIMAL.replace("[3, 2, 4, 1]", "[3, 25, 4, 1]");
        let e = Scenario::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("users[0].requirement.b"), "{e}");

        let bad = MINIMAL.replace("\"planes\": 2", "\"planes\": 3");
        assert!(matches!(Scenario::from_json(&bad), Err(CpdError::WalkerDivisibility { .. })));

        let bad = MINIMAL.replace("\"members\": [{\"name\": \"L3\", \"kind\": \"lp-l3\"}, {\"name\": \"DRO\", \"kind\": \"dro\"}]", "\"members\": []");
        let e = Scenario::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("members"), "{e}");

        let e = Scenario::from_json("{\n  \"time\": 5,\n}").unwrap_err();
        assert!(matches!(e, CpdError::Parse { line: 2, .. }), "{e:?}");

        let bad = MINIMAL.replace("\"horizon_fsa_count\": 4}", "\"horizon_fsa_count\": 4}, \"ilp\": {\"m_big\": 20}");
        let e = Scenario::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("m_big"), "{e}");

        let bad = MINIMAL.replace("\"longitude_deg\": 20,", "");
        let e = Scenario::from_json(&bad).unwrap_err();
        assert!(e.to_string().contains("users[0].longitude_deg"), "{e}");
    }
}
