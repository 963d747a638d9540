//! Position generators in a common Earth-centred inertial frame.
//!
//! Frame convention: at the epoch (`t = 0`) the prime meridian lies on +X
//! and the Earth rotates about +Z at the sidereal rate. GNSS satellites move
//! on two-body Kepler orbits; cislunar users follow circular Earth–Moon
//! geometry.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};

pub const MU_EARTH: f64 = 398_600.441_8; // km^3/s^2
pub const MU_MOON: f64 = 4_902.800_1; // km^3/s^2
pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_146_706_979e-5; // rad/s, sidereal
pub const LUNAR_DISTANCE_KM: f64 = 384_400.0;
pub const LUNAR_PERIOD_S: f64 = 27.32 * 86_400.0;
pub const LUNAR_PLANE_INCLINATION_DEG: f64 = 23.44;
pub const L3_DISTANCE_FACTOR: f64 = 1.00001;
pub const DEFAULT_DRO_RADIUS_KM: f64 = 70_000.0;

const KEPLER_TOLERANCE: f64 = 1e-10;

/// Radius at which a two-body orbit keeps pace with the Earth's rotation.
pub fn geosynchronous_radius() -> f64 {
    (MU_EARTH / (EARTH_ROTATION_RATE * EARTH_ROTATION_RATE)).cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EciState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerElements {
    pub semi_major_axis_km: f64,
    pub eccentricity: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub arg_perigee_deg: f64,
    pub mean_anomaly_deg: f64,
}

impl KeplerElements {
    pub fn circular(semi_major_axis_km: f64, inclination_deg: f64, raan_deg: f64, mean_anomaly_deg: f64) -> Self {
        KeplerElements {
            semi_major_axis_km,
            eccentricity: 0.0,
            inclination_deg,
            raan_deg,
            arg_perigee_deg: 0.0,
            mean_anomaly_deg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eccentricity) {
            return Err(CpdError::invalid("eccentricity", "must satisfy 0 <= e < 1"));
        }
        if !(self.semi_major_axis_km > EARTH_RADIUS_KM) {
            return Err(CpdError::invalid(
                "semi_major_axis_km",
                "must exceed the Earth radius",
            ));
        }
        let angles = [
            self.inclination_deg,
            self.raan_deg,
            self.arg_perigee_deg,
            self.mean_anomaly_deg,
        ];
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(CpdError::invalid("orbital elements", "angles must be finite"));
        }
        Ok(())
    }

    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.semi_major_axis_km.powi(3)).sqrt()
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.mean_motion()
    }
}

/// Walker-delta pattern `total/planes/phasing` on circular orbits.
pub fn walker_delta(
    total: u32,
    planes: u32,
    phasing: u32,
    altitude_km: f64,
    inclination_deg: f64,
) -> Result<Vec<KeplerElements>> {
    if total == 0 || planes == 0 || total % planes != 0 {
        return Err(CpdError::WalkerDivisibility { total, planes });
    }
    let per_plane = total / planes;
    let a = EARTH_RADIUS_KM + altitude_km;
    let mut out = Vec::with_capacity(total as usize);
    for p in 0..planes {
        let raan = 360.0 * p as f64 / planes as f64;
        for s in 0..per_plane {
            let m = 360.0 * s as f64 / per_plane as f64 + 360.0 * (phasing * p) as f64 / total as f64;
            out.push(KeplerElements::circular(a, inclination_deg, raan, m.rem_euclid(360.0)));
        }
    }
    Ok(out)
}

/// Solves `E - e sin E = M` by Newton iteration.
pub fn eccentric_anomaly(mean_anomaly: f64, e: f64) -> f64 {
    let m = mean_anomaly.rem_euclid(std::f64::consts::TAU);
    let mut ecc = if e < 0.8 { m } else { std::f64::consts::PI };
    for _ in 0..100 {
        let f = ecc - e * ecc.sin() - m;
        let step = f / (1.0 - e * ecc.cos());
        ecc -= step;
        if step.abs() < KEPLER_TOLERANCE {
            break;
        }
    }
    ecc
}

fn rot_z(v: Vector3<f64>, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

fn rot_x(v: Vector3<f64>, angle: f64) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    Vector3::new(v.x, c * v.y - s * v.z, s * v.y + c * v.z)
}

/// Perifocal -> inertial: Rz(raan) Rx(i) Rz(argp).
fn perifocal_to_eci(v: Vector3<f64>, el: &KeplerElements) -> Vector3<f64> {
    rot_z(
        rot_x(rot_z(v, el.arg_perigee_deg.to_radians()), el.inclination_deg.to_radians()),
        el.raan_deg.to_radians(),
    )
}

/// Two-body state at `t` seconds past the epoch.
pub fn propagate(el: &KeplerElements, t: f64) -> EciState {
    let a = el.semi_major_axis_km;
    let e = el.eccentricity;
    let n = el.mean_motion();
    let m = el.mean_anomaly_deg.to_radians() + n * t;
    let ecc = eccentric_anomaly(m, e);
    let (sin_e, cos_e) = ecc.sin_cos();
    let root = (1.0 - e * e).sqrt();
    let r = a * (1.0 - e * cos_e);
    let pos_pf = Vector3::new(a * (cos_e - e), a * root * sin_e, 0.0);
    let vfac = (MU_EARTH * a).sqrt() / r;
    let vel_pf = Vector3::new(-vfac * sin_e, vfac * root * cos_e, 0.0);
    EciState {
        position: perifocal_to_eci(pos_pf, el),
        velocity: perifocal_to_eci(vel_pf, el),
        time: t,
    }
}

pub fn earth_rotation_angle(t: f64) -> f64 {
    EARTH_ROTATION_RATE * t
}

/// Ground station on a spherical Earth.
pub fn gs_position(lat_deg: f64, lon_deg: f64, alt_km: f64, t: f64) -> EciState {
    let r = EARTH_RADIUS_KM + alt_km;
    let lat = lat_deg.to_radians();
    let lon = lon_deg.to_radians() + earth_rotation_angle(t);
    let position = Vector3::new(r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin());
    let omega = Vector3::new(0.0, 0.0, EARTH_ROTATION_RATE);
    EciState {
        position,
        velocity: omega.cross(&position),
        time: t,
    }
}

/// Sub-satellite longitude (degrees, in [-180, 180)) of an inertial position.
pub fn sub_satellite_longitude_deg(position: &Vector3<f64>, t: f64) -> f64 {
    let lon = position.y.atan2(position.x) - earth_rotation_angle(t);
    (lon.to_degrees() + 180.0).rem_euclid(360.0) - 180.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LibrationPoint {
    L3,
    L4,
    L5,
}

/// Circular lunar orbit in a plane tilted about +X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoonModel {
    pub distance_km: f64,
    pub period_s: f64,
    pub inclination_deg: f64,
    /// Argument of latitude of the Moon at the epoch.
    pub phase_deg: f64,
}

impl Default for MoonModel {
    fn default() -> Self {
        MoonModel {
            distance_km: LUNAR_DISTANCE_KM,
            period_s: LUNAR_PERIOD_S,
            inclination_deg: LUNAR_PLANE_INCLINATION_DEG,
            phase_deg: 0.0,
        }
    }
}

impl MoonModel {
    fn rate(&self) -> f64 {
        std::f64::consts::TAU / self.period_s
    }

    /// In-plane basis (p, q) and orbit normal.
    fn basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let i = self.inclination_deg.to_radians();
        let p = Vector3::new(1.0, 0.0, 0.0);
        let q = Vector3::new(0.0, i.cos(), i.sin());
        let h = Vector3::new(0.0, -i.sin(), i.cos());
        (p, q, h)
    }

    /// Orbit normal (unit angular momentum direction).
    pub fn normal(&self) -> Vector3<f64> {
        self.basis().2
    }

    /// State of a point on the lunar orbit circle at radius `radius`, offset by
    /// `angle_offset` radians along the direction of lunar motion.
    fn on_orbit(&self, radius: f64, angle_offset: f64, t: f64) -> EciState {
        let (p, q, _) = self.basis();
        let u = self.phase_deg.to_radians() + self.rate() * t + angle_offset;
        let (s, c) = u.sin_cos();
        let w = self.rate();
        EciState {
            position: radius * (c * p + s * q),
            velocity: radius * w * (-s * p + c * q),
            time: t,
        }
    }

    pub fn moon(&self, t: f64) -> EciState {
        self.on_orbit(self.distance_km, 0.0, t)
    }

    pub fn libration_point(&self, point: LibrationPoint, t: f64) -> EciState {
        use std::f64::consts::PI;
        match point {
            LibrationPoint::L4 => self.on_orbit(self.distance_km, PI / 3.0, t),
            LibrationPoint::L5 => self.on_orbit(self.distance_km, -PI / 3.0, t),
            LibrationPoint::L3 => self.on_orbit(L3_DISTANCE_FACTOR * self.distance_km, PI, t),
        }
    }

    /// Retrograde circle about the Moon, in the lunar orbital plane.
    pub fn dro(&self, radius_km: f64, t: f64) -> EciState {
        let moon = self.moon(t);
        let (p, q, _) = self.basis();
        let w = dro_rate(radius_km);
        // clockwise when viewed along the lunar orbit normal
        let (s, c) = (-w * t).sin_cos();
        let rel = radius_km * (c * p + s * q);
        let rel_v = radius_km * w * (s * p - c * q);
        EciState {
            position: moon.position + rel,
            velocity: moon.velocity + rel_v,
            time: t,
        }
    }
}

/// Angular rate of a two-body circular orbit of the given radius about the Moon.
pub fn dro_rate(radius_km: f64) -> f64 {
    (MU_MOON / radius_km.powi(3)).sqrt()
}

pub fn dro_period(radius_km: f64) -> f64 {
    std::f64::consts::TAU / dro_rate(radius_km)
}

pub fn lp_user_position(point: LibrationPoint, t: f64) -> EciState {
    MoonModel::default().libration_point(point, t)
}

pub fn dro_position(radius_km: f64, t: f64) -> Result<EciState> {
    if !(radius_km > 0.0 && radius_km < LUNAR_DISTANCE_KM) {
        return Err(CpdError::invalid(
            "dro.radius_km",
            "must lie strictly between 0 and the lunar distance",
        ));
    }
    Ok(MoonModel::default().dro(radius_km, t))
}
