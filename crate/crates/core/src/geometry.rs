//! Planar geometry, angle arithmetic and point-mass kinematics.
//!
//! Coordinates are `(n, e)` pairs in meters, north first. Headings and
//! bearings are measured clockwise from north, so a heading `psi` moves a
//! vehicle along `(cos psi, sin psi)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

const TWO_PI: f64 = 2.0 * PI;

/// Relative speeds below this are treated as parallel motion in [`cpa`].
pub const CPA_EPS: f64 = 1e-9;

/// A north/east vector in meters (or meters per second for velocities).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub n: f64,
    pub e: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { n: 0.0, e: 0.0 };

    pub const fn new(n: f64, e: f64) -> Self {
        Self { n, e }
    }

    /// Unit vector pointing along a compass heading.
    pub fn from_heading(heading: f64) -> Self {
        let (s, c) = heading.sin_cos();
        Self { n: c, e: s }
    }

    /// Velocity vector for a vehicle with the given heading and speed.
    pub fn velocity(heading: f64, speed: f64) -> Self {
        Self::from_heading(heading).scale(speed)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.n * other.n + self.e * other.e
    }

    pub fn norm(self) -> f64 {
        self.n.hypot(self.e)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn scale(self, k: f64) -> Self {
        Self { n: self.n * k, e: self.e * k }
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (other - self).norm()
    }

    /// Compass bearing of this vector, clockwise from north, in `[-pi, pi)`.
    pub fn bearing(self) -> f64 {
        let b = self.e.atan2(self.n);
        if b >= PI {
            b - TWO_PI
        } else {
            b
        }
    }

    /// Rotate clockwise (in compass terms) by `angle` radians.
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { n: c * self.n - s * self.e, e: s * self.n + c * self.e }
    }

    pub fn is_finite(self) -> bool {
        self.n.is_finite() && self.e.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2 { n: self.n + rhs.n, e: self.e + rhs.e }
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2 { n: self.n - rhs.n, e: self.e - rhs.e }
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2 { n: -self.n, e: -self.e }
    }
}

pub type VehicleId = u32;

/// Landing clearance of a vehicle: `+1` cleared to enter the vertiport, `-1` hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntrySignal {
    Enter,
    Hold,
}

impl EntrySignal {
    pub fn value(self) -> f64 {
        match self {
            EntrySignal::Enter => 1.0,
            EntrySignal::Hold => -1.0,
        }
    }

    pub fn is_enter(self) -> bool {
        self == EntrySignal::Enter
    }
}

/// Kinematic state of one aircraft.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub position: Vec2,
    /// Radians in `[-pi, pi)`, clockwise from north.
    pub heading: f64,
    /// Meters per second, constant over the vehicle's lifetime.
    pub speed: f64,
    pub entry_signal: EntrySignal,
    pub spawn_time: f64,
    pub signal_time: Option<f64>,
}

impl VehicleState {
    pub fn new(id: VehicleId, position: Vec2, heading: f64, speed: f64, spawn_time: f64) -> Self {
        Self {
            id,
            position,
            heading,
            speed,
            entry_signal: EntrySignal::Hold,
            spawn_time,
            signal_time: None,
        }
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::velocity(self.heading, self.speed)
    }

    /// Grants the entry signal. A vehicle is signaled at most once per visit.
    pub fn grant_signal(&mut self, time: f64) {
        if self.signal_time.is_none() {
            self.entry_signal = EntrySignal::Enter;
            self.signal_time = Some(time);
        }
    }
}

/// Static airspace geometry and simulation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AirspaceConfig {
    /// Radius of the VTOL zone around the vertiport midpoint (m).
    pub vtol_radius: f64,
    /// Approach threshold where traffic enters (m).
    pub outer_radius: f64,
    /// Distance from the midpoint at which the space penalty applies (m).
    pub boundary_penalty_radius: f64,
    /// Training vehicles farther than this are respawned (m).
    pub reinit_radius: f64,
    /// Accident separation (m).
    pub d_acc: f64,
    /// Incident separation (m).
    pub d_inc: f64,
    /// Vertiport blocking time per landing (s).
    pub t_land: f64,
    /// Simulation step (s).
    pub dt: f64,
    /// Maximum heading change per step (degrees).
    pub heading_increment_deg: f64,
    /// Compass bearings of the N/E/S/W gates (degrees).
    pub gate_bearings_deg: [f64; 4],
}

impl Default for AirspaceConfig {
    fn default() -> Self {
        Self {
            vtol_radius: 200.0,
            outer_radius: 800.0,
            boundary_penalty_radius: 1000.0,
            reinit_radius: 1200.0,
            d_acc: 10.0,
            d_inc: 100.0,
            t_land: 60.0,
            dt: 1.0,
            heading_increment_deg: 5.0,
            gate_bearings_deg: [0.0, 90.0, 180.0, 270.0],
        }
    }
}

impl AirspaceConfig {
    pub fn heading_increment(&self) -> f64 {
        self.heading_increment_deg.to_radians()
    }

    pub fn vertiport(&self) -> Vec2 {
        Vec2::ZERO
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let radii_ok = 0.0 < self.vtol_radius
            && self.vtol_radius < self.outer_radius
            && self.outer_radius < self.boundary_penalty_radius
            && self.boundary_penalty_radius < self.reinit_radius;
        if !radii_ok {
            return Err(GeometryError::InvalidConfig(
                "radii must satisfy 0 < vtol < outer < boundary_penalty < reinit".into(),
            ));
        }
        if !(0.0 < self.d_acc && self.d_acc < self.d_inc) {
            return Err(GeometryError::InvalidConfig("need 0 < d_acc < d_inc".into()));
        }
        if !(self.dt > 0.0 && self.t_land >= 0.0 && self.heading_increment_deg > 0.0) {
            return Err(GeometryError::InvalidConfig(
                "dt and heading increment must be positive, t_land non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Maps any finite angle into `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> Result<f64, GeometryError> {
    if !theta.is_finite() {
        return Err(GeometryError::NonFiniteAngle(theta));
    }
    let mut r = theta - TWO_PI * ((theta + PI) / TWO_PI).floor();
    // rounding can land exactly on either end of the interval
    if r >= PI {
        r -= TWO_PI;
    } else if r < -PI {
        r += TWO_PI;
    }
    Ok(r)
}

/// Wraps an angle known to be finite.
pub(crate) fn wrap(theta: f64) -> f64 {
    wrap_angle(theta).expect("finite angle")
}

/// Bearing of `target_pos` seen from a vehicle at `own_pos` flying `own_heading`.
pub fn relative_bearing(own_pos: Vec2, own_heading: f64, target_pos: Vec2) -> Result<f64, GeometryError> {
    let delta = target_pos - own_pos;
    if delta.n == 0.0 && delta.e == 0.0 {
        return Err(GeometryError::CoincidentPositions);
    }
    wrap_angle(delta.bearing() - own_heading)
}

/// Closest point of approach under straight-line extrapolation.
///
/// Returns `(d_cpa, t_cpa)`. The time is clamped at zero, so diverging pairs
/// report their current separation.
pub fn cpa(own_pos: Vec2, own_vel: Vec2, target_pos: Vec2, target_vel: Vec2) -> (f64, f64) {
    let p = target_pos - own_pos;
    let v = target_vel - own_vel;
    let vv = v.norm_sq();
    let t = if vv.sqrt() > CPA_EPS { (-p.dot(v) / vv).max(0.0) } else { 0.0 };
    ((p + v.scale(t)).norm(), t)
}

/// Applies a normalized heading command and flies one step at constant speed.
pub fn advance_state(state: &VehicleState, action: f64, cfg: &AirspaceConfig) -> VehicleState {
    debug_assert!(action.abs() <= 1.0 + 1e-12, "action {action} outside [-1, 1]");
    let action = action.clamp(-1.0, 1.0);
    let heading = wrap(state.heading + action * cfg.heading_increment());
    let position = state.position + Vec2::velocity(heading, state.speed * cfg.dt);
    VehicleState { heading, position, ..state.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_cpa(p: Vec2, v: Vec2) -> (f64, f64) {
        let mut best = (p.norm(), 0.0);
        for k in 0..=50_000 {
            let t = k as f64 * 0.01;
            let d = (p + v.scale(t)).norm();
            if d < best.0 {
                best = (d, t);
            }
        }
        best
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert!((wrap_angle(PI).unwrap() + PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI).unwrap() + PI).abs() < 1e-12);
        assert_eq!(wrap_angle(-PI / 2.0).unwrap(), -PI / 2.0);
        assert_eq!(wrap_angle(-PI).unwrap(), -PI);
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(matches!(wrap_angle(f64::NAN), Err(GeometryError::NonFiniteAngle(_))));
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn wrap_edge_of_interval() {
        // values just below -pi must not round up to +pi
        for theta in [-PI - 1e-17, -PI - 1e-15, PI - 1e-16, -3.0 * PI + 1e-16] {
            let r = wrap_angle(theta).unwrap();
            assert!((-PI..PI).contains(&r), "{theta} -> {r}");
        }
    }

    #[test]
    fn bearing_examples() {
        let b = relative_bearing(Vec2::ZERO, 0.0, Vec2::new(100.0, 0.0)).unwrap();
        assert_eq!(b, 0.0);
        let b = relative_bearing(Vec2::ZERO, 0.0, Vec2::new(0.0, 100.0)).unwrap();
        assert!((b - PI / 2.0).abs() < 1e-12);
        let b = relative_bearing(Vec2::ZERO, PI / 2.0, Vec2::new(100.0, 0.0)).unwrap();
        assert!((b + PI / 2.0).abs() < 1e-12);
        assert_eq!(
            relative_bearing(Vec2::new(3.0, 4.0), 0.0, Vec2::new(3.0, 4.0)),
            Err(GeometryError::CoincidentPositions)
        );
    }

    #[test]
    fn cpa_examples() {
        let (d, t) = cpa(Vec2::ZERO, Vec2::new(10.0, 0.0), Vec2::new(1000.0, 0.0), Vec2::new(-10.0, 0.0));
        let (bd, bt) = brute_force_cpa(Vec2::new(1000.0, 0.0), Vec2::new(-20.0, 0.0));
        assert!(d.abs() < 1e-9 && (t - 50.0).abs() < 1e-9);
        assert!((d - bd).abs() < 0.5 && (t - bt).abs() < 0.5);

        let v = Vec2::new(3.0, 4.0);
        assert_eq!(cpa(Vec2::ZERO, v, Vec2::new(0.0, 100.0), v), (100.0, 0.0));
        let v = Vec2::new(10.0, 0.0);
        assert_eq!(cpa(Vec2::ZERO, v, Vec2::new(-100.0, 0.0), v), (100.0, 0.0));
    }

    #[test]
    fn cpa_diverging_reports_current_distance() {
        let (d, t) = cpa(Vec2::ZERO, Vec2::new(-10.0, 0.0), Vec2::new(100.0, 0.0), Vec2::new(10.0, 0.0));
        assert_eq!((d, t), (100.0, 0.0));
    }

    #[test]
    fn advance_examples() {
        let cfg = AirspaceConfig::default();
        let s = VehicleState::new(1, Vec2::ZERO, 0.0, 13.0, 0.0);
        let s1 = advance_state(&s, 1.0, &cfg);
        assert!((s1.heading - 5f64.to_radians()).abs() < 1e-15);
        let s0 = advance_state(&s, 0.0, &cfg);
        assert_eq!(s0.position, Vec2::new(13.0, 0.0));
        let s = VehicleState { heading: PI - 0.01, ..s };
        let s2 = advance_state(&s, 1.0, &cfg);
        assert!((-PI..PI).contains(&s2.heading));
        assert!((s2.heading - (PI - 0.01 + 5f64.to_radians() - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(AirspaceConfig::default().validate().is_ok());
        let bad = AirspaceConfig { vtol_radius: 900.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = AirspaceConfig { d_acc: 200.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rotation_matches_bearing_shift() {
        let p = Vec2::new(300.0, -120.0);
        let r = p.rotate(0.7);
        assert!((wrap(r.bearing() - p.bearing() - 0.7)).abs() < 1e-12);
        assert!((r.norm() - p.norm()).abs() < 1e-9);
    }
}
