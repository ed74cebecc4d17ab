//! Local observation of one vehicle: its own vertiport-relative state and a
//! variable-length list of surrounding vehicles.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geometry::{cpa, relative_bearing, wrap_angle, Vec2, VehicleId, VehicleState};

pub const OWN_DIM: usize = 3;
pub const TARGET_DIM: usize = 6;

/// Normalizing constants for observation features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationScales {
    /// Distance scale (m).
    pub d_scale: f64,
    /// Speed difference scale (m/s).
    pub v_scale: f64,
    /// CPA distance scale (m).
    pub cpa_d_scale: f64,
    /// CPA time scale (s).
    pub t_scale: f64,
}

impl Default for ObservationScales {
    fn default() -> Self {
        Self { d_scale: 1000.0, v_scale: 6.0, cpa_d_scale: 100.0, t_scale: 60.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OwnObservation {
    pub bearing_to_vertiport: f64,
    pub distance_to_vertiport: f64,
    pub sigma: f64,
}

impl OwnObservation {
    pub fn to_array(self) -> [f64; OWN_DIM] {
        [self.bearing_to_vertiport, self.distance_to_vertiport, self.sigma]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    pub distance: f64,
    pub bearing: f64,
    pub speed_delta: f64,
    pub heading_delta: f64,
    pub d_cpa: f64,
    pub t_cpa: f64,
}

impl TargetEntry {
    pub fn to_array(self) -> [f64; TARGET_DIM] {
        [self.distance, self.bearing, self.speed_delta, self.heading_delta, self.d_cpa, self.t_cpa]
    }

    pub fn from_array(a: [f64; TARGET_DIM]) -> Self {
        Self { distance: a[0], bearing: a[1], speed_delta: a[2], heading_delta: a[3], d_cpa: a[4], t_cpa: a[5] }
    }
}

/// Own features plus targets sorted by descending distance (nearest last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub own: OwnObservation,
    pub targets: Vec<TargetEntry>,
}

/// Builds the observation of `own` given everyone else's (perceived) state.
pub fn build_observation(own: &VehicleState, others: &[VehicleState], vertiport_midpoint: Vec2, scales: &ObservationScales) -> Result<Observation, GeometryError> {
    let own_obs = OwnObservation {
        bearing_to_vertiport: relative_bearing(own.position, own.heading, vertiport_midpoint)? / PI,
        distance_to_vertiport: own.position.distance(vertiport_midpoint) / scales.d_scale,
        sigma: own.entry_signal.value(),
    };

    let own_vel = own.velocity();
    let mut rows: Vec<(f64, VehicleId, TargetEntry)> = Vec::with_capacity(others.len());
    for other in others.iter().filter(|o| o.id != own.id) {
        let d = own.position.distance(other.position);
        let bearing = relative_bearing(own.position, own.heading, other.position)?;
        let heading_delta = wrap_angle(other.heading - own.heading)?;
        let (d_cpa, t_cpa) = cpa(own.position, own_vel, other.position, other.velocity());
        let entry = TargetEntry {
            distance: d / scales.d_scale,
            bearing: bearing / PI,
            speed_delta: (other.speed - own.speed) / scales.v_scale,
            heading_delta: heading_delta / PI,
            d_cpa: d_cpa / scales.cpa_d_scale,
            t_cpa: t_cpa / scales.t_scale,
        };
        rows.push((d, other.id, entry));
    }
    rows.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => a.1.cmp(&b.1),
        ord => ord,
    });
    Ok(Observation { own: own_obs, targets: rows.into_iter().map(|r| r.2).collect() })
}
