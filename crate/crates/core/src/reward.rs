//! Per-vehicle reward: collision risk, vertiport guidance, airspace
//! containment and control comfort, combined with fixed weights.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Incident distance where the flat collision penalty starts (m).
    pub d_inc: f64,
    pub collision_flat: f64,
    /// Peak of the Gaussian collision term.
    pub c1: f64,
    /// Width of the Gaussian collision term (m).
    pub c2: f64,
    /// Progress scale for the goal term (m).
    pub c4: f64,
    /// VTOL zone radius for the false-entrance penalty (m).
    pub c5: f64,
    pub false_entrance_penalty: f64,
    pub space_radius: f64,
    pub space_penalty: f64,
    pub w_coll: f64,
    pub w_goal: f64,
    pub w_space: f64,
    pub w_comf: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            d_inc: 100.0,
            collision_flat: -10.0,
            c1: -5.0,
            c2: 160.5,
            c4: 10.0,
            c5: 200.0,
            false_entrance_penalty: -5.0,
            space_radius: 1000.0,
            space_penalty: -5.0,
            w_coll: 3.0 / 7.0,
            w_goal: 3.0 / 7.0,
            w_space: 2.0 / 7.0,
            w_comf: 2.0 / 7.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_coll: f64,
    pub r_goal: f64,
    pub r_space: f64,
    pub r_comf: f64,
    pub total: f64,
}

/// Gaussian tail of the collision term, valid for distances above `d_inc`.
pub fn collision_tail(d_min: f64, cfg: &RewardConfig) -> f64 {
    let x = (d_min - cfg.d_inc) / cfg.c2;
    cfg.c1 * (-x * x).exp()
}

/// Collision term from the distance to the nearest other vehicle; `None`
/// when the vehicle is alone.
pub fn collision_reward(d_min: Option<f64>, cfg: &RewardConfig) -> f64 {
    match d_min {
        None => 0.0,
        Some(d) if d <= cfg.d_inc => cfg.collision_flat,
        Some(d) => collision_tail(d, cfg),
    }
}

pub fn goal_reward(sigma: f64, d_prev: f64, d_now: f64, cfg: &RewardConfig) -> f64 {
    if sigma > 0.0 {
        (d_prev - d_now) / cfg.c4
    } else if d_now <= cfg.c5 {
        cfg.false_entrance_penalty
    } else {
        0.0
    }
}

pub fn space_reward(d_vertiport: f64, cfg: &RewardConfig) -> f64 {
    if d_vertiport >= cfg.space_radius {
        cfg.space_penalty
    } else {
        0.0
    }
}

pub fn comfort_reward(action: f64) -> f64 {
    -action.powi(4)
}

pub fn total_reward(r_coll: f64, r_goal: f64, r_space: f64, r_comf: f64, cfg: &RewardConfig) -> RewardBreakdown {
    RewardBreakdown {
        r_coll,
        r_goal,
        r_space,
        r_comf,
        total: cfg.w_coll * r_coll + cfg.w_goal * r_goal + cfg.w_space * r_space + cfg.w_comf * r_comf,
    }
}

/// Inputs for one vehicle's reward after a transition.
#[derive(Debug, Clone, Copy)]
pub struct RewardInputs {
    pub d_min: Option<f64>,
    pub sigma: f64,
    pub d_prev: f64,
    pub d_now: f64,
    pub action: f64,
}

pub fn compute_reward(inputs: &RewardInputs, cfg: &RewardConfig) -> RewardBreakdown {
    total_reward(
        collision_reward(inputs.d_min, cfg),
        goal_reward(inputs.sigma, inputs.d_prev, inputs.d_now, cfg),
        space_reward(inputs.d_now, cfg),
        comfort_reward(inputs.action),
        cfg,
    )
}
