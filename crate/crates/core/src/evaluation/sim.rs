use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::noise::{NoiseModel, NoisyPerception};
use crate::config::FreeflightConfig;
use crate::environment::{AirspaceWorld, EventCounters, Perception, WorldOptions};
use crate::error::Error;
use crate::geometry::{VehicleId, VehicleState};
use crate::neural::ActorNetwork;
use crate::schedule::ArrivalSchedule;
use crate::training::{observe_all, policy_actions, HistoryTracker};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub vehicle_id: VehicleId,
    pub n: f64,
    pub e: f64,
    pub heading: f64,
    pub speed: f64,
    pub sigma: f64,
}

impl TrajectoryPoint {
    fn of(time: f64, v: &VehicleState) -> Self {
        Self { time, vehicle_id: v.id, n: v.position.n, e: v.position.e, heading: v.heading, speed: v.speed, sigma: v.entry_signal.value() }
    }
}

/// Life cycle of one vehicle during a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleLog {
    pub spawn_time: f64,
    pub signal_time: Option<f64>,
    pub landing_time: Option<f64>,
    /// `(time, distance to the nearest other vehicle)` while not alone.
    pub min_distance: Vec<(f64, f64)>,
}

/// Everything recorded during one scheduled run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationLog {
    pub trajectory: Vec<TrajectoryPoint>,
    pub vehicles: BTreeMap<VehicleId, VehicleLog>,
    pub counters: EventCounters,
    pub duration: f64,
    pub timed_out: bool,
}

/// How a scheduled run is set up.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSetup {
    pub entrance_check: bool,
    pub noise: NoiseModel,
    /// Seed of the perception noise stream.
    pub noise_seed: u64,
    /// Stop after this many simulated seconds; `None` runs until every
    /// scheduled vehicle has landed.
    pub time_cap: Option<f64>,
}

impl RunSetup {
    pub fn plain(time_cap: Option<f64>) -> Self {
        Self { entrance_check: false, noise: NoiseModel::NONE, noise_seed: 0, time_cap }
    }
}

fn record_state(world: &AirspaceWorld, log: &mut SimulationLog) {
    let t = world.time();
    let vs = world.vehicles();
    for v in vs {
        log.trajectory.push(TrajectoryPoint::of(t, v));
        let entry = log.vehicles.entry(v.id).or_insert_with(|| VehicleLog { spawn_time: v.spawn_time, ..Default::default() });
        if entry.signal_time.is_none() {
            entry.signal_time = v.signal_time;
        }
        let nearest = vs.iter().filter(|o| o.id != v.id).map(|o| o.position.distance(v.position)).min_by(f64::total_cmp);
        if let Some(d) = nearest {
            entry.min_distance.push((t, d));
        }
    }
}

/// Replays `schedule` with every vehicle flying the deterministic policy.
pub fn simulate_schedule(actor: &ActorNetwork, config: &FreeflightConfig, schedule: &ArrivalSchedule, setup: &RunSetup) -> Result<SimulationLog, Error> {
    let perception: Box<dyn Perception> = Box::new(NoisyPerception::new(setup.noise, setup.noise_seed));
    let radius = setup.entrance_check.then_some(config.evaluation.entrance_check_radius);
    let mut world = AirspaceWorld::with_schedule(config.airspace.clone(), config.traffic.clone(), WorldOptions::evaluation(radius), schedule, perception);
    simulate_world(actor, config, &mut world, setup.time_cap, |_, _| None)
}

/// Runs `world` until it is empty with nothing pending, or until the time
/// cap. `script` may override the policy action of any vehicle.
pub fn simulate_world(
    actor: &ActorNetwork,
    config: &FreeflightConfig,
    world: &mut AirspaceWorld,
    time_cap: Option<f64>,
    mut script: impl FnMut(f64, VehicleId) -> Option<f64>,
) -> Result<SimulationLog, Error> {
    let mut log = SimulationLog::default();
    let mut tracker = HistoryTracker::new(config.network.lags());
    for (id, obs) in observe_all(world, &config.observation)? {
        tracker.push(id, Arc::new(obs));
    }
    record_state(world, &mut log);
    while !(world.vehicles().is_empty() && world.pending_arrivals() == 0) {
        if time_cap.is_some_and(|cap| world.time() >= cap) {
            log.timed_out = true;
            break;
        }
        let mut actions = policy_actions(actor, &tracker, world)?;
        let t = world.time();
        for (id, a) in actions.iter_mut() {
            if let Some(s) = script(t, *id) {
                *a = s;
            }
        }
        let events = world.step(&actions)?;
        for id in &events.landings {
            let entry = log.vehicles.get_mut(id).expect("landed vehicle was recorded");
            entry.landing_time = Some(world.time());
        }
        for (id, obs) in observe_all(world, &config.observation)? {
            tracker.push(id, Arc::new(obs));
        }
        let active: Vec<VehicleId> = world.vehicles().iter().map(|v| v.id).collect();
        tracker.retain(|id| active.contains(&id));
        record_state(world, &mut log);
    }
    log.counters = world.counters();
    log.duration = world.time();
    Ok(log)
}

/// Per-run summary. Time means are over landed vehicles and `None` when no
/// vehicle landed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub vehicles: usize,
    pub landed: usize,
    pub accidents: usize,
    pub incidents: usize,
    pub false_entrances: usize,
    pub airspace_time: Option<f64>,
    pub time_to_signal: Option<f64>,
    pub entrance_time: Option<f64>,
    /// Smallest distance each vehicle ever had to another vehicle.
    pub min_distance: BTreeMap<VehicleId, f64>,
    #[serde(skip)]
    pub min_pairwise_distance_series: BTreeMap<VehicleId, Vec<(f64, f64)>>,
    pub timed_out: bool,
}

/// Per-vehicle times `(time_to_signal, entrance_time, airspace_time)` with
/// the airspace time defined as the sum of the other two.
pub fn vehicle_times(spawn: f64, signal: f64, landing: f64) -> (f64, f64, f64) {
    let to_signal = signal - spawn;
    let entrance = landing - signal;
    (to_signal, entrance, to_signal + entrance)
}

pub fn compute_run_metrics(log: &SimulationLog) -> Result<RunMetrics, Error> {
    let mut m = RunMetrics {
        vehicles: log.vehicles.len(),
        accidents: log.counters.accidents,
        incidents: log.counters.incidents,
        false_entrances: log.counters.false_entrances,
        timed_out: log.timed_out,
        ..Default::default()
    };
    let (mut sig, mut ent, mut air) = (Vec::new(), Vec::new(), Vec::new());
    for (&id, v) in &log.vehicles {
        match (v.landing_time, v.signal_time) {
            (Some(land), Some(signal)) => {
                let (s, e, a) = vehicle_times(v.spawn_time, signal, land);
                sig.push(s);
                ent.push(e);
                air.push(a);
            }
            (Some(_), None) => return Err(Error::Contract(format!("vehicle {id} landed without an entry signal"))),
            (None, _) if !log.timed_out => return Err(Error::Contract(format!("vehicle {id} never landed in a completed run"))),
            (None, _) => {}
        }
        if let Some(d) = v.min_distance.iter().map(|p| p.1).min_by(f64::total_cmp) {
            m.min_distance.insert(id, d);
        }
        m.min_pairwise_distance_series.insert(id, v.min_distance.clone());
    }
    m.landed = air.len();
    m.time_to_signal = mean(&sig);
    m.entrance_time = mean(&ent);
    m.airspace_time = mean(&air);
    Ok(m)
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}
