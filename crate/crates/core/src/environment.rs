//! The multi-agent airspace world.
//!
//! One [`AirspaceWorld::step`] performs, in order: kinematic advance of all
//! vehicles, the clock update, respawn of strays (training worlds only),
//! admission of due arrivals, landing and false-entrance detection,
//! conflict detection, and landing-priority assignment.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::EnvError;
use crate::geometry::{advance_state, wrap, AirspaceConfig, EntrySignal, Vec2, VehicleId, VehicleState};
use crate::schedule::{Arrival, ArrivalSchedule, Gate, TrafficConfig};

pub type PositionMap = BTreeMap<VehicleId, Vec2>;
pub type VehiclePair = (VehicleId, VehicleId);

/// Supplies the positions that vehicles *believe* each other to be at.
///
/// Decision inputs (observations and the landing-priority rule) use these;
/// dynamics, conflicts and landings always use ground truth.
pub trait Perception: Send {
    fn perceive(&mut self, vehicles: &[VehicleState]) -> PositionMap;
}

/// Perfect sensing.
#[derive(Debug, Default, Clone, Copy)]
pub struct GroundTruth;

impl Perception for GroundTruth {
    fn perceive(&mut self, vehicles: &[VehicleState]) -> PositionMap {
        vehicles.iter().map(|v| (v.id, v.position)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VertiportState {
    pub blocked_until: Option<f64>,
    pub occupant: Option<VehicleId>,
}

impl VertiportState {
    pub fn is_blocked(&self, time: f64) -> bool {
        self.blocked_until.is_some_and(|t| t > time)
    }
}

/// How entry signals are handed out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalControl {
    /// Nearest vehicle to the vertiport is cleared whenever it is free.
    PriorityRule,
    /// Signals are set by the caller (training episodes).
    Manual,
}

#[derive(Debug, Clone)]
pub struct WorldOptions {
    pub signal: SignalControl,
    /// Respawn vehicles that stray beyond `reinit_radius` (training).
    pub respawn_strays: bool,
    /// Entrance safety check radius around gates; `None` disables the check.
    pub entrance_check_radius: Option<f64>,
}

impl WorldOptions {
    pub fn training() -> Self {
        Self { signal: SignalControl::Manual, respawn_strays: true, entrance_check_radius: None }
    }

    pub fn evaluation(entrance_check_radius: Option<f64>) -> Self {
        Self { signal: SignalControl::PriorityRule, respawn_strays: false, entrance_check_radius }
    }
}

/// What happened during one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepEvents {
    /// Pairs currently closer than the accident distance.
    pub accidents: BTreeSet<VehiclePair>,
    /// Pairs currently closer than the incident distance.
    pub incidents: BTreeSet<VehiclePair>,
    /// Accident pairs whose violation started this step.
    pub new_accidents: BTreeSet<VehiclePair>,
    /// Incident pairs whose violation started this step.
    pub new_incidents: BTreeSet<VehiclePair>,
    pub false_entrances: BTreeSet<VehicleId>,
    pub landings: BTreeSet<VehicleId>,
    pub boundary_exits: BTreeSet<VehicleId>,
    pub admitted: Vec<VehicleId>,
    pub signaled: Option<VehicleId>,
}

/// Deduplicated event totals over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounters {
    pub accidents: usize,
    pub incidents: usize,
    pub false_entrances: usize,
    pub landings: usize,
    pub boundary_exits: usize,
}

/// Per-pair violation latch: a pair is counted once per continuous violation.
#[derive(Debug, Clone, Default)]
struct ConflictTracker {
    active_incidents: BTreeSet<VehiclePair>,
    active_accidents: BTreeSet<VehiclePair>,
}

impl ConflictTracker {
    fn update(&mut self, incidents: &BTreeSet<VehiclePair>, accidents: &BTreeSet<VehiclePair>) -> (BTreeSet<VehiclePair>, BTreeSet<VehiclePair>) {
        let new_inc = incidents.difference(&self.active_incidents).copied().collect();
        let new_acc = accidents.difference(&self.active_accidents).copied().collect();
        self.active_incidents = incidents.clone();
        self.active_accidents = accidents.clone();
        (new_inc, new_acc)
    }
}

/// Pairs within the incident and accident distances. Accidents are a subset
/// of incidents because `d_acc < d_inc`.
pub fn detect_conflicts(vehicles: &[VehicleState], cfg: &AirspaceConfig) -> (BTreeSet<VehiclePair>, BTreeSet<VehiclePair>) {
    let mut incidents = BTreeSet::new();
    let mut accidents = BTreeSet::new();
    for (i, a) in vehicles.iter().enumerate() {
        for b in &vehicles[i + 1..] {
            let d = a.position.distance(b.position);
            if d <= cfg.d_inc {
                let pair = (a.id.min(b.id), a.id.max(b.id));
                incidents.insert(pair);
                if d <= cfg.d_acc {
                    accidents.insert(pair);
                }
            }
        }
    }
    (incidents, accidents)
}

/// Vehicle on the approach threshold heading for the midpoint, offset by
/// `(-1)^B * U(min, max)` degrees, with a random speed.
pub fn spawn_training_vehicle<R: Rng + ?Sized>(rng: &mut R, cfg: &AirspaceConfig, traffic: &TrafficConfig, id: VehicleId, time: f64) -> VehicleState {
    let entrance = rng.random_range(0.0..360.0f64).to_radians();
    let sign = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
    let offset = sign * rng.random_range(traffic.train_heading_noise_min_deg..=traffic.train_heading_noise_max_deg).to_radians();
    let speed = rng.random_range(traffic.speed_min..=traffic.speed_max);
    let position = Vec2::from_heading(entrance).scale(cfg.outer_radius);
    let inbound = (cfg.vertiport() - position).bearing();
    VehicleState::new(id, position, wrap(inbound + offset), speed, time)
}

/// Position of a gate on the approach threshold.
pub fn gate_position(gate: Gate, cfg: &AirspaceConfig) -> Vec2 {
    Vec2::from_heading(cfg.gate_bearings_deg[gate.index()].to_radians()).scale(cfg.outer_radius)
}

/// Vehicle entering at `gate`, heading at the midpoint plus `heading_noise`.
pub fn spawn_gate_vehicle(gate: Gate, heading_noise: f64, speed: f64, cfg: &AirspaceConfig, id: VehicleId, time: f64) -> VehicleState {
    let position = gate_position(gate, cfg);
    let inbound = (cfg.vertiport() - position).bearing();
    VehicleState::new(id, position, wrap(inbound + heading_noise), speed, time)
}

/// Landing candidate under the nearest-first rule.
///
/// A vehicle that already holds the entry signal keeps it until it lands.
/// Otherwise the vehicle with the smallest perceived distance to the
/// vertiport is chosen (lowest id on ties). Nothing is selected while the
/// vertiport is blocked or the airspace is empty.
pub fn select_priority(vehicles: &[VehicleState], perceived: &PositionMap, vertiport: &VertiportState, midpoint: Vec2, time: f64) -> Option<VehicleId> {
    if vertiport.is_blocked(time) || vehicles.is_empty() {
        return None;
    }
    if let Some(holder) = vehicles.iter().find(|v| v.entry_signal.is_enter()) {
        return Some(holder.id);
    }
    vehicles
        .iter()
        .map(|v| {
            let p = perceived.get(&v.id).copied().unwrap_or(v.position);
            (p.distance(midpoint), v.id)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Gate to use for an arrival requested at `requested`, or `None` when every
/// gate has a vehicle within `radius`. Alternatives are tried in N-E-S-W
/// rotation starting after the requested gate.
pub fn entrance_safety_check(vehicles: &[VehicleState], requested: Gate, radius: f64, cfg: &AirspaceConfig) -> Option<Gate> {
    requested.rotation().find(|&g| {
        let p = gate_position(g, cfg);
        vehicles.iter().all(|v| v.position.distance(p) >= radius)
    })
}

pub struct AirspaceWorld {
    time: f64,
    vehicles: Vec<VehicleState>,
    vertiport: VertiportState,
    config: AirspaceConfig,
    traffic: TrafficConfig,
    options: WorldOptions,
    pending: VecDeque<Arrival>,
    next_id: VehicleId,
    conflicts: ConflictTracker,
    in_zone: BTreeSet<VehicleId>,
    outside: BTreeSet<VehicleId>,
    counters: EventCounters,
    perception: Box<dyn Perception>,
    perceived: PositionMap,
    /// Source for training respawns.
    rng: ChaCha8Rng,
}

impl AirspaceWorld {
    pub fn new(config: AirspaceConfig, traffic: TrafficConfig, options: WorldOptions) -> Self {
        Self {
            time: 0.0,
            vehicles: Vec::new(),
            vertiport: VertiportState::default(),
            config,
            traffic,
            options,
            pending: VecDeque::new(),
            next_id: 0,
            conflicts: ConflictTracker::default(),
            in_zone: BTreeSet::new(),
            outside: BTreeSet::new(),
            counters: EventCounters::default(),
            perception: Box::new(GroundTruth),
            perceived: PositionMap::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn with_perception(mut self, perception: Box<dyn Perception>) -> Self {
        self.perception = perception;
        self
    }

    /// Evaluation world that replays `schedule`; arrivals due at time zero are admitted immediately.
    pub fn with_schedule(config: AirspaceConfig, traffic: TrafficConfig, options: WorldOptions, schedule: &ArrivalSchedule, perception: Box<dyn Perception>) -> Self {
        let mut world = Self::new(config, traffic, options).with_perception(perception);
        world.pending = schedule.arrivals.iter().copied().collect();
        world.admit_due();
        world.refresh_perception();
        world.assign_priority();
        world
    }

    /// Training world with `count` vehicles spawned on the approach threshold.
    pub fn training<R: Rng + ?Sized>(config: AirspaceConfig, traffic: TrafficConfig, count: usize, rng: &mut R) -> Self {
        let mut world = Self::new(config, traffic, WorldOptions::training());
        world.rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
        for _ in 0..count {
            let id = world.take_id();
            let v = spawn_training_vehicle(rng, &world.config, &world.traffic, id, 0.0);
            world.vehicles.push(v);
        }
        world.refresh_perception();
        world
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleState> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn config(&self) -> &AirspaceConfig {
        &self.config
    }

    pub fn vertiport(&self) -> &VertiportState {
        &self.vertiport
    }

    pub fn counters(&self) -> EventCounters {
        self.counters
    }

    pub fn pending_arrivals(&self) -> usize {
        self.pending.len()
    }

    /// Positions as perceived after the most recent step.
    pub fn perceived(&self) -> &PositionMap {
        &self.perceived
    }

    /// Vehicles with their positions replaced by the perceived ones.
    pub fn perceived_vehicles(&self) -> Vec<VehicleState> {
        self.vehicles
            .iter()
            .map(|v| VehicleState { position: self.perceived.get(&v.id).copied().unwrap_or(v.position), ..v.clone() })
            .collect()
    }

    /// Sets the entry signal of a vehicle (manual signal control only).
    pub fn set_signal(&mut self, id: VehicleId, signal: EntrySignal) {
        debug_assert_eq!(self.options.signal, SignalControl::Manual);
        let time = self.time;
        if let Some(v) = self.vehicles.iter_mut().find(|v| v.id == id) {
            match signal {
                EntrySignal::Enter => v.grant_signal(time),
                EntrySignal::Hold => v.entry_signal = EntrySignal::Hold,
            }
        }
    }

    fn take_id(&mut self) -> VehicleId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn refresh_perception(&mut self) {
        self.perceived = self.perception.perceive(&self.vehicles);
    }

    fn admit_due(&mut self) -> Vec<VehicleId> {
        let mut admitted = Vec::new();
        while let Some(arrival) = self.pending.front().copied() {
            if arrival.time > self.time + 1e-9 {
                break;
            }
            let gate = match self.options.entrance_check_radius {
                Some(radius) => match entrance_safety_check(&self.vehicles, arrival.gate, radius, &self.config) {
                    Some(g) => g,
                    // all gates occupied: retry next step
                    None => break,
                },
                None => arrival.gate,
            };
            self.pending.pop_front();
            let id = self.take_id();
            self.vehicles.push(spawn_gate_vehicle(gate, arrival.heading_noise, arrival.speed, &self.config, id, self.time));
            admitted.push(id);
        }
        admitted
    }

    fn assign_priority(&mut self) -> Option<VehicleId> {
        if self.options.signal != SignalControl::PriorityRule {
            return None;
        }
        if !self.vertiport.is_blocked(self.time) {
            self.vertiport.blocked_until = None;
            self.vertiport.occupant = None;
        }
        let chosen = select_priority(&self.vehicles, &self.perceived, &self.vertiport, self.config.vertiport(), self.time)?;
        let time = self.time;
        let v = self.vehicles.iter_mut().find(|v| v.id == chosen).expect("selected vehicle exists");
        let newly = !v.entry_signal.is_enter();
        v.grant_signal(time);
        newly.then_some(chosen)
    }

    /// Advances the world by one `dt`. `actions` must cover every active vehicle.
    pub fn step(&mut self, actions: &BTreeMap<VehicleId, f64>) -> Result<StepEvents, EnvError> {
        for v in &self.vehicles {
            let a = *actions.get(&v.id).ok_or(EnvError::MissingAction(v.id))?;
            if a.is_nan() || a.abs() > 1.0 {
                return Err(EnvError::ActionOutOfRange { id: v.id, action: a });
            }
        }
        let mut events = StepEvents::default();
        let cfg = self.config.clone();
        let midpoint = cfg.vertiport();

        for v in &mut self.vehicles {
            *v = advance_state(v, actions[&v.id], &cfg);
        }
        self.time += cfg.dt;

        for v in &self.vehicles {
            let d = v.position.distance(midpoint);
            if d >= cfg.reinit_radius {
                if self.outside.insert(v.id) {
                    events.boundary_exits.insert(v.id);
                }
            } else {
                self.outside.remove(&v.id);
            }
        }
        if self.options.respawn_strays && !events.boundary_exits.is_empty() {
            for v in self.vehicles.iter_mut().filter(|v| events.boundary_exits.contains(&v.id)) {
                let fresh = spawn_training_vehicle(&mut self.rng, &cfg, &self.traffic, v.id, self.time);
                v.position = fresh.position;
                v.heading = fresh.heading;
                v.speed = fresh.speed;
                self.outside.remove(&v.id);
            }
        }

        events.admitted = self.admit_due();

        let mut landed = Vec::new();
        for v in &self.vehicles {
            let d = v.position.distance(midpoint);
            if d <= cfg.vtol_radius {
                if v.entry_signal.is_enter() {
                    landed.push(v.id);
                } else if self.in_zone.insert(v.id) {
                    events.false_entrances.insert(v.id);
                }
            } else {
                self.in_zone.remove(&v.id);
            }
        }
        for id in &landed {
            self.vertiport.blocked_until = Some(self.time + cfg.t_land);
            self.vertiport.occupant = Some(*id);
            events.landings.insert(*id);
        }
        if !landed.is_empty() {
            self.vehicles.retain(|v| !landed.contains(&v.id));
            for id in &landed {
                self.in_zone.remove(id);
                self.outside.remove(id);
            }
        }

        let (incidents, accidents) = detect_conflicts(&self.vehicles, &cfg);
        let (new_inc, new_acc) = self.conflicts.update(&incidents, &accidents);
        events.incidents = incidents;
        events.accidents = accidents;
        events.new_incidents = new_inc;
        events.new_accidents = new_acc;

        self.refresh_perception();
        events.signaled = self.assign_priority();

        self.counters.accidents += events.new_accidents.len();
        self.counters.incidents += events.new_incidents.len();
        self.counters.false_entrances += events.false_entrances.len();
        self.counters.landings += events.landings.len();
        self.counters.boundary_exits += events.boundary_exits.len();
        Ok(events)
    }
}
