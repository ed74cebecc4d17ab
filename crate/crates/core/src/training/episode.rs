use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::replay::TransitionRecord;
use crate::environment::AirspaceWorld;
use crate::error::Error;
use crate::geometry::{advance_state, EntrySignal, VehicleId, VehicleState};
use crate::neural::ActorNetwork;
use crate::observation::{build_observation, Observation, ObservationScales};
use crate::reward::{compute_reward, RewardConfig, RewardInputs};

/// Rolling window of the last `h + 1` observations of every vehicle. A new
/// vehicle's window starts filled with copies of its first observation.
#[derive(Debug, Clone, Default)]
pub struct HistoryTracker {
    len: usize,
    windows: BTreeMap<VehicleId, VecDeque<Arc<Observation>>>,
}

impl HistoryTracker {
    pub fn new(len: usize) -> Self {
        Self { len, windows: BTreeMap::new() }
    }

    pub fn push(&mut self, id: VehicleId, obs: Arc<Observation>) {
        let w = self.windows.entry(id).or_default();
        if w.is_empty() {
            w.extend(std::iter::repeat_n(obs, self.len));
        } else {
            w.push_back(obs);
            while w.len() > self.len {
                w.pop_front();
            }
        }
    }

    pub fn window(&self, id: VehicleId) -> Option<&VecDeque<Arc<Observation>>> {
        self.windows.get(&id)
    }

    pub fn history(&self, id: VehicleId) -> Option<Vec<&Observation>> {
        self.windows.get(&id).map(|w| w.iter().map(|o| o.as_ref()).collect())
    }

    pub fn latest(&self, id: VehicleId) -> Option<&Arc<Observation>> {
        self.windows.get(&id).and_then(|w| w.back())
    }

    pub fn remove(&mut self, id: VehicleId) {
        self.windows.remove(&id);
    }

    pub fn retain(&mut self, keep: impl Fn(VehicleId) -> bool) {
        self.windows.retain(|&id, _| keep(id));
    }
}

/// Observations of every vehicle built from the world's perceived positions.
pub fn observe_all(world: &AirspaceWorld, scales: &ObservationScales) -> Result<Vec<(VehicleId, Observation)>, Error> {
    let perceived = world.perceived_vehicles();
    let midpoint = world.config().vertiport();
    perceived.iter().map(|v| Ok((v.id, build_observation(v, &perceived, midpoint, scales)?))).collect()
}

/// Deterministic actions of the shared policy for every vehicle.
pub fn policy_actions(actor: &ActorNetwork, tracker: &HistoryTracker, world: &AirspaceWorld) -> Result<BTreeMap<VehicleId, f64>, Error> {
    let mut actions = BTreeMap::new();
    for v in world.vehicles() {
        let hist = tracker.history(v.id).ok_or_else(|| Error::Contract(format!("no history for vehicle {}", v.id)))?;
        actions.insert(v.id, actor.act(&hist)?);
    }
    Ok(actions)
}

/// `clip(policy + N(0, sigma), -1, 1)`; `sigma = 0` returns the policy output.
pub fn exploration_action<R: Rng + ?Sized>(actor: &ActorNetwork, history: &[&Observation], sigma: f64, rng: &mut R) -> Result<f64, Error> {
    let a = actor.act(history)?;
    Ok(perturb(a, sigma, rng))
}

pub(crate) fn perturb<R: Rng + ?Sized>(a: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma <= 0.0 {
        return a;
    }
    let noise = Normal::new(0.0, sigma).expect("positive sigma").sample(rng);
    (a + noise).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodeConfig {
    /// Steps during which every vehicle holds; the main agent is cleared afterwards.
    pub hold_steps: usize,
    pub max_steps: usize,
    /// Exploration noise on the main agent's action.
    pub explore_sigma: f64,
    /// Also perturb the other vehicles' actions.
    pub explore_all: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { hold_steps: 200, max_steps: 250, explore_sigma: 0.1, explore_all: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct EpisodeStats {
    pub steps: usize,
    pub episode_return: f64,
    pub landed: bool,
    pub vehicles: usize,
}

/// One training-style episode: all vehicles fly the shared policy and only
/// the main agent's transitions are recorded.
pub struct EpisodeRunner {
    world: AirspaceWorld,
    main: VehicleId,
    tracker: HistoryTracker,
    config: EpisodeConfig,
    scales: ObservationScales,
    reward: RewardConfig,
    stats: EpisodeStats,
    done: bool,
}

impl EpisodeRunner {
    /// Picks the main agent uniformly among the world's vehicles.
    pub fn new<R: Rng + ?Sized>(world: AirspaceWorld, lags: usize, config: EpisodeConfig, scales: ObservationScales, reward: RewardConfig, rng: &mut R) -> Result<Self, Error> {
        let n = world.vehicles().len();
        if n == 0 {
            return Err(Error::Contract("an episode needs at least one vehicle".into()));
        }
        let main = world.vehicles()[rng.random_range(0..n)].id;
        let mut runner = Self {
            world,
            main,
            tracker: HistoryTracker::new(lags),
            config,
            scales,
            reward,
            stats: EpisodeStats { vehicles: n, ..Default::default() },
            done: false,
        };
        if runner.config.hold_steps == 0 {
            runner.world.set_signal(main, EntrySignal::Enter);
        }
        runner.observe()?;
        Ok(runner)
    }

    pub fn main_agent(&self) -> VehicleId {
        self.main
    }

    pub fn world(&self) -> &AirspaceWorld {
        &self.world
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn stats(&self) -> EpisodeStats {
        self.stats
    }

    fn observe(&mut self) -> Result<(), Error> {
        for (id, obs) in observe_all(&self.world, &self.scales)? {
            self.tracker.push(id, Arc::new(obs));
        }
        Ok(())
    }

    /// Advances one step; `sigma` is the exploration noise for this episode.
    pub fn step<R: Rng + ?Sized>(&mut self, actor: &ActorNetwork, sigma: f64, rng: &mut R) -> Result<TransitionRecord, Error> {
        if self.done {
            return Err(Error::Contract("episode already finished".into()));
        }
        let mut actions = policy_actions(actor, &self.tracker, &self.world)?;
        for (id, a) in actions.iter_mut() {
            if *id == self.main || self.config.explore_all {
                *a = perturb(*a, sigma, rng);
            }
        }
        let action = actions[&self.main];
        let before: VehicleState = self.world.vehicle(self.main).expect("main agent active").clone();
        let window_before: Vec<Arc<Observation>> = self.tracker.window(self.main).expect("main history").iter().cloned().collect();
        let midpoint = self.world.config().vertiport();
        // Position before any respawn, for the progress and containment terms.
        let moved = advance_state(&before, action, self.world.config());

        let events = self.world.step(&actions)?;
        let landed = events.landings.contains(&self.main);
        let d_min = self
            .world
            .vehicles()
            .iter()
            .filter(|v| v.id != self.main)
            .map(|v| v.position.distance(moved.position))
            .min_by(f64::total_cmp);
        let r = compute_reward(
            &RewardInputs {
                d_min,
                sigma: before.entry_signal.value(),
                d_prev: before.position.distance(midpoint),
                d_now: moved.position.distance(midpoint),
                action,
            },
            &self.reward,
        );

        self.stats.steps += 1;
        self.stats.episode_return += r.total;
        if self.stats.steps == self.config.hold_steps && !landed {
            self.world.set_signal(self.main, EntrySignal::Enter);
        }
        self.observe()?;
        let next = if landed {
            let others = self.world.perceived_vehicles();
            let mut ghost = moved;
            ghost.entry_signal = EntrySignal::Enter;
            Arc::new(build_observation(&ghost, &others, midpoint, &self.scales)?)
        } else {
            self.tracker.latest(self.main).expect("main observed").clone()
        };
        let landed_ids: Vec<VehicleId> = events.landings.iter().copied().collect();
        for id in landed_ids {
            self.tracker.remove(id);
        }

        self.stats.landed = landed;
        self.done = landed || self.stats.steps >= self.config.max_steps;
        let mut window = window_before;
        window.push(next);
        Ok(TransitionRecord { window, action, reward: r.total, terminal: landed })
    }
}

/// Runs an episode to completion and returns the main agent's transitions.
pub fn episode_loop<R: Rng + ?Sized>(runner: &mut EpisodeRunner, actor: &ActorNetwork, sigma: f64, rng: &mut R) -> Result<(Vec<TransitionRecord>, EpisodeStats), Error> {
    let mut out = Vec::new();
    while !runner.is_done() {
        out.push(runner.step(actor, sigma, rng)?);
    }
    Ok((out, runner.stats()))
}
