use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::NoiseModel;
use super::sim::{compute_run_metrics, simulate_schedule, RunMetrics, RunSetup, SimulationLog};
use crate::config::FreeflightConfig;
use crate::environment::AirspaceWorld;
use crate::error::Error;
use crate::neural::ActorNetwork;
use crate::schedule::{generate_poisson_schedule, generate_stream_schedule, generate_wave_schedule, ArrivalSchedule};
use crate::training::{episode_loop, EpisodeRunner, EpisodeStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    /// Gate clearance radius of the entrance safety check (m).
    pub entrance_check_radius: f64,
    pub reps: usize,
    pub n_set: Vec<usize>,
    pub noise_sigmas: Vec<f64>,
    /// Simulated-time cap per run (s); runs hitting it are marked timed out.
    /// Zero disables the cap.
    pub time_cap: f64,
    /// Spacing of the trajectory markers (s).
    pub marker_interval: f64,
    pub kde_min: f64,
    pub kde_max: f64,
    pub kde_cells: usize,
}

impl EvaluationConfig {
    pub fn time_cap(&self) -> Option<f64> {
        (self.time_cap > 0.0).then_some(self.time_cap)
    }
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            entrance_check_radius: 300.0,
            reps: 30,
            n_set: vec![5, 10, 15, 20, 25, 30],
            noise_sigmas: vec![0.0, 10.0, 20.0, 100.0],
            time_cap: 3600.0,
            marker_interval: 20.0,
            kde_min: -1200.0,
            kde_max: 1200.0,
            kde_cells: 200,
        }
    }
}

/// A single replayed schedule with its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub schedule: ArrivalSchedule,
    pub log: SimulationLog,
    pub metrics: RunMetrics,
}

fn run_schedule(actor: &ActorNetwork, config: &FreeflightConfig, schedule: ArrivalSchedule, setup: &RunSetup) -> Result<ScenarioResult, Error> {
    let log = simulate_schedule(actor, config, &schedule, setup)?;
    let metrics = compute_run_metrics(&log)?;
    Ok(ScenarioResult { schedule, log, metrics })
}

/// Three simultaneous four-gate waves flown by the deterministic policy.
pub fn run_wave_scenario(actor: &ActorNetwork, config: &FreeflightConfig) -> Result<ScenarioResult, Error> {
    run_schedule(actor, config, generate_wave_schedule(&config.traffic), &RunSetup::plain(config.evaluation.time_cap()))
}

/// Clustered single-gate Poisson arrivals.
pub fn run_poisson_scenario<R: RngCore>(actor: &ActorNetwork, config: &FreeflightConfig, rng: &mut R) -> Result<ScenarioResult, Error> {
    let schedule = generate_poisson_schedule(rng, &config.traffic);
    run_schedule(actor, config, schedule, &RunSetup::plain(config.evaluation.time_cap()))
}

/// Mean and sample standard deviation of values sorted first, so the result
/// does not depend on run order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Dispersion {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        let std = if v.len() > 1 { (dev.iter().sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Some(Self { mean, std, count: v.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub runs: usize,
    pub timed_out_runs: usize,
    pub accidents: usize,
    pub incidents: usize,
    pub false_entrances: usize,
    pub landed: usize,
    pub airspace_time: Option<Dispersion>,
    pub time_to_signal: Option<Dispersion>,
    pub entrance_time: Option<Dispersion>,
    pub min_distance: Option<f64>,
}

impl StudyRow {
    /// Aggregates per-run metrics; the result is invariant to run order.
    pub fn aggregate(n: usize, runs: &[RunMetrics]) -> Self {
        let collect = |f: fn(&RunMetrics) -> Option<f64>| runs.iter().filter_map(f).collect::<Vec<f64>>();
        Self {
            n,
            runs: runs.len(),
            timed_out_runs: runs.iter().filter(|r| r.timed_out).count(),
            accidents: runs.iter().map(|r| r.accidents).sum(),
            incidents: runs.iter().map(|r| r.incidents).sum(),
            false_entrances: runs.iter().map(|r| r.false_entrances).sum(),
            landed: runs.iter().map(|r| r.landed).sum(),
            airspace_time: Dispersion::of(&collect(|r| r.airspace_time)),
            time_to_signal: Dispersion::of(&collect(|r| r.time_to_signal)),
            entrance_time: Dispersion::of(&collect(|r| r.entrance_time)),
            min_distance: runs.iter().flat_map(|r| r.min_distance.values().copied()).min_by(f64::total_cmp),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub entrance_check: bool,
    pub noise_sigma: f64,
    pub reps: usize,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
}

/// Random stream for repetition `rep` at vehicle count `n`.
pub fn study_rng(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | rep as u64);
    rng
}

/// Stream arrivals at random gates for every `n` in `n_set`, `reps` times each.
pub fn run_simulation_study(
    actor: &ActorNetwork,
    config: &FreeflightConfig,
    n_set: &[usize],
    reps: usize,
    entrance_check: bool,
    noise: NoiseModel,
    seed: u64,
) -> Result<StudyResult, Error> {
    run_simulation_study_with(actor, config, n_set, reps, entrance_check, noise, seed, &mut |_, _, _| {})
}

/// [`run_simulation_study`] that also hands every finished run's log to
/// `on_run(n, rep, log)`.
#[allow(clippy::too_many_arguments)]
pub fn run_simulation_study_with(
    actor: &ActorNetwork,
    config: &FreeflightConfig,
    n_set: &[usize],
    reps: usize,
    entrance_check: bool,
    noise: NoiseModel,
    seed: u64,
    on_run: &mut dyn FnMut(usize, usize, &SimulationLog),
) -> Result<StudyResult, Error> {
    if n_set.is_empty() {
        return Err(Error::Contract("study needs at least one vehicle count".into()));
    }
    let mut rows = Vec::with_capacity(n_set.len());
    for &n in n_set {
        let mut runs = Vec::with_capacity(reps);
        for rep in 0..reps {
            let mut rng = study_rng(seed, n, rep);
            let schedule = generate_stream_schedule(n, &mut rng, &config.traffic);
            let setup = RunSetup { entrance_check, noise, noise_seed: rng.next_u64(), time_cap: config.evaluation.time_cap() };
            let log = simulate_schedule(actor, config, &schedule, &setup)?;
            runs.push(compute_run_metrics(&log)?);
            on_run(n, rep, &log);
        }
        rows.push(StudyRow::aggregate(n, &runs));
    }
    Ok(StudyResult { entrance_check, noise_sigma: noise.sigma, reps, seed, rows })
}

/// Training-style episodes with exactly `n` vehicles and no exploration.
pub fn evaluate_episodes(actor: &ActorNetwork, config: &FreeflightConfig, n: usize, episodes: usize, seed: u64) -> Result<Vec<EpisodeStats>, Error> {
    (0..episodes)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let world = AirspaceWorld::training(config.airspace.clone(), config.traffic.clone(), n, &mut rng);
            let mut runner = EpisodeRunner::new(world, config.network.lags(), config.training.episode.clone(), config.observation.clone(), config.reward.clone(), &mut rng)?;
            Ok(episode_loop(&mut runner, actor, 0.0, &mut rng)?.1)
        })
        .collect()
}
