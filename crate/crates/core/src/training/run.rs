use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::curriculum::CurriculumSchedule;
use super::episode::{episode_loop, EpisodeConfig, EpisodeRunner, EpisodeStats};
use super::replay::ReplayBuffer;
use super::td3::{read_params, td3_update, write_params, Td3Agent, Td3Config};
use crate::checkpoint::Checkpoint;
use crate::config::FreeflightConfig;
use crate::environment::AirspaceWorld;
use crate::error::{CheckpointError, Error};
use crate::neural::{ActorNetwork, NetworkConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub total_steps: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub learning_starts: u64,
    pub updates_per_step: usize,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    /// Evaluation episode `i` is seeded with `eval_seed + i` so every
    /// evaluation block replays the same situations.
    pub eval_seed: u64,
    pub smoothing: f64,
    /// Steps at which the policy is saved; the final step is always saved.
    pub milestones: Vec<u64>,
    /// Resume checkpoints are written at the first episode end after each
    /// multiple of this many steps.
    pub resume_interval: u64,
    pub td3: Td3Config,
    pub episode: EpisodeConfig,
    pub curriculum: CurriculumSchedule,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            total_steps: 2_000_000,
            batch_size: 32,
            buffer_capacity: 1_000_000,
            learning_starts: 10_000,
            updates_per_step: 1,
            eval_interval: 5000,
            eval_episodes: 5,
            eval_seed: 7919,
            smoothing: 0.8,
            milestones: vec![0, 100_000, 500_000, 2_000_000],
            resume_interval: 50_000,
            td3: Td3Config::default(),
            episode: EpisodeConfig::default(),
            curriculum: CurriculumSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub mean_return: f64,
    pub smoothed: f64,
}

/// Evaluation returns with exponential smoothing `s = a s + (1 - a) x`,
/// started at the first value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingCurve {
    pub points: Vec<CurvePoint>,
}

impl TrainingCurve {
    pub fn record(&mut self, step: u64, mean_return: f64, smoothing: f64) -> CurvePoint {
        let smoothed = match self.points.last() {
            Some(p) => smoothing * p.smoothed + (1.0 - smoothing) * mean_return,
            None => mean_return,
        };
        let p = CurvePoint { step, mean_return, smoothed };
        self.points.push(p);
        p
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# step mean_eval_return smoothed_return\n");
        for p in &self.points {
            s.push_str(&format!("{} {} {}\n", p.step, p.mean_return, p.smoothed));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let bad = || format!("curve line {}: `{line}`", i + 1);
            if cols.len() != 3 {
                return Err(bad());
            }
            points.push(CurvePoint {
                step: cols[0].parse().map_err(|_| bad())?,
                mean_return: cols[1].parse().map_err(|_| bad())?,
                smoothed: cols[2].parse().map_err(|_| bad())?,
            });
        }
        Ok(Self { points })
    }
}

/// Everything that determines how a run continues.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub agent: Td3Agent,
    pub buffer: ReplayBuffer,
    pub rng: ChaCha8Rng,
    pub global_step: u64,
    pub episodes: u64,
    pub curve: TrainingCurve,
}

impl TrainerState {
    pub fn new(config: &FreeflightConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let agent = Td3Agent::new(&config.network, &config.training.td3, &mut rng);
        Self { agent, buffer: ReplayBuffer::new(config.training.buffer_capacity), rng, global_step: 0, episodes: 0, curve: TrainingCurve::default() }
    }

    pub fn to_checkpoint(&self, network: &NetworkConfig) -> Checkpoint {
        let mut ck = Checkpoint::new();
        write_meta(&mut ck, network, self.global_step);
        ck.put_scalar_u64("meta.episodes", self.episodes);
        self.agent.write_to(&mut ck);
        self.buffer.write_to(&mut ck);
        let seed = self.rng.get_seed();
        ck.put_u64("rng.seed", vec![4], seed.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect());
        ck.put_scalar_u64("rng.stream", self.rng.get_stream());
        let pos = self.rng.get_word_pos();
        ck.put_u64("rng.word_pos", vec![2], vec![pos as u64, (pos >> 64) as u64]);
        let n = self.curve.points.len();
        ck.put_u64("curve.step", vec![n], self.curve.points.iter().map(|p| p.step).collect());
        ck.put_f64("curve.mean", vec![n], self.curve.points.iter().map(|p| p.mean_return).collect());
        ck.put_f64("curve.smoothed", vec![n], self.curve.points.iter().map(|p| p.smoothed).collect());
        ck
    }

    pub fn from_checkpoint(config: &FreeflightConfig, ck: &Checkpoint) -> Result<Self, CheckpointError> {
        check_meta(ck, &config.network)?;
        let mut state = Self::new(config);
        state.agent.read_from(ck)?;
        state.buffer = ReplayBuffer::read_from(ck)?;
        state.global_step = ck.scalar_u64("meta.step")?;
        state.episodes = ck.scalar_u64("meta.episodes")?;
        let words = ck.u64s("rng.seed")?;
        if words.len() != 4 {
            return Err(CheckpointError::Malformed("rng seed must have 4 words".into()));
        }
        let mut seed = [0u8; 32];
        for (i, w) in words.iter().enumerate() {
            seed[i * 8..(i + 1) * 8].copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(ck.scalar_u64("rng.stream")?);
        let pos = ck.u64s("rng.word_pos")?;
        if pos.len() != 2 {
            return Err(CheckpointError::Malformed("rng position must have 2 words".into()));
        }
        rng.set_word_pos(pos[0] as u128 | (pos[1] as u128) << 64);
        state.rng = rng;
        let steps = ck.u64s("curve.step")?;
        let mean = ck.f64s("curve.mean")?;
        let smoothed = ck.f64s("curve.smoothed")?;
        if steps.len() != mean.len() || steps.len() != smoothed.len() {
            return Err(CheckpointError::Malformed("curve arrays disagree".into()));
        }
        state.curve.points = (0..steps.len()).map(|i| CurvePoint { step: steps[i], mean_return: mean[i], smoothed: smoothed[i] }).collect();
        Ok(state)
    }
}

fn write_meta(ck: &mut Checkpoint, network: &NetworkConfig, step: u64) {
    ck.put_scalar_u64("meta.hidden", network.hidden as u64);
    ck.put_scalar_u64("meta.history", network.history as u64);
    ck.put_scalar_u64("meta.step", step);
}

fn check_meta(ck: &Checkpoint, network: &NetworkConfig) -> Result<(), CheckpointError> {
    let hidden = ck.scalar_u64("meta.hidden")? as usize;
    let history = ck.scalar_u64("meta.history")? as usize;
    if hidden != network.hidden || history != network.history {
        return Err(CheckpointError::Shape {
            name: "network".into(),
            found: vec![hidden, history],
            expected: vec![network.hidden, network.history],
        });
    }
    Ok(())
}

/// Writes a policy-only checkpoint.
pub fn save_policy(path: &Path, actor: &ActorNetwork, network: &NetworkConfig, step: u64) -> Result<(), CheckpointError> {
    let mut ck = Checkpoint::new();
    write_meta(&mut ck, network, step);
    write_params(&mut ck, "actor", actor.0.params());
    ck.save(path)
}

/// Loads the actor from a policy or resume checkpoint; the network shape is
/// taken from the file. Returns the actor and the step it was saved at.
pub fn load_policy(path: &Path) -> Result<(ActorNetwork, NetworkConfig, u64), CheckpointError> {
    let ck = Checkpoint::load(path)?;
    let network = NetworkConfig { hidden: ck.scalar_u64("meta.hidden")? as usize, history: ck.scalar_u64("meta.history")? as usize };
    let mut actor = ActorNetwork::new(&network, &mut ChaCha8Rng::seed_from_u64(0));
    read_params(&ck, "actor", actor.0.params_mut())?;
    Ok((actor, network, ck.scalar_u64("meta.step")?))
}

/// Progress notifications from [`run_training`].
#[derive(Debug, Clone)]
pub enum TrainingEvent {
    Evaluated(CurvePoint),
    EpisodeFinished { step: u64, stats: EpisodeStats },
    Saved(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    pub steps: u64,
    pub episodes: u64,
    pub curve: TrainingCurve,
    pub milestones: Vec<PathBuf>,
    pub resume: PathBuf,
}

pub const CURVE_FILE: &str = "curve.txt";
pub const RESUME_FILE: &str = "resume.ckpt";
pub const FINAL_POLICY_FILE: &str = "policy_final.ckpt";

pub fn milestone_file(step: u64) -> String {
    format!("policy_step_{step}.ckpt")
}

/// Mean main-agent return over the fixed evaluation episodes, without
/// exploration and without touching any replay buffer.
pub fn evaluate_policy(actor: &ActorNetwork, config: &FreeflightConfig, global_step: u64) -> Result<f64, Error> {
    let tc = &config.training;
    let mut total = 0.0;
    for i in 0..tc.eval_episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(tc.eval_seed.wrapping_add(i as u64));
        let (_, stats) = run_episode(actor, config, global_step, 0.0, &mut rng)?;
        total += stats.episode_return;
    }
    Ok(total / tc.eval_episodes.max(1) as f64)
}

/// One full training-style episode with the given exploration noise.
pub fn run_episode<R: RngCore>(actor: &ActorNetwork, config: &FreeflightConfig, global_step: u64, sigma: f64, rng: &mut R) -> Result<(Vec<super::TransitionRecord>, EpisodeStats), Error> {
    let mut runner = new_runner(config, global_step, rng)?;
    episode_loop(&mut runner, actor, sigma, rng)
}

fn new_runner<R: RngCore>(config: &FreeflightConfig, global_step: u64, rng: &mut R) -> Result<EpisodeRunner, Error> {
    let count = config.training.curriculum.sample_vehicle_count(global_step, rng);
    let world = AirspaceWorld::training(config.airspace.clone(), config.traffic.clone(), count, rng);
    EpisodeRunner::new(world, config.network.lags(), config.training.episode.clone(), config.observation.clone(), config.reward.clone(), rng)
}

/// Trains from scratch, or continues `resume` when given, until
/// `training.total_steps` environment steps have been taken.
pub fn run_training(config: &FreeflightConfig, out_dir: &Path, resume: Option<&Path>, on_event: &mut dyn FnMut(&TrainingEvent)) -> Result<TrainingSummary, Error> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let tc = &config.training;
    let mut state = match resume {
        Some(path) => TrainerState::from_checkpoint(config, &Checkpoint::load(path)?)?,
        None => TrainerState::new(config),
    };
    let mut milestones: Vec<u64> = tc.milestones.iter().copied().filter(|&m| m <= tc.total_steps).collect();
    milestones.push(tc.total_steps);
    milestones.sort_unstable();
    milestones.dedup();
    let mut saved = Vec::new();
    let mut save_milestone = |state: &TrainerState, on_event: &mut dyn FnMut(&TrainingEvent)| -> Result<(), Error> {
        let path = out_dir.join(milestone_file(state.global_step));
        save_policy(&path, &state.agent.actor, &config.network, state.global_step)?;
        on_event(&TrainingEvent::Saved(path.clone()));
        saved.push(path);
        Ok(())
    };
    if state.global_step == 0 && milestones.first() == Some(&0) {
        save_milestone(&state, on_event)?;
    }
    let resume_path = out_dir.join(RESUME_FILE);
    let mut next_resume = (state.global_step / tc.resume_interval.max(1) + 1) * tc.resume_interval.max(1);

    while state.global_step < tc.total_steps {
        let mut runner = new_runner(config, state.global_step, &mut state.rng)?;
        while !runner.is_done() && state.global_step < tc.total_steps {
            let record = runner.step(&state.agent.actor, tc.episode.explore_sigma, &mut state.rng)?;
            state.buffer.push(record);
            state.global_step += 1;
            if state.global_step >= tc.learning_starts {
                for _ in 0..tc.updates_per_step {
                    let batch = state.buffer.sample(tc.batch_size, &mut state.rng);
                    td3_update(&mut state.agent, &batch, &tc.td3, &mut state.rng)?;
                }
            }
            if tc.eval_interval > 0 && state.global_step % tc.eval_interval == 0 {
                let mean = evaluate_policy(&state.agent.actor, config, state.global_step)?;
                let p = state.curve.record(state.global_step, mean, tc.smoothing);
                write_curve(out_dir, &state.curve)?;
                on_event(&TrainingEvent::Evaluated(p));
            }
            if milestones.binary_search(&state.global_step).is_ok() && state.global_step > 0 {
                save_milestone(&state, on_event)?;
            }
        }
        if runner.is_done() {
            state.episodes += 1;
            on_event(&TrainingEvent::EpisodeFinished { step: state.global_step, stats: runner.stats() });
            if state.global_step >= next_resume && state.global_step < tc.total_steps {
                state.to_checkpoint(&config.network).save(&resume_path)?;
                on_event(&TrainingEvent::Saved(resume_path.clone()));
                next_resume = (state.global_step / tc.resume_interval.max(1) + 1) * tc.resume_interval.max(1);
            }
        }
    }
    write_curve(out_dir, &state.curve)?;
    // An episode cut short by the step budget is dropped; resuming from
    // here starts a fresh episode.
    state.to_checkpoint(&config.network).save(&resume_path)?;
    let final_path = out_dir.join(FINAL_POLICY_FILE);
    save_policy(&final_path, &state.agent.actor, &config.network, state.global_step)?;
    on_event(&TrainingEvent::Saved(final_path));
    Ok(TrainingSummary { steps: state.global_step, episodes: state.episodes, curve: state.curve, milestones: saved, resume: resume_path })
}

fn write_curve(out_dir: &Path, curve: &TrainingCurve) -> Result<(), Error> {
    let path = out_dir.join(CURVE_FILE);
    fs::write(&path, curve.to_text()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
