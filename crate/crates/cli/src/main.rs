mod render;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use freeflight_core::error::{CheckpointError, ConfigError};
use freeflight_core::evaluation::{
    evaluate_episodes, read_trajectory_csv, run_poisson_scenario, run_simulation_study_with, run_wave_scenario, spatial_kde, study_json, study_table,
    write_kde_csv, write_trajectory_csv, GridSpec, NoiseModel, ScenarioResult, StudyResult,
};
use freeflight_core::geometry::Vec2;
use freeflight_core::neural::ActorNetwork;
use freeflight_core::training::{load_policy, run_training, TrainingEvent};
use freeflight_core::{Error, FreeflightConfig};

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FILE: u8 = 3;
const EXIT_CHECKPOINT: u8 = 4;

/// Free-flight terminal airspace: train the shared recurrent policy and
/// evaluate it in scenarios and simulation studies.
///
/// Exit codes: 0 success, 1 other failure, 2 bad flags or overrides,
/// 3 unreadable or unwritable files, 4 incompatible checkpoint.
#[derive(Debug, Parser)]
#[command(name = "freeflight", version)]
struct Cli {
    /// TOML configuration file; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set training.batch_size=64`.
    /// Applied after the file and after `FREEFLIGHT__SECTION__KEY` variables.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Master seed (replaces `seed` from the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the policy; resumable from the run directory's resume checkpoint.
    Train {
        /// Run directory for checkpoints and the evaluation curve.
        #[arg(long, default_value = "runs/train")]
        out: PathBuf,
        /// Total environment steps (replaces `training.total_steps`).
        #[arg(long)]
        steps: Option<u64>,
        /// Continue from a resume checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Replay the wave scenario and write its trajectory and metrics.
    Scenario(PolicyOut),
    /// Stream arrivals at random gates, repeated per vehicle count.
    Study {
        #[command(flatten)]
        policy: PolicyOut,
        #[command(flatten)]
        study: StudyArgs,
        /// Position noise standard deviation per axis (m).
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Also write a spatial density grid per vehicle count.
        #[arg(long)]
        kde: bool,
    },
    /// The study repeated for every position-noise level.
    NoiseStudy {
        #[command(flatten)]
        policy: PolicyOut,
        #[command(flatten)]
        study: StudyArgs,
        /// Noise levels in metres (default: `evaluation.noise_sigmas`).
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
    },
    /// Clustered Poisson arrivals through one gate.
    Poisson {
        #[command(flatten)]
        policy: PolicyOut,
        /// Independent runs to simulate.
        #[arg(long, default_value_t = 1)]
        runs: usize,
    },
    /// Draw a trajectory CSV as SVG.
    Render {
        /// Trajectory CSV written by `scenario`, `study` or `poisson`.
        #[arg(long)]
        input: PathBuf,
        /// Output SVG.
        #[arg(long)]
        output: PathBuf,
        /// Seconds between heading markers (default: `evaluation.marker_interval`).
        #[arg(long)]
        marker_interval: Option<f64>,
        /// Also write one snapshot SVG per this many seconds into `--frames-dir`.
        #[arg(long, requires = "frames_dir")]
        frame_step: Option<f64>,
        /// Directory for the snapshot frames.
        #[arg(long)]
        frames_dir: Option<PathBuf>,
    },
    /// Training-style episodes with a fixed vehicle count, no exploration.
    Evaluate {
        /// Policy or resume checkpoint.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Vehicles per episode.
        #[arg(long)]
        n: usize,
        /// Episodes, seeded `seed`, `seed + 1`, ...
        #[arg(long, default_value_t = 10)]
        episodes: usize,
    },
}

#[derive(Debug, Args)]
struct PolicyOut {
    /// Policy or resume checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "runs/eval")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Vehicle counts (default: `evaluation.n_set`).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Repetitions per vehicle count (default: `evaluation.reps`).
    #[arg(long)]
    reps: Option<usize>,
    /// Defer arrivals while a vehicle is near the gate.
    #[arg(long)]
    entrance_check: bool,
    /// Also write every run's trajectory.
    #[arg(long)]
    trajectories: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(ConfigError::Override(_)) => EXIT_USAGE,
            Error::Config(ConfigError::Io { .. }) | Error::Io { .. } => EXIT_FILE,
            Error::Checkpoint(c) => match c {
                CheckpointError::Io { .. } | CheckpointError::Checksum | CheckpointError::Malformed(_) => EXIT_FILE,
                CheckpointError::BadMagic | CheckpointError::Version { .. } | CheckpointError::MissingArray(_) | CheckpointError::Shape { .. } => EXIT_CHECKPOINT,
            },
            _ => EXIT_OTHER,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Error::from(e).into()
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        Error::from(e).into()
    }
}

fn file_error(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_FILE, message: format!("{}: {e}", path.display()) }
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| file_error(path, e))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| file_error(path, e))
}

fn load_config(cli: &Cli) -> Result<FreeflightConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => FreeflightConfig::load(path)?,
        None => FreeflightConfig::default(),
    };
    config.apply_env(std::env::vars())?;
    for o in &cli.overrides {
        config.apply_override(o).map_err(|e| Failure { code: EXIT_USAGE, message: e.to_string() })?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

/// Loads the policy and adopts the network shape stored with it.
fn load_actor(path: &Path, config: &mut FreeflightConfig) -> Result<ActorNetwork, Failure> {
    let (actor, network, step) = load_policy(path)?;
    eprintln!("loaded policy from {} (step {step})", path.display());
    config.network = network;
    Ok(actor)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Train { out, steps, resume } => {
            if let Some(steps) = steps {
                config.training.total_steps = steps;
            }
            train(&config, &out, resume.as_deref())
        }
        Command::Scenario(p) => {
            let actor = load_actor(&p.checkpoint, &mut config)?;
            create_dir(&p.out)?;
            let result = run_wave_scenario(&actor, &config)?;
            write_scenario(&p.out, "wave", &result)?;
            println!("{}", scenario_summary("wave", &result));
            Ok(())
        }
        Command::Study { policy, study, noise_sigma, kde } => {
            let actor = load_actor(&policy.checkpoint, &mut config)?;
            create_dir(&policy.out)?;
            let noise = NoiseModel::new(noise_sigma);
            let result = study_run(&actor, &config, &policy.out, &study, noise, kde)?;
            write_study(&policy.out, "study", &result)
        }
        Command::NoiseStudy { policy, study, sigmas } => {
            let actor = load_actor(&policy.checkpoint, &mut config)?;
            create_dir(&policy.out)?;
            for sigma in sigmas.unwrap_or_else(|| config.evaluation.noise_sigmas.clone()) {
                if sigma.is_nan() || sigma < 0.0 {
                    return Err(Failure { code: EXIT_USAGE, message: format!("noise level {sigma} must be non-negative") });
                }
                let result = study_run(&actor, &config, &policy.out, &study, NoiseModel::new(sigma), false)?;
                write_study(&policy.out, &format!("noise_{sigma}"), &result)?;
            }
            Ok(())
        }
        Command::Poisson { policy, runs } => {
            let actor = load_actor(&policy.checkpoint, &mut config)?;
            create_dir(&policy.out)?;
            for run in 0..runs {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(run as u64);
                let result = run_poisson_scenario(&actor, &config, &mut rng)?;
                let stem = format!("poisson_{run}");
                write_scenario(&policy.out, &stem, &result)?;
                println!("{}", scenario_summary(&stem, &result));
            }
            Ok(())
        }
        Command::Render { input, output, marker_interval, frame_step, frames_dir } => {
            let points = read_trajectory_csv(&input)?;
            let opts = render::RenderOptions::new(&config.airspace, marker_interval.unwrap_or(config.evaluation.marker_interval));
            write_file(&output, &render::trajectory_svg(&points, &config.airspace, &opts))?;
            if let (Some(step), Some(dir)) = (frame_step, frames_dir) {
                if step.is_nan() || step <= 0.0 {
                    return Err(Failure { code: EXIT_USAGE, message: "--frame-step must be positive".into() });
                }
                create_dir(&dir)?;
                let end = points.iter().map(|p| p.time).fold(0.0, f64::max);
                let mut k = 0usize;
                while k as f64 * step <= end + 1e-9 {
                    let t = k as f64 * step;
                    write_file(&dir.join(format!("frame_{k:05}.svg")), &render::frame_svg(&points, t, 60.0, &config.airspace, &opts))?;
                    k += 1;
                }
                eprintln!("wrote {k} frames to {}", dir.display());
            }
            Ok(())
        }
        Command::Evaluate { checkpoint, n, episodes } => {
            let actor = load_actor(&checkpoint, &mut config)?;
            let stats = evaluate_episodes(&actor, &config, n, episodes, config.seed)?;
            let mean = stats.iter().map(|s| s.episode_return).sum::<f64>() / stats.len().max(1) as f64;
            let landed = stats.iter().filter(|s| s.landed).count();
            let report = serde_json::json!({ "vehicles": n, "episodes": stats, "mean_return": mean, "main_agent_landed": landed });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
    }
}

fn train(config: &FreeflightConfig, out: &Path, resume: Option<&Path>) -> Result<(), Failure> {
    create_dir(out)?;
    write_file(&out.join("config.toml"), &config.to_toml_string())?;
    let total = config.training.total_steps;
    let mut on_event = |e: &TrainingEvent| match e {
        TrainingEvent::Evaluated(p) => eprintln!("step {:>8}/{total}  eval return {:>9.3}  smoothed {:>9.3}", p.step, p.mean_return, p.smoothed),
        TrainingEvent::Saved(path) => eprintln!("saved {}", path.display()),
        TrainingEvent::EpisodeFinished { .. } => {}
    };
    let summary = run_training(config, out, resume, &mut on_event)?;
    println!("trained {} steps over {} episodes; {} evaluations; resume checkpoint {}", summary.steps, summary.episodes, summary.curve.points.len(), summary.resume.display());
    Ok(())
}

fn study_run(actor: &ActorNetwork, config: &FreeflightConfig, out: &Path, args: &StudyArgs, noise: NoiseModel, kde: bool) -> Result<StudyResult, Failure> {
    let n_set = args.n.clone().unwrap_or_else(|| config.evaluation.n_set.clone());
    let reps = args.reps.unwrap_or(config.evaluation.reps);
    let mut positions: BTreeMap<usize, Vec<Vec2>> = BTreeMap::new();
    let mut io_error = None;
    let tag = if args.entrance_check { "check" } else { "nocheck" };
    let result = run_simulation_study_with(actor, config, &n_set, reps, args.entrance_check, noise, config.seed, &mut |n, rep, log| {
        if kde {
            positions.entry(n).or_default().extend(log.trajectory.iter().map(|p| Vec2::new(p.n, p.e)));
        }
        if args.trajectories && io_error.is_none() {
            let path = out.join(format!("traj_{tag}_sigma{}_n{n}_rep{rep}.csv", noise.sigma));
            io_error = write_trajectory_csv(&path, &log.trajectory).err();
        }
        eprintln!("  N={n} rep {rep}: {:.0} s simulated{}", log.duration, if log.timed_out { " (timed out)" } else { "" });
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let grid = GridSpec { min: config.evaluation.kde_min, max: config.evaluation.kde_max, cells: config.evaluation.kde_cells };
    for (n, pts) in positions {
        match spatial_kde(&pts, &grid) {
            Ok(density) => write_kde_csv(out, &format!("kde_{tag}_n{n}"), &density)?,
            Err(e) => eprintln!("skipping density for N={n}: {e}"),
        }
    }
    Ok(result)
}

fn write_study(out: &Path, stem: &str, result: &StudyResult) -> Result<(), Failure> {
    write_file(&out.join(format!("{stem}.json")), &study_json(result))?;
    let table = study_table(result);
    write_file(&out.join(format!("{stem}.txt")), &table)?;
    print!("{table}");
    Ok(())
}

fn write_scenario(out: &Path, stem: &str, result: &ScenarioResult) -> Result<(), Failure> {
    write_trajectory_csv(&out.join(format!("{stem}_trajectory.csv")), &result.log.trajectory)?;
    write_file(&out.join(format!("{stem}_schedule.txt")), &result.schedule.to_text())?;
    let metrics = serde_json::to_string_pretty(&result.metrics).expect("metrics serialize") + "\n";
    write_file(&out.join(format!("{stem}_metrics.json")), &metrics)
}

fn scenario_summary(stem: &str, r: &ScenarioResult) -> String {
    let m = &r.metrics;
    let mut s = String::new();
    let _ = write!(
        s,
        "{stem}: {} vehicles, {} landed, {} accidents, {} incidents, {} false entrances",
        m.vehicles, m.landed, m.accidents, m.incidents, m.false_entrances
    );
    if let Some(d) = m.min_distance.values().copied().reduce(f64::min) {
        let _ = write!(s, ", closest approach {d:.1} m");
    }
    if let Some(t) = m.airspace_time {
        let _ = write!(s, ", mean airspace time {t:.1} s");
    }
    if m.timed_out {
        s.push_str(" (timed out)");
    }
    s
}
