//! Scenario replays, simulation studies, metrics and spatial density.

mod export;
mod kde;
mod noise;
mod sim;
mod studies;

pub use export::{read_trajectory_csv, study_json, study_table, write_kde_csv, write_trajectory_csv, TRAJECTORY_HEADER};
pub use kde::{silverman_bandwidth, spatial_kde, DensityGrid, GridSpec};
pub use noise::{apply_position_noise, NoiseModel, NoisyPerception};
pub use sim::{compute_run_metrics, simulate_schedule, simulate_world, vehicle_times, RunMetrics, RunSetup, SimulationLog, TrajectoryPoint, VehicleLog};
pub use studies::{
    evaluate_episodes, run_poisson_scenario, run_simulation_study, run_simulation_study_with, run_wave_scenario, study_rng, Dispersion, EvaluationConfig, ScenarioResult, StudyResult,
    StudyRow,
};
