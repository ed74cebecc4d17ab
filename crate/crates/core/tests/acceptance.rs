//! Acceptance report: one line per criterion.
//!
//! Quick criteria always run. The long ones (full training, congestion and
//! noise studies on a trained policy) only run with `--include-ignored` or
//! `--ignored`; criterion 7 is also checked whenever a finished desk-scale
//! run is already on disk.
//!
//! Every result is printed. The exit status is decided by the deterministic
//! criteria only, unless the long ones were requested, in which case the
//! training-dependent criteria count as well.
//!
//! Run directories default to `runs/desk` and `runs/full` under the
//! workspace root and can be moved with `FREEFLIGHT_DESK_RUN` and
//! `FREEFLIGHT_FULL_RUN`.

mod common;

use std::cell::OnceCell;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use common::{check_gradients, random_batch};
use freeflight_core::environment::{AirspaceWorld, WorldOptions};
use freeflight_core::evaluation::{run_simulation_study, run_wave_scenario, simulate_world, spatial_kde, GridSpec, NoiseModel, NoisyPerception, StudyResult};
use freeflight_core::geometry::{cpa, relative_bearing, wrap_angle, AirspaceConfig, Vec2, VehicleId};
use freeflight_core::neural::{ActorNetwork, NetworkConfig};
use freeflight_core::observation::ObservationScales;
use freeflight_core::reward::{collision_reward, collision_tail, RewardConfig};
use freeflight_core::schedule::{generate_poisson_schedule, generate_wave_schedule, Gate, TrafficConfig};
use freeflight_core::training::{episode_loop, load_policy, run_training, EpisodeConfig, EpisodeRunner, ReplayBuffer, Td3Agent, TrainingCurve};
use freeflight_core::FreeflightConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const REWARD_TOL: f64 = 1e-9;
const REWARD_TAIL_TOL: f64 = 1e-3;
const ANGLE_CHECKS: usize = 1_000_000;
const ANGLE_TOL: f64 = 1e-9;
const CPA_ENCOUNTERS: usize = 1000;
const CPA_GRID_STEP: f64 = 0.01;
const CPA_HORIZON: f64 = 500.0;
const CPA_DIST_TOL: f64 = 0.5;
const CPA_TIME_TOL: f64 = 0.5;
const GRAD_TOL: f64 = 1e-4;
const GRAD_COORDS_PER_GROUP: usize = 6;
const CURRICULUM_DRAWS: usize = 10_000;
const POISSON_SCHEDULES: u64 = 10_000;
const POISSON_MEAN: [f64; 2] = [19.5, 20.5];
const KDE_SAMPLES: usize = 10_000;
const KDE_NORM_TOL: f64 = 1e-2;
const DESK_STEPS: u64 = 200_000;
const FULL_STEPS: u64 = 2_000_000;
const RUN_SEED: u64 = 1;
const STUDY_SEED: u64 = 1;
const STUDY_REPS: usize = 30;
const SAFE_SEPARATION: f64 = 300.0;
const AIRSPACE_TIME_N5: [f64; 2] = [180.0, 280.0];
const NOISE_SIGMA: f64 = 10.0;

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

struct Ctx {
    long: bool,
    full_policy: OnceCell<Result<ActorNetwork, String>>,
}

fn workspace_root() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

fn run_dir(var: &str, default: &str) -> PathBuf {
    std::env::var_os(var).map(PathBuf::from).unwrap_or_else(|| workspace_root().join(default))
}

fn reward_anchors(_: &Ctx) -> Outcome {
    let cfg = RewardConfig::default();
    // Gaussian tail evaluated independently of the crate
    let oracle = |d: f64| -5.0 * (-((d - 100.0) / 160.5).powi(2)).exp();
    let at100 = collision_tail(100.0, &cfg);
    let at500 = collision_tail(500.0, &cfg);
    let flat = [0.0, 10.0, 55.0, 100.0].iter().all(|&d| collision_reward(Some(d), &cfg) == -10.0);
    let ok = (at100 + 5.0).abs() < REWARD_TOL && (at500 + 0.01).abs() < REWARD_TAIL_TOL && (at500 - oracle(500.0)).abs() < REWARD_TOL && flat;
    verdict(ok, format!("tail(100) = {at100:.6}, tail(500) = {at500:.6}, flat branch -10: {flat}"))
}

fn angle_suite(_: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut failures = 0usize;
    let circ = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    for i in 0..ANGLE_CHECKS {
        let theta = match i % 3 {
            0 => rng.random_range(-4.0 * PI..4.0 * PI),
            1 => rng.random_range(-1e4..1e4),
            _ => (rng.random_range(-50i32..50) as f64) * PI,
        };
        let k = rng.random_range(-100i32..=100) as f64;
        let w = wrap_angle(theta).unwrap();
        let shifted = wrap_angle(theta + 2.0 * PI * k).unwrap();
        let in_range = (-PI..PI).contains(&w) && (-PI..PI).contains(&shifted);
        let scale = 1.0 + theta.abs() + (2.0 * PI * k).abs();
        let periodic = circ(w, shifted) <= ANGLE_TOL * scale;
        let same_angle = circ(w, theta) <= ANGLE_TOL * scale;
        let own = Vec2::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let target = Vec2::new(rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let rel = relative_bearing(own, theta, target).unwrap();
        let rel_ok = (-PI..PI).contains(&rel);
        if !(in_range && periodic && same_angle && rel_ok) {
            failures += 1;
        }
    }
    let non_finite = [f64::NAN, f64::INFINITY, f64::NEG_INFINITY].iter().all(|t| wrap_angle(*t).is_err());
    verdict(failures == 0 && non_finite, format!("{ANGLE_CHECKS} checks, {failures} failures, non-finite rejected: {non_finite}"))
}

fn cpa_oracle(_: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut worst_d, mut worst_t) = (0.0f64, 0.0f64);
    let mut done = 0;
    let steps = (CPA_HORIZON / CPA_GRID_STEP).round() as usize;
    while done < CPA_ENCOUNTERS {
        let disk = |rng: &mut ChaCha8Rng| Vec2::from_heading(rng.random_range(-PI..PI)).scale(1000.0 * rng.random::<f64>().sqrt());
        let (p1, p2) = (disk(&mut rng), disk(&mut rng));
        let v1 = Vec2::velocity(rng.random_range(-PI..PI), rng.random_range(10.0..16.0));
        let v2 = Vec2::velocity(rng.random_range(-PI..PI), rng.random_range(10.0..16.0));
        // separation <= 2000 m at >= 4 m/s closure keeps the minimum inside the horizon
        if (v2 - v1).norm() < 4.0 {
            continue;
        }
        let (d, t) = cpa(p1, v1, p2, v2);
        let (mut best_d, mut best_t) = (f64::INFINITY, 0.0);
        for s in 0..=steps {
            let ts = s as f64 * CPA_GRID_STEP;
            let dist = (p2 + v2.scale(ts)).distance(p1 + v1.scale(ts));
            if dist < best_d {
                best_d = dist;
                best_t = ts;
            }
        }
        worst_d = worst_d.max((d - best_d).abs());
        worst_t = worst_t.max((t - best_t).abs());
        done += 1;
    }
    verdict(worst_d <= CPA_DIST_TOL && worst_t <= CPA_TIME_TOL, format!("{CPA_ENCOUNTERS} encounters, worst |dd| = {worst_d:.2e} m, worst |dt| = {worst_t:.2e} s"))
}

fn gradient_check(_: &Ctx) -> Outcome {
    let config = FreeflightConfig::default();
    let net = &config.network;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let agent = Td3Agent::new(net, &config.training.td3, &mut rng);
    let mut worst = (0.0f64, String::new());
    for targets in [0, 3, 12] {
        let batch = random_batch(&mut rng, 4, net.lags(), targets);
        let reports = [
            ("actor", check_gradients(&agent.actor.0, &batch, false, GRAD_COORDS_PER_GROUP, &mut rng)),
            ("critic1", check_gradients(&agent.critic1.0, &batch, true, GRAD_COORDS_PER_GROUP, &mut rng)),
            ("critic2", check_gradients(&agent.critic2.0, &batch, true, GRAD_COORDS_PER_GROUP, &mut rng)),
        ];
        for (label, report) in reports {
            for (group, err) in report {
                if err >= worst.0 {
                    worst = (err, format!("{label} {group}, {targets} targets"));
                }
            }
        }
    }
    verdict(worst.0 < GRAD_TOL, format!("hidden {}, worst relative error {:.2e} ({})", net.hidden, worst.0, worst.1))
}

fn replay_composition(_: &Ctx) -> Outcome {
    // constant hard turn: nobody ever reaches the vertiport
    let mut actor = ActorNetwork::new(&NetworkConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
    actor.0.params_mut().fill(0.0);
    actor.0.params_mut().group_mut("head.out.bias").unwrap()[0] = 20.0;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut counts = Vec::new();
    for n in [3, 8, 15, 25] {
        let world = AirspaceWorld::training(AirspaceConfig::default(), TrafficConfig::default(), n, &mut rng);
        let mut runner = EpisodeRunner::new(world, 3, EpisodeConfig::default(), ObservationScales::default(), RewardConfig::default(), &mut rng).unwrap();
        let (stored, stats) = episode_loop(&mut runner, &actor, 0.1, &mut rng).unwrap();
        let mut buffer = ReplayBuffer::new(1000);
        stored.into_iter().for_each(|t| buffer.push(t));
        let hold = buffer.iter().filter(|t| t.sigma() == -1.0).count();
        let enter = buffer.iter().filter(|t| t.sigma() == 1.0).count();
        counts.push((n, hold, enter, stats.landed));
    }
    let ok = counts.iter().all(|&(_, h, e, landed)| h == 200 && e == 50 && !landed);
    let detail = counts.iter().map(|(n, h, e, _)| format!("N={n}: {h}/{e}")).collect::<Vec<_>>().join(", ");
    verdict(ok, format!("hold/enter tuples per capped episode: {detail}"))
}

fn curriculum_boundaries(_: &Ctx) -> Outcome {
    let curriculum = FreeflightConfig::default().training.curriculum;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let expected: [(u64, [usize; 2]); 4] = [(999_999, [3, 8]), (1_000_000, [8, 15]), (1_499_999, [8, 15]), (1_500_000, [15, 25])];
    let mut problems = Vec::new();
    for (step, [lo, hi]) in expected {
        let mut seen = vec![false; hi - lo + 1];
        for _ in 0..CURRICULUM_DRAWS {
            let n = curriculum.sample_vehicle_count(step, &mut rng);
            if n < lo || n > hi {
                problems.push(format!("step {step}: drew {n}"));
                break;
            }
            seen[n - lo] = true;
        }
        if !seen.iter().all(|s| *s) {
            problems.push(format!("step {step}: range [{lo}, {hi}] not covered"));
        }
    }
    verdict(problems.is_empty(), if problems.is_empty() { format!("{CURRICULUM_DRAWS} draws at each of 4 steps in range") } else { problems.join("; ") })
}

fn quartile_gain(curve: &TrainingCurve) -> Option<(f64, f64)> {
    let s: Vec<f64> = curve.points.iter().map(|p| p.smoothed).collect();
    if s.len() < 4 {
        return None;
    }
    let q = s.len() / 4;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Some((mean(&s[..q]), mean(&s[s.len() - q..])))
}

fn desk_learning(ctx: &Ctx) -> Outcome {
    let dir = run_dir("FREEFLIGHT_DESK_RUN", "runs/desk");
    let finished = |dir: &Path| -> Result<Option<(FreeflightConfig, TrainingCurve)>, String> {
        if !dir.join("policy_final.ckpt").exists() {
            return Ok(None);
        }
        let config = FreeflightConfig::load(&dir.join("config.toml")).map_err(|e| e.to_string())?;
        let curve = TrainingCurve::from_text(&std::fs::read_to_string(dir.join("curve.txt")).map_err(|e| e.to_string())?)?;
        Ok(Some((config, curve)))
    };
    let found = match finished(&dir) {
        Ok(found) => found,
        Err(e) => return Outcome::Fail(format!("{}: {e}", dir.display())),
    };
    let (config, curve) = match found {
        Some(found) => found,
        None if ctx.long => {
            let mut config = FreeflightConfig { seed: RUN_SEED, ..Default::default() };
            config.training.total_steps = DESK_STEPS;
            let resume = dir.join("resume.ckpt");
            let resume = resume.exists().then_some(resume);
            if let Err(e) = run_training(&config, &dir, resume.as_deref(), &mut |_| {}) {
                return Outcome::Fail(format!("training failed: {e}"));
            }
            match finished(&dir) {
                Ok(Some(found)) => found,
                Ok(None) => return Outcome::Fail("training wrote no final policy".into()),
                Err(e) => return Outcome::Fail(e),
            }
        }
        None => return Outcome::NotRun(format!("no finished run in {}; train one with `freeflight --seed {RUN_SEED} train --steps {DESK_STEPS} --out <dir>`", dir.display())),
    };
    let steps = config.training.total_steps;
    let phase_one = config.training.curriculum.phase(steps.saturating_sub(1)) == 0;
    let reached = curve.points.last().map(|p| p.step) == Some(steps);
    if steps != DESK_STEPS || !phase_one || !reached {
        return Outcome::Fail(format!("run in {} is not a complete {DESK_STEPS}-step phase-1 run (steps {steps}, last eval {:?})", dir.display(), curve.points.last().map(|p| p.step)));
    }
    match quartile_gain(&curve) {
        Some((first, last)) => verdict(last > first, format!("{} evaluations, smoothed return first quartile {first:.3}, final quartile {last:.3}", curve.points.len())),
        None => Outcome::Fail("fewer than four evaluations".into()),
    }
}

/// The policy of the full-length run, trained here when missing.
fn full_policy(ctx: &Ctx) -> Result<&ActorNetwork, String> {
    ctx.full_policy
        .get_or_init(|| {
            let dir = run_dir("FREEFLIGHT_FULL_RUN", "runs/full");
            let policy = dir.join("policy_final.ckpt");
            if !policy.exists() {
                let mut config = FreeflightConfig { seed: RUN_SEED, ..Default::default() };
                config.training.total_steps = FULL_STEPS;
                let resume = dir.join("resume.ckpt");
                let resume = resume.exists().then_some(resume);
                run_training(&config, &dir, resume.as_deref(), &mut |_| {}).map_err(|e| e.to_string())?;
            }
            let (actor, _, step) = load_policy(&policy).map_err(|e| e.to_string())?;
            if step != FULL_STEPS {
                return Err(format!("{} was trained for {step} steps, not {FULL_STEPS}", policy.display()));
            }
            Ok(actor)
        })
        .as_ref()
        .map_err(Clone::clone)
}

fn study(actor: &ActorNetwork, n_set: &[usize], noise: f64) -> Result<StudyResult, String> {
    run_simulation_study(actor, &FreeflightConfig::default(), n_set, STUDY_REPS, true, NoiseModel::new(noise), STUDY_SEED).map_err(|e| e.to_string())
}

fn full_safety(ctx: &Ctx) -> Outcome {
    let actor = match full_policy(ctx) {
        Ok(a) => a,
        Err(e) => return Outcome::Fail(e),
    };
    let config = FreeflightConfig::default();
    let wave = match run_wave_scenario(actor, &config) {
        Ok(w) => w.metrics,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let closest = wave.min_distance.values().copied().fold(f64::INFINITY, f64::min);
    let result = match study(actor, &[5, 10], 0.0) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e),
    };
    let accidents: usize = result.rows.iter().map(|r| r.accidents).sum();
    let airspace = result.rows[0].airspace_time.map(|d| d.mean);
    let ok = wave.accidents == 0
        && wave.incidents == 0
        && closest > SAFE_SEPARATION
        && accidents == 0
        && airspace.is_some_and(|t| (AIRSPACE_TIME_N5[0]..=AIRSPACE_TIME_N5[1]).contains(&t));
    verdict(
        ok,
        format!(
            "wave: {} accidents, {} incidents, closest {closest:.1} m; study N=5,10: {accidents} accidents, N=5 airspace time {airspace:?} s",
            wave.accidents, wave.incidents
        ),
    )
}

fn monotonic_congestion(ctx: &Ctx) -> Outcome {
    let actor = match full_policy(ctx) {
        Ok(a) => a,
        Err(e) => return Outcome::Fail(e),
    };
    let n_set = FreeflightConfig::default().evaluation.n_set;
    let result = match study(actor, &n_set, 0.0) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(e),
    };
    let means: Vec<f64> = result.rows.iter().map(|r| r.time_to_signal.map_or(f64::NAN, |d| d.mean)).collect();
    let rho = spearman(&n_set.iter().map(|&n| n as f64).collect::<Vec<_>>(), &means);
    let strictly = means.windows(2).all(|w| w[1] > w[0]);
    verdict(strictly && rho == 1.0, format!("time-to-signal means {means:.1?}, Spearman rho {rho:.3}"))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    if y.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

fn noisy_study(ctx: &Ctx) -> Outcome {
    let actor = match full_policy(ctx) {
        Ok(a) => a,
        Err(e) => return Outcome::Fail(e),
    };
    match study(actor, &[10], NOISE_SIGMA) {
        Ok(r) => verdict(r.rows[0].accidents == 0, format!("N=10, sigma {NOISE_SIGMA} m, {STUDY_REPS} reps: {} accidents", r.rows[0].accidents)),
        Err(e) => Outcome::Fail(e),
    }
}

fn noise_isolation(_: &Ctx) -> Outcome {
    let config = FreeflightConfig::default();
    let schedule = generate_wave_schedule(&config.traffic);
    let mut actor = ActorNetwork::new(&config.network, &mut ChaCha8Rng::seed_from_u64(0));
    actor.0.params_mut().fill(0.0);
    let scripted = |t: f64, id: VehicleId| {
        let sign = if id.is_multiple_of(2) { 1.0 } else { -1.0 };
        Some(sign * (0.8 + 0.2 * (0.1 * t + id as f64).sin()))
    };
    let run = |sigma: f64| {
        let mut world = AirspaceWorld::with_schedule(
            config.airspace.clone(),
            config.traffic.clone(),
            WorldOptions::evaluation(Some(config.evaluation.entrance_check_radius)),
            &schedule,
            Box::new(NoisyPerception::new(NoiseModel::new(sigma), 99)),
        );
        simulate_world(&actor, &config, &mut world, Some(400.0), scripted).unwrap()
    };
    let clean = run(0.0);
    let mut mismatches = 0usize;
    for sigma in [NOISE_SIGMA, 20.0, 100.0] {
        let noisy = run(sigma);
        if noisy.trajectory.len() != clean.trajectory.len() || noisy.counters != clean.counters {
            mismatches += 1;
            continue;
        }
        mismatches += clean
            .trajectory
            .iter()
            .zip(&noisy.trajectory)
            .filter(|(a, b)| {
                (a.time, a.vehicle_id) != (b.time, b.vehicle_id)
                    || a.n.to_bits() != b.n.to_bits()
                    || a.e.to_bits() != b.e.to_bits()
                    || a.heading.to_bits() != b.heading.to_bits()
                    || a.speed.to_bits() != b.speed.to_bits()
            })
            .count();
    }
    verdict(mismatches == 0, format!("{} ground-truth samples compared at 3 noise levels, {mismatches} differ", clean.trajectory.len()))
}

fn poisson_moments(_: &Ctx) -> Outcome {
    let cfg = TrafficConfig::default();
    let mut total = 0usize;
    let mut off_gate = 0usize;
    for seed in 0..POISSON_SCHEDULES {
        let schedule = generate_poisson_schedule(&mut ChaCha8Rng::seed_from_u64(seed), &cfg);
        total += schedule.len();
        off_gate += schedule.arrivals.iter().filter(|a| a.gate != Gate::South).count();
    }
    let mean = total as f64 / POISSON_SCHEDULES as f64;
    verdict((POISSON_MEAN[0]..=POISSON_MEAN[1]).contains(&mean) && off_gate == 0, format!("mean arrivals {mean:.3} over {POISSON_SCHEDULES} schedules, {off_gate} off the south gate"))
}

fn kde_oracle(_: &Ctx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pts: Vec<Vec2> = (0..KDE_SAMPLES).map(|_| Vec2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
    let grid = match spatial_kde(&pts, &GridSpec { min: -5.0, max: 5.0, cells: 200 }) {
        Ok(g) => g,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let peak = 1.0 / (2.0 * PI);
    let (n, e) = grid.argmax();
    let integral = grid.integral();
    let ok = (grid.max() - peak).abs() < 0.1 * peak && n.hypot(e) < 0.3 && (integral - 1.0).abs() < KDE_NORM_TOL;
    verdict(ok, format!("peak {:.4} vs {peak:.4}, mode ({n:.3}, {e:.3}), integral {integral:.5}", grid.max()))
}

type Check = fn(&Ctx) -> Outcome;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    /// Deterministic, seconds to minutes.
    Quick,
    /// Depends on the outcome of a training run found on disk.
    Trained,
    /// Needs the full-length run; skipped unless requested.
    Long,
}

const CRITERIA: &[(&str, &str, Kind, Check)] = &[
    ("1", "reward anchors", Kind::Quick, reward_anchors),
    ("2", "angle transforms", Kind::Quick, angle_suite),
    ("3", "closest point of approach", Kind::Quick, cpa_oracle),
    ("4", "gradient correctness", Kind::Quick, gradient_check),
    ("5", "replay composition", Kind::Quick, replay_composition),
    ("6", "curriculum boundaries", Kind::Quick, curriculum_boundaries),
    ("7", "desk-scale learning", Kind::Trained, desk_learning),
    ("8", "full-policy safety", Kind::Long, full_safety),
    ("9", "monotonic congestion", Kind::Long, monotonic_congestion),
    ("10a", "noise robustness, N=10 study", Kind::Long, noisy_study),
    ("10b", "noise isolation", Kind::Quick, noise_isolation),
    ("11", "poisson moments", Kind::Quick, poisson_moments),
    ("12", "density estimate", Kind::Quick, kde_oracle),
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (id, name, kind, _) in CRITERIA {
            println!("criterion {id} {name}: test{}", if *kind == Kind::Long { " (ignored)" } else { "" });
        }
        return ExitCode::SUCCESS;
    }
    let long = args.iter().any(|a| a == "--include-ignored" || a == "--ignored") || std::env::var_os("FREEFLIGHT_ACCEPTANCE_LONG").is_some();
    let ctx = Ctx { long, full_policy: OnceCell::new() };
    let (mut failed, mut reported) = (0, 0);
    for (id, name, kind, check) in CRITERIA {
        let start = Instant::now();
        let outcome = if *kind == Kind::Long && !long {
            Outcome::NotRun("long-running; pass --include-ignored to train and evaluate the full policy".into())
        } else {
            check(&ctx)
        };
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                if *kind == Kind::Quick || long {
                    failed += 1;
                } else {
                    reported += 1;
                }
                ("FAIL", d)
            }
            Outcome::NotRun(d) => ("NOT RUN", d),
        };
        println!("criterion {id:>3} {name:<30} {tag:<7} [{secs:7.1} s] {detail}");
    }
    if reported > 0 {
        println!("{reported} training-dependent criteria failed (gating with --include-ignored)");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
