//! Inbound traffic: gates, arrival schedules and their text format.
//!
//! A schedule file is plain text, one arrival per line:
//!
//! ```text
//! # time_s,gate,speed_mps,heading_noise_rad
//! 0,N,13,0
//! 15,E,11.25,-0.1
//! ```
//!
//! Columns are comma separated with a decimal point; `gate` is one of
//! `N`, `E`, `S`, `W`. Blank lines and lines starting with `#` are skipped.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::EnvError;

pub const SCHEDULE_HEADER: &str = "# time_s,gate,speed_mps,heading_noise_rad";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gate {
    North,
    East,
    South,
    West,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::North, Gate::East, Gate::South, Gate::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Gate {
        Gate::ALL[i % 4]
    }

    /// The gates in fixed N-E-S-W rotation, starting at `self`.
    pub fn rotation(self) -> impl Iterator<Item = Gate> {
        (0..4).map(move |k| Gate::from_index(self.index() + k))
    }

    pub fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self.index()]
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Gate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "N" | "n" => Ok(Gate::North),
            "E" | "e" => Ok(Gate::East),
            "S" | "s" => Ok(Gate::South),
            "W" | "w" => Ok(Gate::West),
            other => Err(format!("unknown gate `{other}`")),
        }
    }
}

/// One scheduled entry into the airspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub time: f64,
    pub gate: Gate,
    pub speed: f64,
    /// Offset added to the heading that points at the vertiport (radians).
    pub heading_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArrivalSchedule {
    pub arrivals: Vec<Arrival>,
}

impl ArrivalSchedule {
    pub fn new(mut arrivals: Vec<Arrival>) -> Self {
        arrivals.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self { arrivals }
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(SCHEDULE_HEADER);
        out.push('\n');
        for a in &self.arrivals {
            out.push_str(&format!("{},{},{},{}\n", a.time, a.gate, a.speed, a.heading_noise));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EnvError> {
        let mut arrivals = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| EnvError::Schedule { line: i + 1, reason };
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(bad(format!("expected 4 columns, found {}", cols.len())));
            }
            let num = |s: &str, what: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("invalid {what} `{s}`")))
            };
            let time = num(cols[0], "time")?;
            let gate = cols[1].parse::<Gate>().map_err(bad)?;
            let speed = num(cols[2], "speed")?;
            let heading_noise = num(cols[3], "heading noise")?;
            if speed <= 0.0 {
                return Err(bad(format!("speed must be positive, got {speed}")));
            }
            arrivals.push(Arrival { time, gate, speed, heading_noise });
        }
        Ok(Self::new(arrivals))
    }
}

/// Parameters of the scripted and randomized traffic generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    /// Speed range for randomized vehicles (m/s).
    pub speed_min: f64,
    pub speed_max: f64,
    /// Training spawns: heading offset magnitude range (degrees), random sign.
    pub train_heading_noise_min_deg: f64,
    pub train_heading_noise_max_deg: f64,
    /// Stream and Poisson arrivals: heading offset drawn from U(-x, x) degrees.
    pub heading_disturbance_deg: f64,
    pub wave_count: usize,
    pub wave_gap: f64,
    pub wave_speed: f64,
    pub stream_gap: f64,
    pub poisson_lambda: f64,
    pub poisson_clusters: usize,
    pub poisson_cluster_gap: f64,
    pub poisson_intra_gap: f64,
    pub poisson_gate: Gate,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            speed_min: 10.0,
            speed_max: 16.0,
            train_heading_noise_min_deg: 20.0,
            train_heading_noise_max_deg: 45.0,
            heading_disturbance_deg: 20.0,
            wave_count: 3,
            wave_gap: 30.0,
            wave_speed: 13.0,
            stream_gap: 15.0,
            poisson_lambda: 5.0,
            poisson_clusters: 4,
            poisson_cluster_gap: 120.0,
            poisson_intra_gap: 10.0,
            poisson_gate: Gate::South,
        }
    }
}

impl TrafficConfig {
    fn draw_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.speed_min..=self.speed_max)
    }

    fn draw_disturbance<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = self.heading_disturbance_deg;
        rng.random_range(-x..=x).to_radians()
    }
}

/// Waves of four simultaneous arrivals, one per gate, aimed at the midpoint.
pub fn generate_wave_schedule(cfg: &TrafficConfig) -> ArrivalSchedule {
    let arrivals = (0..cfg.wave_count)
        .flat_map(|w| {
            Gate::ALL.into_iter().map(move |gate| Arrival {
                time: w as f64 * cfg.wave_gap,
                gate,
                speed: cfg.wave_speed,
                heading_noise: 0.0,
            })
        })
        .collect();
    ArrivalSchedule::new(arrivals)
}

/// `n` single arrivals at random gates, evenly spaced in time.
pub fn generate_stream_schedule<R: Rng + ?Sized>(n: usize, rng: &mut R, cfg: &TrafficConfig) -> ArrivalSchedule {
    let arrivals = (0..n)
        .map(|k| {
            let gate = Gate::from_index(rng.random_range(0..4));
            let heading_noise = cfg.draw_disturbance(rng);
            let speed = cfg.draw_speed(rng);
            Arrival { time: k as f64 * cfg.stream_gap, gate, speed, heading_noise }
        })
        .collect();
    ArrivalSchedule::new(arrivals)
}

/// Poisson-sized clusters through a single gate.
pub fn generate_poisson_schedule<R: Rng + ?Sized>(rng: &mut R, cfg: &TrafficConfig) -> ArrivalSchedule {
    let poisson = Poisson::new(cfg.poisson_lambda).expect("positive Poisson rate");
    let mut arrivals = Vec::new();
    for c in 0..cfg.poisson_clusters {
        let size = poisson.sample(rng) as usize;
        let start = c as f64 * cfg.poisson_cluster_gap;
        for k in 0..size {
            let heading_noise = cfg.draw_disturbance(rng);
            let speed = cfg.draw_speed(rng);
            arrivals.push(Arrival {
                time: start + k as f64 * cfg.poisson_intra_gap,
                gate: cfg.poisson_gate,
                speed,
                heading_noise,
            });
        }
    }
    ArrivalSchedule::new(arrivals)
}
