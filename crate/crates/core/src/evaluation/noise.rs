use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::environment::{Perception, PositionMap};
use crate::geometry::{Vec2, VehicleState};

/// Zero-mean isotropic Gaussian position error, independent per axis,
/// vehicle and step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation per axis (m).
    pub sigma: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { sigma: 0.0 };

    pub fn new(sigma: f64) -> Self {
        assert!(sigma >= 0.0 && sigma.is_finite(), "noise sigma must be finite and non-negative");
        Self { sigma }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        if self.sigma == 0.0 {
            return Vec2::ZERO;
        }
        let d = Normal::new(0.0, self.sigma).expect("valid sigma");
        let n = d.sample(rng);
        let e = d.sample(rng);
        Vec2::new(n, e)
    }
}

/// Perceived positions `p + eps`; vehicles are visited in slice order and
/// draw the north error before the east error.
pub fn apply_position_noise<R: Rng + ?Sized>(vehicles: &[VehicleState], noise: &NoiseModel, rng: &mut R) -> PositionMap {
    vehicles.iter().map(|v| (v.id, v.position + noise.sample(rng))).collect()
}

/// Perception with its own random stream, so the noise never perturbs any
/// other random draw of a run.
#[derive(Debug, Clone)]
pub struct NoisyPerception {
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoisyPerception {
    pub fn new(noise: NoiseModel, seed: u64) -> Self {
        Self { noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Perception for NoisyPerception {
    fn perceive(&mut self, vehicles: &[VehicleState]) -> PositionMap {
        apply_position_noise(vehicles, &self.noise, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_identity() {
        let vs: Vec<VehicleState> = (0..5).map(|i| VehicleState::new(i, Vec2::new(i as f64 * 10.3, -4.0), 0.0, 12.0, 0.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = apply_position_noise(&vs, &NoiseModel::NONE, &mut rng);
        assert!(vs.iter().all(|v| m[&v.id] == v.position));
    }

    #[test]
    fn moments_match_sigma() {
        let noise = NoiseModel::new(20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut s, mut ss) = ([0.0f64; 2], [0.0f64; 2]);
        for _ in 0..n {
            let e = noise.sample(&mut rng);
            for (k, x) in [e.n, e.e].into_iter().enumerate() {
                s[k] += x;
                ss[k] += x * x;
            }
        }
        for k in 0..2 {
            let mean = s[k] / n as f64;
            let std = (ss[k] / n as f64 - mean * mean).sqrt();
            assert!(mean.abs() < 3.0 * 20.0 / 1000.0, "mean {mean}");
            assert!((std / 20.0 - 1.0).abs() < 0.01, "std {std}");
        }
    }
}
