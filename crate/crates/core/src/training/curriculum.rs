use rand::Rng;
use serde::{Deserialize, Serialize};

/// Vehicle-count ranges switched by the global training step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumSchedule {
    /// Phase start steps followed by the nominal end of training.
    pub boundaries: Vec<u64>,
    /// Inclusive vehicle-count range per phase.
    pub ranges: Vec<[usize; 2]>,
    /// When false every episode uses the last phase's range.
    pub enabled: bool,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        Self { boundaries: vec![0, 1_000_000, 1_500_000, 2_000_000], ranges: vec![[3, 8], [8, 15], [15, 25]], enabled: true }
    }
}

impl CurriculumSchedule {
    pub fn validate(&self) -> Result<(), String> {
        if self.ranges.is_empty() {
            return Err("curriculum needs at least one phase".into());
        }
        if self.boundaries.len() < self.ranges.len() {
            return Err("curriculum needs a start step per phase".into());
        }
        if self.boundaries.windows(2).any(|w| w[0] > w[1]) {
            return Err("curriculum boundaries must be non-decreasing".into());
        }
        if self.ranges.iter().any(|[lo, hi]| lo > hi || *lo == 0) {
            return Err("curriculum ranges must satisfy 1 <= lo <= hi".into());
        }
        Ok(())
    }

    /// Active phase; steps past the last boundary stay in the last phase.
    pub fn phase(&self, step: u64) -> usize {
        if !self.enabled {
            return self.ranges.len() - 1;
        }
        let started = self.boundaries[..self.ranges.len()].iter().take_while(|&&b| b <= step).count();
        started.saturating_sub(1).min(self.ranges.len() - 1)
    }

    pub fn range(&self, step: u64) -> [usize; 2] {
        self.ranges[self.phase(step)]
    }

    pub fn sample_vehicle_count<R: Rng + ?Sized>(&self, step: u64, rng: &mut R) -> usize {
        let [lo, hi] = self.range(step);
        rng.random_range(lo..=hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn phases_by_step() {
        let c = CurriculumSchedule::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (step, lo, hi) in [(0, 3, 8), (1_200_000, 8, 15), (1_900_000, 15, 25), (9_000_000, 15, 25)] {
            for _ in 0..200 {
                let n = c.sample_vehicle_count(step, &mut rng);
                assert!((lo..=hi).contains(&n), "step {step}: {n}");
            }
        }
    }

    #[test]
    fn disabled_uses_last_range() {
        let c = CurriculumSchedule { enabled: false, ..Default::default() };
        assert_eq!(c.range(0), [15, 25]);
    }

    #[test]
    fn draws_cover_both_bounds() {
        let c = CurriculumSchedule::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws: Vec<usize> = (0..2000).map(|_| c.sample_vehicle_count(0, &mut rng)).collect();
        assert!(draws.contains(&3) && draws.contains(&8));
    }
}
