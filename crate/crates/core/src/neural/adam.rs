use serde::{Deserialize, Serialize};

use super::params::ParameterSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self { config, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    /// One bias-corrected descent step on `params` along `grads`.
    pub fn step(&mut self, params: &mut ParameterSet, grads: &ParameterSet) {
        debug_assert_eq!(params.layout(), grads.layout());
        self.t += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let bc1 = 1.0 - beta1.powf(self.t as f64);
        let bc2 = 1.0 - beta2.powf(self.t as f64);
        let step = learning_rate / bc1;
        let p = params.values_mut();
        let g = grads.values();
        for i in 0..p.len() {
            let gi = g[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * gi;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * gi * gi;
            p[i] -= step * self.m[i] / ((self.v[i] / bc2).sqrt() + epsilon);
        }
    }
}
