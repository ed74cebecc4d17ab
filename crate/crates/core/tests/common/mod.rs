#![allow(dead_code)]

use freeflight_core::neural::{ParameterSet, SpatialTemporalNet};
use freeflight_core::observation::{Observation, OwnObservation, TargetEntry};
use rand::Rng;

pub fn random_observation<R: Rng>(rng: &mut R, targets: usize) -> Observation {
    let own = OwnObservation {
        bearing_to_vertiport: rng.random_range(-1.0..1.0),
        distance_to_vertiport: rng.random_range(0.1..1.3),
        sigma: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
    };
    let mut rows: Vec<TargetEntry> = (0..targets)
        .map(|_| {
            TargetEntry::from_array([
                rng.random_range(0.0..2.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(0.0..10.0),
                rng.random_range(0.0..5.0),
            ])
        })
        .collect();
    rows.sort_by(|a, b| b.distance.total_cmp(&a.distance));
    Observation { own, targets: rows }
}

pub fn random_history<R: Rng>(rng: &mut R, lags: usize, targets: usize) -> Vec<Observation> {
    (0..lags).map(|_| random_observation(rng, targets)).collect()
}

/// A batch of `(history, action, loss weight)` samples.
pub type Batch = Vec<(Vec<Observation>, f64, f64)>;

pub fn random_batch<R: Rng>(rng: &mut R, size: usize, lags: usize, targets: usize) -> Batch {
    (0..size).map(|_| (random_history(rng, lags, targets), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// `sum_s w_s * net(history_s, action_s)`
pub fn weighted_loss(net: &SpatialTemporalNet, batch: &Batch, critic: bool) -> f64 {
    batch
        .iter()
        .map(|(h, a, w)| {
            let hist: Vec<&Observation> = h.iter().collect();
            w * net.forward(&hist, critic.then_some(*a)).unwrap().output()
        })
        .sum()
}

pub fn analytic_grads(net: &SpatialTemporalNet, batch: &Batch, critic: bool) -> ParameterSet {
    let mut g = net.zero_grads();
    for (h, a, w) in batch {
        let hist: Vec<&Observation> = h.iter().collect();
        let cache = net.forward(&hist, critic.then_some(*a)).unwrap();
        net.backward(&cache, *w, &mut g).unwrap();
    }
    g
}

pub fn central_difference(net: &SpatialTemporalNet, batch: &Batch, critic: bool, index: usize, eps: f64) -> f64 {
    let mut plus = net.clone();
    plus.params_mut().values_mut()[index] += eps;
    let mut minus = net.clone();
    minus.params_mut().values_mut()[index] -= eps;
    (weighted_loss(&plus, batch, critic) - weighted_loss(&minus, batch, critic)) / (2.0 * eps)
}

pub fn relative_error(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

/// Largest relative error per parameter group over a few random coordinates
/// plus the coordinate with the largest analytic gradient.
pub fn check_gradients<R: Rng>(net: &SpatialTemporalNet, batch: &Batch, critic: bool, coords_per_group: usize, rng: &mut R) -> Vec<(String, f64)> {
    let g = analytic_grads(net, batch, critic);
    let eps = 1e-5;
    net.params()
        .layout()
        .entries()
        .iter()
        .map(|e| {
            let range = e.range();
            let vals = &g.values()[range.clone()];
            let top = vals.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).map(|(i, _)| i).unwrap_or(0);
            let mut picks = vec![range.start + top];
            picks.extend((0..coords_per_group).map(|_| rng.random_range(range.clone())));
            let worst = picks
                .into_iter()
                .map(|i| relative_error(g.values()[i], central_difference(net, batch, critic, i, eps), 1e-7))
                .fold(0.0, f64::max);
            (e.name.clone(), worst)
        })
        .collect()
}
