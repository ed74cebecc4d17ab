mod common;

use common::*;
use freeflight_core::neural::{ActorNetwork, CriticNetwork, NetworkConfig};
use freeflight_core::observation::Observation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOLERANCE: f64 = 1e-4;

fn assert_agrees(label: &str, report: &[(String, f64)]) {
    for (name, err) in report {
        assert!(*err < TOLERANCE, "{label} {name}: relative error {err:e}");
    }
}

#[test]
fn small_networks_match_finite_differences() {
    let cfg = NetworkConfig { hidden: 8, history: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let actor = ActorNetwork::new(&cfg, &mut rng);
    let critic = CriticNetwork::new(&cfg, &mut rng);
    for targets in [0, 1, 3, 7] {
        let batch = random_batch(&mut rng, 4, cfg.lags(), targets);
        assert_agrees("actor", &check_gradients(&actor.0, &batch, false, 10, &mut rng));
        assert_agrees("critic", &check_gradients(&critic.0, &batch, true, 10, &mut rng));
    }
}

#[test]
fn action_gradient_matches_finite_difference() {
    let cfg = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let critic = CriticNetwork::new(&cfg, &mut rng);
    for targets in [0, 4, 12] {
        let h = random_history(&mut rng, cfg.lags(), targets);
        let hist: Vec<&Observation> = h.iter().collect();
        let a = 0.3;
        let (_, cache) = critic.forward(&hist, a).unwrap();
        let analytic = critic.action_gradient(&cache).unwrap();
        let eps = 1e-5;
        let numeric = (critic.q(&hist, a + eps).unwrap() - critic.q(&hist, a - eps).unwrap()) / (2.0 * eps);
        assert!(relative_error(analytic, numeric, 1e-7) < TOLERANCE, "{analytic} vs {numeric}");
    }
}

#[test]
fn variable_target_counts_in_one_batch() {
    let cfg = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let actor = ActorNetwork::new(&cfg, &mut rng);
    let critic = CriticNetwork::new(&cfg, &mut rng);
    let mut ga = actor.0.zero_grads();
    let mut gc = critic.0.zero_grads();
    for n in 0..=30 {
        let h = random_history(&mut rng, cfg.lags(), n);
        let hist: Vec<&Observation> = h.iter().collect();
        let (a, ca) = actor.forward(&hist).unwrap();
        assert!(a > -1.0 && a < 1.0);
        let (q, cq) = critic.forward(&hist, a).unwrap();
        assert!(q.is_finite());
        actor.backward(&ca, 1.0, &mut ga).unwrap();
        critic.backward(&cq, 1.0, &mut gc).unwrap();
    }
    assert!(ga.is_finite() && gc.is_finite());
}

#[test]
fn forward_and_backward_are_deterministic() {
    let cfg = NetworkConfig::default();
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let critic = CriticNetwork::new(&cfg, &mut rng);
        let batch = random_batch(&mut rng, 3, cfg.lags(), 5);
        let g = analytic_grads(&critic.0, &batch, true);
        (weighted_loss(&critic.0, &batch, true).to_bits(), g.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
    };
    assert_eq!(run(), run());
}

#[test]
fn critic_outputs_finite_over_many_inputs() {
    let cfg = NetworkConfig { hidden: 16, history: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let critic = CriticNetwork::new(&cfg, &mut rng);
    for i in 0..1000 {
        let h = random_history(&mut rng, cfg.lags(), i % 6);
        let hist: Vec<&Observation> = h.iter().collect();
        assert!(critic.q(&hist, (i as f64 / 500.0) - 1.0).unwrap().is_finite());
    }
}
