use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::replay::TransitionRecord;
use crate::checkpoint::Checkpoint;
use crate::error::{CheckpointError, Error, NetError};
use crate::neural::{ActorNetwork, AdamConfig, AdamState, CriticNetwork, NetworkConfig, ParameterSet, SpatialTemporalNet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: u64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub actor_optimizer: AdamConfig,
    pub critic_optimizer: AdamConfig,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            actor_optimizer: AdamConfig::default(),
            critic_optimizer: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_objective: Option<f64>,
}

/// Actor, twin critics, their target copies and optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct Td3Agent {
    pub actor: ActorNetwork,
    pub actor_target: ActorNetwork,
    pub critic1: CriticNetwork,
    pub critic2: CriticNetwork,
    pub critic1_target: CriticNetwork,
    pub critic2_target: CriticNetwork,
    pub actor_opt: AdamState,
    pub critic1_opt: AdamState,
    pub critic2_opt: AdamState,
    pub updates: u64,
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(net: &NetworkConfig, cfg: &Td3Config, rng: &mut R) -> Self {
        let actor = ActorNetwork::new(net, rng);
        let critic1 = CriticNetwork::new(net, rng);
        let critic2 = CriticNetwork::new(net, rng);
        let na = actor.0.params().values().len();
        let nc = critic1.0.params().values().len();
        Self {
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            actor_opt: AdamState::new(cfg.actor_optimizer.clone(), na),
            critic1_opt: AdamState::new(cfg.critic_optimizer.clone(), nc),
            critic2_opt: AdamState::new(cfg.critic_optimizer.clone(), nc),
            updates: 0,
        }
    }

    fn nets(&self) -> [(&'static str, &SpatialTemporalNet); 6] {
        [
            ("actor", &self.actor.0),
            ("actor_target", &self.actor_target.0),
            ("critic1", &self.critic1.0),
            ("critic2", &self.critic2.0),
            ("critic1_target", &self.critic1_target.0),
            ("critic2_target", &self.critic2_target.0),
        ]
    }

    pub(crate) fn write_to(&self, ck: &mut Checkpoint) {
        for (prefix, net) in self.nets() {
            write_params(ck, prefix, net.params());
        }
        for (prefix, opt) in [("adam.actor", &self.actor_opt), ("adam.critic1", &self.critic1_opt), ("adam.critic2", &self.critic2_opt)] {
            ck.put_f64(format!("{prefix}.m"), vec![opt.m.len()], opt.m.clone());
            ck.put_f64(format!("{prefix}.v"), vec![opt.v.len()], opt.v.clone());
            ck.put_scalar_u64(format!("{prefix}.t"), opt.t);
        }
        ck.put_scalar_u64("td3.updates", self.updates);
    }

    pub(crate) fn read_from(&mut self, ck: &Checkpoint) -> Result<(), CheckpointError> {
        for (prefix, net) in [
            ("actor", &mut self.actor.0),
            ("actor_target", &mut self.actor_target.0),
            ("critic1", &mut self.critic1.0),
            ("critic2", &mut self.critic2.0),
            ("critic1_target", &mut self.critic1_target.0),
            ("critic2_target", &mut self.critic2_target.0),
        ] {
            read_params(ck, prefix, net.params_mut())?;
        }
        for (prefix, opt) in [("adam.actor", &mut self.actor_opt), ("adam.critic1", &mut self.critic1_opt), ("adam.critic2", &mut self.critic2_opt)] {
            let n = opt.m.len();
            opt.m.copy_from_slice(ck.f64s_shaped(&format!("{prefix}.m"), &[n])?);
            opt.v.copy_from_slice(ck.f64s_shaped(&format!("{prefix}.v"), &[n])?);
            opt.t = ck.scalar_u64(&format!("{prefix}.t"))?;
        }
        self.updates = ck.scalar_u64("td3.updates")?;
        Ok(())
    }
}

pub(crate) fn write_params(ck: &mut Checkpoint, prefix: &str, params: &ParameterSet) {
    for e in params.layout().entries() {
        ck.put_f64(format!("{prefix}.{}", e.name), e.shape.clone(), params.values()[e.range()].to_vec());
    }
}

pub(crate) fn read_params(ck: &Checkpoint, prefix: &str, params: &mut ParameterSet) -> Result<(), CheckpointError> {
    let entries = params.layout().entries().to_vec();
    for e in entries {
        let values = ck.f64s_shaped(&format!("{prefix}.{}", e.name), &e.shape)?;
        params.values_mut()[e.range()].copy_from_slice(values);
    }
    Ok(())
}

/// Bootstrapped regression targets `r + gamma (1 - done) min(Q1', Q2')` with
/// clipped Gaussian smoothing on the target action.
pub fn td3_targets<R: Rng + ?Sized>(agent: &Td3Agent, batch: &[&TransitionRecord], cfg: &Td3Config, rng: &mut R) -> Result<Vec<f64>, NetError> {
    let noise = (cfg.target_noise > 0.0).then(|| Normal::new(0.0, cfg.target_noise).expect("positive noise"));
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.reward);
            }
            let next = t.next_obs_history();
            let mut a = agent.actor_target.act(&next)?;
            if let Some(n) = &noise {
                a += n.sample(rng).clamp(-cfg.target_noise_clip, cfg.target_noise_clip);
            }
            let a = a.clamp(-1.0, 1.0);
            let q1 = agent.critic1_target.q(&next, a)?;
            let q2 = agent.critic2_target.q(&next, a)?;
            Ok(t.reward + cfg.gamma * q1.min(q2))
        })
        .collect()
}

/// One TD3 update on `batch`: both critics regress to the shared targets;
/// every `policy_delay` updates the actor ascends `Q1(o, mu(o))` and all
/// targets are soft-updated.
pub fn td3_update<R: Rng + ?Sized>(agent: &mut Td3Agent, batch: &[&TransitionRecord], cfg: &Td3Config, rng: &mut R) -> Result<UpdateStats, Error> {
    if batch.is_empty() {
        return Err(Error::Contract("empty update batch".into()));
    }
    let ys = td3_targets(agent, batch, cfg, rng)?;
    let b = batch.len() as f64;
    let mut g1 = agent.critic1.0.zero_grads();
    let mut g2 = agent.critic2.0.zero_grads();
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(&ys) {
        let hist = t.obs_history();
        let (q1, c1) = agent.critic1.forward(&hist, t.action)?;
        let (q2, c2) = agent.critic2.forward(&hist, t.action)?;
        agent.critic1.backward(&c1, 2.0 * (q1 - y) / b, &mut g1)?;
        agent.critic2.backward(&c2, 2.0 * (q2 - y) / b, &mut g2)?;
        loss += ((q1 - y).powi(2) + (q2 - y).powi(2)) / b;
    }
    agent.critic1_opt.step(agent.critic1.0.params_mut(), &g1);
    agent.critic2_opt.step(agent.critic2.0.params_mut(), &g2);
    agent.updates += 1;

    let mut stats = UpdateStats { critic_loss: loss, actor_objective: None };
    if agent.updates.is_multiple_of(cfg.policy_delay.max(1)) {
        let mut ga = agent.actor.0.zero_grads();
        let mut objective = 0.0;
        for t in batch {
            let hist = t.obs_history();
            let (a, ca) = agent.actor.forward(&hist)?;
            let (q, cq) = agent.critic1.forward(&hist, a)?;
            let dq_da = agent.critic1.action_gradient(&cq)?;
            agent.actor.backward(&ca, -dq_da / b, &mut ga)?;
            objective += q / b;
        }
        agent.actor_opt.step(agent.actor.0.params_mut(), &ga);
        agent.actor_target.0.params_mut().soft_update_from(agent.actor.0.params(), cfg.tau);
        agent.critic1_target.0.params_mut().soft_update_from(agent.critic1.0.params(), cfg.tau);
        agent.critic2_target.0.params_mut().soft_update_from(agent.critic2.0.params(), cfg.tau);
        stats.actor_objective = Some(objective);
    }
    Ok(stats)
}
