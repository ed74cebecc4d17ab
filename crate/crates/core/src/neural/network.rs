//! Spatial-temporal recurrent actor and critic.
//!
//! For every lag `l = 0..=h` a separate spatial encoder embeds each target
//! entry (dense, tanh), runs an LSTM over the targets in their sorted order
//! and concatenates the final hidden state with an embedding of the own
//! features. The `h + 1` encodings, oldest first, feed a temporal LSTM whose
//! final state goes through a dense tanh layer and a scalar output. The
//! critic appends the action to the temporal state before the head; the
//! actor squashes its output with `tanh`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernels::{Dense, LstmCell, LstmTrace};
use super::params::{ParamLayout, ParameterSet};
use crate::error::NetError;
use crate::observation::{Observation, OWN_DIM, TARGET_DIM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// Width of every dense layer and LSTM state.
    pub hidden: usize,
    /// Number of past observations `h`; networks see `h + 1` observations.
    pub history: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { hidden: 64, history: 2 }
    }
}

impl NetworkConfig {
    pub fn lags(&self) -> usize {
        self.history + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetKind {
    Actor,
    Critic,
}

#[derive(Debug, Clone, PartialEq)]
struct SpatialEncoder {
    target_embed: Dense,
    spatial_lstm: LstmCell,
    own_embed: Dense,
}

/// Layer wiring of one network; shared by a network and its target copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    kind: NetKind,
    hidden: usize,
    /// Indexed by lag: `encoders[0]` sees the newest observation.
    encoders: Vec<SpatialEncoder>,
    temporal: LstmCell,
    head_hidden: Dense,
    head_out: Dense,
    layout: Arc<ParamLayout>,
}

impl Architecture {
    pub fn new(kind: NetKind, cfg: &NetworkConfig) -> Self {
        let h = cfg.hidden;
        let mut layout = ParamLayout::default();
        let dense = |layout: &mut ParamLayout, name: &str, inp: usize, out: usize| {
            let w = layout.push(format!("{name}.weight"), vec![out, inp]);
            let b = layout.push(format!("{name}.bias"), vec![out]);
            Dense { w, b, inp, out }
        };
        let lstm = |layout: &mut ParamLayout, name: &str, inp: usize| {
            let w = layout.push(format!("{name}.weight"), vec![4 * h, inp + h]);
            let b = layout.push(format!("{name}.bias"), vec![4 * h]);
            LstmCell { w, b, inp, hid: h }
        };
        let mut encoders = Vec::with_capacity(cfg.lags());
        for l in 0..cfg.lags() {
            let target_embed = dense(&mut layout, &format!("lag{l}.target_embed"), TARGET_DIM, h);
            let spatial_lstm = lstm(&mut layout, &format!("lag{l}.spatial_lstm"), h);
            let own_embed = dense(&mut layout, &format!("lag{l}.own_embed"), OWN_DIM, h);
            encoders.push(SpatialEncoder { target_embed, spatial_lstm, own_embed });
        }
        let temporal = lstm(&mut layout, "temporal_lstm", 2 * h);
        let head_in = if kind == NetKind::Critic { h + 1 } else { h };
        let head_hidden = dense(&mut layout, "head.hidden", head_in, h);
        let head_out = dense(&mut layout, "head.out", h, 1);
        Self { kind, hidden: h, encoders, temporal, head_hidden, head_out, layout: Arc::new(layout) }
    }

    pub fn kind(&self) -> NetKind {
        self.kind
    }

    pub fn lags(&self) -> usize {
        self.encoders.len()
    }

    pub fn layout(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    /// Fan-in scaled uniform initialization; LSTM biases are zero except the
    /// forget gate, which starts at one.
    pub fn init_parameters<R: Rng + ?Sized>(&self, rng: &mut R) -> ParameterSet {
        let mut p = ParameterSet::zeros(self.layout.clone());
        let entries: Vec<_> = self.layout.entries().to_vec();
        for e in &entries {
            let is_lstm = e.name.contains("lstm");
            if e.name.ends_with(".weight") {
                p.uniform(&e.name, 1.0 / (e.shape[1] as f64).sqrt(), rng);
            } else if is_lstm {
                let h = self.hidden;
                p.group_mut(&e.name).expect("group")[h..2 * h].iter_mut().for_each(|v| *v = 1.0);
            } else {
                let w = e.name.replace(".bias", ".weight");
                let fan_in = self.layout.entry(&w).expect("weight for bias").shape[1];
                p.uniform(&e.name, 1.0 / (fan_in as f64).sqrt(), rng);
            }
        }
        p
    }
}

#[derive(Debug, Clone)]
struct EncoderCache {
    lag: usize,
    /// `n x TARGET_DIM`
    targets: Vec<f64>,
    /// `n x H`, post-tanh
    embeds: Vec<f64>,
    spatial: LstmTrace,
    own: [f64; OWN_DIM],
    own_embed: Vec<f64>,
}

/// Activations of one forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    kind: NetKind,
    hidden: usize,
    /// Chronological order, oldest first.
    encoders: Vec<EncoderCache>,
    temporal: LstmTrace,
    head_in: Vec<f64>,
    head_hidden: Vec<f64>,
    output: f64,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.output
    }
}

/// A network's wiring plus its parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialTemporalNet {
    arch: Arc<Architecture>,
    params: ParameterSet,
}

impl SpatialTemporalNet {
    pub fn new<R: Rng + ?Sized>(kind: NetKind, cfg: &NetworkConfig, rng: &mut R) -> Self {
        let arch = Arc::new(Architecture::new(kind, cfg));
        let params = arch.init_parameters(rng);
        Self { arch, params }
    }

    pub fn with_params(arch: Arc<Architecture>, params: ParameterSet) -> Result<Self, NetError> {
        if params.layout() != arch.layout() {
            return Err(NetError::Layout("parameter layout does not match architecture".into()));
        }
        Ok(Self { arch, params })
    }

    pub fn architecture(&self) -> &Arc<Architecture> {
        &self.arch
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    pub fn zero_grads(&self) -> ParameterSet {
        ParameterSet::zeros(self.arch.layout.clone())
    }

    fn check_history(&self, history: &[&Observation]) -> Result<(), NetError> {
        if history.len() != self.arch.lags() {
            return Err(NetError::HistoryLength { expected: self.arch.lags(), got: history.len() });
        }
        Ok(())
    }

    fn encode(&self, lag: usize, obs: &Observation) -> EncoderCache {
        let p = self.params.values();
        let enc = &self.arch.encoders[lag];
        let h = self.arch.hidden;
        let n = obs.targets.len();
        let mut targets = Vec::with_capacity(n * TARGET_DIM);
        for t in &obs.targets {
            targets.extend_from_slice(&t.to_array());
        }
        let mut embeds = vec![0.0; n * h];
        for j in 0..n {
            enc.target_embed.forward_tanh(p, &targets[j * TARGET_DIM..(j + 1) * TARGET_DIM], &mut embeds[j * h..(j + 1) * h]);
        }
        let spatial = enc.spatial_lstm.forward_seq(p, &embeds);
        let own = obs.own.to_array();
        let mut own_embed = vec![0.0; h];
        enc.own_embed.forward_tanh(p, &own, &mut own_embed);
        EncoderCache { lag, targets, embeds, spatial, own, own_embed }
    }

    /// Forward pass over `history` (oldest observation first).
    pub fn forward(&self, history: &[&Observation], action: Option<f64>) -> Result<ForwardCache, NetError> {
        self.check_history(history)?;
        if (self.arch.kind == NetKind::Critic) != action.is_some() {
            return Err(NetError::CacheMismatch("critics need an action, actors must not get one"));
        }
        let p = self.params.values();
        let h = self.arch.hidden;
        let lags = self.arch.lags();
        let encoders: Vec<EncoderCache> = history.iter().enumerate().map(|(k, obs)| self.encode(lags - 1 - k, obs)).collect();
        let mut z = vec![0.0; lags * 2 * h];
        for (k, e) in encoders.iter().enumerate() {
            z[k * 2 * h..k * 2 * h + h].copy_from_slice(&e.own_embed);
            z[k * 2 * h + h..(k + 1) * 2 * h].copy_from_slice(&e.spatial.h);
        }
        let temporal = self.arch.temporal.forward_seq(p, &z);
        let mut head_in = temporal.h.clone();
        if let Some(a) = action {
            head_in.push(a);
        }
        let mut head_hidden = vec![0.0; h];
        self.arch.head_hidden.forward_tanh(p, &head_in, &mut head_hidden);
        let mut out = [0.0];
        self.arch.head_out.forward(p, &head_hidden, &mut out);
        let output = match self.arch.kind {
            NetKind::Actor => out[0].tanh(),
            NetKind::Critic => out[0],
        };
        Ok(ForwardCache { kind: self.arch.kind, hidden: h, encoders, temporal, head_in, head_hidden, output })
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<(), NetError> {
        if cache.kind != self.arch.kind {
            return Err(NetError::CacheMismatch("network kind"));
        }
        if cache.hidden != self.arch.hidden || cache.encoders.len() != self.arch.lags() {
            return Err(NetError::CacheMismatch("network shape"));
        }
        Ok(())
    }

    /// Gradient at the head input (temporal state, plus action for critics)
    /// and head pre-activations. Parameter gradients go to `g` when present.
    fn backward_head(&self, cache: &ForwardCache, upstream: f64, mut g: Option<&mut [f64]>) -> Vec<f64> {
        let p = self.params.values();
        let dout = match self.arch.kind {
            NetKind::Actor => upstream * (1.0 - cache.output * cache.output),
            NetKind::Critic => upstream,
        };
        let mut du = vec![0.0; self.arch.hidden];
        match g.as_deref_mut() {
            Some(g) => self.arch.head_out.backward(p, g, &cache.head_hidden, &[dout], Some(&mut du)),
            None => {
                let w = &p[self.arch.head_out.w..self.arch.head_out.w + self.arch.hidden];
                du.iter_mut().zip(w).for_each(|(d, wk)| *d = dout * wk);
            }
        }
        let dpre: Vec<f64> = du.iter().zip(&cache.head_hidden).map(|(d, u)| d * (1.0 - u * u)).collect();
        let mut dhead_in = vec![0.0; cache.head_in.len()];
        match g {
            Some(g) => self.arch.head_hidden.backward(p, g, &cache.head_in, &dpre, Some(&mut dhead_in)),
            None => {
                let hh = &self.arch.head_hidden;
                let w = &p[hh.w..hh.w + hh.inp * hh.out];
                for (r, &d) in dpre.iter().enumerate() {
                    super::kernels::axpy(d, &w[r * hh.inp..(r + 1) * hh.inp], &mut dhead_in);
                }
            }
        }
        dhead_in
    }

    /// Accumulates `upstream * d(output)/d(params)` into `grads`. Returns the
    /// gradient with respect to the action for critics.
    pub fn backward(&self, cache: &ForwardCache, upstream: f64, grads: &mut ParameterSet) -> Result<Option<f64>, NetError> {
        self.check_cache(cache)?;
        if grads.layout() != self.params.layout() {
            return Err(NetError::Layout("gradient layout does not match network".into()));
        }
        let p = self.params.values();
        let h = self.arch.hidden;
        let g = grads.values_mut();
        let dhead_in = self.backward_head(cache, upstream, Some(g));
        let d_action = (self.arch.kind == NetKind::Critic).then(|| dhead_in[h]);
        let dz = self.arch.temporal.backward_seq(p, g, &cache.temporal, &dhead_in[..h]);
        for (k, ec) in cache.encoders.iter().enumerate() {
            let enc = &self.arch.encoders[ec.lag];
            let dz_k = &dz[k * 2 * h..(k + 1) * 2 * h];
            let d_own: Vec<f64> = dz_k[..h].iter().zip(&ec.own_embed).map(|(d, e)| d * (1.0 - e * e)).collect();
            enc.own_embed.backward(p, g, &ec.own, &d_own, None);
            let d_embeds = enc.spatial_lstm.backward_seq(p, g, &ec.spatial, &dz_k[h..]);
            let dpre: Vec<f64> = d_embeds.iter().zip(&ec.embeds).map(|(d, e)| d * (1.0 - e * e)).collect();
            enc.target_embed.backward_many(p, g, &ec.targets, &dpre, ec.spatial.steps);
        }
        Ok(d_action)
    }

    /// `dQ/da` of a critic forward pass, without touching parameter gradients.
    pub fn action_gradient(&self, cache: &ForwardCache) -> Result<f64, NetError> {
        self.check_cache(cache)?;
        if self.arch.kind != NetKind::Critic {
            return Err(NetError::CacheMismatch("action gradient needs a critic"));
        }
        Ok(self.backward_head(cache, 1.0, None)[self.arch.hidden])
    }
}

/// Deterministic policy `history -> action in [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorNetwork(pub SpatialTemporalNet);

/// Action-value estimate `(history, action) -> q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticNetwork(pub SpatialTemporalNet);

impl ActorNetwork {
    pub fn new<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Self {
        Self(SpatialTemporalNet::new(NetKind::Actor, cfg, rng))
    }

    pub fn forward(&self, history: &[&Observation]) -> Result<(f64, ForwardCache), NetError> {
        let cache = self.0.forward(history, None)?;
        Ok((cache.output, cache))
    }

    pub fn act(&self, history: &[&Observation]) -> Result<f64, NetError> {
        Ok(self.0.forward(history, None)?.output)
    }

    pub fn backward(&self, cache: &ForwardCache, upstream: f64, grads: &mut ParameterSet) -> Result<(), NetError> {
        self.0.backward(cache, upstream, grads).map(|_| ())
    }
}

impl CriticNetwork {
    pub fn new<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Self {
        Self(SpatialTemporalNet::new(NetKind::Critic, cfg, rng))
    }

    pub fn forward(&self, history: &[&Observation], action: f64) -> Result<(f64, ForwardCache), NetError> {
        let cache = self.0.forward(history, Some(action))?;
        Ok((cache.output, cache))
    }

    pub fn q(&self, history: &[&Observation], action: f64) -> Result<f64, NetError> {
        Ok(self.0.forward(history, Some(action))?.output)
    }

    /// Accumulates parameter gradients and returns `upstream * dQ/da`.
    pub fn backward(&self, cache: &ForwardCache, upstream: f64, grads: &mut ParameterSet) -> Result<f64, NetError> {
        Ok(self.0.backward(cache, upstream, grads)?.expect("critic has an action input"))
    }

    pub fn action_gradient(&self, cache: &ForwardCache) -> Result<f64, NetError> {
        self.0.action_gradient(cache)
    }
}
