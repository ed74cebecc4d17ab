//! From-scratch recurrent actor-critic networks with analytic gradients.

mod adam;
mod kernels;
mod network;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use network::{ActorNetwork, Architecture, CriticNetwork, ForwardCache, NetKind, NetworkConfig, SpatialTemporalNet};
pub use params::{ParamEntry, ParamLayout, ParameterSet};
