//! Terminal-airspace arrival simulation for eVTOL traffic, a recurrent
//! TD3 trainer for a shared decentralized heading policy, and the
//! evaluation studies built on top of them.

pub mod checkpoint;
pub mod config;
pub mod environment;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod neural;
pub mod observation;
pub mod reward;
pub mod schedule;
pub mod training;

pub use config::FreeflightConfig;
pub use error::{Error, Result};
