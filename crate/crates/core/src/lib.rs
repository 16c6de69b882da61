//! PiZero: an agent that plans with Monte Carlo tree search inside a
//! learned abstract space, trained end to end on episode score with
//! distributed evolution strategies.
//!
//! The crate is organized bottom-up:
//!
//! * [`nn`]: forward passes over one flat parameter vector.
//! * [`model`]: encoder, abstract dynamics, prediction, chance, decoder
//!   and memory, plus the [`model::AbstractModel`] view the planner uses.
//! * [`planner`]: pUCT tree search with optional chance nodes.
//! * [`agent`]: the per-step policy and episode runner.
//! * [`envs`]: TSP, Collect, 2048 and facility location.
//! * [`es`]: antithetic ES, Adam, and the allgather worker protocol.
//! * [`stats`]: BCa bootstrap intervals.
//! * [`run`]: configuration, checkpoints and the train/eval/plot-data
//!   commands behind the `pizero` binary.

pub mod agent;
pub mod envs;
pub mod error;
pub mod es;
pub mod model;
pub mod nn;
pub mod planner;
pub mod run;
pub mod stats;

pub use error::{Error, Result};
