//! Benchmark environments behind one reset/observe/step contract.
//!
//! Every environment is a finite-horizon episode whose score is the sum
//! of the rewards it emits. The combinatorial ones (TSP, FLP, Collect)
//! pay a single terminal reward; 2048 pays merge rewards as it goes.

pub mod collect;
pub mod fixture;
pub mod flp;
pub mod g2048;
pub mod tsp;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn;

pub use collect::Collect;
pub use flp::Flp;
pub use g2048::G2048;
pub use tsp::Tsp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    /// `n` discrete choices; the decoder emits `n` logits.
    Discrete(usize),
    /// A point in the unit square; the decoder emits 2 raw coordinates.
    Point,
}

impl ActionKind {
    /// Width of the decoder output.
    pub fn param_dim(&self) -> usize {
        match *self {
            ActionKind::Discrete(n) => n,
            ActionKind::Point => 2,
        }
    }

    /// Turns raw decoder output into an action: argmax over logits, or a
    /// per-coordinate sigmoid onto the unit square.
    pub fn interpret(&self, raw: &[f64]) -> Action {
        match *self {
            ActionKind::Discrete(_) => Action::Discrete(nn::argmax(raw)),
            ActionKind::Point => Action::Point([nn::sigmoid(raw[0]), nn::sigmoid(raw[1])]),
        }
    }

    /// Encoding of a taken action as fed back into the agent's memory.
    pub fn feedback(&self, action: &Action) -> Vec<f64> {
        match (*self, action) {
            (ActionKind::Discrete(n), Action::Discrete(a)) if *a < n => nn::one_hot(*a, n),
            (ActionKind::Point, Action::Point(p)) => p.to_vec(),
            _ => vec![0.0; self.param_dim()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Discrete(usize),
    Point([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub action: ActionKind,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> EnvSpec;

    fn observe(&self) -> Vec<f64>;

    /// Applies `action`. Actions of the wrong kind or out of range leave
    /// the state unchanged, still consume a step, and pay zero.
    fn step(&mut self, action: &Action) -> Transition;

    fn is_done(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Tsp,
    Collect,
    G2048,
    Flp,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [EnvKind::Tsp, EnvKind::Collect, EnvKind::G2048, EnvKind::Flp];

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::Tsp => "tsp",
            EnvKind::Collect => "collect",
            EnvKind::G2048 => "2048",
            EnvKind::Flp => "flp",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsp" => Ok(EnvKind::Tsp),
            "collect" => Ok(EnvKind::Collect),
            "2048" | "g2048" => Ok(EnvKind::G2048),
            "flp" => Ok(EnvKind::Flp),
            other => Err(Error::config(format!("unknown environment '{other}' (expected tsp, collect, 2048 or flp)"))),
        }
    }
}

/// Instance sizes for every environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnvSettings {
    pub tsp_cities: usize,
    pub collect_size: usize,
    pub collect_coins: usize,
    pub collect_horizon: usize,
    pub g2048_max_steps: usize,
    pub flp_clients: usize,
    pub flp_facilities: usize,
}

impl Default for EnvSettings {
    fn default() -> Self {
        EnvSettings {
            tsp_cities: 10,
            collect_size: 8,
            collect_coins: 5,
            collect_horizon: 20,
            g2048_max_steps: 500,
            flp_clients: 20,
            flp_facilities: 5,
        }
    }
}

impl EnvSettings {
    pub fn validate(&self) -> Result<()> {
        if self.tsp_cities < 2 {
            return Err(Error::config("tsp needs at least 2 cities"));
        }
        if self.collect_size < 2 || self.collect_coins + 1 > self.collect_size * self.collect_size {
            return Err(Error::config("collect grid too small for its coins"));
        }
        if self.collect_horizon == 0 || self.g2048_max_steps == 0 || self.flp_facilities == 0 || self.flp_clients == 0 {
            return Err(Error::config("environment horizons and sizes must be positive"));
        }
        Ok(())
    }

    pub fn spec(&self, kind: EnvKind) -> EnvSpec {
        match kind {
            EnvKind::Tsp => tsp::spec(self.tsp_cities),
            EnvKind::Collect => collect::spec(self.collect_size, self.collect_horizon),
            EnvKind::G2048 => g2048::spec(self.g2048_max_steps),
            EnvKind::Flp => flp::spec(self.flp_clients, self.flp_facilities),
        }
    }

    /// A fresh episode, fully determined by `seed`.
    pub fn reset(&self, kind: EnvKind, seed: u64) -> Box<dyn Environment> {
        match kind {
            EnvKind::Tsp => Box::new(Tsp::random(self.tsp_cities, seed)),
            EnvKind::Collect => Box::new(Collect::random(self.collect_size, self.collect_coins, self.collect_horizon, seed)),
            EnvKind::G2048 => Box::new(G2048::random(self.g2048_max_steps, seed)),
            EnvKind::Flp => Box::new(Flp::random(self.flp_clients, self.flp_facilities, seed)),
        }
    }
}
