//! Coin collection on a square grid with a time limit.

use rand::seq::index;

use super::{Action, ActionKind, EnvSpec, Environment, Transition};
use crate::nn;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

pub fn spec(size: usize, horizon: usize) -> EnvSpec {
    EnvSpec {
        obs_dim: 2 * size * size,
        action: ActionKind::Discrete(4),
        horizon,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collect {
    size: usize,
    coins: Vec<bool>,
    agent: (usize, usize),
    t: usize,
    horizon: usize,
    initial_coins: usize,
}

impl Collect {
    /// Panics if `agent` is off the grid or `coins` has the wrong length.
    pub fn new(size: usize, coins: Vec<bool>, agent: (usize, usize), horizon: usize) -> Self {
        assert_eq!(coins.len(), size * size);
        assert!(agent.0 < size && agent.1 < size, "agent off the grid");
        let initial_coins = coins.iter().filter(|&&c| c).count();
        Collect {
            size,
            coins,
            agent,
            t: 0,
            horizon,
            initial_coins,
        }
    }

    /// Agent and coins on distinct tiles drawn uniformly.
    pub fn random(size: usize, n_coins: usize, horizon: usize, seed: u64) -> Self {
        let mut rng = nn::stream_rng(seed, 0);
        let tiles = index::sample(&mut rng, size * size, n_coins + 1);
        let mut coins = vec![false; size * size];
        let mut iter = tiles.iter();
        let agent_tile = iter.next().expect("at least the agent tile");
        for tile in iter {
            coins[tile] = true;
        }
        Collect::new(size, coins, (agent_tile / size, agent_tile % size), horizon)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn agent(&self) -> (usize, usize) {
        self.agent
    }

    pub fn coin_at(&self, row: usize, col: usize) -> bool {
        self.coins[row * self.size + col]
    }

    pub fn remaining(&self) -> usize {
        self.coins.iter().filter(|&&c| c).count()
    }

    pub fn initial_coins(&self) -> usize {
        self.initial_coins
    }

    pub fn timestep(&self) -> usize {
        self.t
    }

    /// Position after moving in `direction`, clamped at the border.
    pub fn moved(size: usize, (row, col): (usize, usize), direction: usize) -> (usize, usize) {
        match direction {
            UP => (row.saturating_sub(1), col),
            DOWN => ((row + 1).min(size - 1), col),
            LEFT => (row, col.saturating_sub(1)),
            RIGHT => (row, (col + 1).min(size - 1)),
            _ => (row, col),
        }
    }
}

impl Environment for Collect {
    fn spec(&self) -> EnvSpec {
        spec(self.size, self.horizon)
    }

    /// Coin plane then agent plane, each row-major.
    fn observe(&self) -> Vec<f64> {
        let cells = self.size * self.size;
        let mut obs = vec![0.0; 2 * cells];
        for (i, &c) in self.coins.iter().enumerate() {
            if c {
                obs[i] = 1.0;
            }
        }
        obs[cells + self.agent.0 * self.size + self.agent.1] = 1.0;
        obs
    }

    fn step(&mut self, action: &Action) -> Transition {
        if self.t >= self.horizon {
            return Transition { reward: 0.0, done: true };
        }
        if let Action::Discrete(d) = *action {
            self.agent = Collect::moved(self.size, self.agent, d);
            self.coins[self.agent.0 * self.size + self.agent.1] = false;
        }
        self.t += 1;
        let done = self.t == self.horizon;
        let reward = if done { -(self.remaining() as f64) } else { 0.0 };
        Transition { reward, done }
    }

    fn is_done(&self) -> bool {
        self.t >= self.horizon
    }
}
