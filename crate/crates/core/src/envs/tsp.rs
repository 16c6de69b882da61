//! Traveling salesman by in-place swaps.
//!
//! At step `t` the agent names a city; it trades places with whatever
//! city currently sits at position `t`. After `n` steps the closed tour
//! through the resulting order is scored by its negative length.

use rand::Rng;

use super::{Action, ActionKind, EnvSpec, Environment, Transition};
use crate::nn;

pub fn spec(n: usize) -> EnvSpec {
    EnvSpec {
        obs_dim: 2 * n + 1,
        action: ActionKind::Discrete(n),
        horizon: n,
    }
}

/// Length of the closed tour visiting `cities` in `order`.
pub fn tour_length(cities: &[[f64; 2]], order: &[usize]) -> f64 {
    let n = order.len();
    (0..n)
        .map(|i| {
            let a = cities[order[i]];
            let b = cities[order[(i + 1) % n]];
            (a[0] - b[0]).hypot(a[1] - b[1])
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tsp {
    cities: Vec<[f64; 2]>,
    order: Vec<usize>,
    t: usize,
}

impl Tsp {
    pub fn new(cities: Vec<[f64; 2]>) -> Self {
        let order = (0..cities.len()).collect();
        Tsp { cities, order, t: 0 }
    }

    /// `n` cities uniform on the unit square.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = nn::stream_rng(seed, 0);
        let cities = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        Tsp::new(cities)
    }

    pub fn cities(&self) -> &[[f64; 2]] {
        &self.cities
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn timestep(&self) -> usize {
        self.t
    }

    pub fn tour_length(&self) -> f64 {
        tour_length(&self.cities, &self.order)
    }
}

impl Environment for Tsp {
    fn spec(&self) -> EnvSpec {
        spec(self.cities.len())
    }

    /// Row-major city coordinates followed by `t / n`.
    fn observe(&self) -> Vec<f64> {
        let mut obs: Vec<f64> = self.cities.iter().flat_map(|c| c.iter().copied()).collect();
        obs.push(self.t as f64 / self.cities.len() as f64);
        obs
    }

    fn step(&mut self, action: &Action) -> Transition {
        let n = self.cities.len();
        if self.t >= n {
            return Transition { reward: 0.0, done: true };
        }
        if let Action::Discrete(city) = *action {
            if city < n {
                let pos = self.order.iter().position(|&c| c == city).expect("order is a permutation");
                self.order.swap(self.t, pos);
            }
        }
        self.t += 1;
        let done = self.t == n;
        let reward = if done { -self.tour_length() } else { 0.0 };
        Transition { reward, done }
    }

    fn is_done(&self) -> bool {
        self.t >= self.cities.len()
    }
}
