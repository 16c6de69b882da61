//! Facility location, max variant: place `m` facilities to minimize the
//! largest client-to-nearest-facility distance.

use rand::Rng;

use super::{Action, ActionKind, EnvSpec, Environment, Transition};
use crate::nn;

pub fn spec(clients: usize, facilities: usize) -> EnvSpec {
    EnvSpec {
        obs_dim: 2 * clients + 2 * facilities + 1,
        action: ActionKind::Point,
        horizon: facilities,
    }
}

/// `max_i min_j d(C_i, F_j)`. Infinite when `facilities` is empty.
pub fn max_min_distance(clients: &[[f64; 2]], facilities: &[[f64; 2]]) -> f64 {
    clients
        .iter()
        .map(|c| {
            facilities
                .iter()
                .map(|f| (c[0] - f[0]).hypot(c[1] - f[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flp {
    clients: Vec<[f64; 2]>,
    facilities: Vec<[f64; 2]>,
    target: usize,
}

impl Flp {
    pub fn new(clients: Vec<[f64; 2]>, target: usize) -> Self {
        Flp {
            clients,
            facilities: Vec::with_capacity(target),
            target,
        }
    }

    pub fn random(n: usize, m: usize, seed: u64) -> Self {
        let mut rng = nn::stream_rng(seed, 0);
        Flp::new((0..n).map(|_| [rng.random(), rng.random()]).collect(), m)
    }

    pub fn clients(&self) -> &[[f64; 2]] {
        &self.clients
    }

    pub fn facilities(&self) -> &[[f64; 2]] {
        &self.facilities
    }

    pub fn objective(&self) -> f64 {
        max_min_distance(&self.clients, &self.facilities)
    }
}

impl Environment for Flp {
    fn spec(&self) -> EnvSpec {
        spec(self.clients.len(), self.target)
    }

    /// Clients, then placed facilities padded with zeros, then the
    /// fraction of facilities placed.
    fn observe(&self) -> Vec<f64> {
        let mut obs: Vec<f64> = self.clients.iter().flatten().copied().collect();
        let start = obs.len();
        obs.resize(start + 2 * self.target, 0.0);
        for (i, f) in self.facilities.iter().enumerate() {
            obs[start + 2 * i] = f[0];
            obs[start + 2 * i + 1] = f[1];
        }
        obs.push(self.facilities.len() as f64 / self.target as f64);
        obs
    }

    fn step(&mut self, action: &Action) -> Transition {
        if self.is_done() {
            return Transition { reward: 0.0, done: true };
        }
        let point = match *action {
            Action::Point(p) if p.iter().all(|x| x.is_finite()) => [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)],
            // Unusable placements still use up a facility; park it at the origin.
            _ => [0.0, 0.0],
        };
        self.facilities.push(point);
        let done = self.is_done();
        let reward = if done { -self.objective() } else { 0.0 };
        Transition { reward, done }
    }

    fn is_done(&self) -> bool {
        self.facilities.len() >= self.target
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_client_at_facility() {
        let mut env = Flp::new(vec![[0.5, 0.5]], 1);
        let t = env.step(&Action::Point([0.5, 0.5]));
        assert!(t.done);
        assert_eq!(t.reward, 0.0);
    }

    #[test]
    fn corners_to_center() {
        let mut env = Flp::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], 1);
        let t = env.step(&Action::Point([0.5, 0.5]));
        assert!((t.reward + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn reward_only_at_end() {
        let mut env = Flp::random(6, 3, 2);
        assert_eq!(env.step(&Action::Point([0.1, 0.1])).reward, 0.0);
        assert_eq!(env.step(&Action::Point([0.9, 0.9])).reward, 0.0);
        let last = env.step(&Action::Point([0.5, 0.5]));
        assert!(last.done && last.reward < 0.0);
        assert_eq!(env.observe().len(), env.spec().obs_dim);
    }
}
