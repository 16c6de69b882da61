//! OpenAI-style natural evolution strategies.
//!
//! Each generation samples `|I|` Gaussian directions `z_i`, scores the
//! antithetic pair `θ ± σ z_i`, and forms the pseudogradient
//! `g = 1 / (2 σ |I|) Σ δ_i z_i` with `δ_i = f(θ + σ z_i) - f(θ - σ z_i)`.
//! `g` drives an Adam ascent step.
//!
//! Every `z_i` is a pure function of `(seed, generation, i)`, so workers
//! only ever exchange the scalar deltas (see [`worker`]).

pub mod adam;
pub mod transport;
pub mod wire;
pub mod worker;

use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

pub use adam::{adam_update, AdamState};

use crate::agent::{Agent, AgentConfig};
use crate::envs::{EnvKind, EnvSettings};
use crate::error::{Error, Result};
use crate::nn::{self, ParamLayout, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsConfig {
    pub sigma: f64,
    pub learning_rate: f64,
    /// Antithetic pairs per generation, `|I|`.
    pub pairs: usize,
    /// Episodes averaged into one fitness evaluation.
    pub episodes_per_eval: usize,
    pub seed: u64,
    pub rank_shaping: bool,
}

impl Default for EsConfig {
    fn default() -> Self {
        EsConfig::from_batch(1000, 1, 0.1, 1e-3)
    }
}

impl EsConfig {
    /// Sizes the population so that `2 * pairs * episodes_per_eval`
    /// episodes make up one batch.
    pub fn from_batch(batch: usize, episodes_per_eval: usize, sigma: f64, learning_rate: f64) -> Self {
        EsConfig {
            sigma,
            learning_rate,
            pairs: (batch / (2 * episodes_per_eval.max(1))).max(1),
            episodes_per_eval,
            seed: 0,
            rank_shaping: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.pairs == 0 || self.pairs > u32::MAX as usize {
            return Err(Error::config("population must hold between 1 and 2^32 - 1 pairs"));
        }
        if self.episodes_per_eval == 0 {
            return Err(Error::config("episodes per evaluation must be positive"));
        }
        Ok(())
    }
}

/// A black-box score to maximize. `key` fixes every random choice the
/// evaluation makes, so both members of an antithetic pair see the same
/// episodes.
pub trait Objective: Sync {
    fn evaluate(&self, params: &[f64], key: u64) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&[f64], u64) -> f64 + Sync,
{
    fn evaluate(&self, params: &[f64], key: u64) -> f64 {
        self(params, key)
    }
}

/// Mean episode score of the agent.
pub struct AgentObjective {
    pub agent: AgentConfig,
    pub env: EnvKind,
    pub settings: EnvSettings,
    pub layout: Arc<ParamLayout>,
    pub episodes: usize,
}

impl AgentObjective {
    pub fn new(agent: AgentConfig, env: EnvKind, settings: EnvSettings, episodes: usize) -> Result<Self> {
        agent.validate()?;
        settings.validate()?;
        let layout = Arc::new(agent.model_dims(&settings.spec(env)).layout()?);
        Ok(AgentObjective {
            agent,
            env,
            settings,
            layout,
            episodes,
        })
    }

    /// Initial parameters drawn from `seed`.
    pub fn initial_params(&self, seed: u64) -> Vec<f64> {
        self.layout.init_params(nn::mix_seed(&[seed, INIT_TAG]))
    }

    /// Scores of `episodes` episodes with seeds derived from `key`.
    pub fn episode_scores(&self, params: &[f64], key: u64, episodes: usize) -> Result<Vec<f64>> {
        let params = ParamVector::new(self.layout.clone(), params.to_vec())?;
        let spec = self.settings.spec(self.env);
        let agent = Agent::new(self.agent, &spec, &params)?;
        (0..episodes)
            .map(|e| {
                agent
                    .run_episode(|s| self.settings.reset(self.env, s), nn::mix_seed(&[key, e as u64]), false)
                    .map(|r| r.score)
            })
            .collect()
    }
}

impl Objective for AgentObjective {
    fn evaluate(&self, params: &[f64], key: u64) -> f64 {
        match self.episode_scores(params, key, self.episodes) {
            Ok(scores) => scores.iter().sum::<f64>() / scores.len() as f64,
            Err(_) => f64::NAN,
        }
    }
}

const INIT_TAG: u64 = 0x1A17;
const EPISODE_TAG: u64 = 0xE915;

/// `z_i` for member `member` of `generation`.
pub fn perturbation(seed: u64, generation: u64, member: usize, dim: usize) -> Vec<f64> {
    nn::seeded_gaussian(seed, (generation << 32) | member as u64, dim)
}

/// Episode randomness shared by both signs of a pair.
pub fn episode_key(seed: u64, generation: u64, member: usize) -> u64 {
    nn::mix_seed(&[seed, EPISODE_TAG, generation, member as u64])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScores {
    pub delta: f64,
    pub plus: f64,
    pub minus: f64,
}

/// `f(θ + σz) - f(θ - σz)` with both evaluations under `key`.
pub fn antithetic_delta<F: Objective + ?Sized>(theta: &[f64], z: &[f64], sigma: f64, f: &F, key: u64) -> Result<PairScores> {
    if z.len() != theta.len() {
        return Err(Error::dim("perturbation", theta.len(), z.len()));
    }
    let shifted = |sign: f64| -> Vec<f64> { theta.iter().zip(z).map(|(t, z)| t + sign * sigma * z).collect() };
    let plus = f.evaluate(&shifted(1.0), key);
    let minus = f.evaluate(&shifted(-1.0), key);
    for score in [plus, minus] {
        if !score.is_finite() {
            return Err(Error::NonFiniteScore {
                generation: 0,
                member: 0,
                score,
            });
        }
    }
    Ok(PairScores {
        delta: plus - minus,
        plus,
        minus,
    })
}

/// Evaluates `members` of `generation` in parallel, in member order.
pub fn evaluate_members<F: Objective + ?Sized>(
    theta: &[f64],
    members: &[usize],
    generation: u64,
    config: &EsConfig,
    f: &F,
) -> Vec<Result<PairScores>> {
    members
        .par_iter()
        .map(|&i| {
            let z = perturbation(config.seed, generation, i, theta.len());
            antithetic_delta(theta, &z, config.sigma, f, episode_key(config.seed, generation, i)).map_err(|e| match e {
                Error::NonFiniteScore { score, .. } => Error::NonFiniteScore {
                    generation,
                    member: i,
                    score,
                },
                other => other,
            })
        })
        .collect()
}

/// Centered ranks in `[-0.5, 0.5]`; ties share their average rank.
pub fn centered_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg / (n - 1) as f64 - 0.5;
        }
        i = j + 1;
    }
    ranks
}

/// `g = 1 / (2 σ |I|) Σ δ_i z_i`, regenerating each `z_i` locally and
/// accumulating in member order.
pub fn pseudogradient(deltas: &[f64], seed: u64, generation: u64, sigma: f64, dim: usize, rank_shaping: bool) -> Vec<f64> {
    let weights = if rank_shaping { centered_ranks(deltas) } else { deltas.to_vec() };
    let scale = 1.0 / (2.0 * sigma * deltas.len() as f64);
    let mut g = vec![0.0; dim];
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let z = perturbation(seed, generation, i, dim);
        for (gj, zj) in g.iter_mut().zip(&z) {
            *gj += w * zj;
        }
    }
    for gj in &mut g {
        *gj *= scale;
    }
    g
}

/// Fixed-point score accumulator (`2^-32` resolution). Integer sums do
/// not depend on how members are split across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScoreSum(pub i64);

impl ScoreSum {
    const SCALE: f64 = 4_294_967_296.0;

    pub fn add(&mut self, score: f64) {
        self.0 = self.0.wrapping_add((score * Self::SCALE).round() as i64);
    }

    pub fn merge(&mut self, other: ScoreSum) {
        self.0 = self.0.wrapping_add(other.0);
    }

    pub fn value(&self) -> f64 {
        self.0 as f64 / Self::SCALE
    }
}

/// First eight bytes of SHA-256 over the little-endian parameter bytes.
pub fn theta_hash(theta: &[f64]) -> u64 {
    let mut h = Sha256::new();
    for v in theta {
        h.update(v.to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Parameters, optimizer state and the next generation to run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub theta: Vec<f64>,
    pub adam: AdamState,
    pub generation: u64,
}

impl TrainerState {
    pub fn new(theta: Vec<f64>) -> Self {
        let adam = AdamState::new(theta.len());
        TrainerState {
            theta,
            adam,
            generation: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationReport {
    pub generation: u64,
    /// Mean score over all `2 |I|` perturbed evaluations.
    pub mean_score: f64,
    pub grad_norm: f64,
    pub wall_time: f64,
    /// Hash of the parameters after the update.
    pub theta_hash: u64,
}

/// Applies one generation's gathered deltas: pseudogradient then Adam.
/// Returns the pseudogradient norm.
pub fn apply_deltas(state: &mut TrainerState, deltas: &[f64], config: &EsConfig) -> Result<f64> {
    let g = pseudogradient(deltas, config.seed, state.generation, config.sigma, state.theta.len(), config.rank_shaping);
    adam_update(&mut state.adam, &mut state.theta, &g, config.learning_rate)?;
    state.generation += 1;
    Ok(g.iter().map(|x| x * x).sum::<f64>().sqrt())
}
