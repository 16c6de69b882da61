//! The per-step policy and whole-episode evaluation.
//!
//! One step: encode memory and observation into a root abstract state,
//! search from it (or read the prediction head directly when the planner
//! is off), decode the chosen abstract action into a concrete action, and
//! fold the observation and action into memory.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::envs::{Action, ActionKind, EnvSpec, Environment};
use crate::error::{Error, Result};
use crate::model::{AbstractModel, AbstractState, Memory, ModelDims, PiZeroNet};
use crate::nn::{self, ParamVector};
use crate::planner::{self, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub state_dim: usize,
    pub memory_dim: usize,
    pub abstract_actions: usize,
    pub chance_outcomes: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub budget: usize,
    pub discount: f64,
    pub noise_width: usize,
    pub planner: bool,
    pub chance_nodes: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            state_dim: 64,
            memory_dim: 64,
            abstract_actions: 4,
            chance_outcomes: 3,
            hidden_layers: 1,
            hidden_width: 64,
            budget: 10,
            discount: 1.0,
            noise_width: 0,
            planner: true,
            chance_nodes: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::config("simulation budget must be at least 1"));
        }
        if !(self.discount.is_finite() && (0.0..=1.0).contains(&self.discount)) {
            return Err(Error::config("discount must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn model_dims(&self, env: &EnvSpec) -> ModelDims {
        ModelDims {
            obs_dim: env.obs_dim,
            action_dim: env.action.param_dim(),
            action_feedback_dim: env.action.param_dim(),
            state_dim: self.state_dim,
            memory_dim: self.memory_dim,
            abstract_actions: self.abstract_actions,
            chance_outcomes: self.chance_outcomes,
            hidden_layers: self.hidden_layers,
            hidden_width: self.hidden_width,
            noise_width: self.noise_width,
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            budget: self.budget,
            discount: self.discount,
            chance_nodes: self.chance_nodes,
            ..SearchConfig::default()
        }
    }
}

/// Picks the root abstract action, by search or reactively.
pub fn choose_abstract_action<M, R>(model: &M, root: &AbstractState, search: &SearchConfig, planner_on: bool, rng: &mut R) -> usize
where
    M: AbstractModel + ?Sized,
    R: Rng + ?Sized,
{
    if planner_on {
        planner::run_search(model, root.clone(), search, rng).action
    } else {
        planner::reactive_action(model, root)
    }
}

/// Independent random streams of one episode.
pub struct EpisodeStreams {
    pub env_seed: u64,
    pub chance: ChaCha20Rng,
    pub noise: ChaCha20Rng,
}

impl EpisodeStreams {
    pub fn new(seed: u64) -> Self {
        EpisodeStreams {
            env_seed: nn::mix_seed(&[seed, 0]),
            chance: nn::stream_rng(seed, 1),
            noise: nn::stream_rng(seed, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub abstract_action: usize,
    pub action: Action,
    pub memory: Memory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub obs: Vec<f64>,
    pub abstract_action: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub score: f64,
    pub steps: usize,
    pub trace: Option<Vec<TraceStep>>,
}

/// An agent bound to one parameter vector and one environment shape.
pub struct Agent<'a> {
    config: AgentConfig,
    action_kind: ActionKind,
    net: PiZeroNet<'a>,
}

impl<'a> Agent<'a> {
    pub fn new(config: AgentConfig, env: &EnvSpec, params: &'a ParamVector) -> Result<Self> {
        config.validate()?;
        let net = PiZeroNet::new(config.model_dims(env), params)?;
        Ok(Agent {
            config,
            action_kind: env.action,
            net,
        })
    }

    pub fn net(&self) -> &PiZeroNet<'a> {
        &self.net
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn initial_memory(&self) -> Memory {
        Memory::zeros(self.config.memory_dim)
    }

    pub fn step(&self, memory: &Memory, obs: &[f64], streams: &mut EpisodeStreams) -> Result<StepOutput> {
        let root = self.net.encode(memory, obs)?;
        let abstract_action =
            choose_abstract_action(&self.net, &root, &self.config.search_config(), self.config.planner, &mut streams.chance);
        let noise: Vec<f64> = (0..self.config.noise_width)
            .map(|_| streams.noise.sample(StandardNormal))
            .collect();
        let raw = self.net.decode(&root, abstract_action, &noise)?;
        let action = self.action_kind.interpret(&raw);
        let memory = self.net.memory_update(memory, obs, &self.action_kind.feedback(&action))?;
        Ok(StepOutput {
            abstract_action,
            action,
            memory,
        })
    }

    /// Plays one episode from `m0 = 0` and returns its score.
    pub fn run_episode<F>(&self, make_env: F, seed: u64, keep_trace: bool) -> Result<EpisodeRecord>
    where
        F: FnOnce(u64) -> Box<dyn Environment>,
    {
        let mut streams = EpisodeStreams::new(seed);
        let mut env = make_env(streams.env_seed);
        let horizon = env.spec().horizon;
        let mut memory = self.initial_memory();
        let mut score = 0.0;
        let mut steps = 0;
        let mut trace = keep_trace.then(Vec::new);
        while steps < horizon && !env.is_done() {
            let obs = env.observe();
            let out = self.step(&memory, &obs, &mut streams)?;
            score += env.step(&out.action).reward;
            steps += 1;
            if let Some(t) = trace.as_mut() {
                t.push(TraceStep {
                    obs,
                    abstract_action: out.abstract_action,
                    action: out.action,
                });
            }
            memory = out.memory;
        }
        Ok(EpisodeRecord {
            seed,
            score,
            steps,
            trace,
        })
    }
}
