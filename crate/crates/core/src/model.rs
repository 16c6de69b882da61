//! The learned functions of the agent.
//!
//! [`AbstractModel`] is the only view the planner gets: it maps abstract
//! states and abstract action indices to rewards, successors, values and
//! priors, and never touches an environment. [`PiZeroNet`] implements it
//! on top of a [`ParamVector`] and adds the three functions that do see
//! concrete data: the encoder, the decoder and the memory update.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nn::{self, ComponentShape, GruSpec, MlpSpec, ParamLayout, ParamVector};

pub const ENCODER: &str = "encoder";
pub const DYNAMICS: &str = "dynamics";
pub const DYNAMICS_REWARD: &str = "dynamics.reward";
pub const PREDICTION: &str = "prediction";
pub const CHANCE: &str = "chance";
pub const CHANCE_DYNAMICS: &str = "chance.dynamics";
pub const CHANCE_REWARD: &str = "chance.reward";
pub const DECODER: &str = "decoder";
pub const MEMORY: &str = "memory";

/// A point in the learned search space.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractState(pub Vec<f64>);

impl AbstractState {
    pub fn zeros(dim: usize) -> Self {
        AbstractState(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Recurrent memory carried across steps of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Memory(pub Vec<f64>);

impl Memory {
    /// The initial memory `m0`.
    pub fn zeros(dim: usize) -> Self {
        Memory(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub logits: Vec<f64>,
}

impl Prediction {
    pub fn priors(&self) -> Vec<f64> {
        nn::softmax(&self.logits)
    }
}

/// Everything a search over abstract states may ask of a model.
pub trait AbstractModel {
    /// Number of abstract actions `k`.
    fn num_actions(&self) -> usize;

    /// Number of chance outcomes `c`.
    fn num_outcomes(&self) -> usize;

    fn dynamics(&self, state: &AbstractState, action: usize) -> (f64, AbstractState);

    fn predict(&self, state: &AbstractState) -> Prediction;

    /// Outcome distribution at an afterstate; nonnegative and sums to one.
    fn chance_prior(&self, state: &AbstractState) -> Vec<f64>;

    fn chance_dynamics(&self, afterstate: &AbstractState, outcome: usize) -> (f64, AbstractState);
}

/// Sizes that fix the parameter layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelDims {
    pub obs_dim: usize,
    /// Width of the decoder output (logits or raw coordinates).
    pub action_dim: usize,
    /// Width of the action encoding fed back into memory.
    pub action_feedback_dim: usize,
    pub state_dim: usize,
    pub memory_dim: usize,
    pub abstract_actions: usize,
    pub chance_outcomes: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub noise_width: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        if self.abstract_actions < 2 {
            return Err(Error::config("abstract action count must be at least 2"));
        }
        if self.chance_outcomes < 1 {
            return Err(Error::config("chance outcome count must be at least 1"));
        }
        for (name, v) in [
            ("observation width", self.obs_dim),
            ("action width", self.action_dim),
            ("action feedback width", self.action_feedback_dim),
            ("abstract state dimension", self.state_dim),
            ("memory dimension", self.memory_dim),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            return Err(Error::config("hidden width must be positive"));
        }
        Ok(())
    }

    fn mlp(&self, input: usize, output: usize) -> MlpSpec {
        MlpSpec::new(input, self.hidden_layers, self.hidden_width.max(1), output)
    }

    pub fn encoder_spec(&self) -> MlpSpec {
        self.mlp(self.memory_dim + self.obs_dim, self.state_dim)
    }

    pub fn dynamics_spec(&self) -> GruSpec {
        GruSpec::new(self.abstract_actions, self.state_dim)
    }

    pub fn reward_spec(&self) -> MlpSpec {
        MlpSpec::linear(self.state_dim, 1)
    }

    pub fn prediction_spec(&self) -> MlpSpec {
        self.mlp(self.state_dim, 1 + self.abstract_actions)
    }

    pub fn chance_spec(&self) -> MlpSpec {
        MlpSpec::linear(self.state_dim, self.chance_outcomes)
    }

    pub fn chance_dynamics_spec(&self) -> GruSpec {
        GruSpec::new(self.chance_outcomes, self.state_dim)
    }

    pub fn decoder_spec(&self) -> MlpSpec {
        self.mlp(self.state_dim + self.abstract_actions + self.noise_width, self.action_dim)
    }

    pub fn memory_spec(&self) -> GruSpec {
        GruSpec::new(self.obs_dim + self.action_feedback_dim, self.memory_dim)
    }

    /// The parameter layout, a pure function of these sizes.
    pub fn layout(&self) -> Result<ParamLayout> {
        self.validate()?;
        ParamLayout::new([
            (ENCODER, ComponentShape::Mlp(self.encoder_spec())),
            (DYNAMICS, ComponentShape::Gru(self.dynamics_spec())),
            (DYNAMICS_REWARD, ComponentShape::Mlp(self.reward_spec())),
            (PREDICTION, ComponentShape::Mlp(self.prediction_spec())),
            (CHANCE, ComponentShape::Mlp(self.chance_spec())),
            (CHANCE_DYNAMICS, ComponentShape::Gru(self.chance_dynamics_spec())),
            (CHANCE_REWARD, ComponentShape::Mlp(self.reward_spec())),
            (DECODER, ComponentShape::Mlp(self.decoder_spec())),
            (MEMORY, ComponentShape::Gru(self.memory_spec())),
        ])
    }
}

/// The agent's networks evaluated at one parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct PiZeroNet<'a> {
    dims: ModelDims,
    params: &'a ParamVector,
}

impl<'a> PiZeroNet<'a> {
    pub fn new(dims: ModelDims, params: &'a ParamVector) -> Result<Self> {
        let expected = dims.layout()?;
        if **params.layout() != expected {
            return Err(Error::config("parameter layout does not match model dimensions"));
        }
        Ok(PiZeroNet { dims, params })
    }

    pub fn dims(&self) -> &ModelDims {
        &self.dims
    }

    pub fn params(&self) -> &'a ParamVector {
        self.params
    }

    pub fn fresh_layout(dims: &ModelDims) -> Result<Arc<ParamLayout>> {
        Ok(Arc::new(dims.layout()?))
    }

    /// Maps memory and observation to the root abstract state.
    pub fn encode(&self, memory: &Memory, obs: &[f64]) -> Result<AbstractState> {
        if memory.0.len() != self.dims.memory_dim {
            return Err(Error::dim("memory", self.dims.memory_dim, memory.0.len()));
        }
        if obs.len() != self.dims.obs_dim {
            return Err(Error::dim("observation", self.dims.obs_dim, obs.len()));
        }
        let input: Vec<f64> = memory.0.iter().chain(obs).copied().collect();
        nn::mlp_forward(self.params.slice(ENCODER), &self.dims.encoder_spec(), &input).map(AbstractState)
    }

    /// Raw concrete-action parameters for abstract action `action` taken
    /// from `root`. `noise` is empty unless latent noise is enabled.
    pub fn decode(&self, root: &AbstractState, action: usize, noise: &[f64]) -> Result<Vec<f64>> {
        if action >= self.dims.abstract_actions {
            return Err(Error::dim("abstract action index", self.dims.abstract_actions, action));
        }
        if noise.len() != self.dims.noise_width {
            return Err(Error::dim("decoder noise", self.dims.noise_width, noise.len()));
        }
        let mut input = Vec::with_capacity(self.dims.decoder_spec().input_dim);
        input.extend_from_slice(root.as_slice());
        input.extend(nn::one_hot(action, self.dims.abstract_actions));
        input.extend_from_slice(noise);
        nn::mlp_forward(self.params.slice(DECODER), &self.dims.decoder_spec(), &input)
    }

    pub fn memory_update(&self, memory: &Memory, obs: &[f64], action: &[f64]) -> Result<Memory> {
        if action.len() != self.dims.action_feedback_dim {
            return Err(Error::dim("action feedback", self.dims.action_feedback_dim, action.len()));
        }
        let input: Vec<f64> = obs.iter().chain(action).copied().collect();
        nn::gru_forward(self.params.slice(MEMORY), &self.dims.memory_spec(), memory.as_slice(), &input).map(Memory)
    }

    fn recurrent_step(&self, cell: &str, head: &str, spec: GruSpec, state: &AbstractState, input: Vec<f64>) -> (f64, AbstractState) {
        let next = nn::gru_forward(self.params.slice(cell), &spec, state.as_slice(), &input)
            .expect("abstract state dimension fixed by the model");
        let reward = nn::mlp_forward(self.params.slice(head), &self.dims.reward_spec(), &next)
            .expect("reward head matches state dimension")[0];
        (reward, AbstractState(next))
    }
}

impl AbstractModel for PiZeroNet<'_> {
    fn num_actions(&self) -> usize {
        self.dims.abstract_actions
    }

    fn num_outcomes(&self) -> usize {
        self.dims.chance_outcomes
    }

    fn dynamics(&self, state: &AbstractState, action: usize) -> (f64, AbstractState) {
        let input = nn::one_hot(action, self.dims.abstract_actions);
        self.recurrent_step(DYNAMICS, DYNAMICS_REWARD, self.dims.dynamics_spec(), state, input)
    }

    fn predict(&self, state: &AbstractState) -> Prediction {
        let out = nn::mlp_forward(self.params.slice(PREDICTION), &self.dims.prediction_spec(), state.as_slice())
            .expect("abstract state dimension fixed by the model");
        Prediction {
            value: out[0],
            logits: out[1..].to_vec(),
        }
    }

    fn chance_prior(&self, state: &AbstractState) -> Vec<f64> {
        let logits = nn::mlp_forward(self.params.slice(CHANCE), &self.dims.chance_spec(), state.as_slice())
            .expect("abstract state dimension fixed by the model");
        nn::softmax(&logits)
    }

    fn chance_dynamics(&self, afterstate: &AbstractState, outcome: usize) -> (f64, AbstractState) {
        let input = nn::one_hot(outcome, self.dims.chance_outcomes);
        self.recurrent_step(CHANCE_DYNAMICS, CHANCE_REWARD, self.dims.chance_dynamics_spec(), afterstate, input)
    }
}
