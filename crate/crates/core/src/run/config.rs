//! Flat `key = value` run configuration.
//!
//! Precedence, lowest first: built-in defaults, the config file,
//! `PIZERO_<KEY>` environment variables, command-line overrides.
//! Unknown keys and malformed values are errors, never ignored.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::agent::AgentConfig;
use crate::envs::{EnvKind, EnvSettings};
use crate::error::{Error, Result};
use crate::es::EsConfig;

/// Prefix of environment variable overrides, e.g. `PIZERO_SIGMA=0.05`.
pub const ENV_PREFIX: &str = "PIZERO_";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    pub settings: EnvSettings,
    pub agent: AgentConfig,
    pub seed: u64,
    pub sigma: f64,
    pub learning_rate: f64,
    /// Episode evaluations per generation across the whole population.
    pub batch: usize,
    /// Explicit pair count; `None` derives it from `batch`.
    pub pairs: Option<usize>,
    pub episodes_per_eval: usize,
    pub rank_shaping: bool,
    pub trials: usize,
    pub generations: u64,
    /// Episodes used to score the unperturbed parameters each generation.
    pub eval_episodes: usize,
    /// Episodes scoring the initial and final parameters of each trial.
    pub final_episodes: usize,
    pub output: PathBuf,
    pub label: Option<String>,
    pub resume: bool,
    pub rank: usize,
    pub world: usize,
    pub peers: Vec<SocketAddr>,
    pub timeout_secs: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let es = EsConfig::default();
        RunConfig {
            env: EnvKind::Collect,
            settings: EnvSettings::default(),
            agent: AgentConfig::default(),
            seed: 0,
            sigma: es.sigma,
            learning_rate: es.learning_rate,
            batch: 1000,
            pairs: None,
            episodes_per_eval: es.episodes_per_eval,
            rank_shaping: es.rank_shaping,
            trials: 5,
            generations: 100,
            eval_episodes: 20,
            final_episodes: 100,
            output: PathBuf::from("runs/default"),
            label: None,
            resume: false,
            rank: 0,
            world: 1,
            peers: Vec::new(),
            timeout_secs: 120,
        }
    }
}

/// Every key with its description, in serialization order.
pub const KEYS: &[(&str, &str)] = &[
    ("env", "environment: tsp, collect, 2048 or flp"),
    ("seed", "master seed"),
    ("trials", "independent training repetitions"),
    ("generations", "ES generations per trial"),
    ("output", "run directory"),
    ("label", "method name used by plot-data (default: env and planner setting)"),
    ("resume", "continue from checkpoints in the run directory"),
    ("state_dim", "abstract state width D"),
    ("memory_dim", "memory width M"),
    ("abstract_actions", "abstract actions k"),
    ("chance_outcomes", "chance outcomes c"),
    ("hidden_layers", "hidden layers per MLP"),
    ("hidden_width", "hidden layer width"),
    ("budget", "simulations per search"),
    ("discount", "search discount"),
    ("noise_width", "decoder noise width (0 disables noise)"),
    ("planner", "plan with tree search (false: act on prediction logits)"),
    ("chance_nodes", "interleave chance nodes in the search tree"),
    ("sigma", "perturbation standard deviation"),
    ("learning_rate", "Adam learning rate"),
    ("batch", "episode evaluations per generation"),
    ("pairs", "antithetic pairs per generation (auto: batch / (2 episodes_per_eval))"),
    ("episodes_per_eval", "episodes averaged per fitness evaluation"),
    ("rank_shaping", "replace deltas by centered ranks"),
    ("eval_episodes", "episodes scoring the unperturbed parameters each generation"),
    ("final_episodes", "episodes scoring the initial and final parameters of each trial"),
    ("rank", "this worker's rank"),
    ("world", "number of workers"),
    ("peers", "comma-separated host:port of every rank, in rank order"),
    ("timeout_secs", "peer timeout in seconds"),
    ("tsp_cities", "TSP cities"),
    ("collect_size", "Collect grid side"),
    ("collect_coins", "Collect coins"),
    ("collect_horizon", "Collect episode length"),
    ("g2048_max_steps", "2048 step cap"),
    ("flp_clients", "FLP clients"),
    ("flp_facilities", "FLP facilities"),
];

/// Keys that do not change what a trial computes: they are left out of
/// [`RunConfig::hash`] so a checkpoint can be resumed with a longer
/// schedule, a different output path or a different worker layout.
const HASH_EXEMPT: &[&str] = &["generations", "output", "label", "resume", "rank", "world", "peers", "timeout_secs"];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value {value:?} for key {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("invalid boolean {value:?} for key {key}"))),
    }
}

impl RunConfig {
    pub fn es_config(&self) -> EsConfig {
        let mut es = EsConfig::from_batch(self.batch, self.episodes_per_eval, self.sigma, self.learning_rate);
        if let Some(p) = self.pairs {
            es.pairs = p;
        }
        es.seed = self.seed;
        es.rank_shaping = self.rank_shaping;
        es
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            format!("{}-{}", self.env, if self.agent.planner { "planner" } else { "reactive" })
        })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let a = &self.agent;
        let s = &self.settings;
        Some(match key {
            "env" => self.env.to_string(),
            "seed" => self.seed.to_string(),
            "trials" => self.trials.to_string(),
            "generations" => self.generations.to_string(),
            "output" => self.output.display().to_string(),
            "label" => self.label.clone().unwrap_or_default(),
            "resume" => self.resume.to_string(),
            "state_dim" => a.state_dim.to_string(),
            "memory_dim" => a.memory_dim.to_string(),
            "abstract_actions" => a.abstract_actions.to_string(),
            "chance_outcomes" => a.chance_outcomes.to_string(),
            "hidden_layers" => a.hidden_layers.to_string(),
            "hidden_width" => a.hidden_width.to_string(),
            "budget" => a.budget.to_string(),
            "discount" => a.discount.to_string(),
            "noise_width" => a.noise_width.to_string(),
            "planner" => a.planner.to_string(),
            "chance_nodes" => a.chance_nodes.to_string(),
            "sigma" => self.sigma.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "batch" => self.batch.to_string(),
            "pairs" => self.pairs.map_or_else(|| "auto".to_string(), |p| p.to_string()),
            "episodes_per_eval" => self.episodes_per_eval.to_string(),
            "rank_shaping" => self.rank_shaping.to_string(),
            "eval_episodes" => self.eval_episodes.to_string(),
            "final_episodes" => self.final_episodes.to_string(),
            "rank" => self.rank.to_string(),
            "world" => self.world.to_string(),
            "peers" => self.peers.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","),
            "timeout_secs" => self.timeout_secs.to_string(),
            "tsp_cities" => s.tsp_cities.to_string(),
            "collect_size" => s.collect_size.to_string(),
            "collect_coins" => s.collect_coins.to_string(),
            "collect_horizon" => s.collect_horizon.to_string(),
            "g2048_max_steps" => s.g2048_max_steps.to_string(),
            "flp_clients" => s.flp_clients.to_string(),
            "flp_facilities" => s.flp_facilities.to_string(),
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let a = &mut self.agent;
        let s = &mut self.settings;
        match key {
            "env" => self.env = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "generations" => self.generations = parse(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "label" => self.label = (!value.is_empty()).then(|| value.to_string()),
            "resume" => self.resume = parse_bool(key, value)?,
            "state_dim" => a.state_dim = parse(key, value)?,
            "memory_dim" => a.memory_dim = parse(key, value)?,
            "abstract_actions" => a.abstract_actions = parse(key, value)?,
            "chance_outcomes" => a.chance_outcomes = parse(key, value)?,
            "hidden_layers" => a.hidden_layers = parse(key, value)?,
            "hidden_width" => a.hidden_width = parse(key, value)?,
            "budget" => a.budget = parse(key, value)?,
            "discount" => a.discount = parse(key, value)?,
            "noise_width" => a.noise_width = parse(key, value)?,
            "planner" => a.planner = parse_bool(key, value)?,
            "chance_nodes" => a.chance_nodes = parse_bool(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "pairs" => self.pairs = if value == "auto" { None } else { Some(parse(key, value)?) },
            "episodes_per_eval" => self.episodes_per_eval = parse(key, value)?,
            "rank_shaping" => self.rank_shaping = parse_bool(key, value)?,
            "eval_episodes" => self.eval_episodes = parse(key, value)?,
            "final_episodes" => self.final_episodes = parse(key, value)?,
            "rank" => self.rank = parse(key, value)?,
            "world" => self.world = parse(key, value)?,
            "peers" => {
                self.peers = value
                    .split(',')
                    .map(str::trim)
                    .filter(|p| !p.is_empty())
                    .map(|p| parse(key, p))
                    .collect::<Result<_>>()?
            }
            "timeout_secs" => self.timeout_secs = parse(key, value)?,
            "tsp_cities" => s.tsp_cities = parse(key, value)?,
            "collect_size" => s.collect_size = parse(key, value)?,
            "collect_coins" => s.collect_coins = parse(key, value)?,
            "collect_horizon" => s.collect_horizon = parse(key, value)?,
            "g2048_max_steps" => s.g2048_max_steps = parse(key, value)?,
            "flp_clients" => s.flp_clients = parse(key, value)?,
            "flp_facilities" => s.flp_facilities = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse_text(&text)
    }

    /// Applies every `PIZERO_<KEY>` variable found in `vars`.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (name, value) in vars {
            if let Some(key) = name.strip_prefix(ENV_PREFIX) {
                let key = key.to_ascii_lowercase();
                self.set(&key, &value)
                    .map_err(|e| Error::config(format!("{name}: {e}")))?;
            }
        }
        Ok(())
    }

    /// One `key = value` line per key, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, _) in KEYS {
            let value = self.get(key).expect("every listed key is readable");
            writeln!(out, "{key} = {value}").expect("writing to a String");
        }
        out
    }

    /// Stable digest of everything that influences a trial's trajectory.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        for (key, _) in KEYS.iter().filter(|(k, _)| !HASH_EXEMPT.contains(k)) {
            h.update(key.as_bytes());
            h.update(b"=");
            h.update(self.get(key).expect("listed key").as_bytes());
            h.update(b"\n");
        }
        u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        self.settings.validate()?;
        self.es_config().validate()?;
        if self.agent.state_dim == 0 || self.agent.memory_dim == 0 || self.agent.abstract_actions == 0 {
            return Err(Error::config("state_dim, memory_dim and abstract_actions must be positive"));
        }
        if self.agent.chance_nodes && self.agent.chance_outcomes == 0 {
            return Err(Error::config("chance nodes need at least one chance outcome"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be positive"));
        }
        if self.world == 0 || self.rank >= self.world {
            return Err(Error::config(format!("rank {} outside a world of {}", self.rank, self.world)));
        }
        if self.world > 1 && self.peers.len() != self.world {
            return Err(Error::config(format!("world {} needs {} peers, got {}", self.world, self.world, self.peers.len())));
        }
        if self.timeout_secs == 0 {
            return Err(Error::config("timeout_secs must be positive"));
        }
        if let Some(label) = &self.label {
            if label.contains([',', '\n', '"']) {
                return Err(Error::config("label may not contain commas, quotes or newlines"));
            }
        }
        Ok(())
    }

    /// The defaults table shown by `--help`.
    pub fn defaults_table() -> String {
        let d = RunConfig::default();
        let width = KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::from("Configuration keys (default in brackets):\n");
        for (key, help) in KEYS {
            let value = d.get(key).expect("listed key");
            writeln!(out, "  {key:width$}  {help} [{value}]").expect("writing to a String");
        }
        write!(out, "Any key can also be set through the environment as {ENV_PREFIX}<KEY>, e.g. {ENV_PREFIX}SIGMA=0.05.").expect("writing to a String");
        out
    }
}
