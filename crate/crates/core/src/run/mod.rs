//! The operator layer: training runs with checkpoints and CSV output,
//! checkpoint evaluation, and merging runs into plot-ready tables.
//!
//! A run directory holds:
//!
//! * `config.txt`, the full configuration;
//! * `trial-<t>.csv` (`generation,mean,score_at_theta`) and
//!   `trial-<t>.ckpt` for every trial;
//! * `curve.csv` (`generation,mean,ci_low,ci_high,score_at_theta`), the
//!   across-trial aggregate;
//! * `final.csv` (`trial,initial_score,final_score`);
//! * `timing.csv`, wall-clock data kept apart so every other file is
//!   byte-for-byte reproducible.
//!
//! In a distributed run every rank trains, but only rank 0 scores the
//! unperturbed parameters and writes files.

pub mod checkpoint;
pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::es::transport::{Solo, Tcp, Transport};
use crate::es::worker::{run_generation, Gatherer};
use crate::es::{AgentObjective, GenerationReport, TrainerState};
use crate::nn::mix_seed;
use crate::stats::{mean, CurvePoint};

pub const CURVE_HEADER: &str = "generation,mean,ci_low,ci_high,score_at_theta";
pub const TRIAL_HEADER: &str = "generation,mean,score_at_theta";
pub const FINAL_HEADER: &str = "trial,initial_score,final_score";
pub const TIMING_HEADER: &str = "trial,generation,wall_time,grad_norm,theta_hash";
pub const PLOT_HEADER: &str = "method,generation,mean,ci_low,ci_high";

const TRIAL_TAG: u64 = 0x7121;
const EVAL_TAG: u64 = 0xE7A1;
const CI_TAG: u64 = 0xC1;

/// Master seed of trial `trial`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    mix_seed(&[seed, TRIAL_TAG, trial as u64])
}

/// Episode key used to score unperturbed parameters. Shared by every
/// generation and trial so scores are comparable along a curve.
pub fn eval_key(seed: u64) -> u64 {
    mix_seed(&[seed, EVAL_TAG])
}

/// Bootstrap seed for the confidence band of the curve at `generation`.
pub fn ci_seed(seed: u64, generation: u64) -> u64 {
    mix_seed(&[seed, CI_TAG, generation])
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str) -> std::result::Result<Option<f64>, String> {
    if field.is_empty() {
        Ok(None)
    } else {
        field.parse().map(Some).map_err(|_| format!("bad number {field:?}"))
    }
}

/// One row of `trial-<t>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub generation: u64,
    pub mean: f64,
    pub score_at_theta: Option<f64>,
}

impl TrialRow {
    fn to_line(&self) -> String {
        format!("{},{},{}", self.generation, self.mean, fmt_opt(self.score_at_theta))
    }
}

pub fn read_trial_csv(path: &Path) -> Result<Vec<TrialRow>> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, msg: String| Error::config(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRIAL_HEADER => {}
        _ => return Err(bad(1, format!("expected header {TRIAL_HEADER}"))),
    }
    lines
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad(n + 1, "expected 3 fields".into()));
            }
            Ok(TrialRow {
                generation: f[0].parse().map_err(|_| bad(n + 1, "bad generation".into()))?,
                mean: f[1].parse().map_err(|_| bad(n + 1, "bad mean".into()))?,
                score_at_theta: parse_opt(f[2]).map_err(|m| bad(n + 1, m))?,
            })
        })
        .collect()
}

/// One row of `curve.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub generation: u64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub score_at_theta: Option<f64>,
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |line: usize, msg: &str| Error::config(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CURVE_HEADER => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    lines
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(n + 1, "expected 5 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n + 1, "bad number"));
            Ok(CurveRow {
                generation: f[0].parse().map_err(|_| bad(n + 1, "bad generation"))?,
                mean: num(f[1])?,
                ci_low: num(f[2])?,
                ci_high: num(f[3])?,
                score_at_theta: parse_opt(f[4]).map_err(|m| bad(n + 1, &m))?,
            })
        })
        .collect()
}

/// Across-trial aggregate of per-trial rows. Every trial must cover the
/// same generations.
pub fn aggregate_trials(trials: &[Vec<TrialRow>], seed: u64) -> Result<Vec<CurveRow>> {
    let Some(first) = trials.first() else {
        return Err(Error::config("no trials to aggregate"));
    };
    for (t, rows) in trials.iter().enumerate() {
        if rows.len() != first.len() || rows.iter().zip(first).any(|(a, b)| a.generation != b.generation) {
            return Err(Error::config(format!("trial {t} covers different generations than trial 0")));
        }
    }
    (0..first.len())
        .map(|i| {
            let generation = first[i].generation;
            let means: Vec<f64> = trials.iter().map(|rows| rows[i].mean).collect();
            let p = CurvePoint::from_trials(generation, means, ci_seed(seed, generation))?;
            let at_theta: Option<Vec<f64>> = trials.iter().map(|rows| rows[i].score_at_theta).collect();
            Ok(CurveRow {
                generation,
                mean: p.mean,
                ci_low: p.ci_low,
                ci_high: p.ci_high,
                score_at_theta: at_theta.map(|s| mean(&s)),
            })
        })
        .collect()
}

pub fn curve_to_csv(rows: &[CurveRow]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.generation, r.mean, r.ci_low, r.ci_high, fmt_opt(r.score_at_theta)).expect("writing to a String");
    }
    out
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub initial_score: Option<f64>,
    pub final_score: Option<f64>,
    pub state: TrainerState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub run_dir: PathBuf,
    /// Empty on ranks other than 0.
    pub curve: Vec<CurveRow>,
    pub trials: Vec<TrialOutcome>,
}

/// Progress callback argument.
pub struct Progress<'a> {
    pub trial: usize,
    pub report: &'a GenerationReport,
    pub score_at_theta: Option<f64>,
}

fn trial_paths(dir: &Path, trial: usize) -> (PathBuf, PathBuf) {
    (dir.join(format!("trial-{trial}.csv")), dir.join(format!("trial-{trial}.ckpt")))
}

/// Builds the transport a config asks for: [`Solo`] for a world of one,
/// a TCP mesh otherwise.
pub fn connect(config: &RunConfig) -> Result<Box<dyn Transport>> {
    if config.world == 1 {
        Ok(Box::new(Solo))
    } else {
        let timeout = Duration::from_secs(config.timeout_secs);
        Ok(Box::new(Tcp::connect(config.rank, &config.peers, timeout)?))
    }
}

/// Trains every trial, connecting to peers as configured.
pub fn cmd_train(config: &RunConfig, progress: &mut dyn FnMut(&Progress)) -> Result<TrainSummary> {
    config.validate()?;
    let mut transport = connect(config)?;
    train_with_transport(config, &mut *transport, progress)
}

/// [`cmd_train`] over an existing transport. The transport's rank and
/// world take precedence over the config's.
pub fn train_with_transport(config: &RunConfig, transport: &mut dyn Transport, progress: &mut dyn FnMut(&Progress)) -> Result<TrainSummary> {
    config.validate()?;
    let writer = transport.rank() == 0;
    let dir = config.output.clone();
    if writer {
        fs::create_dir_all(&dir).map_err(|e| Error::config(format!("cannot create run directory {}: {e}", dir.display())))?;
        fs::write(dir.join("config.txt"), config.to_text())?;
        fs::write(dir.join("timing.csv"), format!("{TIMING_HEADER}\n"))?;
    }
    let objective = AgentObjective::new(config.agent, config.env, config.settings, config.episodes_per_eval)?;
    let key = eval_key(config.seed);
    let score = |theta: &[f64], episodes: usize| -> Result<Option<f64>> {
        if !writer || episodes == 0 {
            return Ok(None);
        }
        objective.episode_scores(theta, key, episodes).map(|s| Some(mean(&s)))
    };

    let mut outcomes = Vec::with_capacity(config.trials);
    let mut timing = String::new();
    for trial in 0..config.trials {
        let mut es = config.es_config();
        es.seed = trial_seed(config.seed, trial);
        let theta0 = objective.initial_params(es.seed);
        let (csv_path, ckpt_path) = trial_paths(&dir, trial);

        let mut state = TrainerState::new(theta0.clone());
        let mut rows = Vec::new();
        if config.resume && ckpt_path.exists() {
            let ck = Checkpoint::load(&ckpt_path)?;
            if ck.config_hash != config.hash() {
                return Err(Error::Checkpoint {
                    path: ckpt_path,
                    msg: "written by a different configuration".into(),
                });
            }
            if ck.state.theta.len() != theta0.len() {
                return Err(Error::dim("checkpoint parameters", theta0.len(), ck.state.theta.len()));
            }
            state = ck.state;
            if writer {
                rows = read_trial_csv(&csv_path)?;
                rows.retain(|r| r.generation < state.generation);
                if rows.len() as u64 != state.generation {
                    return Err(Error::Checkpoint {
                        path: csv_path,
                        msg: format!("holds {} rows for a checkpoint at generation {}", rows.len(), state.generation),
                    });
                }
            }
        }
        if writer {
            let mut text = format!("{TRIAL_HEADER}\n");
            for r in &rows {
                writeln!(text, "{}", r.to_line()).expect("writing to a String");
            }
            fs::write(&csv_path, text)?;
        }

        let mut gatherer = Gatherer::new(&mut *transport);
        while state.generation < config.generations {
            let at_theta = score(&state.theta, config.eval_episodes)?;
            let report = run_generation(&mut gatherer, &mut state, &es, &objective, None)?;
            progress(&Progress {
                trial,
                report: &report,
                score_at_theta: at_theta,
            });
            if writer {
                let row = TrialRow {
                    generation: report.generation,
                    mean: report.mean_score,
                    score_at_theta: at_theta,
                };
                let mut f = fs::OpenOptions::new().append(true).open(&csv_path)?;
                std::io::Write::write_all(&mut f, format!("{}\n", row.to_line()).as_bytes())?;
                Checkpoint {
                    config_hash: config.hash(),
                    state: state.clone(),
                }
                .save(&ckpt_path)?;
                writeln!(
                    timing,
                    "{trial},{},{},{},{:016x}",
                    report.generation, report.wall_time, report.grad_norm, report.theta_hash
                )
                .expect("writing to a String");
            }
        }
        outcomes.push(TrialOutcome {
            trial,
            initial_score: score(&theta0, config.final_episodes)?,
            final_score: score(&state.theta, config.final_episodes)?,
            state,
        });
    }

    let mut curve = Vec::new();
    if writer {
        let trials = (0..config.trials)
            .map(|t| read_trial_csv(&trial_paths(&dir, t).0))
            .collect::<Result<Vec<_>>>()?;
        curve = aggregate_trials(&trials, config.seed)?;
        fs::write(dir.join("curve.csv"), curve_to_csv(&curve))?;
        let mut finals = format!("{FINAL_HEADER}\n");
        for o in &outcomes {
            writeln!(finals, "{},{},{}", o.trial, fmt_opt(o.initial_score), fmt_opt(o.final_score)).expect("writing to a String");
        }
        fs::write(dir.join("final.csv"), finals)?;
        let mut f = fs::OpenOptions::new().append(true).open(dir.join("timing.csv"))?;
        std::io::Write::write_all(&mut f, timing.as_bytes())?;
    }
    Ok(TrainSummary {
        run_dir: dir,
        curve,
        trials: outcomes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub env: EnvKind,
    pub generation: u64,
    pub scores: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Scores a checkpoint on `episodes` seeded episodes. The config
/// supplies the environment and agent shape.
pub fn cmd_eval(config: &RunConfig, checkpoint: &Path, episodes: usize, seed: u64) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::config("eval needs at least one episode"));
    }
    config.validate()?;
    let ck = Checkpoint::load(checkpoint)?;
    let objective = AgentObjective::new(config.agent, config.env, config.settings, 1)?;
    if ck.state.theta.len() != objective.layout.total_len() {
        return Err(Error::dim("checkpoint parameters", objective.layout.total_len(), ck.state.theta.len()));
    }
    let scores = objective.episode_scores(&ck.state.theta, eval_key(seed), episodes)?;
    let p = CurvePoint::from_trials(ck.state.generation, scores, mix_seed(&[seed, CI_TAG]))?;
    Ok(EvalSummary {
        env: config.env,
        generation: ck.state.generation,
        scores: p.trial_scores,
        mean: p.mean,
        ci_low: p.ci_low,
        ci_high: p.ci_high,
    })
}

/// Merges the curves of several run directories into one table with a
/// method column taken from each run's label.
pub fn cmd_plotdata(run_dirs: &[PathBuf]) -> Result<String> {
    if run_dirs.is_empty() {
        return Err(Error::config("plot-data needs at least one run directory"));
    }
    let mut runs = Vec::with_capacity(run_dirs.len());
    for dir in run_dirs {
        let label = RunConfig::load(&dir.join("config.txt"))?.label();
        let curve = read_curve_csv(&dir.join("curve.csv"))?;
        runs.push((dir, label, curve));
    }
    let grid = |c: &[CurveRow]| c.iter().map(|r| r.generation).collect::<Vec<_>>();
    let reference = grid(&runs[0].2);
    let offenders: Vec<String> = runs
        .iter()
        .filter(|(_, _, c)| grid(c) != reference)
        .map(|(d, _, c)| format!("{} ({} rows)", d.display(), c.len()))
        .collect();
    if !offenders.is_empty() {
        return Err(Error::config(format!(
            "generation grids differ from {} ({} rows): {}",
            runs[0].0.display(),
            reference.len(),
            offenders.join(", ")
        )));
    }
    let mut out = format!("{PLOT_HEADER}\n");
    for (_, label, curve) in &runs {
        for r in curve {
            writeln!(out, "{label},{},{},{},{}", r.generation, r.mean, r.ci_low, r.ci_high).expect("writing to a String");
        }
    }
    Ok(out)
}
