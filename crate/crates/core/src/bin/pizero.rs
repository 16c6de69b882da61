use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pizero::run::{self, RunConfig};

#[derive(Parser)]
#[command(name = "pizero", version, about = "Train, evaluate and chart PiZero agents", after_help = RunConfig::defaults_table())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set sigma=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one or more trials and write curve CSVs and checkpoints.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        generations: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long)]
        world: Option<usize>,
        /// Comma-separated host:port list, one per rank.
        #[arg(long)]
        peers: Option<String>,
        /// Continue from the checkpoints in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Score a checkpoint with a BCa interval.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
    },
    /// Merge run directories into `method,generation,mean,ci_low,ci_high`.
    PlotData {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build_config(common: &Common, extra: &[(&str, Option<String>)]) -> pizero::Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.apply_env(std::env::vars())?;
    let flags = [
        ("env", common.env.clone()),
        ("seed", common.seed.map(|s| s.to_string())),
        ("output", common.output.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in flags.iter().chain(extra) {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| pizero::Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        config.set(k.trim(), v)?;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            common,
            generations,
            trials,
            rank,
            world,
            peers,
            resume,
        } => build_config(
            &common,
            &[
                ("generations", generations.map(|g| g.to_string())),
                ("trials", trials.map(|t| t.to_string())),
                ("rank", rank.map(|r| r.to_string())),
                ("world", world.map(|w| w.to_string())),
                ("peers", peers),
                ("resume", resume.then(|| "true".to_string())),
            ],
        )
        .and_then(|config| {
            run::cmd_train(&config, &mut |p| {
                eprintln!(
                    "trial {} generation {} mean {:.4} at_theta {} |g| {:.3e} {:.2}s",
                    p.trial,
                    p.report.generation,
                    p.report.mean_score,
                    p.score_at_theta.map_or("-".into(), |s| format!("{s:.4}")),
                    p.report.grad_norm,
                    p.report.wall_time
                )
            })
        })
        .map(|s| println!("wrote {}", s.run_dir.display())),
        Command::Eval {
            common,
            checkpoint,
            episodes,
        } => build_config(&common, &[]).and_then(|config| {
            let s = run::cmd_eval(&config, &checkpoint, episodes, config.seed)?;
            println!("env,generation,episodes,mean,ci_low,ci_high");
            println!("{},{},{},{},{},{}", s.env, s.generation, s.scores.len(), s.mean, s.ci_low, s.ci_high);
            Ok(())
        }),
        Command::PlotData { runs, out } => run::cmd_plotdata(&runs).and_then(|csv| match out {
            Some(path) => std::fs::write(path, csv).map_err(Into::into),
            None => {
                print!("{csv}");
                Ok(())
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
