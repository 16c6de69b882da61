//! The run-level API behind the `pizero` binary: a flat config, a short
//! training run on disk, evaluation of a checkpoint and merged plot data.
//!
//! Run with `cargo run --release --example run_directory`. Output goes to
//! a `pizero-example` directory under the system temp dir.

use pizero::run::{self, RunConfig};

const CONFIG: &str = "\
# a small Collect agent, two trials of four generations
env = collect
state_dim = 12
memory_dim = 12
hidden_width = 12
budget = 4
pairs = 8
trials = 2
generations = 4
eval_episodes = 10
final_episodes = 20
learning_rate = 0.01
seed = 1
";

fn main() -> pizero::Result<()> {
    let root = std::env::temp_dir().join("pizero-example");
    let mut dirs = Vec::new();
    for planner in [true, false] {
        let mut config = RunConfig::parse_text(CONFIG)?;
        config.agent.planner = planner;
        config.output = root.join(if planner { "planner" } else { "reactive" });
        if config.output.exists() {
            std::fs::remove_dir_all(&config.output)?;
        }
        println!("training {} (config hash {:016x})", config.label(), config.hash());
        let summary = run::cmd_train(&config, &mut |p| {
            if let Some(score) = p.score_at_theta {
                println!("  trial {} generation {} score at theta {score:.3}", p.trial, p.report.generation);
            }
        })?;
        for t in &summary.trials {
            println!("  trial {}: {:?} -> {:?}", t.trial, t.initial_score, t.final_score);
        }

        let eval = run::cmd_eval(&config, &config.output.join("trial-0.ckpt"), 30, 123)?;
        println!(
            "  trial 0 checkpoint at generation {}: mean {:.3} in ({:.3}, {:.3})",
            eval.generation, eval.mean, eval.ci_low, eval.ci_high
        );
        dirs.push(config.output);
    }

    let merged = run::cmd_plotdata(&dirs)?;
    println!("\n{merged}");
    println!("run directories are under {}", root.display());
    Ok(())
}
