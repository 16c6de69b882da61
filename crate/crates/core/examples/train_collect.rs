//! Serial evolution-strategies training on the coin collection grid.
//!
//! Spells out the training loop with the library's building blocks:
//! every generation evaluates antithetic pairs around θ, turns the score
//! differences into a pseudogradient and takes one Adam step. The agent
//! here is deliberately small so the example finishes in seconds; see
//! the `pizero train` command for full-size runs with checkpoints.
//!
//! Run with `cargo run --release --example train_collect`.

use pizero::agent::AgentConfig;
use pizero::envs::{EnvKind, EnvSettings};
use pizero::es::{apply_deltas, evaluate_members, AgentObjective, EsConfig, TrainerState};
use pizero::stats::mean;

fn main() -> pizero::Result<()> {
    let agent = AgentConfig {
        state_dim: 16,
        memory_dim: 16,
        hidden_width: 16,
        budget: 4,
        ..AgentConfig::default()
    };
    let objective = AgentObjective::new(agent, EnvKind::Collect, EnvSettings::default(), 2)?;
    let config = EsConfig {
        sigma: 0.1,
        learning_rate: 0.02,
        pairs: 24,
        episodes_per_eval: 2,
        seed: 11,
        rank_shaping: true,
    };
    let mut state = TrainerState::new(objective.initial_params(config.seed));
    println!("{} parameters, {} pairs per generation", state.theta.len(), config.pairs);

    let score = |theta: &[f64]| objective.episode_scores(theta, 99, 100).map(|s| mean(&s));
    println!("generation 0: score at theta {:.3}", score(&state.theta)?);

    let members: Vec<usize> = (0..config.pairs).collect();
    for _ in 0..30 {
        let scores = evaluate_members(&state.theta, &members, state.generation, &config, &objective)
            .into_iter()
            .collect::<pizero::Result<Vec<_>>>()?;
        let deltas: Vec<f64> = scores.iter().map(|p| p.delta).collect();
        let perturbed: Vec<f64> = scores.iter().flat_map(|p| [p.plus, p.minus]).collect();
        let generation = state.generation;
        let grad_norm = apply_deltas(&mut state, &deltas, &config)?;
        if generation % 5 == 4 {
            println!(
                "generation {:>2}: perturbed mean {:.3}, |g| {grad_norm:.2}, score at theta {:.3}",
                generation + 1,
                mean(&perturbed),
                score(&state.theta)?
            );
        }
    }
    Ok(())
}
