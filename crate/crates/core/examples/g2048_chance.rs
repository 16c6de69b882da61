//! 2048 with chance nodes in the search tree.
//!
//! Tile spawns are random, so the agent can interleave learned chance
//! outcomes with its own moves while planning. This example shows the
//! slide rules on a single row, then plays a few episodes with an
//! untrained agent with chance nodes on and off.
//!
//! Run with `cargo run --release --example g2048_chance`.

use pizero::agent::AgentConfig;
use pizero::envs::g2048::{self, slide_line};
use pizero::envs::{EnvKind, EnvSettings};
use pizero::es::AgentObjective;
use pizero::stats::mean;

fn main() -> pizero::Result<()> {
    // Tiles are stored as exponents: 1 is a 2, 2 is a 4, and so on.
    for row in [[1, 1, 2, 0], [1, 1, 1, 1], [0, 2, 0, 2], [3, 2, 1, 0]] {
        let (slid, reward) = slide_line(row);
        println!("{row:?} slides left to {slid:?}, reward {reward}");
    }

    let board = [[1, 1, 0, 0], [0, 0, 0, 0], [2, 0, 2, 0], [0, 0, 0, 0]];
    let (after, reward, moved) = g2048::slide(&board, g2048::LEFT);
    println!("board slide left: moved {moved}, reward {reward}, rows {after:?}");

    let settings = EnvSettings {
        g2048_max_steps: 100,
        ..EnvSettings::default()
    };
    for chance_nodes in [false, true] {
        let agent = AgentConfig {
            chance_nodes,
            ..AgentConfig::default()
        };
        let objective = AgentObjective::new(agent, EnvKind::G2048, settings, 1)?;
        let theta = objective.initial_params(0);
        let scores = objective.episode_scores(&theta, 5, 8)?;
        println!("chance nodes {chance_nodes:<5}: mean merge score {:.1} over {} episodes", mean(&scores), scores.len());
    }
    Ok(())
}
