//! One TSP episode played by an untrained agent, next to two baselines.
//!
//! The agent builds a tour by swapping cities into position `t` at each
//! step. With random initial parameters its tours are no better than
//! chance; the point here is the episode loop and the trace it records.
//!
//! Run with `cargo run --example tsp_episode`.

use pizero::agent::{Agent, AgentConfig};
use pizero::envs::{tsp, Action, EnvKind, EnvSettings, Environment, Tsp};
use pizero::es::AgentObjective;
use pizero::nn::ParamVector;

fn nearest_neighbour(cities: &[[f64; 2]]) -> Vec<usize> {
    let mut order = vec![0];
    let mut left: Vec<usize> = (1..cities.len()).collect();
    while !left.is_empty() {
        let here = cities[*order.last().unwrap()];
        let (i, _) = left
            .iter()
            .enumerate()
            .map(|(i, &c)| (i, (cities[c][0] - here[0]).hypot(cities[c][1] - here[1])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        order.push(left.swap_remove(i));
    }
    order
}

fn main() -> pizero::Result<()> {
    let settings = EnvSettings::default();
    let agent_config = AgentConfig::default();
    let objective = AgentObjective::new(agent_config, EnvKind::Tsp, settings, 1)?;
    let params = ParamVector::new(objective.layout.clone(), objective.initial_params(1))?;
    let agent = Agent::new(agent_config, &tsp::spec(settings.tsp_cities), &params)?;

    let episode_seed = 42;
    let record = agent.run_episode(|s| settings.reset(EnvKind::Tsp, s), episode_seed, true)?;
    let chosen: Vec<String> = record
        .trace
        .iter()
        .flatten()
        .map(|step| match step.action {
            Action::Discrete(c) => format!("{c}(z{})", step.abstract_action),
            Action::Point(_) => unreachable!("tsp actions are discrete"),
        })
        .collect();
    println!("agent picks, with the abstract action in brackets: {}", chosen.join(" "));
    println!("agent tour length   {:.4}", -record.score);

    // The same instance the episode saw, rebuilt from the episode seed.
    let Some(first) = record.trace.as_ref().and_then(|t| t.first()) else {
        return Ok(());
    };
    let n = settings.tsp_cities;
    let cities: Vec<[f64; 2]> = first.obs[..2 * n].chunks(2).map(|c| [c[0], c[1]]).collect();
    let identity: Vec<usize> = (0..n).collect();
    println!("identity tour       {:.4}", tsp::tour_length(&cities, &identity));
    println!("nearest neighbour   {:.4}", tsp::tour_length(&cities, &nearest_neighbour(&cities)));

    // Driving the environment by hand: swapping each city into place
    // reproduces any order we like.
    let mut env = Tsp::new(cities.clone());
    let target = nearest_neighbour(&cities);
    let mut score = 0.0;
    for &c in &target {
        score += env.step(&Action::Discrete(c)).reward;
    }
    println!("replayed by hand    {:.4} (order {:?})", -score, env.order());
    Ok(())
}
