//! Facility location: place `m` facilities so the worst-served client is
//! as close as possible to its nearest facility.
//!
//! Compares an untrained agent with uniform random placement and with a
//! farthest-point heuristic on the same instances.
//!
//! Run with `cargo run --example flp_placement`.

use pizero::agent::AgentConfig;
use pizero::envs::{flp, Action, EnvKind, EnvSettings, Environment, Flp};
use pizero::es::AgentObjective;
use pizero::stats::mean;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Repeatedly puts the next facility on the client farthest from all
/// facilities placed so far.
fn farthest_point(clients: &[[f64; 2]], m: usize) -> Vec<[f64; 2]> {
    let mut out = vec![clients[0]];
    while out.len() < m {
        let far = clients
            .iter()
            .max_by(|a, b| {
                let d = |p: &[f64; 2]| out.iter().map(|f| (f[0] - p[0]).hypot(f[1] - p[1])).fold(f64::INFINITY, f64::min);
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        out.push(*far);
    }
    out
}

fn play(env: &mut Flp, points: &[[f64; 2]]) -> f64 {
    points.iter().map(|p| env.step(&Action::Point(*p)).reward).sum()
}

fn main() -> pizero::Result<()> {
    let settings = EnvSettings::default();
    let (n, m) = (settings.flp_clients, settings.flp_facilities);
    let objective = AgentObjective::new(AgentConfig::default(), EnvKind::Flp, settings, 1)?;
    let theta = objective.initial_params(3);

    let instances = 50;
    let agent = objective.episode_scores(&theta, 9, instances)?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut random = Vec::new();
    let mut heuristic = Vec::new();
    for seed in 0..instances as u64 {
        let base = Flp::random(n, m, seed);
        let uniform: Vec<[f64; 2]> = (0..m).map(|_| [rng.random(), rng.random()]).collect();
        random.push(play(&mut base.clone(), &uniform));
        heuristic.push(play(&mut base.clone(), &farthest_point(base.clients(), m)));
    }

    println!("{instances} instances, {n} clients, {m} facilities (score = -max min distance)");
    println!("untrained agent  {:.4}", mean(&agent));
    println!("random placement {:.4}", mean(&random));
    println!("farthest point   {:.4}", mean(&heuristic));

    let clients = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    println!(
        "corners served from the centre: {:.4}",
        flp::max_min_distance(&clients, &[[0.5, 0.5]])
    );
    Ok(())
}
