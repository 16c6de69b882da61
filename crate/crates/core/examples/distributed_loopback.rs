//! Four workers on loopback TCP train the same parameters as one serial
//! worker, bit for bit.
//!
//! Each worker evaluates only its share of the population and broadcasts
//! one score difference per pair. Everyone regenerates every
//! perturbation from the shared seed, so the allgathered scalars are
//! enough to apply the identical update everywhere.
//!
//! Run with `cargo run --release --example distributed_loopback`.

use std::thread;
use std::time::Duration;

use pizero::agent::AgentConfig;
use pizero::envs::{EnvKind, EnvSettings};
use pizero::es::transport::{loopback_listeners, Solo, Tcp, Transport};
use pizero::es::worker::{worker_loop, WorkerOptions};
use pizero::es::{theta_hash, AgentObjective, EsConfig, TrainerState};

const WORLD: usize = 4;
const GENERATIONS: u64 = 5;

fn main() -> pizero::Result<()> {
    let agent = AgentConfig {
        state_dim: 8,
        memory_dim: 8,
        hidden_width: 8,
        budget: 3,
        ..AgentConfig::default()
    };
    let objective = AgentObjective::new(agent, EnvKind::Collect, EnvSettings::default(), 1)?;
    let config = EsConfig {
        pairs: 10,
        learning_rate: 0.01,
        seed: 3,
        ..EsConfig::default()
    };
    let start = TrainerState::new(objective.initial_params(config.seed));

    let serial = worker_loop(Solo, &config, &objective, start.clone(), GENERATIONS, &WorkerOptions::default(), |_, _| Ok(()))?;
    println!("serial   theta hash {:016x}", theta_hash(&serial.theta));

    let (listeners, peers) = loopback_listeners(WORLD)?;
    let results: Vec<pizero::Result<(TrainerState, u64)>> = thread::scope(|s| {
        let handles: Vec<_> = listeners
            .into_iter()
            .enumerate()
            .map(|(rank, listener)| {
                let (peers, objective, start) = (&peers, &objective, start.clone());
                s.spawn(move || {
                    let mut tcp = Tcp::with_listener(rank, listener, peers, Duration::from_secs(30))?;
                    let state = worker_loop(&mut tcp, &config, objective, start, GENERATIONS, &WorkerOptions::default(), |_, _| Ok(()))?;
                    Ok((state, tcp.bytes_sent()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
    });

    for (rank, r) in results.into_iter().enumerate() {
        let (state, sent) = r?;
        println!(
            "rank {rank}   theta hash {:016x}  identical {}  bytes sent {sent} for {} parameters",
            theta_hash(&state.theta),
            state.theta == serial.theta,
            state.theta.len()
        );
    }
    Ok(())
}
