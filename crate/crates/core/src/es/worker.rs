//! Seed-synchronized distributed ES.
//!
//! All workers start from the same seed, configuration and parameters.
//! Member `i` of every generation belongs to rank `i mod world`. Per
//! generation a worker:
//!
//! 1. scores its own antithetic pairs;
//! 2. allgathers the deltas (one [`Message`] per peer holding only its
//!    own deltas, so traffic never depends on the parameter count);
//! 3. regenerates every `z_i`, forms the same pseudogradient as everyone
//!    else and takes the same Adam step;
//! 4. allgathers a parameter hash plus a fixed-point score sum in a
//!    check round tagged with [`CHECK_ROUND`]. Any hash disagreement is
//!    fatal.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use super::transport::Transport;
use super::wire::{Message, CHECK_ROUND};
use super::{apply_deltas, evaluate_members, theta_hash, EsConfig, GenerationReport, Objective, ScoreSum, TrainerState};
use crate::error::{Error, Result};

/// Members evaluated by `rank`.
pub fn members_of(rank: usize, world: usize, pairs: usize) -> Vec<usize> {
    (rank..pairs).step_by(world).collect()
}

/// Allgather over a [`Transport`], rejecting stale, duplicate and
/// out-of-order messages.
pub struct Gatherer<T: Transport> {
    transport: T,
    last_seen: Vec<Option<u64>>,
}

impl<T: Transport> Gatherer<T> {
    pub fn new(transport: T) -> Self {
        let world = transport.world();
        Gatherer {
            transport,
            last_seen: vec![None; world],
        }
    }

    pub fn rank(&self) -> usize {
        self.transport.rank()
    }

    pub fn world(&self) -> usize {
        self.transport.world()
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn into_inner(self) -> T {
        self.transport
    }

    /// Sends `payload` to every peer and returns every rank's payload
    /// indexed by rank.
    pub fn allgather(&mut self, generation: u64, payload: &[f64]) -> Result<Vec<Vec<f64>>> {
        let rank = self.rank();
        let world = self.world();
        let frame = Message {
            generation,
            rank: rank as u32,
            values: payload.to_vec(),
        }
        .encode();
        for peer in (0..world).filter(|&p| p != rank) {
            self.transport.send(peer, &frame)?;
        }
        let mut gathered = vec![Vec::new(); world];
        gathered[rank] = payload.to_vec();
        for peer in (0..world).filter(|&p| p != rank) {
            let msg = Message::decode(&self.transport.recv(peer, generation)?)?;
            if msg.rank as usize != peer {
                return Err(Error::Protocol(format!("link from rank {peer} carried a message from rank {}", msg.rank)));
            }
            if self.last_seen[peer] == Some(msg.generation) {
                return Err(Error::Protocol(format!("duplicate message from rank {peer} for generation {}", msg.generation)));
            }
            if msg.generation != generation {
                return Err(Error::Protocol(format!(
                    "rank {peer} sent generation {} while gathering generation {generation}",
                    msg.generation
                )));
            }
            self.last_seen[peer] = Some(msg.generation);
            gathered[peer] = msg.values;
        }
        Ok(gathered)
    }
}

/// Deliberately corrupts this worker's local copy of its own first
/// delta after sending it. Test hook for the hash check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fault {
    pub generation: u64,
    pub offset: f64,
}

#[derive(Debug, Clone, Default)]
pub struct WorkerOptions {
    pub fault: Option<Fault>,
    pub stop: Option<Arc<AtomicBool>>,
}

/// One generation of the distributed protocol. `state.generation` names
/// the generation and advances on success.
pub fn run_generation<T, F>(
    gatherer: &mut Gatherer<T>,
    state: &mut TrainerState,
    config: &EsConfig,
    objective: &F,
    fault: Option<Fault>,
) -> Result<GenerationReport>
where
    T: Transport,
    F: Objective + ?Sized,
{
    let started = Instant::now();
    let (rank, world) = (gatherer.rank(), gatherer.world());
    let generation = state.generation;
    let mine = members_of(rank, world, config.pairs);

    let outcomes = evaluate_members(&state.theta, &mine, generation, config, objective);
    let mut local_error = None;
    let mut own_deltas = Vec::with_capacity(mine.len());
    let mut score_sum = ScoreSum::default();
    for outcome in outcomes {
        match outcome {
            Ok(p) => {
                own_deltas.push(p.delta);
                score_sum.add(p.plus);
                score_sum.add(p.minus);
            }
            Err(e) => {
                // Peers learn about the failure through the NaN.
                own_deltas.push(f64::NAN);
                local_error.get_or_insert(e);
            }
        }
    }

    let gathered = gatherer.allgather(generation, &own_deltas)?;
    if let Some(e) = local_error {
        return Err(e);
    }
    let mut deltas = vec![0.0; config.pairs];
    for (peer, values) in gathered.iter().enumerate() {
        let members = members_of(peer, world, config.pairs);
        if values.len() != members.len() {
            return Err(Error::Protocol(format!(
                "rank {peer} sent {} deltas, expected {}",
                values.len(),
                members.len()
            )));
        }
        for (&i, &d) in members.iter().zip(values) {
            if !d.is_finite() {
                return Err(Error::NonFiniteScore {
                    generation,
                    member: i,
                    score: d,
                });
            }
            deltas[i] = d;
        }
    }
    if let Some(f) = fault.filter(|f| f.generation == generation) {
        if let Some(&first) = mine.first() {
            deltas[first] += f.offset;
        }
    }

    let grad_norm = apply_deltas(state, &deltas, config)?;
    let hash = theta_hash(&state.theta);

    let checks = gatherer.allgather(generation | CHECK_ROUND, &[f64::from_bits(hash), f64::from_bits(score_sum.0 as u64)])?;
    let mut total = ScoreSum::default();
    for (peer, values) in checks.iter().enumerate() {
        let [peer_hash, peer_sum] = values[..] else {
            return Err(Error::Protocol(format!("rank {peer} sent a malformed check message")));
        };
        if peer_hash.to_bits() != hash {
            return Err(Error::ThetaMismatch { generation, rank, peer });
        }
        total.merge(ScoreSum(peer_sum.to_bits() as i64));
    }

    Ok(GenerationReport {
        generation,
        mean_score: total.value() / (2 * config.pairs) as f64,
        grad_norm,
        wall_time: started.elapsed().as_secs_f64(),
        theta_hash: hash,
    })
}

/// Runs generations until `state.generation == until` or the stop flag
/// is raised. `on_generation` sees every report and the updated state.
pub fn worker_loop<T, F, C>(
    transport: T,
    config: &EsConfig,
    objective: &F,
    mut state: TrainerState,
    until: u64,
    options: &WorkerOptions,
    mut on_generation: C,
) -> Result<TrainerState>
where
    T: Transport,
    F: Objective + ?Sized,
    C: FnMut(&GenerationReport, &TrainerState) -> Result<()>,
{
    config.validate()?;
    let mut gatherer = Gatherer::new(transport);
    while state.generation < until {
        if options.stop.as_ref().is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }
        let report = run_generation(&mut gatherer, &mut state, config, objective, options.fault)?;
        on_generation(&report, &state)?;
    }
    Ok(state)
}
