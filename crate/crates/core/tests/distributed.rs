mod common;

use std::thread;
use std::time::Duration;

use pizero::envs::EnvKind;
use pizero::es::transport::InProcess;
use pizero::es::worker::{worker_loop, Fault, Gatherer, WorkerOptions};
use pizero::es::TrainerState;
use pizero::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn four_tcp_workers_match_serial_bit_for_bit() {
    let detail = common::check_distributed(4, 8, 10).unwrap();
    println!("{detail}");
}

#[test]
fn in_process_workers_match_serial_with_uneven_shares() {
    let objective = common::small_objective(EnvKind::Tsp);
    let config = common::es_config(7, 9);
    let serial = common::serial_run(&objective, &config, 4);
    let mesh = InProcess::mesh(3, Duration::from_secs(30));
    let handles: Vec<_> = mesh
        .into_iter()
        .map(|t| {
            let objective = objective.clone();
            thread::spawn(move || {
                let state = TrainerState::new(objective.initial_params(config.seed));
                worker_loop(t, &config, &*objective, state, 4, &WorkerOptions::default(), |_, _| Ok(())).unwrap()
            })
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), serial);
    }
}

#[test]
fn injected_fault_is_caught_within_one_generation() {
    let world = 3;
    let objective = common::small_objective(EnvKind::Collect);
    let config = common::es_config(6, 21);
    let mut options = vec![WorkerOptions::default(); world];
    options[1].fault = Some(Fault {
        generation: 2,
        offset: 0.5,
    });
    let results = common::tcp_run(objective, config, world, 6, options);
    for (rank, r) in results.into_iter().enumerate() {
        match r {
            Err(Error::ThetaMismatch { generation, .. }) => assert_eq!(generation, 2, "rank {rank}"),
            other => panic!("rank {rank}: expected a hash mismatch, got {other:?}"),
        }
    }
}

#[test]
fn eight_way_allgather_is_concatenation() {
    let world = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let payloads: Vec<Vec<f64>> = (0..world).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
    let mesh = InProcess::mesh(world, Duration::from_secs(10));
    let handles: Vec<_> = mesh
        .into_iter()
        .map(|t| {
            let payloads = payloads.clone();
            thread::spawn(move || {
                let mut g = Gatherer::new(t);
                let rank = g.rank();
                (0..3).map(|gen| g.allgather(gen, &payloads[rank]).unwrap()).collect::<Vec<_>>()
            })
        })
        .collect();
    for h in handles {
        for gathered in h.join().unwrap() {
            assert_eq!(gathered, payloads);
        }
    }
}

#[test]
fn bandwidth_does_not_grow_with_parameters() {
    // Same population, tiny and large networks: identical byte counts.
    let config = common::es_config(8, 3);
    let run = |dim: usize| {
        let mesh = InProcess::mesh(2, Duration::from_secs(10));
        let handles: Vec<_> = mesh
            .into_iter()
            .map(|mut t| {
                thread::spawn(move || {
                    let f = |x: &[f64], _: u64| -x.iter().map(|v| v * v).sum::<f64>();
                    let state = TrainerState::new(vec![0.5; dim]);
                    worker_loop(&mut t, &config, &f, state, 3, &WorkerOptions::default(), |_, _| Ok(())).unwrap();
                    pizero::es::transport::Transport::bytes_sent(&t)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect::<Vec<u64>>()
    };
    assert_eq!(run(4), run(40_000));
    for sent in run(4) {
        assert!(sent <= 3 * common::per_generation_byte_bound(8, 2));
    }
}
