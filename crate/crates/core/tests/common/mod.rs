//! Oracles and check routines shared by the integration tests and the
//! acceptance gate. Every oracle here is written independently of the
//! library code it checks.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use pizero::agent::AgentConfig;
use pizero::envs::{flp, tsp, Action, Collect, EnvKind, EnvSettings, Environment, Flp, Tsp};
use pizero::envs::g2048::{self, slide_line};
use pizero::es::transport::{loopback_listeners, Solo, Tcp, Transport};
use pizero::es::wire::{HEADER_LEN, TRAILER_LEN};
use pizero::es::worker::{worker_loop, WorkerOptions};
use pizero::es::{evaluate_members, pseudogradient, AgentObjective, EsConfig, TrainerState};
use pizero::model::{AbstractModel, AbstractState, Prediction};
use pizero::planner::{self, SearchConfig, SearchTree};
use pizero::run::{self, RunConfig};
use pizero::stats;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- planner

/// Action 0 pays 1, action 1 pays 0, every value is 0.
pub struct TwoArmed;

impl AbstractModel for TwoArmed {
    fn num_actions(&self) -> usize {
        2
    }
    fn num_outcomes(&self) -> usize {
        3
    }
    fn dynamics(&self, s: &AbstractState, a: usize) -> (f64, AbstractState) {
        (if a == 0 { 1.0 } else { 0.0 }, s.clone())
    }
    fn predict(&self, _: &AbstractState) -> Prediction {
        Prediction {
            value: 0.0,
            logits: vec![0.0, 0.0],
        }
    }
    fn chance_prior(&self, _: &AbstractState) -> Vec<f64> {
        vec![1.0, 0.0, 0.0]
    }
    fn chance_dynamics(&self, s: &AbstractState, _: usize) -> (f64, AbstractState) {
        (0.0, s.clone())
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// A model whose rewards, values and priors are pseudo-random functions
/// of a path hash stored in the state. Every distinct path gets its own
/// numbers, which makes random but reproducible trees.
pub struct HashModel {
    pub seed: u64,
    pub actions: usize,
    pub outcomes: usize,
}

impl HashModel {
    fn key(&self, s: &AbstractState) -> u64 {
        s.0[0] as u64
    }

    fn child(&self, s: &AbstractState, tag: u64, a: usize) -> AbstractState {
        let h = splitmix(self.key(s) ^ splitmix(tag.wrapping_mul(31).wrapping_add(a as u64 + 1)));
        AbstractState(vec![(h >> 11) as f64])
    }

    pub fn root(&self) -> AbstractState {
        AbstractState(vec![(splitmix(self.seed) >> 11) as f64])
    }
}

impl AbstractModel for HashModel {
    fn num_actions(&self) -> usize {
        self.actions
    }
    fn num_outcomes(&self) -> usize {
        self.outcomes
    }
    fn dynamics(&self, s: &AbstractState, a: usize) -> (f64, AbstractState) {
        let next = self.child(s, 1, a);
        (4.0 * unit(splitmix(self.key(&next) ^ 0xAA)) - 2.0, next)
    }
    fn predict(&self, s: &AbstractState) -> Prediction {
        let k = self.key(s);
        Prediction {
            value: 6.0 * unit(splitmix(k ^ 0x55)) - 3.0,
            logits: (0..self.actions).map(|a| 3.0 * unit(splitmix(k ^ (a as u64 + 7))) - 1.5).collect(),
        }
    }
    fn chance_prior(&self, s: &AbstractState) -> Vec<f64> {
        let k = self.key(s);
        let w: Vec<f64> = (0..self.outcomes).map(|o| 0.05 + unit(splitmix(k ^ (o as u64 + 101)))).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
    fn chance_dynamics(&self, s: &AbstractState, o: usize) -> (f64, AbstractState) {
        let next = self.child(s, 2, o);
        (2.0 * unit(splitmix(self.key(&next) ^ 0xCC)) - 1.0, next)
    }
}

/// Runs one search while recording every backed-up return, then checks
/// visit conservation and that each Q is the mean of its recorded
/// returns.
pub fn check_tree(model: &HashModel, config: &SearchConfig, search_seed: u64) -> Result<(), String> {
    let per_sim = if config.chance_nodes { 2 } else { 1 };
    let mut tree = SearchTree::new(model, model.root(), 1 + per_sim * config.budget);
    let mut rng = ChaCha8Rng::seed_from_u64(search_seed);
    let mut backups: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut passes: HashMap<usize, u64> = HashMap::new();
    for sim in 0..config.budget {
        let before = tree.len();
        let (path, returns) = planner::simulate(&mut tree, model, config, &mut rng);
        let grew = tree.len() - before;
        // in chance mode a fresh afterstate means a decision edge was
        // expanded (afterstate plus decision node); otherwise an existing
        // afterstate gained one outcome
        let last = path.last().unwrap().node.0;
        let expected = if !config.chance_nodes {
            1
        } else if last >= before {
            2
        } else {
            1
        };
        ensure(grew == expected, || format!("simulation {sim} added {grew} nodes, expected {expected}"))?;
        for (step, g) in path.iter().zip(&returns) {
            backups.entry((step.node.0, step.action)).or_default().push(*g);
            *passes.entry(step.node.0).or_default() += 1;
        }
    }
    let root_total = tree.root().stats.total_visits();
    ensure(root_total == config.budget as u64, || format!("root visits {root_total} != budget {}", config.budget))?;
    for (id, node) in tree.nodes().iter().enumerate() {
        let through = passes.get(&id).copied().unwrap_or(0);
        ensure(node.stats.total_visits() == through, || {
            format!("node {id}: visits {} but {through} simulations passed", node.stats.total_visits())
        })?;
        let prior_sum: f64 = node.stats.prior.iter().sum();
        ensure((prior_sum - 1.0).abs() < 1e-9, || format!("node {id}: priors sum to {prior_sum}"))?;
        for a in 0..node.stats.len() {
            let n = node.stats.visits[a] as usize;
            let recorded = backups.get(&(id, a)).map_or(&[][..], Vec::as_slice);
            ensure(recorded.len() == n, || format!("edge ({id},{a}): N={n}, {} backups", recorded.len()))?;
            ensure(node.stats.child[a].is_some() == (n > 0), || format!("edge ({id},{a}) expansion state disagrees with N"))?;
            if n > 0 {
                let m = recorded.iter().sum::<f64>() / n as f64;
                let q = node.stats.q[a];
                ensure((q - m).abs() <= 1e-9 * (1.0 + m.abs()), || format!("edge ({id},{a}): Q={q}, mean of backups {m}"))?;
            } else {
                ensure(node.stats.q[a] == 0.0, || format!("unvisited edge ({id},{a}) has Q != 0"))?;
            }
        }
    }
    Ok(())
}

/// A random search configuration and model for case `case`.
pub fn random_case(case: u64) -> (HashModel, SearchConfig, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(case);
    let model = HashModel {
        seed: rng.random(),
        actions: rng.random_range(1..=6),
        outcomes: rng.random_range(1..=4),
    };
    let config = SearchConfig {
        budget: rng.random_range(1..=40),
        discount: if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.0..1.0) },
        chance_nodes: rng.random_bool(0.5),
        ..SearchConfig::default()
    };
    (model, config, rng.random())
}

// ----------------------------------------------------------- environments

/// 2048 rules as a player would apply them: move tiles one cell at a
/// time toward index 0 until nothing moves; a tile may merge into an
/// equal neighbour only if neither has merged during this move.
pub fn slide_row_oracle(row: [u8; 4]) -> ([u8; 4], u64) {
    let mut cells = row;
    let mut merged = [false; 4];
    let mut reward = 0;
    loop {
        let mut moved = false;
        for i in 1..4 {
            if cells[i] == 0 {
                continue;
            }
            if cells[i - 1] == 0 {
                cells[i - 1] = cells[i];
                merged[i - 1] = merged[i];
                cells[i] = 0;
                merged[i] = false;
                moved = true;
            } else if cells[i - 1] == cells[i] && !merged[i - 1] && !merged[i] {
                cells[i - 1] += 1;
                merged[i - 1] = true;
                cells[i] = 0;
                merged[i] = false;
                reward += 1u64 << cells[i - 1];
                moved = true;
            }
        }
        if !moved {
            return (cells, reward);
        }
    }
}

/// Every row over exponents 0..=3 in both horizontal directions,
/// through the library's board-level `slide`.
pub fn check_2048_rows() -> Result<usize, String> {
    let mut checked = 0;
    for code in 0..256u32 {
        let row = [0, 2, 4, 6].map(|s| ((code >> s) & 3) as u8);
        for dir in [g2048::LEFT, g2048::RIGHT] {
            let mut board = [[0u8; 4]; 4];
            board[1] = row;
            let (out, reward, _) = g2048::slide(&board, dir);
            let (want_row, want_reward) = if dir == g2048::LEFT {
                slide_row_oracle(row)
            } else {
                let mut rev = row;
                rev.reverse();
                let (mut o, r) = slide_row_oracle(rev);
                o.reverse();
                (o, r)
            };
            ensure(out[1] == want_row && reward == want_reward, || {
                format!("row {row:?} dir {dir}: got {:?}/{reward}, oracle {want_row:?}/{want_reward}", out[1])
            })?;
            ensure(slide_line(row) == slide_row_oracle(row), || format!("slide_line disagrees on {row:?}"))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random(), rng.random()]).collect()
}

/// Plays a random permutation through the environment and compares the
/// terminal reward with a direct sum of edge lengths.
pub fn check_tsp(instances: u64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let n = 10;
        let cities = random_points(&mut rng, n);
        let mut env = Tsp::new(cities.clone());
        let mut total = 0.0;
        let mut remaining: Vec<usize> = (0..n).collect();
        let mut visit = Vec::with_capacity(n);
        while !env.is_done() {
            let pick = remaining.swap_remove(rng.random_range(0..remaining.len()));
            visit.push(pick);
            total += env.step(&Action::Discrete(pick)).reward;
        }
        let mut direct = 0.0;
        for k in 0..n {
            let a = cities[visit[k]];
            let b = cities[visit[(k + 1) % n]];
            direct += ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt();
        }
        let err = (total + direct).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("instance {i}: reward {total} vs oracle {}", -direct))?;
        ensure((tsp::tour_length(&cities, &visit) - direct).abs() <= 1e-12, || format!("instance {i}: tour_length disagrees"))?;
    }
    Ok(worst)
}

/// Places random facilities and compares the terminal reward with an
/// explicit double loop.
pub fn check_flp(instances: u64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + i);
        let (n, m) = (rng.random_range(1..30), rng.random_range(1..8));
        let clients = random_points(&mut rng, n);
        let mut env = Flp::new(clients.clone(), m);
        let mut placed = Vec::new();
        let mut total = 0.0;
        while !env.is_done() {
            let raw = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let point = raw.map(|x: f64| 1.0 / (1.0 + (-x).exp()));
            placed.push(point);
            total += env.step(&Action::Point(point)).reward;
        }
        let mut worst_client: f64 = 0.0;
        for c in &clients {
            let mut nearest = f64::INFINITY;
            for f in &placed {
                let d = ((c[0] - f[0]).powi(2) + (c[1] - f[1]).powi(2)).sqrt();
                if d < nearest {
                    nearest = d;
                }
            }
            if nearest > worst_client {
                worst_client = nearest;
            }
        }
        let err = (total + worst_client).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12, || format!("instance {i}: reward {total} vs oracle {}", -worst_client))?;
        ensure((flp::max_min_distance(&clients, &placed) - worst_client).abs() <= 1e-12, || format!("instance {i}: max_min_distance disagrees"))?;
    }
    Ok(worst)
}

/// Random walks on Collect: coins are only ever removed, only where the
/// agent stands, the agent stays on the grid, and the score is minus the
/// coins left.
pub fn check_collect(rollouts: u64) -> Result<(), String> {
    for i in 0..rollouts {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + i);
        let mut env = Collect::random(8, 5, 20, i);
        let coins0 = env.remaining();
        ensure(coins0 == 5 && env.initial_coins() == 5, || format!("rollout {i}: {coins0} coins at start"))?;
        let mut collected = 0;
        let mut score = 0.0;
        let mut steps = 0;
        while !env.is_done() {
            let before: Vec<bool> = (0..64).map(|t| env.coin_at(t / 8, t % 8)).collect();
            let (r0, c0) = env.agent();
            let a = rng.random_range(0..4);
            score += env.step(&Action::Discrete(a)).reward;
            steps += 1;
            let (r, c) = env.agent();
            ensure(r < 8 && c < 8 && r.abs_diff(r0) + c.abs_diff(c0) <= 1, || format!("rollout {i}: illegal move"))?;
            for (t, &was) in before.iter().enumerate() {
                let now = env.coin_at(t / 8, t % 8);
                ensure(!now || was, || format!("rollout {i}: coin appeared"))?;
                if was && !now {
                    ensure(t == r * 8 + c, || format!("rollout {i}: coin vanished away from the agent"))?;
                    collected += 1;
                }
            }
            ensure(env.remaining() + collected == coins0, || format!("rollout {i}: coins not conserved"))?;
        }
        ensure(steps == 20, || format!("rollout {i}: {steps} steps"))?;
        ensure(score == -(env.remaining() as f64), || format!("rollout {i}: score {score} with {} left", env.remaining()))?;
    }
    Ok(())
}

// ------------------------------------------------------------------- BCa

fn phi(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

fn phi_inv(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Textbook BCa for the mean on the same resampling stream as the
/// library (ChaCha8 seeded from `seed`, uniform indices), with its own
/// normal quantiles and percentile lookup.
pub fn reference_bca(x: &[f64], confidence: f64, resamples: usize, seed: u64) -> (f64, f64) {
    let n = x.len();
    let theta_hat = x.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut s = 0.0;
        for _ in 0..n {
            s += x[rng.random_range(0..n as u32) as usize];
        }
        boot.push(s / n as f64);
    }
    boot.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let b = resamples as f64;
    let less = boot.iter().filter(|&&t| t < theta_hat).count() as f64;
    let equal = boot.iter().filter(|&&t| t == theta_hat).count() as f64;
    let p0 = ((less + equal / 2.0) / b).max(0.5 / b).min(1.0 - 0.5 / b);
    let z0 = phi_inv(p0);

    let mut jack = Vec::with_capacity(n);
    for i in 0..n {
        let s: f64 = x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
        jack.push(s / (n - 1) as f64);
    }
    let jbar = jack.iter().sum::<f64>() / n as f64;
    let num: f64 = jack.iter().map(|t| (jbar - t).powi(3)).sum();
    let den: f64 = jack.iter().map(|t| (jbar - t).powi(2)).sum();
    let a = if den == 0.0 { 0.0 } else { num / (6.0 * den.powf(1.5)) };

    let alpha = (1.0 - confidence) / 2.0;
    let pick = |z: f64| {
        let q = phi(z0 + (z0 + z) / (1.0 - a * (z0 + z)));
        let idx = ((q * b).ceil() as usize).max(1).min(resamples);
        boot[idx - 1]
    };
    (pick(phi_inv(alpha)), pick(phi_inv(1.0 - alpha)))
}

pub const BCA_FIXTURE: [f64; 10] = [2.1, -0.4, 3.7, 1.2, 0.8, 5.9, -1.3, 2.2, 0.0, 4.4];

pub fn check_bca_fixtures() -> Result<String, String> {
    let degenerate = stats::bca_interval(&[3.0; 8], 0.95, 1000, 1).map_err(|e| e.to_string())?;
    ensure(degenerate == (3.0, 3.0), || format!("degenerate interval {degenerate:?}"))?;

    let sym: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
    let (lo, hi) = stats::bca_interval(&sym, 0.95, 20_000, 3).map_err(|e| e.to_string())?;
    ensure((lo + hi).abs() <= 0.05, || format!("symmetric samples gave ({lo}, {hi})"))?;

    let got = stats::bca_interval(&BCA_FIXTURE, 0.95, 10_000, 2024).map_err(|e| e.to_string())?;
    let want = reference_bca(&BCA_FIXTURE, 0.95, 10_000, 2024);
    ensure((got.0 - want.0).abs() <= 1e-9 && (got.1 - want.1).abs() <= 1e-9, || {
        format!("fixture interval {got:?} vs reference {want:?}")
    })?;
    Ok(format!("symmetric ({lo:.4}, {hi:.4}); fixture ({:.6}, {:.6})", got.0, got.1))
}

/// Fraction of 0.95 intervals on `n` standard normal draws that cover 0.
pub fn bca_coverage(reps: usize, n: usize) -> f64 {
    let normal = rand_distr::StandardNormal;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut hits = 0;
    for r in 0..reps {
        let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(normal)).collect();
        let (lo, hi) = stats::bca_interval(&x, 0.95, 2000, r as u64).unwrap();
        if lo <= 0.0 && 0.0 <= hi {
            hits += 1;
        }
    }
    hits as f64 / reps as f64
}

// -------------------------------------------------------------------- ES

/// Mean pseudogradient over `generations` generations of `pairs` pairs
/// on `f`.
pub fn mean_pseudogradient<F>(f: &F, theta: &[f64], sigma: f64, pairs: usize, generations: u64, seed: u64) -> Vec<f64>
where
    F: Fn(&[f64], u64) -> f64 + Sync,
{
    let config = EsConfig {
        sigma,
        learning_rate: 1e-3,
        pairs,
        episodes_per_eval: 1,
        seed,
        rank_shaping: false,
    };
    let members: Vec<usize> = (0..pairs).collect();
    let mut acc = vec![0.0; theta.len()];
    for generation in 0..generations {
        let deltas: Vec<f64> = evaluate_members(theta, &members, generation, &config, f)
            .into_iter()
            .map(|r| r.unwrap().delta)
            .collect();
        let g = pseudogradient(&deltas, seed, generation, sigma, theta.len(), false);
        for (a, x) in acc.iter_mut().zip(g) {
            *a += x;
        }
    }
    acc.iter().map(|a| a / generations as f64).collect()
}

pub fn linear_coefficients(dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    (0..dim)
        .map(|_| {
            let m = 1.0 + rng.random::<f64>();
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect()
}

/// Worst per-coordinate relative error of the mean pseudogradient of
/// `a·x` against `a`.
pub fn nes_linear_error(pairs: usize, generations: u64) -> f64 {
    let a = linear_coefficients(50);
    let f = |x: &[f64], _: u64| x.iter().zip(&a).map(|(x, a)| x * a).sum::<f64>();
    let theta = vec![0.3; 50];
    let g = mean_pseudogradient(&f, &theta, 0.1, pairs, generations, 11);
    g.iter().zip(&a).map(|(g, a)| ((g - a) / a).abs()).fold(0.0, f64::max)
}

/// Cosine between the mean pseudogradient of a quadratic bowl and the
/// gradient of its Gaussian smoothing (which for a quadratic equals the
/// plain gradient).
pub fn nes_quadratic_cosine(pairs: usize, generations: u64) -> f64 {
    let dim = 20;
    let diag: Vec<f64> = (0..dim).map(|i| 0.5 + i as f64 / 10.0).collect();
    let center: Vec<f64> = (0..dim).map(|i| (i as f64 * 0.37).sin()).collect();
    let f = |x: &[f64], _: u64| -> f64 {
        -x.iter()
            .zip(&center)
            .zip(&diag)
            .map(|((x, c), d)| d * (x - c) * (x - c))
            .sum::<f64>()
    };
    let theta = vec![0.0; dim];
    let analytic: Vec<f64> = (0..dim).map(|i| -2.0 * diag[i] * (theta[i] - center[i])).collect();
    let g = mean_pseudogradient(&f, &theta, 0.1, pairs, generations, 12);
    let dot: f64 = g.iter().zip(&analytic).map(|(a, b)| a * b).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(&g) * norm(&analytic))
}

// ------------------------------------------------------------ distributed

pub fn small_agent() -> AgentConfig {
    AgentConfig {
        state_dim: 8,
        memory_dim: 8,
        hidden_width: 8,
        budget: 3,
        ..AgentConfig::default()
    }
}

pub fn small_objective(env: EnvKind) -> Arc<AgentObjective> {
    Arc::new(AgentObjective::new(small_agent(), env, EnvSettings::default(), 1).unwrap())
}

pub fn es_config(pairs: usize, seed: u64) -> EsConfig {
    EsConfig {
        sigma: 0.1,
        learning_rate: 0.01,
        pairs,
        episodes_per_eval: 1,
        seed,
        rank_shaping: false,
    }
}

/// Serial reference run.
pub fn serial_run(objective: &AgentObjective, config: &EsConfig, generations: u64) -> TrainerState {
    let state = TrainerState::new(objective.initial_params(config.seed));
    worker_loop(Solo, config, objective, state, generations, &WorkerOptions::default(), |_, _| Ok(())).unwrap()
}

/// `world` workers on a loopback TCP mesh. Returns every worker's final
/// state and bytes sent, or the first error.
pub fn tcp_run(
    objective: Arc<AgentObjective>,
    config: EsConfig,
    world: usize,
    generations: u64,
    options: Vec<WorkerOptions>,
) -> Vec<pizero::Result<(TrainerState, u64)>> {
    let (listeners, addrs) = loopback_listeners(world).unwrap();
    let handles: Vec<_> = listeners
        .into_iter()
        .zip(options)
        .enumerate()
        .map(|(rank, (listener, opts))| {
            let addrs = addrs.clone();
            let objective = objective.clone();
            thread::spawn(move || {
                let mut t = Tcp::with_listener(rank, listener, &addrs, Duration::from_secs(30))?;
                let state = TrainerState::new(objective.initial_params(config.seed));
                let end = worker_loop(&mut t, &config, &*objective, state, generations, &opts, |_, _| Ok(()))?;
                Ok((end, t.bytes_sent()))
            })
        })
        .collect();
    handles.into_iter().map(|h| h.join().unwrap()).collect()
}

/// Upper bound on what one worker may send per generation: its share of
/// deltas to each peer plus fixed per-message overhead, and the constant
/// size check round.
pub fn per_generation_byte_bound(pairs: usize, world: usize) -> u64 {
    let framing = 4;
    let fixed = (HEADER_LEN + TRAILER_LEN + framing) as u64;
    let check = fixed + 16;
    (pairs * 8) as u64 + (world as u64 - 1) * (fixed + check)
}

pub fn check_distributed(world: usize, pairs: usize, generations: u64) -> Check {
    let objective = small_objective(EnvKind::Collect);
    let config = es_config(pairs, 404);
    let serial = serial_run(&objective, &config, generations);
    let results = tcp_run(objective, config, world, generations, vec![WorkerOptions::default(); world]);
    let bound = per_generation_byte_bound(pairs, world) * generations;
    for (rank, r) in results.into_iter().enumerate() {
        let (state, sent) = r.map_err(|e| format!("rank {rank}: {e}"))?;
        let same = state.theta.len() == serial.theta.len()
            && state.theta.iter().zip(&serial.theta).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(same, || format!("rank {rank} diverged from the serial run"))?;
        ensure(sent <= bound, || format!("rank {rank} sent {sent} bytes, bound {bound}"))?;
    }
    Ok(format!("{world} TCP workers bit-identical to serial over {generations} generations, |theta| = {}", serial.theta.len()))
}

// ---------------------------------------------------------------- run dir

pub fn tiny_run_config(dir: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.apply_text(
        "env = collect\nstate_dim = 6\nmemory_dim = 6\nhidden_width = 6\nbudget = 3\npairs = 4\ntrials = 2\ngenerations = 3\neval_episodes = 3\nfinal_episodes = 5\nseed = 5\n",
    )
    .unwrap();
    c.output = dir.to_path_buf();
    c
}

pub const DETERMINISTIC_FILES: [&str; 5] = ["curve.csv", "final.csv", "trial-0.csv", "trial-1.csv", "config.txt"];

pub fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

pub fn check_train_determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ca = tiny_run_config(a.path());
    let mut cb = ca.clone();
    cb.output = b.path().to_path_buf();
    run::cmd_train(&ca, &mut |_| {}).map_err(|e| e.to_string())?;
    run::cmd_train(&cb, &mut |_| {}).map_err(|e| e.to_string())?;
    for name in ["curve.csv", "final.csv", "trial-0.csv", "trial-1.csv"] {
        ensure(read(a.path(), name) == read(b.path(), name), || format!("{name} differs between runs"))?;
    }
    Ok("curve.csv, final.csv and per-trial CSVs byte-identical".into())
}
