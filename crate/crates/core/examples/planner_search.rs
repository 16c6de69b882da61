//! Tree search over a hand-written abstract model.
//!
//! The model is a corridor of integer positions. Action 0 steps left,
//! action 1 steps right, and every arrival at position 3 pays 1. The prior
//! slightly prefers stepping left, so a budget-1 search (the reactive policy)
//! walks the wrong way while a deeper search finds the reward.
//!
//! Run with `cargo run --example planner_search`.

use pizero::model::{AbstractModel, AbstractState, Prediction};
use pizero::planner::{reactive_action, run_search, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Corridor;

impl AbstractModel for Corridor {
    fn num_actions(&self) -> usize {
        2
    }

    fn num_outcomes(&self) -> usize {
        1
    }

    fn dynamics(&self, state: &AbstractState, action: usize) -> (f64, AbstractState) {
        let x = state.0[0] + if action == 0 { -1.0 } else { 1.0 };
        let reward = if x == 3.0 { 1.0 } else { 0.0 };
        (reward, AbstractState(vec![x]))
    }

    fn predict(&self, _state: &AbstractState) -> Prediction {
        Prediction {
            value: 0.0,
            logits: vec![0.6f64.ln(), 0.4f64.ln()],
        }
    }

    fn chance_prior(&self, _state: &AbstractState) -> Vec<f64> {
        vec![1.0]
    }

    fn chance_dynamics(&self, afterstate: &AbstractState, _outcome: usize) -> (f64, AbstractState) {
        (0.0, afterstate.clone())
    }
}

fn main() {
    let start = AbstractState(vec![0.0]);
    println!("reactive choice: action {}", reactive_action(&Corridor, &start));

    for budget in [1, 3, 10, 30, 100] {
        for chance_nodes in [false, true] {
            let config = SearchConfig {
                budget,
                chance_nodes,
                ..SearchConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let r = run_search(&Corridor, start.clone(), &config, &mut rng);
            println!(
                "budget {budget:>3} chance nodes {chance_nodes:<5} -> action {} visits {:?} q {:?}",
                r.action,
                r.root_visits,
                r.root_q.iter().map(|q| (q * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
        }
    }
}
