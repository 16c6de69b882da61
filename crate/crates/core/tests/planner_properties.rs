mod common;

use common::{check_tree, random_case, TwoArmed};
use pizero::model::AbstractState;
use pizero::planner::{self, run_search, ucb_score, NodeStats, SearchConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn stats(visits: Vec<u32>, q: Vec<f64>, prior: Vec<f64>) -> NodeStats {
    let n = visits.len();
    NodeStats {
        visits,
        q,
        prior,
        reward: vec![0.0; n],
        child: vec![None; n],
    }
}

#[test]
fn hand_evaluated_scores() {
    let fresh = NodeStats::fresh(vec![0.25; 4]);
    let expected = 0.25 * (1.25 + (19653.0f64 / 19652.0).ln());
    for a in 0..4 {
        let s = ucb_score(&fresh, a, 1.25, 19652.0);
        assert!((s - expected).abs() < 1e-15);
        assert!((s - 0.312513).abs() < 1e-6);
    }

    let s = stats(vec![1, 0], vec![1.0, 0.0], vec![0.5, 0.5]);
    let c = 1.25 + (19654.0f64 / 19652.0).ln();
    let by_hand = [1.0 + 0.5 * 2f64.sqrt() / 2.0 * c, 0.5 * 2f64.sqrt() * c];
    for (a, want) in by_hand.iter().enumerate() {
        assert!((ucb_score(&s, a, 1.25, 19652.0) - want).abs() < 1e-12);
    }
    assert!((by_hand[0] - 1.441978).abs() < 1e-6);
    assert!((by_hand[1] - 0.88396).abs() < 1e-5);
}

#[test]
fn two_armed_stub_prefers_paying_arm() {
    for seed in 0..100 {
        for chance_nodes in [false, true] {
            let config = SearchConfig {
                budget: 10,
                chance_nodes,
                ..SearchConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = run_search(&TwoArmed, AbstractState::zeros(1), &config, &mut rng);
            assert_eq!(r.action, 0);
            assert!(r.root_visits[0] > r.root_visits[1], "{:?}", r.root_visits);
            assert_eq!(r.root_visits.iter().sum::<u32>(), 10);
        }
    }
}

#[test]
fn monotone_focus_from_budget_four() {
    for budget in 4..30 {
        let config = SearchConfig {
            budget,
            ..SearchConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = run_search(&TwoArmed, AbstractState::zeros(1), &config, &mut rng);
        assert!(r.root_visits[0] > r.root_visits[1], "budget {budget}: {:?}", r.root_visits);
    }
}

#[test]
fn budget_one_takes_prior_argmax() {
    let model = common::HashModel {
        seed: 3,
        actions: 5,
        outcomes: 2,
    };
    let config = SearchConfig {
        budget: 1,
        ..SearchConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let r = run_search(&model, model.root(), &config, &mut rng);
    assert_eq!(r.action, planner::reactive_action(&model, &model.root()));
}

#[test]
fn thousand_random_trees() {
    for case in 0..1200 {
        let (model, config, seed) = random_case(case);
        if let Err(e) = check_tree(&model, &config, seed) {
            panic!("case {case} ({config:?}): {e}");
        }
    }
}

#[test]
fn search_is_deterministic() {
    for case in 0..50 {
        let (model, config, seed) = random_case(case);
        let a = run_search(&model, model.root(), &config, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = run_search(&model, model.root(), &config, &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn invariants_hold_on_arbitrary_trees(
        seed in any::<u64>(),
        actions in 1usize..7,
        outcomes in 1usize..5,
        budget in 1usize..50,
        discount in 0.0f64..=1.0,
        chance_nodes in any::<bool>(),
        search_seed in any::<u64>(),
    ) {
        let model = common::HashModel { seed, actions, outcomes };
        let config = SearchConfig { budget, discount, chance_nodes, ..SearchConfig::default() };
        prop_assert!(check_tree(&model, &config, search_seed).is_ok(), "{:?}", check_tree(&model, &config, search_seed));
    }

    #[test]
    fn zero_prior_edge_scores_its_q(visits in proptest::collection::vec(0u32..50, 2..6), q in -5.0f64..5.0) {
        let n = visits.len();
        let mut prior = vec![1.0 / (n - 1) as f64; n];
        prior[0] = 0.0;
        let mut qs = vec![0.0; n];
        qs[0] = q;
        let s = stats(visits, qs, prior);
        prop_assert_eq!(ucb_score(&s, 0, 1.25, 19652.0), q);
    }
}
