//! Monte Carlo tree search over abstract states.
//!
//! The search only sees an [`AbstractModel`]. Each simulation descends
//! from the root by pUCT, expands exactly one leaf edge with the dynamics
//! and prediction functions, and backs up an n-step return that
//! bootstraps from the leaf value.
//!
//! With chance nodes enabled every decision edge leads to an afterstate.
//! Outcomes at an afterstate are sampled from the learned chance prior
//! rather than selected by pUCT.

use rand::Rng;

use crate::model::{AbstractModel, AbstractState};
use crate::nn;

pub const DEFAULT_C1: f64 = 1.25;
pub const DEFAULT_C2: f64 = 19652.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Number of simulations, each of which expands exactly one edge.
    pub budget: usize,
    pub discount: f64,
    pub c1: f64,
    pub c2: f64,
    pub chance_nodes: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: 10,
            discount: 1.0,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            chance_nodes: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Decision,
    Chance,
}

/// Per-edge lookup table of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub visits: Vec<u32>,
    pub q: Vec<f64>,
    pub prior: Vec<f64>,
    pub reward: Vec<f64>,
    pub child: Vec<Option<NodeId>>,
}

impl NodeStats {
    pub fn fresh(prior: Vec<f64>) -> Self {
        let n = prior.len();
        NodeStats {
            visits: vec![0; n],
            q: vec![0.0; n],
            prior,
            reward: vec![0.0; n],
            child: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().map(|&n| n as u64).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub state: AbstractState,
    pub kind: NodeKind,
    pub stats: NodeStats,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<Node>,
}

impl SearchTree {
    /// A tree holding only the root, with priors from `model.predict`.
    pub fn new<M: AbstractModel + ?Sized>(model: &M, root: AbstractState, capacity: usize) -> Self {
        let prior = model.predict(&root).priors();
        let mut nodes = Vec::with_capacity(capacity.max(1));
        nodes.push(Node {
            state: root,
            kind: NodeKind::Decision,
            stats: NodeStats::fresh(prior),
        });
        SearchTree { nodes }
    }

    pub const ROOT: NodeId = NodeId(0);

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, state: AbstractState, kind: NodeKind, prior: Vec<f64>) -> NodeId {
        self.nodes.push(Node {
            state,
            kind,
            stats: NodeStats::fresh(prior),
        });
        NodeId(self.nodes.len() - 1)
    }
}

/// One traversed edge: the node it leaves and the action or outcome taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub node: NodeId,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub root_visits: Vec<u32>,
    pub root_q: Vec<f64>,
    pub action: usize,
}

/// pUCT score of edge `action`:
/// `Q + P * sqrt(1 + ΣN) / (1 + N) * (c1 + ln((ΣN + c2 + 1) / c2))`.
pub fn ucb_score(stats: &NodeStats, action: usize, c1: f64, c2: f64) -> f64 {
    let total = stats.total_visits() as f64;
    let n = stats.visits[action] as f64;
    let explore = (1.0 + total).sqrt() / (1.0 + n) * (c1 + ((total + c2 + 1.0) / c2).ln());
    stats.q[action] + stats.prior[action] * explore
}

/// Draws an index from `probs` using one uniform variate.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Action with the highest pUCT score (lowest index on ties) at a
/// decision node; a sampled outcome at a chance node.
pub fn select_child<R: Rng + ?Sized>(tree: &SearchTree, node: NodeId, config: &SearchConfig, rng: &mut R) -> usize {
    let n = tree.node(node);
    match n.kind {
        NodeKind::Decision => {
            let scores: Vec<f64> = (0..n.stats.len())
                .map(|a| ucb_score(&n.stats, a, config.c1, config.c2))
                .collect();
            nn::argmax(&scores)
        }
        NodeKind::Chance => sample_categorical(&n.stats.prior, rng),
    }
}

/// Result of expanding one leaf edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    /// The new decision node at the end of the path.
    pub leaf: NodeId,
    /// Value predicted at `leaf`, used as the bootstrap.
    pub value: f64,
    /// Edges created beyond the one that was expanded (the sampled chance
    /// edge when a decision edge opens onto an afterstate).
    pub extra_steps: Vec<PathStep>,
}

/// Expands the unexpanded edge `(parent, action)`.
///
/// Panics if the edge already has a successor.
pub fn expand_leaf<M, R>(
    tree: &mut SearchTree,
    parent: NodeId,
    action: usize,
    model: &M,
    config: &SearchConfig,
    rng: &mut R,
) -> Expansion
where
    M: AbstractModel + ?Sized,
    R: Rng + ?Sized,
{
    assert!(
        tree.nodes[parent.0].stats.child[action].is_none(),
        "edge ({parent:?}, {action}) is already expanded"
    );
    let kind = tree.nodes[parent.0].kind;
    let (reward, next) = match kind {
        NodeKind::Decision => model.dynamics(&tree.nodes[parent.0].state, action),
        NodeKind::Chance => model.chance_dynamics(&tree.nodes[parent.0].state, action),
    };

    let mut extra_steps = Vec::new();
    let (leaf, value) = if kind == NodeKind::Decision && config.chance_nodes {
        let prior = model.chance_prior(&next);
        let after = tree.push(next, NodeKind::Chance, prior);
        link(tree, parent, action, reward, after);
        let outcome = sample_categorical(&tree.nodes[after.0].stats.prior, rng);
        let (r2, s2) = model.chance_dynamics(&tree.nodes[after.0].state, outcome);
        let prediction = model.predict(&s2);
        let leaf = tree.push(s2, NodeKind::Decision, prediction.priors());
        link(tree, after, outcome, r2, leaf);
        extra_steps.push(PathStep {
            node: after,
            action: outcome,
        });
        (leaf, prediction.value)
    } else {
        let prediction = model.predict(&next);
        let leaf = tree.push(next, NodeKind::Decision, prediction.priors());
        link(tree, parent, action, reward, leaf);
        (leaf, prediction.value)
    };
    Expansion {
        leaf,
        value,
        extra_steps,
    }
}

fn link(tree: &mut SearchTree, parent: NodeId, action: usize, reward: f64, child: NodeId) {
    let stats = &mut tree.nodes[parent.0].stats;
    stats.reward[action] = reward;
    stats.child[action] = Some(child);
}

/// Per-edge discount. An afterstate belongs to the same real step as the
/// decision that produced it, so only the edge that leaves it discounts.
fn edge_discount(tree: &SearchTree, step: &PathStep, config: &SearchConfig) -> f64 {
    match (tree.node(step.node).kind, config.chance_nodes) {
        (NodeKind::Decision, true) => 1.0,
        _ => config.discount,
    }
}

/// Backs `leaf_value` up `path` (root to leaf): `G_t = r_t + γ_t G_{t+1}`
/// with `G_T = leaf_value`, then `Q ← (N Q + G) / (N + 1)`, `N ← N + 1`.
/// Returns the returns in path order.
pub fn backpropagate(tree: &mut SearchTree, path: &[PathStep], leaf_value: f64, config: &SearchConfig) -> Vec<f64> {
    assert!(!path.is_empty(), "backpropagation needs a nonempty path");
    let mut returns = vec![0.0; path.len()];
    let mut g = leaf_value;
    for (t, step) in path.iter().enumerate().rev() {
        let discount = edge_discount(tree, step, config);
        let stats = &mut tree.nodes[step.node.0].stats;
        g = stats.reward[step.action] + discount * g;
        let n = stats.visits[step.action] as f64;
        stats.q[step.action] = (n * stats.q[step.action] + g) / (n + 1.0);
        stats.visits[step.action] += 1;
        returns[t] = g;
    }
    returns
}

/// Runs one simulation: selection, expansion, backpropagation. Returns
/// the path walked and the returns backed up along it.
pub fn simulate<M, R>(tree: &mut SearchTree, model: &M, config: &SearchConfig, rng: &mut R) -> (Vec<PathStep>, Vec<f64>)
where
    M: AbstractModel + ?Sized,
    R: Rng + ?Sized,
{
    let mut path = Vec::new();
    let mut node = SearchTree::ROOT;
    loop {
        let action = select_child(tree, node, config, rng);
        path.push(PathStep { node, action });
        match tree.node(node).stats.child[action] {
            Some(child) => node = child,
            None => break,
        }
    }
    let last = *path.last().expect("path has at least the root edge");
    let expansion = expand_leaf(tree, last.node, last.action, model, config, rng);
    path.extend(expansion.extra_steps);
    let returns = backpropagate(tree, &path, expansion.value, config);
    (path, returns)
}

/// Chooses the root action by `config.budget` simulations from `root`.
/// The chosen action is the most visited one, lowest index on ties.
pub fn run_search<M, R>(model: &M, root: AbstractState, config: &SearchConfig, rng: &mut R) -> SearchResult
where
    M: AbstractModel + ?Sized,
    R: Rng + ?Sized,
{
    search_tree(model, root, config, rng).0
}

/// Like [`run_search`], also returning the finished tree.
pub fn search_tree<M, R>(model: &M, root: AbstractState, config: &SearchConfig, rng: &mut R) -> (SearchResult, SearchTree)
where
    M: AbstractModel + ?Sized,
    R: Rng + ?Sized,
{
    assert!(config.budget >= 1, "simulation budget must be at least 1");
    let per_sim = if config.chance_nodes { 2 } else { 1 };
    let mut tree = SearchTree::new(model, root, 1 + per_sim * config.budget);
    for _ in 0..config.budget {
        simulate(&mut tree, model, config, rng);
    }
    let stats = &tree.root().stats;
    let counts: Vec<f64> = stats.visits.iter().map(|&n| n as f64).collect();
    let result = SearchResult {
        root_visits: stats.visits.clone(),
        root_q: stats.q.clone(),
        action: nn::argmax(&counts),
    };
    (result, tree)
}

/// Planner-free choice: the argmax of the root's predicted logits.
pub fn reactive_action<M: AbstractModel + ?Sized>(model: &M, root: &AbstractState) -> usize {
    nn::argmax(&model.predict(root).logits)
}
