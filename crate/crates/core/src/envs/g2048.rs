//! The 2048 sliding-tile game on a 4x4 board of exponents.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{Action, ActionKind, EnvSpec, Environment, Transition};
use crate::nn;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

/// Exponents, `0` for empty, tile value `2^e` otherwise.
pub type Board = [[u8; 4]; 4];

pub fn spec(max_steps: usize) -> EnvSpec {
    EnvSpec {
        obs_dim: 16,
        action: ActionKind::Discrete(4),
        horizon: max_steps,
    }
}

/// Slides one line toward index 0. Equal neighbours merge once, the pair
/// closest to the leading edge first. Returns the line and its reward.
pub fn slide_line(line: [u8; 4]) -> ([u8; 4], u64) {
    let mut out = [0u8; 4];
    let mut reward = 0;
    let mut w = 0;
    let mut pending: Option<u8> = None;
    for &e in line.iter().filter(|&&e| e != 0) {
        match pending {
            Some(p) if p == e => {
                out[w] = e + 1;
                reward += 1u64 << (e + 1);
                w += 1;
                pending = None;
            }
            Some(p) => {
                out[w] = p;
                w += 1;
                pending = Some(e);
            }
            None => pending = Some(e),
        }
    }
    if let Some(p) = pending {
        out[w] = p;
    }
    (out, reward)
}

/// Cells of line `i` for `direction`, ordered from the edge tiles move
/// toward.
fn line_cells(direction: usize, i: usize) -> [(usize, usize); 4] {
    let mut cells = [(0, 0); 4];
    for (j, cell) in cells.iter_mut().enumerate() {
        *cell = match direction {
            UP => (j, i),
            DOWN => (3 - j, i),
            LEFT => (i, j),
            _ => (i, 3 - j),
        };
    }
    cells
}

/// Afterstate of sliding the whole board, the merge reward, and whether
/// any tile moved.
pub fn slide(board: &Board, direction: usize) -> (Board, u64, bool) {
    let mut out = *board;
    let mut reward = 0;
    for i in 0..4 {
        let cells = line_cells(direction, i);
        let line = cells.map(|(r, c)| board[r][c]);
        let (slid, gain) = slide_line(line);
        reward += gain;
        for (&(r, c), &v) in cells.iter().zip(&slid) {
            out[r][c] = v;
        }
    }
    let moved = out != *board;
    (out, reward, moved)
}

pub fn can_move(board: &Board) -> bool {
    (0..4).any(|d| slide(board, d).2)
}

/// Fills one uniformly chosen empty cell with a 2 (p = 0.9) or a 4.
/// Panics on a full board.
pub fn spawn<R: Rng + ?Sized>(board: &mut Board, rng: &mut R) {
    let empty: Vec<(usize, usize)> = (0..16).map(|i| (i / 4, i % 4)).filter(|&(r, c)| board[r][c] == 0).collect();
    assert!(!empty.is_empty(), "spawn on a full board");
    let (r, c) = empty[rng.random_range(0..empty.len())];
    board[r][c] = if rng.random::<f64>() < 0.9 { 1 } else { 2 };
}

#[derive(Debug, Clone)]
pub struct G2048 {
    board: Board,
    rng: ChaCha20Rng,
    score: u64,
    t: usize,
    max_steps: usize,
    over: bool,
}

impl G2048 {
    pub fn with_board(board: Board, max_steps: usize, seed: u64) -> Self {
        G2048 {
            board,
            rng: nn::stream_rng(seed, 0),
            score: 0,
            t: 0,
            max_steps,
            over: !can_move(&board),
        }
    }

    /// Empty board plus two spawns.
    pub fn random(max_steps: usize, seed: u64) -> Self {
        let mut env = G2048::with_board([[0; 4]; 4], max_steps, seed);
        spawn(&mut env.board, &mut env.rng);
        spawn(&mut env.board, &mut env.rng);
        env.over = !can_move(&env.board);
        env
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    /// Cumulative merge reward.
    pub fn score(&self) -> u64 {
        self.score
    }
}

impl Environment for G2048 {
    fn spec(&self) -> EnvSpec {
        spec(self.max_steps)
    }

    fn observe(&self) -> Vec<f64> {
        self.board.iter().flatten().map(|&e| e as f64 / 16.0).collect()
    }

    fn step(&mut self, action: &Action) -> Transition {
        if self.is_done() {
            return Transition { reward: 0.0, done: true };
        }
        let mut reward = 0;
        if let Action::Discrete(d) = *action {
            if d < 4 {
                let (after, gain, moved) = slide(&self.board, d);
                if moved {
                    self.board = after;
                    reward = gain;
                    spawn(&mut self.board, &mut self.rng);
                }
            }
        }
        self.score += reward;
        self.t += 1;
        self.over = !can_move(&self.board);
        Transition {
            reward: reward as f64,
            done: self.is_done(),
        }
    }

    fn is_done(&self) -> bool {
        self.over || self.t >= self.max_steps
    }
}
