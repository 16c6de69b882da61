//! Plain-text instance dumps used as regression fixtures.
//!
//! The first non-comment line names the environment and may carry
//! `key=value` options; the remaining lines are the instance:
//!
//! ```text
//! # unit square
//! tsp
//! 0 0
//! 1 0
//! 1 1
//! 0 1
//! ```
//!
//! * `tsp`: one `x y` city per line.
//! * `flp facilities=M`: one `x y` client per line.
//! * `collect horizon=H`: grid rows of `.` (empty), `c` (coin), `A` (agent).
//! * `2048 max_steps=S`: four rows of four tile values (`0` for empty).
//!
//! Lines starting with `#` and blank lines are ignored.

use super::{Collect, Flp, Tsp, G2048};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Fixture {
    Tsp { cities: Vec<[f64; 2]> },
    Flp { clients: Vec<[f64; 2]>, facilities: usize },
    Collect { rows: Vec<String>, horizon: usize },
    G2048 { tiles: [[u32; 4]; 4], max_steps: usize },
}

fn option(opts: &[&str], key: &str, default: usize) -> Result<usize> {
    for o in opts {
        if let Some(v) = o.strip_prefix(key).and_then(|r| r.strip_prefix('=')) {
            return v.parse().map_err(|_| Error::config(format!("fixture option {key}: bad value '{v}'")));
        }
    }
    Ok(default)
}

fn points(lines: &[&str]) -> Result<Vec<[f64; 2]>> {
    lines
        .iter()
        .map(|l| {
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::config(format!("fixture point '{l}': {e}")))?;
            match xs[..] {
                [x, y] => Ok([x, y]),
                _ => Err(Error::config(format!("fixture point '{l}' needs two coordinates"))),
            }
        })
        .collect()
}

impl Fixture {
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let (head, body) = lines.split_first().ok_or_else(|| Error::config("empty fixture"))?;
        let mut words = head.split_whitespace();
        let kind = words.next().unwrap_or_default();
        let opts: Vec<&str> = words.collect();
        match kind {
            "tsp" => Ok(Fixture::Tsp { cities: points(body)? }),
            "flp" => Ok(Fixture::Flp {
                clients: points(body)?,
                facilities: option(&opts, "facilities", 5)?,
            }),
            "collect" => {
                let rows: Vec<String> = body.iter().map(|r| r.to_string()).collect();
                let size = rows.len();
                if size == 0 || rows.iter().any(|r| r.chars().count() != size) {
                    return Err(Error::config("collect fixture must be a square grid"));
                }
                if rows.iter().flat_map(|r| r.chars()).filter(|&c| c == 'A').count() != 1 {
                    return Err(Error::config("collect fixture needs exactly one agent"));
                }
                if let Some(bad) = rows.iter().flat_map(|r| r.chars()).find(|c| !matches!(c, '.' | 'c' | 'A')) {
                    return Err(Error::config(format!("collect fixture: unknown cell '{bad}'")));
                }
                Ok(Fixture::Collect {
                    rows,
                    horizon: option(&opts, "horizon", 20)?,
                })
            }
            "2048" => {
                if body.len() != 4 {
                    return Err(Error::config("2048 fixture needs four rows"));
                }
                let mut tiles = [[0u32; 4]; 4];
                for (r, line) in body.iter().enumerate() {
                    let vals: Vec<u32> = line
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::config(format!("2048 row '{line}': {e}")))?;
                    if vals.len() != 4 || vals.iter().any(|&v| v == 1 || (v != 0 && !v.is_power_of_two())) {
                        return Err(Error::config(format!("2048 row '{line}' needs four tiles that are 0 or powers of two")));
                    }
                    tiles[r].copy_from_slice(&vals);
                }
                Ok(Fixture::G2048 {
                    tiles,
                    max_steps: option(&opts, "max_steps", 500)?,
                })
            }
            other => Err(Error::config(format!("unknown fixture kind '{other}'"))),
        }
    }

    pub fn to_text(&self) -> String {
        let pts = |ps: &[[f64; 2]]| ps.iter().map(|p| format!("{} {}\n", p[0], p[1])).collect::<String>();
        match self {
            Fixture::Tsp { cities } => format!("tsp\n{}", pts(cities)),
            Fixture::Flp { clients, facilities } => format!("flp facilities={facilities}\n{}", pts(clients)),
            Fixture::Collect { rows, horizon } => format!("collect horizon={horizon}\n{}\n", rows.join("\n")),
            Fixture::G2048 { tiles, max_steps } => {
                let rows: Vec<String> = tiles
                    .iter()
                    .map(|r| r.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
                    .collect();
                format!("2048 max_steps={max_steps}\n{}\n", rows.join("\n"))
            }
        }
    }

    pub fn tsp(&self) -> Option<Tsp> {
        match self {
            Fixture::Tsp { cities } => Some(Tsp::new(cities.clone())),
            _ => None,
        }
    }

    pub fn flp(&self) -> Option<Flp> {
        match self {
            Fixture::Flp { clients, facilities } => Some(Flp::new(clients.clone(), *facilities)),
            _ => None,
        }
    }

    pub fn collect(&self) -> Option<Collect> {
        match self {
            Fixture::Collect { rows, horizon } => {
                let size = rows.len();
                let cells: Vec<char> = rows.iter().flat_map(|r| r.chars()).collect();
                let agent = cells.iter().position(|&c| c == 'A').expect("validated on parse");
                let coins = cells.iter().map(|&c| c == 'c').collect();
                Some(Collect::new(size, coins, (agent / size, agent % size), *horizon))
            }
            _ => None,
        }
    }

    /// The board as given; spawns after each move draw from `seed`.
    pub fn g2048(&self, seed: u64) -> Option<G2048> {
        match self {
            Fixture::G2048 { tiles, max_steps } => {
                let board = tiles.map(|row| row.map(|v| if v == 0 { 0 } else { v.trailing_zeros() as u8 }));
                Some(G2048::with_board(board, *max_steps, seed))
            }
            _ => None,
        }
    }
}
