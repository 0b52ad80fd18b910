//! The strictly ordinal 2x2 games, up to row, column and player swaps, and
//! per-slice performance metrics for repeated play.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sbg::{Game, History};

pub type Ranks = [[u8; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictClass {
    NoConflict,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrdinalGame {
    pub id: usize,
    /// Row player's ranks, `p1[row][col]`.
    pub p1: Ranks,
    /// Column player's ranks, `p2[row][col]`.
    pub p2: Ranks,
    pub class: ConflictClass,
}

fn swap_rows(m: Ranks) -> Ranks {
    [m[1], m[0]]
}

fn swap_cols(m: Ranks) -> Ranks {
    [[m[0][1], m[0][0]], [m[1][1], m[1][0]]]
}

fn transpose(m: Ranks) -> Ranks {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn key(p1: Ranks, p2: Ranks) -> [u8; 8] {
    [p1[0][0], p1[0][1], p1[1][0], p1[1][1], p2[0][0], p2[0][1], p2[1][0], p2[1][1]]
}

/// All eight images of a game under the transformation group.
pub fn transforms(p1: Ranks, p2: Ranks) -> Vec<(Ranks, Ranks)> {
    let mut out = Vec::with_capacity(8);
    for players in [false, true] {
        let (a, b) = if players { (transpose(p2), transpose(p1)) } else { (p1, p2) };
        for rows in [false, true] {
            let (a, b) = if rows { (swap_rows(a), swap_rows(b)) } else { (a, b) };
            for cols in [false, true] {
                out.push(if cols { (swap_cols(a), swap_cols(b)) } else { (a, b) });
            }
        }
    }
    out
}

/// Lexicographically smallest image.
pub fn canonical(p1: Ranks, p2: Ranks) -> (Ranks, Ranks) {
    transforms(p1, p2).into_iter().min_by_key(|(a, b)| key(*a, *b)).expect("group is non-empty")
}

fn is_ordinal(m: &Ranks) -> bool {
    let mut v: Vec<u8> = m.iter().flatten().copied().collect();
    v.sort_unstable();
    v == [1, 2, 3, 4]
}

fn top_cell(m: &Ranks) -> (usize, usize) {
    let mut best = (0, 0);
    for r in 0..2 {
        for c in 0..2 {
            if m[r][c] > m[best.0][best.1] {
                best = (r, c);
            }
        }
    }
    best
}

pub fn classify_conflict(p1: &Ranks, p2: &Ranks) -> ConflictClass {
    if top_cell(p1) == top_cell(p2) {
        ConflictClass::NoConflict
    } else {
        ConflictClass::Conflict
    }
}

fn permutations() -> Vec<Ranks> {
    let mut out = Vec::new();
    let vals = [1u8, 2, 3, 4];
    for a in vals {
        for b in vals {
            for c in vals {
                for d in vals {
                    let m = [[a, b], [c, d]];
                    if is_ordinal(&m) {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

/// The distinct strictly ordinal games, ordered by canonical form.
pub fn enumerate_games() -> Vec<OrdinalGame> {
    let perms = permutations();
    let mut set = BTreeSet::new();
    for p1 in &perms {
        for p2 in &perms {
            let (a, b) = canonical(*p1, *p2);
            set.insert((key(a, b), a, b));
        }
    }
    set.into_iter()
        .enumerate()
        .map(|(id, (_, p1, p2))| OrdinalGame { id, p1, p2, class: classify_conflict(&p1, &p2) })
        .collect()
}

impl OrdinalGame {
    pub fn new(id: usize, p1: Ranks, p2: Ranks) -> Result<Self> {
        if !is_ordinal(&p1) || !is_ordinal(&p2) {
            return Err(Error::config("ranks must be a permutation of 1..=4 for each player"));
        }
        Ok(OrdinalGame { id, p1, p2, class: classify_conflict(&p1, &p2) })
    }

    pub fn payoff(&self, player: usize, row: usize, col: usize) -> f64 {
        let m = if player == 0 { &self.p1 } else { &self.p2 };
        m[row][col] as f64
    }

    pub fn to_game(&self) -> Game {
        let conv = |m: &Ranks| m.iter().map(|r| r.iter().map(|x| *x as f64).collect()).collect::<Vec<Vec<f64>>>();
        Game::bimatrix(&conv(&self.p1), &conv(&self.p2)).expect("2x2 ranks form a valid game")
    }

    /// Swaps the roles of the two players.
    pub fn swapped(&self) -> OrdinalGame {
        OrdinalGame { id: self.id, p1: transpose(self.p2), p2: transpose(self.p1), class: self.class }
    }
}

/// True iff `player` has an action that is better against every action of
/// the other player. Strict ordinality makes weak and strict dominance agree.
pub fn has_dominant_action(g: &OrdinalGame, player: usize) -> bool {
    if player == 0 {
        (0..2).any(|r| (0..2).all(|c| g.p1[r][c] > g.p1[1 - r][c]))
    } else {
        (0..2).any(|c| (0..2).all(|r| g.p2[r][c] > g.p2[r][1 - c]))
    }
}

/// Games without a dominant action for the column player.
pub fn filter_dominant_player2(games: &[OrdinalGame]) -> Vec<OrdinalGame> {
    games.iter().filter(|g| !has_dominant_action(g, 1)).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionFlags {
    pub nash: bool,
    pub pareto: bool,
    pub welfare: bool,
    pub fairness: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    pub start: usize,
    pub end: usize,
    pub converged: [bool; 2],
    pub payoff: [f64; 2],
    pub welfare: f64,
    pub fairness: f64,
    pub solutions: SolutionFlags,
}

pub const CONVERGENCE_TOL: f64 = 0.05;
pub const NASH_EPS: f64 = 0.05;

/// Metrics over steps `start..end` of a two-player matrix game.
/// `policies[τ][p]` is player p's action distribution at step τ.
pub fn slice_metrics(g: &OrdinalGame, h: &History, policies: &[Vec<Vec<f64>>], start: usize, end: usize) -> Result<SliceMetrics> {
    if start >= end || end > h.t() || end > policies.len() {
        return Err(Error::config(format!("slice {start}..{end} is empty or outside the play")));
    }
    let len = (end - start) as f64;
    let mut converged = [true; 2];
    let mut avg = [[0.0; 2]; 2];
    for p in 0..2 {
        let first = &policies[start][p];
        for pol in &policies[start..end] {
            if pol[p].iter().zip(first).any(|(a, b)| (a - b).abs() > CONVERGENCE_TOL) {
                converged[p] = false;
            }
            for (a, x) in avg[p].iter_mut().zip(&pol[p]) {
                *a += x / len;
            }
        }
    }
    let mut payoff = [0.0; 2];
    let mut counts = [[0usize; 2]; 2];
    for tau in start..end {
        let a = h.action(tau);
        counts[a[0]][a[1]] += 1;
        for (p, v) in payoff.iter_mut().enumerate() {
            *v += g.payoff(p, a[0], a[1]);
        }
    }
    payoff.iter_mut().for_each(|v| *v /= len);
    let expected = |p: usize, s0: &[f64], s1: &[f64]| -> f64 {
        let mut e = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                e += s0[r] * s1[c] * g.payoff(p, r, c);
            }
        }
        e
    };
    let e0 = expected(0, &avg[0], &avg[1]);
    let e1 = expected(1, &avg[0], &avg[1]);
    let dev0 = (0..2).map(|r| expected(0, &one_hot(r), &avg[1])).fold(f64::MIN, f64::max);
    let dev1 = (0..2).map(|c| expected(1, &avg[0], &one_hot(c))).fold(f64::MIN, f64::max);
    let nash = dev0 - e0 <= NASH_EPS && dev1 - e1 <= NASH_EPS;

    let mut modal = (0, 0);
    for r in 0..2 {
        for c in 0..2 {
            if counts[r][c] > counts[modal.0][modal.1] {
                modal = (r, c);
            }
        }
    }
    let cell = |r: usize, c: usize| (g.payoff(0, r, c), g.payoff(1, r, c));
    let (m0, m1) = cell(modal.0, modal.1);
    let cells: Vec<(f64, f64)> = (0..4).map(|k| cell(k / 2, k % 2)).collect();
    let pareto = !cells.iter().any(|(a, b)| *a >= m0 && *b >= m1 && (*a > m0 || *b > m1));
    let welfare_opt = cells.iter().all(|(a, b)| a + b <= m0 + m1);
    let fairness_opt = cells.iter().all(|(a, b)| a * b <= m0 * m1);

    Ok(SliceMetrics {
        start,
        end,
        converged,
        payoff,
        welfare: payoff[0] + payoff[1],
        fairness: payoff[0] * payoff[1],
        solutions: SolutionFlags { nash, pareto, welfare: welfare_opt, fairness: fairness_opt },
    })
}

fn one_hot(a: usize) -> [f64; 2] {
    let mut v = [0.0; 2];
    v[a] = 1.0;
    v
}

/// Splits `0..t` into `k` consecutive slices of near-equal length.
pub fn slice_bounds(t: usize, k: usize) -> Vec<(usize, usize)> {
    let k = k.min(t).max(1);
    (0..k).map(|i| (i * t / k, (i + 1) * t / k)).filter(|(a, b)| a < b).collect()
}
