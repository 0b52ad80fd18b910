use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{one_hot, other, Behaviour, BehaviourRef, BehaviourSpec};
use crate::error::{Error, Result};
use crate::sbg::{Action, Game, History};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LftRole {
    Leader,
    Follower,
    Trigger,
}

/// Pursues a cyclic target sequence of joint actions in a square two-player
/// matrix game and reacts to deviations according to its role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LftBehaviour {
    pub role: LftRole,
    pub target: Vec<[Action; 2]>,
    /// `payoffs[a0][a1] = [u0, u1]`.
    pub payoffs: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Follow(usize),
    Punish,
    Reset,
    Triggered,
}

fn payoff_of(payoffs: &[Vec<[f64; 2]>], p: usize, own: Action, opp: Action) -> [f64; 2] {
    if p == 0 {
        payoffs[own][opp]
    } else {
        payoffs[opp][own]
    }
}

/// Own action minimising the other player's best payoff; lowest index on ties.
pub fn minimax_action(payoffs: &[Vec<[f64; 2]>], p: usize) -> Action {
    let n = payoffs.len();
    let o = other(p);
    let worst_for_other = |a: Action| {
        (0..n).map(|b| payoff_of(payoffs, p, a, b)[o]).fold(f64::NEG_INFINITY, f64::max)
    };
    (0..n).fold(0, |best, a| if worst_for_other(a) < worst_for_other(best) { a } else { best })
}

/// Own action maximising the own worst-case payoff; lowest index on ties.
pub fn maximin_action(payoffs: &[Vec<[f64; 2]>], p: usize) -> Action {
    let n = payoffs.len();
    let guaranteed =
        |a: Action| (0..n).map(|b| payoff_of(payoffs, p, a, b)[p]).fold(f64::INFINITY, f64::min);
    (0..n).fold(0, |best, a| if guaranteed(a) > guaranteed(best) { a } else { best })
}

impl LftBehaviour {
    pub fn new(role: LftRole, target: Vec<[Action; 2]>, payoffs: Vec<Vec<[f64; 2]>>) -> Self {
        assert!(!target.is_empty(), "target solution must be non-empty");
        LftBehaviour { role, target, payoffs }
    }

    fn on_deviation(&self) -> Mode {
        match self.role {
            LftRole::Leader => Mode::Punish,
            LftRole::Follower => Mode::Reset,
            LftRole::Trigger => Mode::Triggered,
        }
    }

    fn advance(&self, pos: usize, opp_action: Action, o: usize) -> Mode {
        if opp_action == self.target[pos][o] {
            Mode::Follow((pos + 1) % self.target.len())
        } else {
            self.on_deviation()
        }
    }

    fn replay(&self, h: &History, p: usize) -> Mode {
        let o = other(p);
        let mut mode = Mode::Follow(0);
        for a in h.actions() {
            mode = match mode {
                Mode::Follow(pos) => self.advance(pos, a[o], o),
                Mode::Punish => Mode::Follow(0),
                Mode::Triggered => Mode::Triggered,
                Mode::Reset => {
                    // The new position is read off the action actually played.
                    match self.target.iter().position(|x| x[p] == a[p]) {
                        Some(k) => self.advance(k, a[o], o),
                        None => Mode::Reset,
                    }
                }
            };
        }
        mode
    }
}

impl Behaviour for LftBehaviour {
    fn id(&self) -> String {
        format!("lft:{:?}:{:?}", self.role, self.target)
    }
    fn num_actions(&self) -> usize {
        self.payoffs.len()
    }
    fn distribution(&self, h: &History, player: usize) -> Vec<f64> {
        let n = self.num_actions();
        match self.replay(h, player) {
            Mode::Follow(pos) => one_hot(n, self.target[pos][player]),
            Mode::Punish => one_hot(n, minimax_action(&self.payoffs, player)),
            Mode::Triggered => one_hot(n, maximin_action(&self.payoffs, player)),
            Mode::Reset => {
                let mut v = vec![0.0; n];
                for x in &self.target {
                    v[x[player]] += 1.0 / self.target.len() as f64;
                }
                v
            }
        }
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::Lft(self.clone()))
    }
}

/// All pure joint-action cycles of length one and two (up to rotation).
pub fn default_targets(n0: usize, n1: usize) -> Vec<Vec<[Action; 2]>> {
    let joints: Vec<[Action; 2]> = (0..n0).flat_map(|a| (0..n1).map(move |b| [a, b])).collect();
    let mut out: Vec<Vec<[Action; 2]>> = joints.iter().map(|j| vec![*j]).collect();
    for i in 0..joints.len() {
        for k in i + 1..joints.len() {
            out.push(vec![joints[i], joints[k]]);
        }
    }
    out
}

fn square_payoffs(game: &Game) -> Result<Vec<Vec<[f64; 2]>>> {
    if game.num_players() != 2 || game.num_states() != 1 || game.num_actions(0) != game.num_actions(1) {
        return Err(Error::config("LFT types need a square two-player repeated matrix game"));
    }
    let n = game.num_actions(0);
    Ok((0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let u = game.payoff(0, &[a, b]);
                    [u[0], u[1]]
                })
                .collect()
        })
        .collect())
}

/// Leader, follower and trigger for each target solution.
pub fn make_lft_pool(game: &Game, targets: &[Vec<[Action; 2]>]) -> Result<Vec<BehaviourRef>> {
    let payoffs = square_payoffs(game)?;
    let mut pool: Vec<BehaviourRef> = Vec::new();
    for t in targets {
        if t.is_empty() {
            return Err(Error::config("empty target solution"));
        }
        for role in [LftRole::Leader, LftRole::Follower, LftRole::Trigger] {
            pool.push(Arc::new(LftBehaviour::new(role, t.clone(), payoffs.clone())));
        }
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> Game {
        Game::bimatrix(&[vec![3.0, 1.0], vec![4.0, 2.0]], &[vec![3.0, 4.0], vec![1.0, 2.0]]).unwrap()
    }

    fn play(b: &LftBehaviour, p: usize, opp: &[Action]) -> (History, Vec<Vec<f64>>) {
        let mut h = History::new(0);
        let mut dists = Vec::new();
        for &x in opp {
            let d = b.distribution(&h, p);
            dists.push(d.clone());
            let own = d.iter().position(|q| *q > 0.0).unwrap();
            let joint = if p == 0 { vec![own, x] } else { vec![x, own] };
            h.push(joint, 0);
        }
        (h, dists)
    }

    #[test]
    fn replay_cycle_without_deviation() {
        let g = pd();
        let target = vec![[0, 0], [1, 1]];
        for b in make_lft_pool(&g, &[target.clone()]).unwrap() {
            let opp: Vec<Action> = (0..10).map(|t| target[t % 2][0]).collect();
            let mut h = History::new(0);
            for (t, x) in opp.iter().enumerate() {
                let d = b.distribution(&h, 1);
                assert_eq!(d, one_hot(2, target[t % 2][1]));
                h.push(vec![*x, target[t % 2][1]], 0);
            }
        }
    }

    #[test]
    fn trigger_plays_maximin_forever() {
        let g = pd();
        let payoffs = square_payoffs(&g).unwrap();
        let b = LftBehaviour::new(LftRole::Trigger, vec![[0, 0]], payoffs.clone());
        // Deviate at t = 2, then cooperate again.
        let (_, dists) = play(&b, 1, &[0, 0, 1, 0, 0, 0, 0]);
        let mm = maximin_action(&payoffs, 1);
        assert_eq!(mm, 1);
        for d in &dists[3..] {
            assert_eq!(*d, one_hot(2, mm));
        }
        assert_eq!(dists[2], one_hot(2, 0));
    }

    #[test]
    fn leader_punishes_with_enumerated_minimax() {
        let g = pd();
        let payoffs = square_payoffs(&g).unwrap();
        // Brute force: the column action that minimises the row player's best reply.
        let mut best = (f64::INFINITY, 0);
        for c in 0..2 {
            let m = (0..2).map(|r| g.payoff(0, &[r, c])[0]).fold(f64::NEG_INFINITY, f64::max);
            if m < best.0 {
                best = (m, c);
            }
        }
        let b = LftBehaviour::new(LftRole::Leader, vec![[0, 0]], payoffs);
        let (_, dists) = play(&b, 1, &[0, 1, 0, 0]);
        assert_eq!(dists[2], one_hot(2, best.1));
        assert_eq!(dists[3], one_hot(2, 0));
    }

    #[test]
    fn follower_resets_randomly() {
        let g = pd();
        let payoffs = square_payoffs(&g).unwrap();
        let b = LftBehaviour::new(LftRole::Follower, vec![[0, 0], [1, 1], [1, 0]], payoffs);
        let mut h = History::new(0);
        h.push(vec![1, 0], 0);
        let d = b.distribution(&h, 1);
        assert!((d[0] - 2.0 / 3.0).abs() < 1e-12 && (d[1] - 1.0 / 3.0).abs() < 1e-12);
        // Own action 1 at the reset step resolves to position 1, opponent matched.
        h.push(vec![1, 1], 0);
        assert_eq!(b.distribution(&h, 1), one_hot(2, 0));
    }

    #[test]
    fn default_pool_size() {
        assert_eq!(default_targets(2, 2).len(), 10);
        assert_eq!(make_lft_pool(&pd(), &default_targets(2, 2)).unwrap().len(), 30);
        assert!(make_lft_pool(&pd(), &[]).unwrap().is_empty());
    }
}
