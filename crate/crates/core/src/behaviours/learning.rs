use serde::{Deserialize, Serialize};

use super::{argmax, one_hot, other, Behaviour, BehaviourSpec};
use crate::sbg::{Action, History, StateId};

/// Fictitious player for a two-player matrix game. The plain variant
/// best-responds to global empirical counts of the other player's actions;
/// the conditioned variant keys counts on the previous joint action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FictitiousPlay {
    /// `payoff[own][other]`.
    pub payoff: Vec<Vec<f64>>,
    pub conditioned: bool,
}

impl FictitiousPlay {
    pub fn new(payoff: Vec<Vec<f64>>, conditioned: bool) -> Self {
        FictitiousPlay { payoff, conditioned }
    }

    /// Empirical belief about the other player's next action.
    pub fn belief(&self, h: &History, player: usize) -> Vec<f64> {
        let m = self.payoff[0].len();
        let o = other(player);
        let mut counts = vec![0.0; m];
        if self.conditioned {
            if let Some(ctx) = h.last_action() {
                for tau in 1..h.t() {
                    if h.action(tau - 1) == ctx {
                        counts[h.action(tau)[o]] += 1.0;
                    }
                }
            }
        } else {
            for a in h.player_actions(o) {
                counts[a] += 1.0;
            }
        }
        let total: f64 = counts.iter().sum();
        if total == 0.0 {
            return vec![1.0 / m as f64; m];
        }
        counts.iter().map(|c| c / total).collect()
    }
}

impl Behaviour for FictitiousPlay {
    fn id(&self) -> String {
        format!("{}:{:?}", if self.conditioned { "cfp" } else { "fp" }, self.payoff)
    }
    fn num_actions(&self) -> usize {
        self.payoff.len()
    }
    fn distribution(&self, h: &History, player: usize) -> Vec<f64> {
        let q = self.belief(h, player);
        let values: Vec<f64> =
            self.payoff.iter().map(|row| row.iter().zip(&q).map(|(u, p)| u * p).sum()).collect();
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<bool> = values.iter().map(|v| best - v <= 1e-12).collect();
        let k = ties.iter().filter(|x| **x).count() as f64;
        ties.iter().map(|t| if *t { 1.0 / k } else { 0.0 }).collect()
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::FictitiousPlay(self.clone()))
    }
}

/// Exploration rate: `start` until `hold`, then linear to zero at `zero_at`.
pub fn epsilon_at(t: usize, start: f64, hold: usize, zero_at: usize) -> f64 {
    if t < hold {
        start
    } else if t >= zero_at {
        0.0
    } else {
        start * (zero_at - t) as f64 / (zero_at - hold) as f64
    }
}

/// Tabular action values over (state, own action).
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub values: Vec<Vec<f64>>,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize, init: f64) -> Self {
        QTable { values: vec![vec![init; num_actions]; num_states] }
    }

    pub fn update(&mut self, s: StateId, a: Action, r: f64, next: StateId, alpha: f64, gamma: f64) {
        let target = r + gamma * self.values[next].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let q = &mut self.values[s][a];
        *q += alpha * (target - *q);
    }
}

/// Epsilon-greedy Q-learning type whose values are replayed from the
/// history, so evaluation stays pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearner {
    /// `reward[state][own action]`, the type's own payoff view.
    pub reward: Vec<Vec<f64>>,
    pub alpha: f64,
    pub gamma: f64,
    pub init: f64,
    pub eps_start: f64,
    pub eps_hold: usize,
    pub eps_zero_at: usize,
    pub label: String,
}

impl QLearner {
    pub fn new(reward: Vec<Vec<f64>>, label: impl Into<String>) -> Self {
        QLearner {
            reward,
            alpha: 0.1,
            gamma: 0.95,
            init: 0.0,
            eps_start: 0.7,
            eps_hold: 1000,
            eps_zero_at: 2000,
            label: label.into(),
        }
    }

    pub fn replay(&self, h: &History, player: usize) -> QTable {
        let mut q = QTable::new(self.reward.len(), self.num_actions(), self.init);
        for tau in 0..h.t() {
            let s = h.state(tau);
            let a = h.action(tau)[player];
            q.update(s, a, self.reward[s][a], h.state(tau + 1), self.alpha, self.gamma);
        }
        q
    }

    pub fn policy(&self, q: &QTable, s: StateId, t: usize) -> Vec<f64> {
        let n = self.num_actions();
        let eps = epsilon_at(t, self.eps_start, self.eps_hold, self.eps_zero_at);
        let mut v = one_hot(n, argmax(&q.values[s]));
        v.iter_mut().for_each(|x| *x = *x * (1.0 - eps) + eps / n as f64);
        v
    }
}

impl Behaviour for QLearner {
    fn id(&self) -> String {
        format!("q:{}", self.label)
    }
    fn num_actions(&self) -> usize {
        self.reward[0].len()
    }
    fn distribution(&self, h: &History, player: usize) -> Vec<f64> {
        let q = self.replay(h, player);
        self.policy(&q, h.current_state(), h.t())
    }
    fn payoff_view(&self, s: StateId, own: Action) -> Option<f64> {
        self.reward.get(s).and_then(|r| r.get(own)).copied()
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::QLearning(self.clone()))
    }
}
