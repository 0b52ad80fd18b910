//! The HBA agent: finite expectimax over future trajectories, weighted by
//! posterior beliefs that are updated along each hypothetical branch.

use std::collections::BTreeMap;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::beliefs::BeliefState;
use crate::error::{Error, Result};
use crate::rng::{sample_index, StreamRng};
use crate::sbg::{Action, Agent, Game, History};

/// Width-limited sampled expansion: opponent actions are drawn instead of
/// enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub width: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Discount applied to values one step further down the tree.
    pub gamma: f64,
    /// Number of joint actions expanded. Zero behaves like one.
    pub depth: usize,
    /// Reward 1 for entering a terminal state and 0 otherwise, in place of
    /// the game payoffs.
    pub task_completion: bool,
    pub node_budget: usize,
    pub tie_eps: f64,
    pub sampling: Option<Sampling>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { gamma: 1.0, depth: 1, task_completion: false, node_budget: 2_000_000, tie_eps: 1e-9, sampling: None }
    }
}

impl PlannerConfig {
    /// Undiscounted lookahead of `h` joint actions.
    pub fn depth_limited(h: usize) -> Self {
        PlannerConfig { depth: h, ..Default::default() }
    }

    /// Discounted lookahead, truncated after `depth` joint actions.
    pub fn discounted(gamma: f64, depth: usize) -> Self {
        PlannerConfig { gamma, depth, ..Default::default() }
    }

    pub fn with_task_completion(mut self) -> Self {
        self.task_completion = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config(format!("discount {} outside [0, 1]", self.gamma)));
        }
        if self.tie_eps < 0.0 || self.node_budget == 0 {
            return Err(Error::config("tie tolerance must be non-negative and the node budget positive"));
        }
        if matches!(self.sampling, Some(s) if s.width == 0) {
            return Err(Error::config("sampling width must be positive"));
        }
        Ok(())
    }

    fn effective_depth(&self) -> usize {
        self.depth.max(1)
    }
}

/// Result of one planning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub values: Vec<f64>,
    pub argmax: Vec<Action>,
    pub policy: Vec<f64>,
    pub nodes: usize,
}

struct Search<'a> {
    game: &'a Game,
    cfg: &'a PlannerConfig,
    player: usize,
    nodes: usize,
    rng: Option<StreamRng>,
}

impl Search<'_> {
    /// Expected payoff of each of the planner's actions at the current state
    /// of `h`, with `depth` >= 1 joint actions still to expand.
    fn values(&mut self, bs: &BeliefState, h: &mut History, depth: usize) -> Result<Vec<f64>> {
        self.nodes += 1;
        if self.nodes > self.cfg.node_budget {
            return Err(Error::BudgetExceeded { budget: self.cfg.node_budget });
        }
        let game = self.game;
        let s = h.current_state();
        let own = game.num_actions(self.player);
        let opponents = bs.opponents().to_vec();
        let radix: Vec<usize> = opponents.iter().map(|&j| game.num_actions(j)).collect();

        // dists[k][m] = distribution of opponent k under its type m.
        let dists: Vec<Vec<Vec<f64>>> = opponents
            .iter()
            .zip(bs.types())
            .map(|(&j, ts)| ts.iter().map(|th| th.distribution(h, j)).collect())
            .collect();
        let weights = bs.tuple_weights();
        let combos: usize = radix.iter().product();
        let mut predictive = vec![0.0; combos];
        for (c, p) in predictive.iter_mut().enumerate() {
            let acts = crate::beliefs::decode_tuple(c, &radix);
            *p = weights
                .iter()
                .map(|(tuple, w)| w * tuple.iter().enumerate().map(|(k, m)| dists[k][*m][acts[k]]).product::<f64>())
                .sum();
        }

        let branches: Vec<(usize, f64)> = match (&mut self.rng, self.cfg.sampling) {
            (Some(rng), Some(sm)) => {
                let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
                for _ in 0..sm.width {
                    *counts.entry(sample_index(&predictive, rng)).or_default() += 1;
                }
                counts.into_iter().map(|(c, n)| (c, n as f64 / sm.width as f64)).collect()
            }
            _ => predictive.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(c, p)| (c, *p)).collect(),
        };

        let mut out = vec![0.0; own];
        for (c, pc) in branches {
            let acts = crate::beliefs::decode_tuple(c, &radix);
            let child = if depth > 1 {
                let probs: Vec<Vec<f64>> =
                    dists.iter().enumerate().map(|(k, per)| per.iter().map(|d| d[acts[k]]).collect()).collect();
                let mut b = bs.clone();
                b.apply(&probs);
                Some(b)
            } else {
                None
            };
            for (ai, slot) in out.iter_mut().enumerate() {
                let mut joint = vec![0; game.num_players()];
                joint[self.player] = ai;
                for (k, &j) in opponents.iter().enumerate() {
                    joint[j] = acts[k];
                }
                let mut q = 0.0;
                for &(next, pt) in game.transition(s, &joint) {
                    if pt == 0.0 {
                        continue;
                    }
                    let terminal = game.is_terminal(next);
                    let r = if self.cfg.task_completion {
                        if terminal {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        game.payoff(s, &joint)[self.player]
                    };
                    let mut future = 0.0;
                    if let Some(b) = &child {
                        if !terminal && self.cfg.gamma > 0.0 {
                            h.push(joint.clone(), next);
                            let v = self.values(b, h, depth - 1);
                            h.pop();
                            future = v?.into_iter().fold(f64::NEG_INFINITY, f64::max);
                        }
                    }
                    q += pt * (r + self.cfg.gamma * future);
                }
                *slot += pc * q;
            }
        }
        Ok(out)
    }
}

fn check_players(game: &Game, player: usize, bs: &BeliefState) -> Result<()> {
    let mut expected: Vec<usize> = (0..game.num_players()).filter(|p| *p != player).collect();
    let mut got = bs.opponents().to_vec();
    got.sort_unstable();
    expected.sort_unstable();
    if got != expected {
        return Err(Error::config("beliefs must cover every player other than the planner"));
    }
    Ok(())
}

fn search<'a>(game: &'a Game, cfg: &'a PlannerConfig, player: usize, h: &History) -> Search<'a> {
    let rng = cfg.sampling.map(|s| StreamRng::seed_from_u64(crate::rng::mix(s.seed, &[h.t() as u64])));
    Search { game, cfg, player, nodes: 0, rng }
}

/// Expected payoff of every action of `player` after history `h`.
pub fn expected_payoffs(game: &Game, cfg: &PlannerConfig, player: usize, bs: &BeliefState, h: &History) -> Result<Vec<f64>> {
    Ok(plan(game, cfg, player, bs, h)?.values)
}

pub fn expected_payoff(
    game: &Game,
    cfg: &PlannerConfig,
    player: usize,
    bs: &BeliefState,
    h: &History,
    a_i: Action,
) -> Result<f64> {
    expected_payoffs(game, cfg, player, bs, h)?
        .get(a_i)
        .copied()
        .ok_or_else(|| Error::model(format!("action {a_i} out of range")))
}

/// Values plus the uniform distribution over the argmax set.
pub fn plan(game: &Game, cfg: &PlannerConfig, player: usize, bs: &BeliefState, h: &History) -> Result<Plan> {
    cfg.validate()?;
    check_players(game, player, bs)?;
    let own = game.num_actions(player);
    let mut s = search(game, cfg, player, h);
    let values = if game.is_terminal(h.current_state()) {
        vec![0.0; own]
    } else {
        let mut scratch = h.clone();
        s.values(bs, &mut scratch, cfg.effective_depth())?
    };
    let argmax = argmax_set(&values, cfg.tie_eps);
    let mut policy = vec![0.0; own];
    for a in &argmax {
        policy[*a] = 1.0 / argmax.len() as f64;
    }
    Ok(Plan { values, argmax, policy, nodes: s.nodes })
}

/// Actions whose value is within `eps` of the maximum.
pub fn argmax_set(values: &[f64], eps: f64) -> Vec<Action> {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len()).filter(|a| values[*a] >= m - eps).collect()
}

pub fn choose_action(
    game: &Game,
    cfg: &PlannerConfig,
    player: usize,
    bs: &BeliefState,
    h: &History,
    rng: &mut StreamRng,
) -> Result<(Action, Vec<f64>)> {
    let p = plan(game, cfg, player, bs, h)?;
    let a = sample_index(&p.policy, rng);
    Ok((a, p.policy))
}

/// One planning decision, for offline analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub t: usize,
    pub values: Vec<f64>,
    pub argmax: Vec<Action>,
    pub posterior: Vec<Vec<f64>>,
    pub degenerate: bool,
}

/// HBA as an episode controller. Beliefs are brought up to date with the
/// observed history before each decision; a degenerate posterior falls back
/// to the prior.
#[derive(Debug, Clone)]
pub struct HbaAgent {
    game: Game,
    cfg: PlannerConfig,
    beliefs: BeliefState,
    seen: usize,
    pub degenerate_steps: usize,
    pub trace: Option<Vec<DecisionTrace>>,
}

impl HbaAgent {
    pub fn new(game: Game, cfg: PlannerConfig, beliefs: BeliefState) -> Result<Self> {
        cfg.validate()?;
        Ok(HbaAgent { game, cfg, beliefs, seen: 0, degenerate_steps: 0, trace: None })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn beliefs(&self) -> &BeliefState {
        &self.beliefs
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    /// Folds every not yet observed step of `h` into the beliefs.
    pub fn observe(&mut self, h: &History) {
        for tau in self.seen..h.t() {
            self.beliefs.update(&h.prefix(tau), h.action(tau));
        }
        self.seen = h.t();
    }
}

impl Agent for HbaAgent {
    fn act(&mut self, h: &History, player: usize, rng: &mut StreamRng) -> Result<(Action, Vec<f64>)> {
        self.observe(h);
        let post = self.beliefs.posterior();
        if post.degenerate {
            self.degenerate_steps += 1;
            log::debug!("degenerate posterior at t={}, planning with the prior", h.t());
        }
        let p = plan(&self.game, &self.cfg, player, &self.beliefs, h)?;
        if let Some(tr) = &mut self.trace {
            tr.push(DecisionTrace {
                t: h.t(),
                values: p.values.clone(),
                argmax: p.argmax.clone(),
                posterior: post.marginals,
                degenerate: post.degenerate,
            });
        }
        let a = sample_index(&p.policy, rng);
        Ok((a, p.policy))
    }
}
