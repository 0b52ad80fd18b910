//! The stochastic Bayesian game model and its interaction protocol.

use serde::{Deserialize, Serialize};

use crate::behaviours::BehaviourRef;
use crate::error::{Error, Result};
use crate::rng::{sample_index, StreamRng, Streams};

pub type StateId = usize;
pub type Action = usize;

const SUM_TOL: f64 = 1e-9;

/// Finite stochastic game: states, terminal set, per-player action sets,
/// transition kernel and payoffs. Joint actions are indexed in mixed radix
/// with player 0 as the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    num_states: usize,
    initial_state: StateId,
    terminal: Vec<bool>,
    num_actions: Vec<usize>,
    num_joint: usize,
    transitions: Vec<Vec<(StateId, f64)>>,
    payoffs: Vec<Vec<f64>>,
    absorbing: bool,
}

impl Game {
    /// A game where every joint action loops on its state with zero payoff.
    pub fn new(
        num_states: usize,
        initial_state: StateId,
        terminal_states: &[StateId],
        num_actions: Vec<usize>,
    ) -> Result<Self> {
        if num_actions.len() < 2 {
            return Err(Error::model("a game needs at least two players"));
        }
        if num_actions.iter().any(|&n| n == 0) {
            return Err(Error::model("every player needs at least one action"));
        }
        if initial_state >= num_states {
            return Err(Error::model("initial state out of range"));
        }
        let mut terminal = vec![false; num_states];
        for &s in terminal_states {
            if s >= num_states {
                return Err(Error::model(format!("terminal state {s} out of range")));
            }
            terminal[s] = true;
        }
        let num_joint: usize = num_actions.iter().product();
        let n = num_actions.len();
        let mut transitions = Vec::with_capacity(num_states * num_joint);
        for s in 0..num_states {
            for _ in 0..num_joint {
                transitions.push(vec![(s, 1.0)]);
            }
        }
        Ok(Game {
            num_states,
            initial_state,
            terminal,
            num_actions,
            num_joint,
            transitions,
            payoffs: vec![vec![0.0; n]; num_states * num_joint],
            absorbing: false,
        })
    }

    /// Single-state repeated game without terminal states.
    pub fn single_state(
        num_actions: Vec<usize>,
        payoff: impl Fn(&[Action]) -> Vec<f64>,
    ) -> Result<Self> {
        let mut g = Game::new(1, 0, &[], num_actions)?;
        for j in 0..g.num_joint {
            let a = g.joint_from_index(j);
            let u = payoff(&a);
            if u.len() != g.num_players() {
                return Err(Error::model("payoff vector length differs from player count"));
            }
            g.payoffs[j] = u;
        }
        Ok(g)
    }

    /// Two-player matrix game; `p1[r][c]` and `p2[r][c]` are the payoffs when
    /// player 0 plays row r and player 1 plays column c.
    pub fn bimatrix(p1: &[Vec<f64>], p2: &[Vec<f64>]) -> Result<Self> {
        let rows = p1.len();
        let cols = p1.first().map_or(0, |r| r.len());
        if p2.len() != rows || p1.iter().chain(p2).any(|r| r.len() != cols) {
            return Err(Error::model("payoff matrices must share a rectangular shape"));
        }
        Game::single_state(vec![rows, cols], |a| vec![p1[a[0]][a[1]], p2[a[0]][a[1]]])
    }

    pub fn with_absorbing(mut self, on: bool) -> Self {
        self.absorbing = on;
        if on {
            for s in 0..self.num_states {
                if self.terminal[s] {
                    for j in 0..self.num_joint {
                        self.transitions[s * self.num_joint + j] = vec![(s, 1.0)];
                        self.payoffs[s * self.num_joint + j] = vec![0.0; self.num_players()];
                    }
                }
            }
        }
        self
    }

    pub fn set_transition(&mut self, s: StateId, a: &[Action], next: Vec<(StateId, f64)>) -> Result<()> {
        if next.iter().any(|&(t, p)| t >= self.num_states || !(0.0..=1.0 + SUM_TOL).contains(&p)) {
            return Err(Error::model("transition target or probability out of range"));
        }
        let total: f64 = next.iter().map(|x| x.1).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::model(format!("transition from {s} sums to {total}")));
        }
        let k = self.cell(s, a)?;
        self.transitions[k] = next;
        Ok(())
    }

    pub fn set_payoff(&mut self, s: StateId, a: &[Action], values: Vec<f64>) -> Result<()> {
        if values.len() != self.num_players() {
            return Err(Error::model("payoff vector length differs from player count"));
        }
        let k = self.cell(s, a)?;
        self.payoffs[k] = values;
        Ok(())
    }

    fn cell(&self, s: StateId, a: &[Action]) -> Result<usize> {
        if s >= self.num_states {
            return Err(Error::model(format!("state {s} out of range")));
        }
        if a.len() != self.num_players() || a.iter().zip(&self.num_actions).any(|(x, n)| x >= n) {
            return Err(Error::model(format!("illegal joint action {a:?}")));
        }
        Ok(s * self.num_joint + self.joint_index(a))
    }

    pub fn num_players(&self) -> usize {
        self.num_actions.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.num_actions[player]
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.num_actions
    }

    pub fn num_joint(&self) -> usize {
        self.num_joint
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.terminal[s]
    }

    pub fn terminal_states(&self) -> Vec<StateId> {
        (0..self.num_states).filter(|&s| self.terminal[s]).collect()
    }

    pub fn is_absorbing(&self) -> bool {
        self.absorbing
    }

    pub fn joint_index(&self, a: &[Action]) -> usize {
        a.iter().zip(&self.num_actions).fold(0, |acc, (x, n)| acc * n + x)
    }

    pub fn joint_from_index(&self, mut idx: usize) -> Vec<Action> {
        let mut a = vec![0; self.num_players()];
        for p in (0..self.num_players()).rev() {
            a[p] = idx % self.num_actions[p];
            idx /= self.num_actions[p];
        }
        a
    }

    pub fn transition(&self, s: StateId, a: &[Action]) -> &[(StateId, f64)] {
        &self.transitions[s * self.num_joint + self.joint_index(a)]
    }

    pub fn payoff(&self, s: StateId, a: &[Action]) -> &[f64] {
        &self.payoffs[s * self.num_joint + self.joint_index(a)]
    }

    /// Checks the model invariants.
    pub fn validate(&self) -> Result<()> {
        for (k, row) in self.transitions.iter().enumerate() {
            let total: f64 = row.iter().map(|x| x.1).sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::model(format!("transition cell {k} sums to {total}")));
            }
        }
        if self.absorbing {
            for s in self.terminal_states() {
                for j in 0..self.num_joint {
                    let k = s * self.num_joint + j;
                    let stays = self.transitions[k].iter().all(|&(t, p)| t == s || p == 0.0);
                    if !stays || self.payoffs[k].iter().any(|u| *u != 0.0) {
                        return Err(Error::model(format!("terminal state {s} is not absorbing")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> GameDoc {
        let mut transitions = Vec::new();
        let mut payoffs = Vec::new();
        for s in 0..self.num_states {
            for j in 0..self.num_joint {
                let a = self.joint_from_index(j);
                for &(next, prob) in &self.transitions[s * self.num_joint + j] {
                    transitions.push(TransitionDoc { state: s, action: a.clone(), next, prob });
                }
                let u = &self.payoffs[s * self.num_joint + j];
                if u.iter().any(|x| *x != 0.0) {
                    payoffs.push(PayoffDoc { state: s, action: a.clone(), values: u.clone() });
                }
            }
        }
        GameDoc {
            schema: GAME_SCHEMA,
            num_states: self.num_states,
            initial_state: self.initial_state,
            terminal_states: self.terminal_states(),
            num_actions: self.num_actions.clone(),
            absorbing: self.absorbing,
            transitions,
            payoffs,
            type_distribution: None,
        }
    }

    pub fn from_doc(doc: &GameDoc) -> Result<Self> {
        if doc.schema != GAME_SCHEMA {
            return Err(Error::Format(format!("unsupported game schema {}", doc.schema)));
        }
        let mut g = Game::new(doc.num_states, doc.initial_state, &doc.terminal_states, doc.num_actions.clone())?;
        let mut rows: Vec<Option<Vec<(StateId, f64)>>> = vec![None; g.transitions.len()];
        for t in &doc.transitions {
            let k = g.cell(t.state, &t.action)?;
            rows[k].get_or_insert_with(Vec::new).push((t.next, t.prob));
        }
        for (k, row) in rows.into_iter().enumerate() {
            if let Some(row) = row {
                g.transitions[k] = row;
            }
        }
        for p in &doc.payoffs {
            g.set_payoff(p.state, &p.action, p.values.clone())?;
        }
        g.absorbing = doc.absorbing;
        g.validate()?;
        Ok(g)
    }
}

pub const GAME_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub state: StateId,
    pub action: Vec<Action>,
    pub next: StateId,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffDoc {
    pub state: StateId,
    pub action: Vec<Action>,
    pub values: Vec<f64>,
}

/// JSON exchange document for a game and, optionally, its type distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDoc {
    pub schema: u32,
    pub num_states: usize,
    pub initial_state: StateId,
    pub terminal_states: Vec<StateId>,
    pub num_actions: Vec<usize>,
    #[serde(default)]
    pub absorbing: bool,
    pub transitions: Vec<TransitionDoc>,
    #[serde(default)]
    pub payoffs: Vec<PayoffDoc>,
    #[serde(default)]
    pub type_distribution: Option<TypeDistribution>,
}

/// Alternating sequence of states and joint actions, starting and ending
/// with a state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct History {
    states: Vec<StateId>,
    actions: Vec<Vec<Action>>,
}

impl History {
    pub fn new(s0: StateId) -> Self {
        History { states: vec![s0], actions: Vec::new() }
    }

    /// Current time t, the number of joint actions so far.
    pub fn t(&self) -> usize {
        self.actions.len()
    }

    pub fn state(&self, tau: usize) -> StateId {
        self.states[tau]
    }

    pub fn current_state(&self) -> StateId {
        *self.states.last().expect("history always holds a state")
    }

    pub fn action(&self, tau: usize) -> &[Action] {
        &self.actions[tau]
    }

    pub fn last_action(&self) -> Option<&[Action]> {
        self.actions.last().map(|a| a.as_slice())
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn actions(&self) -> &[Vec<Action>] {
        &self.actions
    }

    /// Actions of one player, in time order.
    pub fn player_actions(&self, player: usize) -> impl Iterator<Item = Action> + '_ {
        self.actions.iter().map(move |a| a[player])
    }

    pub fn push(&mut self, joint: Vec<Action>, next: StateId) {
        self.actions.push(joint);
        self.states.push(next);
    }

    pub fn pop(&mut self) -> Option<(Vec<Action>, StateId)> {
        if self.actions.is_empty() {
            return None;
        }
        let s = self.states.pop().expect("non-empty");
        let a = self.actions.pop().expect("non-empty");
        Some((a, s))
    }

    /// The history as it was at time `tau`.
    pub fn prefix(&self, tau: usize) -> History {
        assert!(tau <= self.t(), "prefix beyond history length");
        History { states: self.states[..=tau].to_vec(), actions: self.actions[..tau].to_vec() }
    }

    /// Length in the alternating encoding; always odd.
    pub fn encoded_len(&self) -> usize {
        self.states.len() + self.actions.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    Pure,
    Mixed,
    Correlated,
    IndependentProduct,
}

/// Distribution over joint type tuples. Each tuple entry indexes into the
/// corresponding player's type pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDistribution {
    pub support: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
    pub kind: TypeKind,
}

impl TypeDistribution {
    pub fn pure(tuple: Vec<usize>) -> Self {
        TypeDistribution { support: vec![tuple], probs: vec![1.0], kind: TypeKind::Pure }
    }

    pub fn new(support: Vec<Vec<usize>>, probs: Vec<f64>, kind: TypeKind) -> Result<Self> {
        let d = TypeDistribution { support, probs, kind };
        d.validate()?;
        Ok(d)
    }

    /// Product of independent per-player marginals over type indices.
    pub fn independent(marginals: &[Vec<f64>]) -> Result<Self> {
        let mut support = vec![Vec::new()];
        let mut probs = vec![1.0];
        for m in marginals {
            let mut s2 = Vec::new();
            let mut p2 = Vec::new();
            for (tuple, p) in support.iter().zip(&probs) {
                for (k, q) in m.iter().enumerate() {
                    if *q > 0.0 {
                        let mut t = tuple.clone();
                        t.push(k);
                        s2.push(t);
                        p2.push(p * q);
                    }
                }
            }
            support = s2;
            probs = p2;
        }
        TypeDistribution::new(support, probs, TypeKind::IndependentProduct)
    }

    pub fn is_pure(&self) -> bool {
        self.probs.iter().any(|p| (p - 1.0).abs() <= SUM_TOL)
    }

    /// Marginal distribution over type indices of one tuple position.
    pub fn marginal(&self, pos: usize) -> Vec<f64> {
        let n = self.support.iter().map(|t| t[pos] + 1).max().unwrap_or(0);
        let mut m = vec![0.0; n];
        for (t, p) in self.support.iter().zip(&self.probs) {
            m[t[pos]] += p;
        }
        m
    }

    pub fn prob_of(&self, tuple: &[usize]) -> f64 {
        self.support.iter().zip(&self.probs).filter(|(t, _)| t.as_slice() == tuple).map(|x| x.1).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::model("type distribution has empty support"));
        }
        if self.support.len() != self.probs.len() {
            return Err(Error::model("support and probability lengths differ"));
        }
        let width = self.support[0].len();
        if self.support.iter().any(|t| t.len() != width) {
            return Err(Error::model("type tuples have differing lengths"));
        }
        if self.probs.iter().any(|p| *p < 0.0) {
            return Err(Error::model("negative type probability"));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::model(format!("type probabilities sum to {total}")));
        }
        match self.kind {
            TypeKind::Pure if !self.is_pure() => {
                return Err(Error::model("pure distribution without a probability-one tuple"));
            }
            TypeKind::IndependentProduct => {
                let marg: Vec<Vec<f64>> = (0..width).map(|i| self.marginal(i)).collect();
                for (t, p) in self.support.iter().zip(&self.probs) {
                    let q: f64 = t.iter().enumerate().map(|(i, k)| marg[i][*k]).product();
                    if (p - q).abs() > SUM_TOL {
                        return Err(Error::model("independent-product distribution does not factorize"));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Result<&[usize]> {
        if self.support.is_empty() {
            return Err(Error::model("type distribution has empty support"));
        }
        Ok(&self.support[sample_index(&self.probs, rng)])
    }
}

/// Draws a joint type tuple.
pub fn sample_types<'a>(dist: &'a TypeDistribution, rng: &mut StreamRng) -> Result<&'a [usize]> {
    dist.sample(rng)
}

/// Draws the successor state, extends the history and returns the payoffs.
pub fn step(game: &Game, history: &mut History, joint: Vec<Action>, rng: &mut StreamRng) -> Result<(StateId, Vec<f64>)> {
    let s = history.current_state();
    if game.is_terminal(s) {
        if game.is_absorbing() {
            history.push(joint, s);
            return Ok((s, vec![0.0; game.num_players()]));
        }
        return Err(Error::model("cannot step from a terminal state"));
    }
    game.cell(s, &joint)?;
    let row = game.transition(s, &joint);
    let probs: Vec<f64> = row.iter().map(|x| x.1).collect();
    let next = row[sample_index(&probs, rng)].0;
    let u = game.payoff(s, &joint).to_vec();
    history.push(joint, next);
    Ok((next, u))
}

/// An action source with internal state, such as a planning agent.
pub trait Agent {
    /// Returns the chosen action and the distribution it was drawn from.
    fn act(&mut self, history: &History, player: usize, rng: &mut StreamRng) -> Result<(Action, Vec<f64>)>;
}

pub enum Controller<'a> {
    /// The player's behaviour is chosen from this pool by the type distribution.
    Typed(Vec<BehaviourRef>),
    Agent(&'a mut dyn Agent),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub history: History,
    /// Type tuple in force at each step.
    pub types: Vec<Vec<usize>>,
    pub payoffs: Vec<Vec<f64>>,
    /// Per-step, per-player action distributions.
    pub policies: Vec<Vec<Vec<f64>>>,
}

/// Runs the interaction loop until a terminal state or `max_steps`.
pub fn run_episode(
    game: &Game,
    controllers: &mut [Controller<'_>],
    dist: &TypeDistribution,
    max_steps: usize,
    resample_each_step: bool,
    streams: &Streams,
) -> Result<Episode> {
    let n = game.num_players();
    if controllers.len() != n {
        return Err(Error::config("controllers must cover all players"));
    }
    dist.validate()?;
    if dist.support[0].len() != n {
        return Err(Error::config("type tuples must have one entry per player"));
    }
    let mut type_rng = streams.stream("types");
    let mut trans_rng = streams.stream("transitions");
    let mut ctrl_rngs: Vec<StreamRng> = (0..n).map(|p| streams.indexed("controller", p as u64)).collect();

    let mut history = History::new(game.initial_state());
    let mut ep = Episode { history: history.clone(), types: vec![], payoffs: vec![], policies: vec![] };
    let mut types = dist.sample(&mut type_rng)?.to_vec();
    for t in 0..max_steps {
        if game.is_terminal(history.current_state()) {
            break;
        }
        if resample_each_step && t > 0 {
            types = dist.sample(&mut type_rng)?.to_vec();
        }
        let mut joint = Vec::with_capacity(n);
        let mut pols = Vec::with_capacity(n);
        for (p, c) in controllers.iter_mut().enumerate() {
            let (a, pol) = match c {
                Controller::Typed(pool) => {
                    let b = pool.get(types[p]).ok_or_else(|| Error::config("type index outside pool"))?;
                    let pol = b.distribution(&history, p);
                    (sample_index(&pol, &mut ctrl_rngs[p]), pol)
                }
                Controller::Agent(agent) => agent.act(&history, p, &mut ctrl_rngs[p])?,
            };
            joint.push(a);
            pols.push(pol);
        }
        let (_, u) = step(game, &mut history, joint, &mut trans_rng)?;
        ep.types.push(types.clone());
        ep.payoffs.push(u);
        ep.policies.push(pols);
    }
    ep.history = history;
    Ok(ep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviours::{Constant, Cycle};
    use std::sync::Arc;

    fn coin_game() -> Game {
        let mut g = Game::new(3, 0, &[], vec![1, 1]).unwrap();
        g.set_transition(0, &[0, 0], vec![(1, 0.3), (2, 0.7)]).unwrap();
        g
    }

    fn chain() -> Game {
        let mut g = Game::new(3, 0, &[2], vec![2, 2]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                g.set_transition(0, &[a, b], vec![(1, 1.0)]).unwrap();
                g.set_transition(1, &[a, b], vec![(1, 0.5), (2, 0.5)]).unwrap();
            }
        }
        g.with_absorbing(true)
    }

    #[test]
    fn joint_index_round_trip() {
        let g = Game::new(1, 0, &[], vec![2, 3, 4]).unwrap();
        for j in 0..g.num_joint() {
            assert_eq!(g.joint_index(&g.joint_from_index(j)), j);
        }
    }

    #[test]
    fn pure_sampling_is_constant() {
        let d = TypeDistribution::pure(vec![0, 3]);
        let mut rng = Streams::new(1).stream("t");
        for _ in 0..100 {
            assert_eq!(sample_types(&d, &mut rng).unwrap(), &[0, 3]);
        }
    }

    #[test]
    fn mixed_sampling_frequency() {
        let d = TypeDistribution::new(vec![vec![0], vec![1]], vec![0.5, 0.5], TypeKind::Mixed).unwrap();
        let mut rng = Streams::new(2).stream("t");
        let hits = (0..100_000).filter(|_| d.sample(&mut rng).unwrap()[0] == 0).count();
        let f = hits as f64 / 1e5;
        assert!((0.48..=0.52).contains(&f), "{f}");
    }

    #[test]
    fn correlated_never_draws_excluded_tuple() {
        let d = TypeDistribution::new(vec![vec![0, 1], vec![1, 0]], vec![0.5, 0.5], TypeKind::Correlated).unwrap();
        let mut rng = Streams::new(3).stream("t");
        for _ in 0..10_000 {
            let t = d.sample(&mut rng).unwrap();
            assert_ne!(t[0], t[1]);
        }
    }

    #[test]
    fn empty_support_is_an_error() {
        let d = TypeDistribution { support: vec![], probs: vec![], kind: TypeKind::Mixed };
        assert!(d.sample(&mut Streams::new(0).stream("t")).is_err());
    }

    #[test]
    fn independent_factorizes() {
        let d = TypeDistribution::independent(&[vec![0.3, 0.7], vec![0.5, 0.25, 0.25]]).unwrap();
        assert_eq!(d.support.len(), 6);
        assert!((d.prob_of(&[1, 2]) - 0.175).abs() < 1e-12);
        let bad = TypeDistribution { support: vec![vec![0, 0], vec![1, 1]], probs: vec![0.5, 0.5], kind: TypeKind::IndependentProduct };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn pure_kind_requires_certain_tuple() {
        assert!(TypeDistribution::new(vec![vec![0], vec![1]], vec![0.5, 0.5], TypeKind::Pure).is_err());
    }

    #[test]
    fn single_state_steps_stay_put() {
        let g = Game::bimatrix(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[vec![4.0, 3.0], vec![2.0, 1.0]]).unwrap();
        let mut h = History::new(0);
        let mut rng = Streams::new(0).stream("x");
        let (s, u) = step(&g, &mut h, vec![1, 0], &mut rng).unwrap();
        assert_eq!(s, 0);
        assert_eq!(u, vec![3.0, 2.0]);
        assert_eq!(h.t(), 1);
    }

    #[test]
    fn kernel_frequencies_match() {
        let g = coin_game();
        let mut rng = Streams::new(5).stream("x");
        let mut hits = 0;
        for _ in 0..100_000 {
            let mut h = History::new(0);
            if step(&g, &mut h, vec![0, 0], &mut rng).unwrap().0 == 1 {
                hits += 1;
            }
        }
        let f = hits as f64 / 1e5;
        assert!((0.28..=0.32).contains(&f), "{f}");
    }

    #[test]
    fn deterministic_transition() {
        let mut g = Game::new(2, 0, &[], vec![2, 2]).unwrap();
        g.set_transition(0, &[1, 1], vec![(1, 1.0)]).unwrap();
        let mut rng = Streams::new(0).stream("x");
        for _ in 0..50 {
            let mut h = History::new(0);
            assert_eq!(step(&g, &mut h, vec![1, 1], &mut rng).unwrap().0, 1);
        }
    }

    #[test]
    fn absorbing_terminal_steps() {
        let g = chain();
        let mut h = History::new(2);
        let mut rng = Streams::new(0).stream("x");
        assert_eq!(step(&g, &mut h, vec![0, 0], &mut rng).unwrap(), (2, vec![0.0, 0.0]));
        let g2 = Game::new(2, 1, &[1], vec![1, 1]).unwrap();
        assert!(step(&g2, &mut History::new(1), vec![0, 0], &mut rng).is_err());
    }

    fn pools() -> Vec<BehaviourRef> {
        vec![Arc::new(Constant::new(vec![0.5, 0.5]))]
    }

    #[test]
    fn episode_lengths() {
        let all_term = Game::new(1, 0, &[0], vec![2, 2]).unwrap();
        let d = TypeDistribution::pure(vec![0, 0]);
        let mut cs = [Controller::Typed(pools()), Controller::Typed(pools())];
        let ep = run_episode(&all_term, &mut cs, &d, 10, false, &Streams::new(1)).unwrap();
        assert_eq!(ep.history.t(), 0);

        let g = Game::bimatrix(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let ep = run_episode(&g, &mut cs, &d, 100, false, &Streams::new(1)).unwrap();
        assert_eq!(ep.history.t(), 100);
        let ep = run_episode(&g, &mut cs, &d, 0, false, &Streams::new(1)).unwrap();
        assert_eq!(ep.history, History::new(0));

        let c = chain();
        let ep = run_episode(&c, &mut cs, &d, 10_000, false, &Streams::new(1)).unwrap();
        assert!(c.is_terminal(ep.history.current_state()));
    }

    #[test]
    fn replay_determinism_and_prefix_law() {
        let g = Game::bimatrix(&[vec![1.0, 2.0], vec![3.0, 4.0]], &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let d = TypeDistribution::new(vec![vec![0, 0], vec![0, 1]], vec![0.5, 0.5], TypeKind::Mixed).unwrap();
        let pool: Vec<BehaviourRef> = vec![Arc::new(Constant::new(vec![0.3, 0.7])), Arc::new(Cycle::new(vec![0, 1], 2))];
        let run = |seed| {
            let mut cs = [Controller::Typed(pool.clone()), Controller::Typed(pool.clone())];
            run_episode(&g, &mut cs, &d, 50, true, &Streams::new(seed)).unwrap()
        };
        let a = run(9);
        assert_eq!(a, run(9));
        assert_ne!(a.history, run(10).history);
        for tau in 0..=a.history.t() {
            let p = a.history.prefix(tau);
            assert_eq!(p.t(), tau);
            assert_eq!(p.encoded_len() % 2, 1);
            let mut replay = p.clone();
            for k in tau..a.history.t() {
                replay.push(a.history.action(k).to_vec(), a.history.state(k + 1));
            }
            assert_eq!(replay, a.history);
        }
    }

    #[test]
    fn absorbing_law_holds_in_episodes() {
        let c = chain();
        let mut cs = [Controller::Typed(pools()), Controller::Typed(pools())];
        let d = TypeDistribution::pure(vec![0, 0]);
        let ep = run_episode(&c, &mut cs, &d, 50, false, &Streams::new(4)).unwrap();
        let h = &ep.history;
        if let Some(first) = h.states().iter().position(|s| c.is_terminal(*s)) {
            assert!(h.states()[first..].iter().all(|s| *s == h.states()[first]));
        }
    }

    #[test]
    fn json_round_trip() {
        let g = chain();
        let text = serde_json::to_string(&g.to_doc()).unwrap();
        let doc: GameDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(Game::from_doc(&doc).unwrap(), g);
    }
}
