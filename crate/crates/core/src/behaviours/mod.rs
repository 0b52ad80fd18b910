//! Player types: pure maps from interaction history to action distributions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sbg::{Action, History, StateId};

mod cdt;
mod cnn;
mod evo;
mod learning;
mod lft;
mod random;

pub use cdt::{evolve_cdt_pool, Node, TreeBehaviour};
pub use cnn::{evolve_cnn_pool, NeuralNet, NET_GENES};
pub use evo::{behaviour_distance, probe_histories, EvoParams, EvoTrace};
pub use learning::{epsilon_at, FictitiousPlay, QLearner, QTable};
pub use lft::{default_targets, make_lft_pool, maximin_action, minimax_action, LftBehaviour, LftRole};
pub use random::{random_behaviour, RandomBehaviour};

/// A player type. Implementations must be pure: the same history always
/// yields the same distribution.
pub trait Behaviour: Send + Sync + fmt::Debug {
    /// Stable identity, equal for behaviourally identical parameterisations.
    fn id(&self) -> String;

    fn num_actions(&self) -> usize;

    /// Distribution over `player`'s actions after history `h`.
    fn distribution(&self, h: &History, player: usize) -> Vec<f64>;

    fn prob(&self, h: &History, player: usize, a: Action) -> f64 {
        self.distribution(h, player)[a]
    }

    /// Type-specific payoff for `(state, own action)`, if the type carries one.
    fn payoff_view(&self, _s: StateId, _own: Action) -> Option<f64> {
        None
    }

    /// Serializable description, when one exists.
    fn spec(&self) -> Option<BehaviourSpec> {
        None
    }
}

pub type BehaviourRef = Arc<dyn Behaviour>;

/// Index of the other player in a two-player game.
pub(crate) fn other(player: usize) -> usize {
    1 - player.min(1)
}

pub(crate) fn one_hot(n: usize, a: Action) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[a] = 1.0;
    v
}

/// Lowest-indexed maximiser.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Same distribution at every history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub probs: Vec<f64>,
}

impl Constant {
    pub fn new(probs: Vec<f64>) -> Self {
        Constant { probs }
    }

    pub fn always(num_actions: usize, a: Action) -> Self {
        Constant { probs: one_hot(num_actions, a) }
    }
}

impl Behaviour for Constant {
    fn id(&self) -> String {
        format!("const:{:?}", self.probs)
    }
    fn num_actions(&self) -> usize {
        self.probs.len()
    }
    fn distribution(&self, _h: &History, _player: usize) -> Vec<f64> {
        self.probs.clone()
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::Constant(self.clone()))
    }
}

/// Plays `seq[t mod len]` deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub seq: Vec<Action>,
    pub num_actions: usize,
}

impl Cycle {
    pub fn new(seq: Vec<Action>, num_actions: usize) -> Self {
        assert!(!seq.is_empty() && seq.iter().all(|a| *a < num_actions));
        Cycle { seq, num_actions }
    }
}

impl Behaviour for Cycle {
    fn id(&self) -> String {
        format!("cycle:{:?}/{}", self.seq, self.num_actions)
    }
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn distribution(&self, h: &History, _player: usize) -> Vec<f64> {
        one_hot(self.num_actions, self.seq[h.t() % self.seq.len()])
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::Cycle(self.clone()))
    }
}

/// Cooperates (action 0) while the other player cooperated last round; after
/// the other defects it defects with probability `lambda`, and once it has
/// defected it defects forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTrigger {
    pub lambda: f64,
}

impl Behaviour for LambdaTrigger {
    fn id(&self) -> String {
        format!("lambda-trigger:{}", self.lambda)
    }
    fn num_actions(&self) -> usize {
        2
    }
    fn distribution(&self, h: &History, player: usize) -> Vec<f64> {
        if h.player_actions(player).any(|a| a == 1) {
            return vec![0.0, 1.0];
        }
        match h.last_action() {
            Some(a) if a[other(player)] == 1 => vec![1.0 - self.lambda, self.lambda],
            _ => vec![1.0, 0.0],
        }
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::LambdaTrigger(self.clone()))
    }
}

/// Distribution chosen by the previous joint action of a two-player game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reactive {
    pub initial: Vec<f64>,
    /// One row per previous joint action, indexed `a0 * other_actions + a1`.
    pub table: Vec<Vec<f64>>,
    pub second_actions: usize,
}

impl Behaviour for Reactive {
    fn id(&self) -> String {
        format!("reactive:{:?}:{:?}", self.initial, self.table)
    }
    fn num_actions(&self) -> usize {
        self.initial.len()
    }
    fn distribution(&self, h: &History, _player: usize) -> Vec<f64> {
        match h.last_action() {
            None => self.initial.clone(),
            Some(a) => self.table[a[0] * self.second_actions + a[1]].clone(),
        }
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::Reactive(self.clone()))
    }
}

/// History-dependent weights for a mixture.
pub type WeightFn = Arc<dyn Fn(&History) -> Vec<f64> + Send + Sync>;

/// Weighted combination of behaviours.
#[derive(Clone)]
pub struct Mixture {
    types: Vec<BehaviourRef>,
    weights: WeightFn,
    label: String,
}

impl fmt::Debug for Mixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mixture").field("types", &self.types).field("label", &self.label).finish()
    }
}

impl Mixture {
    pub fn new(types: Vec<BehaviourRef>, weights: WeightFn, label: impl Into<String>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::config("mixture needs at least one type"));
        }
        let n = types[0].num_actions();
        if types.iter().any(|t| t.num_actions() != n) {
            return Err(Error::config("mixture members disagree on action count"));
        }
        Ok(Mixture { types, weights, label: label.into() })
    }

    pub fn fixed(types: Vec<BehaviourRef>, w: Vec<f64>) -> Result<Self> {
        if w.len() != types.len() {
            return Err(Error::config("weight and type counts differ"));
        }
        let label = format!("{w:?}");
        Mixture::new(types, Arc::new(move |_| w.clone()), label)
    }

    pub fn try_distribution(&self, h: &History, player: usize) -> Result<Vec<f64>> {
        let w = (self.weights)(h);
        if w.len() != self.types.len() {
            return Err(Error::config("weight and type counts differ"));
        }
        let mut out = vec![0.0; self.num_actions()];
        for (t, wk) in self.types.iter().zip(&w) {
            if *wk == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(t.distribution(h, player)) {
                *o += wk * p;
            }
        }
        Ok(out)
    }
}

impl Behaviour for Mixture {
    fn id(&self) -> String {
        let ids: Vec<String> = self.types.iter().map(|t| t.id()).collect();
        format!("mix:{}:[{}]", self.label, ids.join(","))
    }
    fn num_actions(&self) -> usize {
        self.types[0].num_actions()
    }
    fn distribution(&self, h: &History, player: usize) -> Vec<f64> {
        self.try_distribution(h, player).expect("mixture weights must match its types")
    }
}

/// Serializable behaviour descriptions, the exchange format for type pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BehaviourSpec {
    Constant(Constant),
    Cycle(Cycle),
    LambdaTrigger(LambdaTrigger),
    Reactive(Reactive),
    Lft(LftBehaviour),
    Tree(TreeBehaviour),
    Net(NeuralNet),
    Random(RandomBehaviour),
    FictitiousPlay(FictitiousPlay),
    QLearning(QLearner),
}

impl BehaviourSpec {
    pub fn build(&self) -> BehaviourRef {
        match self.clone() {
            BehaviourSpec::Constant(b) => Arc::new(b),
            BehaviourSpec::Cycle(b) => Arc::new(b),
            BehaviourSpec::LambdaTrigger(b) => Arc::new(b),
            BehaviourSpec::Reactive(b) => Arc::new(b),
            BehaviourSpec::Lft(b) => Arc::new(b),
            BehaviourSpec::Tree(b) => Arc::new(b),
            BehaviourSpec::Net(b) => Arc::new(b),
            BehaviourSpec::Random(b) => Arc::new(b),
            BehaviourSpec::FictitiousPlay(b) => Arc::new(b),
            BehaviourSpec::QLearning(b) => Arc::new(b),
        }
    }
}

/// Serializes a pool; fails if a member has no serializable description.
pub fn pool_to_json(pool: &[BehaviourRef]) -> Result<String> {
    let specs = pool
        .iter()
        .map(|b| b.spec().ok_or_else(|| Error::Format(format!("{} is not serializable", b.id()))))
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string_pretty(&specs)?)
}

pub fn pool_from_json(text: &str) -> Result<Vec<BehaviourRef>> {
    let specs: Vec<BehaviourSpec> = serde_json::from_str(text)?;
    Ok(specs.iter().map(|s| s.build()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(actions: &[[Action; 2]]) -> History {
        let mut h = History::new(0);
        for a in actions {
            h.push(a.to_vec(), 0);
        }
        h
    }

    #[test]
    fn example_types() {
        let h = hist(&[[0, 1], [1, 1]]);
        assert_eq!(Constant::always(2, 0).distribution(&h, 1), vec![1.0, 0.0]);
        assert_eq!(Constant::new(vec![0.5, 0.5]).distribution(&h, 1), vec![0.5, 0.5]);
        let lr = Cycle::new(vec![0, 1], 2);
        assert_eq!(lr.distribution(&History::new(0), 1), vec![1.0, 0.0]);
        assert_eq!(lr.distribution(&hist(&[[0, 0]]), 1), vec![0.0, 1.0]);
    }

    #[test]
    fn lambda_trigger_rules() {
        let b = LambdaTrigger { lambda: 0.1 };
        assert_eq!(b.distribution(&History::new(0), 1), vec![1.0, 0.0]);
        assert_eq!(b.distribution(&hist(&[[0, 0]]), 1), vec![1.0, 0.0]);
        assert_eq!(b.distribution(&hist(&[[1, 0]]), 1), vec![0.9, 0.1]);
        assert_eq!(b.distribution(&hist(&[[1, 1], [0, 0]]), 1), vec![0.0, 1.0]);
    }

    #[test]
    fn mixture_reductions() {
        let a: BehaviourRef = Arc::new(Constant::always(2, 0));
        let b: BehaviourRef = Arc::new(Constant::always(2, 1));
        let h = hist(&[[0, 0]]);
        let m = Mixture::fixed(vec![a.clone(), b.clone()], vec![0.5, 0.5]).unwrap();
        assert_eq!(m.distribution(&h, 1), vec![0.5, 0.5]);
        let m = Mixture::fixed(vec![a.clone(), b.clone()], vec![0.0, 1.0]).unwrap();
        assert_eq!(m.distribution(&h, 1), b.distribution(&h, 1));
        assert!(Mixture::fixed(vec![a.clone(), b.clone()], vec![1.0]).is_err());
        let bad = Mixture::new(vec![a, b], Arc::new(|_| vec![1.0]), "bad").unwrap();
        assert!(bad.try_distribution(&h, 1).is_err());
    }

    #[test]
    fn pool_json_round_trip() {
        let pool: Vec<BehaviourRef> = vec![
            Arc::new(Constant::new(vec![0.2, 0.8])),
            Arc::new(Cycle::new(vec![1, 0], 2)),
            Arc::new(LambdaTrigger { lambda: 0.5 }),
            Arc::new(RandomBehaviour::new(2, 11)),
        ];
        let back = pool_from_json(&pool_to_json(&pool).unwrap()).unwrap();
        let h = hist(&[[0, 1], [1, 0], [1, 1]]);
        for (a, b) in pool.iter().zip(&back) {
            assert_eq!(a.id(), b.id());
            assert_eq!(a.distribution(&h, 1), b.distribution(&h, 1));
        }
    }
}
