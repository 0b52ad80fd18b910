//! Finite labelled Markov chains for the ideal process X (HBA knows the true
//! types) and the user process Y (HBA plans with its own hypothesised types),
//! condition checkers comparing the two, probabilistic bisimulation and
//! termination probabilities.
//!
//! Chains are built under a memoryless restriction: a node is the current
//! state, the last `window` joint actions, `t mod period` and the rounded
//! posterior. Behaviours that look further back than that are not
//! representable.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behaviours::{BehaviourRef, Constant, Cycle};
use crate::beliefs::{BeliefState, PosteriorMode};
use crate::error::{Error, Result};
use crate::planner::{plan, PlannerConfig};
use crate::sbg::{Action, Game, History, StateId};

pub const ROW_TOL: f64 = 1e-9;
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledChain {
    pub names: Vec<String>,
    pub term: Vec<bool>,
    pub initial: usize,
    /// Sparse rows: `rows[n]` lists `(successor, probability)`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

/// Serialised form: node count, labels and `[from, to, p]` triples.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChainDoc {
    nodes: usize,
    initial: usize,
    term: Vec<bool>,
    #[serde(default)]
    names: Vec<String>,
    transitions: Vec<(usize, usize, f64)>,
}

impl LabelledChain {
    pub fn new(term: Vec<bool>, initial: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let names = (0..term.len()).map(|n| format!("n{n}")).collect();
        let c = LabelledChain { names, term, initial, rows };
        c.validate()?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.term.len();
        if self.rows.len() != n || self.names.len() != n {
            return Err(Error::model("chain rows, labels and names differ in length"));
        }
        if self.initial >= n {
            return Err(Error::model("initial node out of range"));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.iter().any(|(to, p)| *to >= n || !(0.0..=1.0 + ROW_TOL).contains(p)) {
                return Err(Error::model(format!("bad transition in row {i}")));
            }
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::model(format!("row {i} sums to {sum}")));
            }
            if self.term[i] && row.iter().any(|(to, p)| *to != i && *p > 0.0) {
                return Err(Error::model(format!("term node {i} is not absorbing")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let transitions = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |(j, p)| (i, *j, *p)))
            .collect();
        let doc = ChainDoc { nodes: self.len(), initial: self.initial, term: self.term.clone(), names: self.names.clone(), transitions };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ChainDoc = serde_json::from_str(text)?;
        if doc.term.len() != doc.nodes {
            return Err(Error::Format("term labels do not match node count".into()));
        }
        let mut rows = vec![Vec::new(); doc.nodes];
        for (from, to, p) in doc.transitions {
            if from >= doc.nodes {
                return Err(Error::Format(format!("transition from unknown node {from}")));
            }
            rows[from].push((to, p));
        }
        let names = if doc.names.is_empty() { (0..doc.nodes).map(|n| format!("n{n}")).collect() } else { doc.names };
        let c = LabelledChain { names, term: doc.term, initial: doc.initial, rows };
        c.validate()?;
        Ok(c)
    }
}

/// What the planning player knows about the other player's type.
#[derive(Debug, Clone)]
pub enum Knowledge {
    /// The true type is revealed (process X).
    Ideal,
    /// Hypothesised types with their beliefs (process Y).
    User(BeliefState),
}

/// One process: the planning player, the other player's true memoryless
/// behaviour, and how the planner is configured and informed.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    pub game: Game,
    pub player: usize,
    pub opponent: BehaviourRef,
    pub planner: PlannerConfig,
    pub knowledge: Knowledge,
    /// Number of past joint actions the behaviours may depend on.
    pub window: usize,
    /// Behaviours may depend on `t mod period`.
    pub period: usize,
    pub node_budget: usize,
}

impl ProcessSpec {
    pub fn new(game: Game, opponent: BehaviourRef, planner: PlannerConfig, knowledge: Knowledge) -> Self {
        ProcessSpec { game, player: 0, opponent, planner, knowledge, window: 0, period: 1, node_budget: 100_000 }
    }

    pub fn with_window(mut self, window: usize, period: usize) -> Self {
        self.window = window;
        self.period = period.max(1);
        self
    }

    fn other(&self) -> usize {
        1 - self.player
    }

    fn initial_beliefs(&self) -> Result<BeliefState> {
        match &self.knowledge {
            Knowledge::Ideal => BeliefState::uniform(PosteriorMode::Product, self.other(), vec![self.opponent.clone()]),
            Knowledge::User(b) => Ok(b.clone()),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.game.num_players() != 2 || self.player > 1 {
            return Err(Error::config("bisimulation processes need a two-player game"));
        }
        self.planner.validate()
    }
}

/// One branch out of a non-terminal history: joint action, successor state
/// and probability.
type Branch = (Vec<Action>, StateId, f64);

/// Tie set of the planner and the resulting transition row;
/// the tie set is averaged uniformly.
fn step_row(spec: &ProcessSpec, bs: &BeliefState, h: &History) -> Result<(Vec<Action>, Vec<f64>, Vec<Branch>)> {
    let p = plan(&spec.game, &spec.planner, spec.player, bs, h)?;
    let j = spec.other();
    let dist = spec.opponent.distribution(h, j);
    let s = h.current_state();
    let mut out = Vec::new();
    let share = 1.0 / p.argmax.len() as f64;
    for &a_i in &p.argmax {
        for (a_j, pj) in dist.iter().enumerate() {
            if *pj <= 0.0 {
                continue;
            }
            let mut joint = vec![0; 2];
            joint[spec.player] = a_i;
            joint[j] = a_j;
            for &(next, pt) in spec.game.transition(s, &joint) {
                if pt > 0.0 {
                    out.push((joint.clone(), next, share * pj * pt));
                }
            }
        }
    }
    Ok((p.argmax, p.values, out))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NodeKey {
    Term(StateId),
    Live { state: StateId, window: Vec<Vec<Action>>, phase: usize, posterior: Vec<i64> },
}

fn node_key(spec: &ProcessSpec, bs: &BeliefState, h: &History) -> NodeKey {
    let s = h.current_state();
    if spec.game.is_terminal(s) {
        return NodeKey::Term(s);
    }
    let t = h.t();
    let from = t.saturating_sub(spec.window);
    let window = h.actions()[from..].to_vec();
    let post = bs.posterior();
    let mut sig: Vec<f64> = post.marginals.concat();
    if let Some(j) = post.joint {
        sig.extend(j);
    }
    let posterior = sig.iter().map(|p| (p / MASS_TOL).round() as i64).collect();
    NodeKey::Live { state: s, window, phase: t % spec.period, posterior }
}

fn key_name(k: &NodeKey) -> String {
    match k {
        NodeKey::Term(s) => format!("term:s{s}"),
        NodeKey::Live { state, window, phase, posterior } => {
            let post: Vec<f64> = posterior.iter().map(|p| *p as f64 * MASS_TOL).collect();
            format!("s{state}|w{window:?}|t%{phase}|{post:?}")
        }
    }
}

/// Builds the chain of one process by breadth-first expansion from the
/// initial state. Each node keeps the first history that reached it as its
/// representative.
pub fn build_process(spec: &ProcessSpec) -> Result<LabelledChain> {
    spec.validate()?;
    let h0 = History::new(spec.game.initial_state());
    let bs0 = spec.initial_beliefs()?;
    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    let mut names = Vec::new();
    let mut term = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |key: NodeKey, h: History, bs: BeliefState, queue: &mut VecDeque<(usize, History, BeliefState)>| -> Result<usize> {
        if let Some(i) = index.get(&key) {
            return Ok(*i);
        }
        let i = names.len();
        if i >= spec.node_budget {
            return Err(Error::BudgetExceeded { budget: spec.node_budget });
        }
        names.push(key_name(&key));
        let is_term = matches!(key, NodeKey::Term(_));
        term.push(is_term);
        rows.push(if is_term { vec![(i, 1.0)] } else { Vec::new() });
        index.insert(key, i);
        if !is_term {
            queue.push_back((i, h, bs));
        }
        Ok(i)
    };

    let k0 = node_key(spec, &bs0, &h0);
    let initial = intern(k0, h0, bs0, &mut queue)?;
    let mut filled = Vec::new();
    while let Some((i, h, bs)) = queue.pop_front() {
        let (_, _, branches) = step_row(spec, &bs, &h)?;
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for (joint, next, p) in branches {
            let mut bs2 = bs.clone();
            bs2.update(&h, &joint);
            let mut h2 = h.clone();
            h2.push(joint, next);
            let k = node_key(spec, &bs2, &h2);
            let to = intern(k, h2, bs2, &mut queue)?;
            *row.entry(to).or_insert(0.0) += p;
        }
        filled.push((i, row.into_iter().collect()));
    }
    for (i, row) in filled {
        rows[i] = row;
    }
    let chain = LabelledChain { names, term, initial, rows };
    chain.validate()?;
    Ok(chain)
}

/// Evidence that a condition fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub history: History,
    pub action: Option<Action>,
    pub state: Option<StateId>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub histories_checked: usize,
}

/// Per-history view of both processes.
struct Snapshot {
    history: History,
    x_values: Vec<f64>,
    x_argmax: Vec<Action>,
    x_succ: Vec<(StateId, f64)>,
    y_argmax: Vec<Action>,
    y_succ: Vec<(StateId, f64)>,
}

fn successor_mass(branches: &[Branch]) -> Vec<(StateId, f64)> {
    let mut m: BTreeMap<StateId, f64> = BTreeMap::new();
    for (_, s, p) in branches {
        *m.entry(*s).or_insert(0.0) += p;
    }
    m.into_iter().collect()
}

/// Walks the non-terminal histories of length below `horizon` that Y
/// reaches with positive probability, in breadth-first order.
fn walk(x: &ProcessSpec, y: &ProcessSpec, horizon: usize, budget: usize, mut visit: impl FnMut(&Snapshot) -> bool) -> Result<usize> {
    x.validate()?;
    y.validate()?;
    let h0 = History::new(y.game.initial_state());
    let mut queue = VecDeque::from([(h0, x.initial_beliefs()?, y.initial_beliefs()?)]);
    let mut checked = 0;
    while let Some((h, bx, by)) = queue.pop_front() {
        if y.game.is_terminal(h.current_state()) || h.t() >= horizon {
            continue;
        }
        checked += 1;
        if checked > budget {
            return Err(Error::BudgetExceeded { budget });
        }
        let (x_argmax, x_values, xb) = step_row(x, &bx, &h)?;
        let (y_argmax, _, yb) = step_row(y, &by, &h)?;
        let snap = Snapshot { history: h.clone(), x_values, x_argmax, x_succ: successor_mass(&xb), y_argmax, y_succ: successor_mass(&yb) };
        if !visit(&snap) {
            return Ok(checked);
        }
        for (joint, next, _) in yb {
            let mut bx2 = bx.clone();
            bx2.update(&h, &joint);
            let mut by2 = by.clone();
            by2.update(&h, &joint);
            let mut h2 = h.clone();
            h2.push(joint, next);
            queue.push_back((h2, bx2, by2));
        }
    }
    Ok(checked)
}

pub const CONDITION_BUDGET: usize = 200_000;

/// Every action Y may choose has positive expected payoff under X.
pub fn check_condition_18(x: &ProcessSpec, y: &ProcessSpec, horizon: usize) -> Result<ConditionReport> {
    let mut witness = None;
    let checked = walk(x, y, horizon, CONDITION_BUDGET, |s| {
        for &a in &s.y_argmax {
            if s.x_values[a] <= 0.0 {
                witness = Some(Witness {
                    history: s.history.clone(),
                    action: Some(a),
                    state: None,
                    note: format!("Y chooses {a} with value {} under X", s.x_values[a]),
                });
                return false;
            }
        }
        true
    })?;
    Ok(ConditionReport { holds: witness.is_none(), witness, histories_checked: checked })
}

/// Every successor state Y reaches with positive probability is also
/// reached by X.
pub fn check_condition_20(x: &ProcessSpec, y: &ProcessSpec, horizon: usize) -> Result<ConditionReport> {
    let mut witness = None;
    let checked = walk(x, y, horizon, CONDITION_BUDGET, |s| {
        for (state, _) in &s.y_succ {
            if !s.x_succ.iter().any(|(sx, p)| sx == state && *p > 0.0) {
                witness = Some(Witness {
                    history: s.history.clone(),
                    action: None,
                    state: Some(*state),
                    note: format!("Y reaches state {state}, X does not"),
                });
                return false;
            }
        }
        true
    })?;
    Ok(ConditionReport { holds: witness.is_none(), witness, histories_checked: checked })
}

/// Y's tie set is contained in X's.
pub fn check_condition_21(x: &ProcessSpec, y: &ProcessSpec, horizon: usize) -> Result<ConditionReport> {
    let mut witness = None;
    let checked = walk(x, y, horizon, CONDITION_BUDGET, |s| {
        if let Some(a) = s.y_argmax.iter().find(|a| !s.x_argmax.contains(a)) {
            witness = Some(Witness {
                history: s.history.clone(),
                action: Some(*a),
                state: None,
                note: format!("Y ties {:?}, X ties {:?}", s.y_argmax, s.x_argmax),
            });
            return false;
        }
        true
    })?;
    Ok(ConditionReport { holds: witness.is_none(), witness, histories_checked: checked })
}

/// Node of the disjoint union: `(chain, node)` with chain 0 or 1.
pub type UnionNode = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct BisimResult {
    pub bisimilar: bool,
    pub partition: Vec<Vec<UnionNode>>,
    /// When not bisimilar: a class to which the two initial nodes (or their
    /// ancestors in the refinement) assign different mass. The term class
    /// itself when the labels already differ.
    pub witness: Option<Vec<UnionNode>>,
}

fn union_rows(c1: &LabelledChain, c2: &LabelledChain) -> (Vec<Vec<(usize, f64)>>, Vec<bool>, Vec<UnionNode>) {
    let off = c1.len();
    let mut rows = c1.rows.clone();
    rows.extend(c2.rows.iter().map(|r| r.iter().map(|(j, p)| (j + off, *p)).collect()));
    let term = c1.term.iter().chain(&c2.term).copied().collect();
    let ids = (0..c1.len()).map(|n| (0, n)).chain((0..c2.len()).map(|n| (1, n))).collect();
    (rows, term, ids)
}

fn class_mass(row: &[(usize, f64)], block_of: &[usize], blocks: usize) -> Vec<f64> {
    let mut m = vec![0.0; blocks];
    for (j, p) in row {
        m[block_of[*j]] += p;
    }
    m
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= MASS_TOL)
}

/// Coarsest partition of the disjoint union that refines {term, non-term}
/// and in which related nodes give equal mass to every class.
pub fn bisimulation_check(c1: &LabelledChain, c2: &LabelledChain) -> BisimResult {
    let (rows, term, ids) = union_rows(c1, c2);
    let n = rows.len();
    let (i1, i2) = (c1.initial, c1.len() + c2.initial);
    let mut block_of: Vec<usize> = term.iter().map(|t| usize::from(!*t)).collect();
    let mut blocks = 2;
    let members = |block_of: &[usize], b: usize| -> Vec<UnionNode> { (0..n).filter(|k| block_of[*k] == b).map(|k| ids[k]).collect() };
    let mut witness = None;
    if term[i1] != term[i2] {
        witness = Some(members(&block_of, 0));
    }
    loop {
        let masses: Vec<Vec<f64>> = rows.iter().map(|r| class_mass(r, &block_of, blocks)).collect();
        if witness.is_none() && block_of[i1] == block_of[i2] && !close(&masses[i1], &masses[i2]) {
            let b = (0..blocks).find(|b| (masses[i1][*b] - masses[i2][*b]).abs() > MASS_TOL).unwrap_or(0);
            witness = Some(members(&block_of, b));
        }
        // Split every block by mass signature; representatives are taken in
        // node order so the result is deterministic.
        let mut next = vec![usize::MAX; n];
        let mut reps: Vec<usize> = Vec::new();
        for k in 0..n {
            let found = reps.iter().find(|r| block_of[**r] == block_of[k] && close(&masses[**r], &masses[k]));
            next[k] = match found {
                Some(r) => next[*r],
                None => {
                    reps.push(k);
                    reps.len() - 1
                }
            };
        }
        let stable = reps.len() == blocks;
        block_of = next;
        blocks = reps.len();
        if stable {
            break;
        }
    }
    let partition: Vec<Vec<UnionNode>> = (0..blocks).map(|b| members(&block_of, b)).collect();
    let bisimilar = block_of[i1] == block_of[i2];
    BisimResult { bisimilar, partition, witness: if bisimilar { None } else { witness } }
}

/// Checks directly that `partition` respects labels and class masses.
pub fn is_bisimulation(c1: &LabelledChain, c2: &LabelledChain, partition: &[Vec<UnionNode>]) -> bool {
    let (rows, term, ids) = union_rows(c1, c2);
    let pos: HashMap<UnionNode, usize> = ids.iter().enumerate().map(|(k, id)| (*id, k)).collect();
    let mut block_of = vec![usize::MAX; rows.len()];
    for (b, class) in partition.iter().enumerate() {
        for id in class {
            match pos.get(id) {
                Some(k) if block_of[*k] == usize::MAX => block_of[*k] = b,
                _ => return false,
            }
        }
    }
    if block_of.contains(&usize::MAX) {
        return false;
    }
    partition.iter().all(|class| {
        let ks: Vec<usize> = class.iter().map(|id| pos[id]).collect();
        let m0 = class_mass(&rows[ks[0]], &block_of, partition.len());
        ks.iter().all(|k| term[*k] == term[ks[0]] && close(&class_mass(&rows[*k], &block_of, partition.len()), &m0))
    })
}

/// Probability of having reached a term node within `horizon` steps, or
/// eventually when `horizon` is `None`.
pub fn termination_probability(c: &LabelledChain, horizon: Option<usize>) -> f64 {
    match horizon {
        Some(t) => {
            let mut d = vec![0.0; c.len()];
            d[c.initial] = 1.0;
            for _ in 0..t {
                let mut nd = vec![0.0; c.len()];
                for (i, p) in d.iter().enumerate() {
                    if *p == 0.0 {
                        continue;
                    }
                    for (j, q) in &c.rows[i] {
                        nd[*j] += p * q;
                    }
                }
                d = nd;
            }
            d.iter().zip(&c.term).filter(|(_, t)| **t).fold(0.0, |acc, (p, _)| acc + p)
        }
        None => reachability(c)[c.initial],
    }
}

/// Eventual term probability from every node: nodes that cannot reach term
/// get 0, the rest solve x = P x with term fixed to 1.
pub fn reachability(c: &LabelledChain) -> Vec<f64> {
    let n = c.len();
    let mut can = c.term.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !can[i] && c.rows[i].iter().any(|(j, p)| *p > 0.0 && can[*j]) {
                can[i] = true;
                changed = true;
            }
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|i| can[*i] && !c.term[*i]).collect();
    let mut x: Vec<f64> = c.term.iter().map(|t| if *t { 1.0 } else { 0.0 }).collect();
    if unknown.is_empty() {
        return x;
    }
    let pos: HashMap<usize, usize> = unknown.iter().enumerate().map(|(k, i)| (*i, k)).collect();
    let m = unknown.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (k, i) in unknown.iter().enumerate() {
        for (j, p) in &c.rows[*i] {
            if c.term[*j] {
                b[k] += p;
            } else if let Some(l) = pos.get(j) {
                a[(k, *l)] -= p;
            }
        }
    }
    if let Some(sol) = a.lu().solve(&b) {
        for (k, i) in unknown.iter().enumerate() {
            x[*i] = sol[k].clamp(0.0, 1.0);
        }
    }
    x
}

/// Random chain with `terms` absorbing term nodes at the end. Every live node
/// links to its successor, so term is reachable from node 0.
pub fn random_chain<R: Rng + ?Sized>(live: usize, terms: usize, rng: &mut R) -> LabelledChain {
    let n = live + terms;
    let mut rows = Vec::with_capacity(n);
    for i in 0..live {
        let mut w: Vec<(usize, f64)> = vec![(i + 1, rng.random::<f64>() + 0.05)];
        for _ in 0..2 {
            w.push((rng.random_range(0..n), rng.random::<f64>()));
        }
        let z: f64 = w.iter().map(|x| x.1).sum();
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, p) in w {
            match merged.iter_mut().find(|x| x.0 == j) {
                Some(x) => x.1 += p / z,
                None => merged.push((j, p / z)),
            }
        }
        rows.push(merged);
    }
    rows.extend((live..n).map(|i| vec![(i, 1.0)]));
    let term = (0..n).map(|i| i >= live).collect();
    LabelledChain::new(term, 0, rows).expect("rows are normalised")
}

/// Copy of `c` in which `node` is duplicated: the copy keeps the outgoing row
/// and incoming mass is divided `frac` / `1 - frac` between the two.
pub fn split_node(c: &LabelledChain, node: usize, frac: f64) -> Result<LabelledChain> {
    if node >= c.len() || !(0.0..=1.0).contains(&frac) {
        return Err(Error::config("split node or fraction out of range"));
    }
    let twin = c.len();
    let redirect = |row: &Vec<(usize, f64)>| -> Vec<(usize, f64)> {
        row.iter()
            .flat_map(|(j, p)| if *j == node { vec![(node, p * frac), (twin, p * (1.0 - frac))] } else { vec![(*j, *p)] })
            .collect()
    };
    let mut rows: Vec<Vec<(usize, f64)>> = c.rows.iter().map(redirect).collect();
    rows.push(rows[node].clone());
    let mut term = c.term.clone();
    term.push(c.term[node]);
    if c.term[node] {
        // Term nodes must stay absorbing.
        rows[node] = vec![(node, 1.0)];
        rows[twin] = vec![(twin, 1.0)];
    }
    let mut names = c.names.clone();
    names.push(format!("{}'", c.names[node]));
    let out = LabelledChain { names, term, initial: c.initial, rows };
    out.validate()?;
    Ok(out)
}

/// Copy of `c` with every term label cleared.
pub fn without_term(c: &LabelledChain) -> Result<LabelledChain> {
    let out = LabelledChain { term: vec![false; c.len()], ..c.clone() };
    out.validate()?;
    Ok(out)
}

/// Two-state fixture in which the task is completed once both players
/// choose the same action: state 0 is live, state 1 terminal.
pub fn same_action_task() -> Game {
    let mut g = Game::new(2, 0, &[1], vec![2, 2]).expect("valid fixture");
    for a in 0..2 {
        for b in 0..2 {
            let next = if a == b { 1 } else { 0 };
            g.set_transition(0, &[a, b], vec![(next, 1.0)]).expect("valid fixture");
        }
    }
    g
}

/// X and Y for the same-action task: the other player alternates L, R, ...
/// and Y hypothesises the opposite alternation.
pub fn same_action_fixture() -> Result<(ProcessSpec, ProcessSpec)> {
    let g = same_action_task();
    let cfg = PlannerConfig::depth_limited(1).with_task_completion();
    let truth: BehaviourRef = std::sync::Arc::new(Cycle::new(vec![0, 1], 2));
    let hyp: BehaviourRef = std::sync::Arc::new(Cycle::new(vec![1, 0], 2));
    let by = BeliefState::uniform(PosteriorMode::Product, 1, vec![hyp])?;
    let x = ProcessSpec::new(g.clone(), truth.clone(), cfg.clone(), Knowledge::Ideal).with_window(0, 2);
    let y = ProcessSpec::new(g, truth, cfg, Knowledge::User(by)).with_window(0, 2);
    Ok((x, y))
}

/// Three actions for the planner against an opponent that always plays 0.
/// Action 0 always completes the task, action 1 only against 0, action 2
/// never. X ties {0, 1}; Y believes the opponent plays 1 and picks 0 alone.
pub fn tie_fixture() -> Result<(ProcessSpec, ProcessSpec)> {
    let mut g = Game::new(2, 0, &[1], vec![3, 2])?;
    for b in 0..2 {
        g.set_transition(0, &[0, b], vec![(1, 1.0)])?;
        g.set_transition(0, &[1, b], vec![(if b == 0 { 1 } else { 0 }, 1.0)])?;
        g.set_transition(0, &[2, b], vec![(0, 1.0)])?;
    }
    let cfg = PlannerConfig::depth_limited(1).with_task_completion();
    let truth: BehaviourRef = std::sync::Arc::new(Constant::always(2, 0));
    let hyp: BehaviourRef = std::sync::Arc::new(Constant::always(2, 1));
    let by = BeliefState::uniform(PosteriorMode::Product, 1, vec![hyp])?;
    let x = ProcessSpec::new(g.clone(), truth.clone(), cfg.clone(), Knowledge::Ideal);
    let y = ProcessSpec::new(g, truth, cfg, Knowledge::User(by));
    Ok((x, y))
}
