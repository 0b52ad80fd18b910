use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::evo::{coevolve, distinct, EvoParams, EvoTrace, Genome};
use super::{one_hot, other, Behaviour, BehaviourRef, BehaviourSpec};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::sbg::{Action, Game, History};

/// Decision tree over the other player's recent actions. A test node with
/// lag `l` branches on the other player's action `l` steps ago.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf { action: Action },
    Test { lag: usize, children: Vec<Node> },
}

impl Node {
    fn size(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Test { children, .. } => 1 + children.iter().map(|c| c.size()).sum::<usize>(),
        }
    }

    fn get(&self, idx: usize) -> &Node {
        if idx == 0 {
            return self;
        }
        let Node::Test { children, .. } = self else { unreachable!("index within a leaf") };
        let mut rest = idx - 1;
        for c in children {
            if rest < c.size() {
                return c.get(rest);
            }
            rest -= c.size();
        }
        unreachable!("index beyond tree size")
    }

    fn replaced(&self, idx: usize, with: &Node) -> Node {
        if idx == 0 {
            return with.clone();
        }
        let Node::Test { lag, children } = self else { unreachable!("index within a leaf") };
        let mut offset = 1;
        let mut out = Vec::with_capacity(children.len());
        for c in children {
            let size = c.size();
            if (offset..offset + size).contains(&idx) {
                out.push(c.replaced(idx - offset, with));
            } else {
                out.push(c.clone());
            }
            offset += size;
        }
        Node::Test { lag: *lag, children: out }
    }

    /// Drops tests that repeat a lag already tested on the path.
    fn repaired(&self, used: &mut Vec<usize>) -> Node {
        match self {
            Node::Leaf { .. } => self.clone(),
            Node::Test { lag, children } => {
                if used.contains(lag) {
                    return children[0].repaired(used);
                }
                used.push(*lag);
                let kids = children.iter().map(|c| c.repaired(used)).collect();
                used.pop();
                Node::Test { lag: *lag, children: kids }
            }
        }
    }

    fn random(rng: &mut StreamRng, used: &mut Vec<usize>, memory: usize, own: usize, opp: usize) -> Node {
        if used.len() >= memory || rng.random::<f64>() < 0.35 {
            return Node::Leaf { action: rng.random_range(0..own) };
        }
        let free: Vec<usize> = (1..=memory).filter(|l| !used.contains(l)).collect();
        let lag = free[rng.random_range(0..free.len())];
        used.push(lag);
        let children = (0..opp).map(|_| Node::random(rng, used, memory, own, opp)).collect();
        used.pop();
        Node::Test { lag, children }
    }

    fn check(&self, used: &mut Vec<usize>, memory: usize, own: usize, opp: usize) -> bool {
        match self {
            Node::Leaf { action } => *action < own,
            Node::Test { lag, children } => {
                if *lag == 0 || *lag > memory || used.contains(lag) || children.len() != opp {
                    return false;
                }
                used.push(*lag);
                let ok = children.iter().all(|c| c.check(used, memory, own, opp));
                used.pop();
                ok
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeBehaviour {
    pub root: Node,
    /// Action for histories shorter than `memory`.
    pub default_action: Action,
    pub num_actions: usize,
    pub other_actions: usize,
    pub memory: usize,
}

impl TreeBehaviour {
    pub fn new(root: Node, default_action: Action, num_actions: usize, other_actions: usize) -> Result<Self> {
        let t = TreeBehaviour { root, default_action, num_actions, other_actions, memory: 3 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.default_action >= self.num_actions
            || !self.root.check(&mut Vec::new(), self.memory, self.num_actions, self.other_actions)
        {
            return Err(Error::config("malformed decision tree"));
        }
        Ok(())
    }

    pub fn decide(&self, h: &History, player: usize) -> Action {
        let t = h.t();
        if t < self.memory {
            return self.default_action;
        }
        let o = other(player);
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { action } => return *action,
                Node::Test { lag, children } => node = &children[h.action(t - lag)[o]],
            }
        }
    }
}

impl Behaviour for TreeBehaviour {
    fn id(&self) -> String {
        format!("cdt:{}:{}", self.default_action, serde_json::to_string(&self.root).unwrap_or_default())
    }
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn distribution(&self, h: &History, player: usize) -> Vec<f64> {
        one_hot(self.num_actions, self.decide(h, player))
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::Tree(self.clone()))
    }
}

impl Genome for TreeBehaviour {
    fn random(rng: &mut StreamRng, own: usize, opp: usize) -> Self {
        TreeBehaviour {
            root: Node::random(rng, &mut Vec::new(), 3, own, opp),
            default_action: rng.random_range(0..own),
            num_actions: own,
            other_actions: opp,
            memory: 3,
        }
    }

    fn crossover(&self, other: &Self, rng: &mut StreamRng) -> Self {
        let ia = rng.random_range(0..self.root.size());
        let ib = rng.random_range(0..other.root.size());
        let root = self.root.replaced(ia, other.root.get(ib)).repaired(&mut Vec::new());
        let default_action = if rng.random::<bool>() { self.default_action } else { other.default_action };
        TreeBehaviour { root, default_action, ..self.clone() }
    }

    fn mutate(&mut self, rate: f64, rng: &mut StreamRng) {
        if rng.random::<f64>() < rate {
            let i = rng.random_range(0..self.root.size());
            let sub = Node::random(rng, &mut Vec::new(), self.memory, self.num_actions, self.other_actions);
            self.root = self.root.replaced(i, &sub).repaired(&mut Vec::new());
        }
        if rng.random::<f64>() < rate {
            self.default_action = rng.random_range(0..self.num_actions);
        }
    }

    fn behaviour(&self) -> BehaviourRef {
        Arc::new(self.clone())
    }
}

/// Co-evolves two pools of trees and returns the behaviourally distinct
/// members of `player`'s pool, fittest first.
pub fn evolve_cdt_pool(
    game: &Game,
    params: &EvoParams,
    player: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<TreeBehaviour>, EvoTrace)> {
    let (pools, trace, probes) = coevolve::<TreeBehaviour>(game, params, rng)?;
    Ok((distinct(&pools[player], &probes, player), trace))
}
