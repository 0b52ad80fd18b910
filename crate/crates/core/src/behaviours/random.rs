use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Behaviour, BehaviourSpec};
use crate::rng::mix;
use crate::sbg::History;

/// A fresh normalised uniform draw at every time step, derived from
/// `(seed, t)` so repeated evaluation gives the same vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomBehaviour {
    pub num_actions: usize,
    pub seed: u64,
}

impl RandomBehaviour {
    pub fn new(num_actions: usize, seed: u64) -> Self {
        assert!(num_actions >= 2, "random behaviours need at least two actions");
        RandomBehaviour { num_actions, seed }
    }

    pub fn at_time(&self, t: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.num_actions)
            .map(|a| {
                // Midpoint of a 53-bit cell keeps every draw strictly inside (0, 1).
                let bits = mix(self.seed, &[t as u64, a as u64]) >> 11;
                (bits as f64 + 0.5) / (1u64 << 53) as f64
            })
            .collect();
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        v
    }
}

pub fn random_behaviour<R: Rng + ?Sized>(num_actions: usize, rng: &mut R) -> RandomBehaviour {
    RandomBehaviour::new(num_actions, rng.random())
}

impl Behaviour for RandomBehaviour {
    fn id(&self) -> String {
        format!("random:{}:{}", self.num_actions, self.seed)
    }
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn distribution(&self, h: &History, _player: usize) -> Vec<f64> {
        self.at_time(h.t())
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::Random(self.clone()))
    }
}
