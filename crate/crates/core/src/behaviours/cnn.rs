use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::evo::{coevolve, distinct, EvoParams, EvoTrace, Genome};
use super::{other, Behaviour, BehaviourRef, BehaviourSpec};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::sbg::{Game, History};

const INPUTS: usize = 4;
const HIDDEN: usize = 5;
/// 4x5 input weights, 5 hidden biases, 5 output weights, 1 output bias.
pub const NET_GENES: usize = INPUTS * HIDDEN + HIDDEN + HIDDEN + 1;
const GENE_BOUND: f64 = 4.0;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Feed-forward 4-5-1 network for two-action games. Inputs are the own and
/// other player's actions at t-1 and t-2, encoded +1 / -1 (0 when missing);
/// the output is the probability of action 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNet {
    pub genes: Vec<f64>,
}

impl NeuralNet {
    pub fn decode(genes: &[f64]) -> Result<Self> {
        if genes.len() != NET_GENES || genes.iter().any(|g| !g.is_finite() || g.abs() > GENE_BOUND) {
            return Err(Error::config(format!("a network genome has {NET_GENES} genes within ±{GENE_BOUND}")));
        }
        Ok(NeuralNet { genes: genes.to_vec() })
    }

    pub fn encode(&self) -> Vec<f64> {
        self.genes.clone()
    }

    pub fn inputs(h: &History, player: usize) -> [f64; INPUTS] {
        let t = h.t();
        let enc = |lag: usize, p: usize| if t >= lag { if h.action(t - lag)[p] == 0 { 1.0 } else { -1.0 } } else { 0.0 };
        let o = other(player);
        [enc(1, player), enc(2, player), enc(1, o), enc(2, o)]
    }

    pub fn output(&self, x: &[f64; INPUTS]) -> f64 {
        let g = &self.genes;
        let (w_ih, rest) = g.split_at(INPUTS * HIDDEN);
        let (b_h, rest) = rest.split_at(HIDDEN);
        let (w_ho, b_o) = rest.split_at(HIDDEN);
        let mut z = b_o[0];
        for k in 0..HIDDEN {
            let a: f64 = (0..INPUTS).map(|i| w_ih[k * INPUTS + i] * x[i]).sum::<f64>() + b_h[k];
            z += w_ho[k] * sigmoid(a);
        }
        sigmoid(z)
    }
}

impl Behaviour for NeuralNet {
    fn id(&self) -> String {
        format!("cnn:{:?}", self.genes)
    }
    fn num_actions(&self) -> usize {
        2
    }
    fn distribution(&self, h: &History, player: usize) -> Vec<f64> {
        let p = self.output(&NeuralNet::inputs(h, player));
        vec![p, 1.0 - p]
    }
    fn spec(&self) -> Option<BehaviourSpec> {
        Some(BehaviourSpec::Net(self.clone()))
    }
}

impl Genome for NeuralNet {
    fn random(rng: &mut StreamRng, _own: usize, _opp: usize) -> Self {
        NeuralNet { genes: (0..NET_GENES).map(|_| rng.random_range(-GENE_BOUND..=GENE_BOUND)).collect() }
    }

    fn crossover(&self, other: &Self, rng: &mut StreamRng) -> Self {
        let cut = rng.random_range(1..NET_GENES);
        let genes = self.genes[..cut].iter().chain(&other.genes[cut..]).copied().collect();
        NeuralNet { genes }
    }

    fn mutate(&mut self, rate: f64, rng: &mut StreamRng) {
        for g in self.genes.iter_mut() {
            if rng.random::<f64>() < rate {
                *g = (*g + rng.random_range(-1.0..=1.0)).clamp(-GENE_BOUND, GENE_BOUND);
            }
        }
    }

    fn behaviour(&self) -> BehaviourRef {
        Arc::new(self.clone())
    }
}

/// Co-evolves two pools of networks and returns the behaviourally distinct
/// members of `player`'s pool, fittest first.
pub fn evolve_cnn_pool(
    game: &Game,
    params: &EvoParams,
    player: usize,
    rng: &mut StreamRng,
) -> Result<(Vec<NeuralNet>, EvoTrace)> {
    if game.num_actions(0) != 2 || game.num_actions(1) != 2 {
        return Err(Error::config("network types are defined for two-action games"));
    }
    let (pools, trace, probes) = coevolve::<NeuralNet>(game, params, rng)?;
    Ok((distinct(&pools[player], &probes, player), trace))
}

#[cfg(test)]
mod tests {
    use super::super::evo::probe_histories;
    use super::*;
    use crate::rng::Streams;

    #[test]
    fn output_strictly_inside_unit_interval() {
        let extreme = NeuralNet { genes: vec![GENE_BOUND; NET_GENES] };
        let neg = NeuralNet { genes: vec![-GENE_BOUND; NET_GENES] };
        for h in probe_histories([2, 2], 50, 3) {
            for n in [&extreme, &neg] {
                let p = n.distribution(&h, 0);
                assert!(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0);
            }
        }
    }

    #[test]
    fn genome_round_trip() {
        let mut rng = Streams::new(2).stream("n");
        let net = NeuralNet::random(&mut rng, 2, 2);
        let back = NeuralNet::decode(&net.encode()).unwrap();
        for h in probe_histories([2, 2], 100, 5) {
            assert_eq!(net.distribution(&h, 1), back.distribution(&h, 1));
        }
        assert!(NeuralNet::decode(&[0.0; 3]).is_err());
    }

    #[test]
    fn no_conflict_evolution_improves() {
        // Both players prefer (0, 0).
        let g = Game::bimatrix(&[vec![4.0, 2.0], vec![3.0, 1.0]], &[vec![4.0, 3.0], vec![2.0, 1.0]]).unwrap();
        let params = EvoParams { population: 20, generations: 20, ..EvoParams::default() };
        let mut rng = Streams::new(6).stream("evo");
        let (pool, trace) = evolve_cnn_pool(&g, &params, 1, &mut rng).unwrap();
        assert!(!pool.is_empty());
        for w in trace.best.windows(2) {
            assert!(w[1][0] >= w[0][0] && w[1][1] >= w[0][1]);
        }
        let first = trace.mean[0];
        let last = *trace.mean.last().unwrap();
        assert!(last[0] >= first[0] && last[1] >= first[1], "{first:?} -> {last:?}");
        let probes = probe_histories([2, 2], 30, 1);
        for n in &pool {
            for h in &probes {
                let d = n.distribution(h, 1);
                assert!(d[0] != 1.0 && d[0] != 0.0);
            }
        }
    }
}
