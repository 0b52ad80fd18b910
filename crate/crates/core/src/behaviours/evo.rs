//! Co-evolution loop shared by the decision-tree and neural-network generators.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Behaviour, BehaviourRef};
use crate::error::{Error, Result};
use crate::rng::{sample_index, StreamRng};
use crate::sbg::{Action, Game, History};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvoParams {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub dissimilarity_weight: f64,
    /// Opponents sampled from the other pool per fitness evaluation.
    pub opponents: usize,
    /// Rounds per evaluation match.
    pub rounds: usize,
    /// Size of the fixed probe set used by the dissimilarity term.
    pub probes: usize,
    pub elites: usize,
}

impl Default for EvoParams {
    fn default() -> Self {
        EvoParams {
            population: 50,
            generations: 100,
            tournament: 3,
            crossover: 0.8,
            mutation: 0.1,
            dissimilarity_weight: 0.3,
            opponents: 5,
            rounds: 20,
            probes: 40,
            elites: 2,
        }
    }
}

impl EvoParams {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::config("population must hold at least two individuals"));
        }
        if self.tournament == 0 || self.opponents == 0 || self.rounds == 0 {
            return Err(Error::config("tournament, opponents and rounds must be positive"));
        }
        if !(0.0..=1.0).contains(&self.crossover) || !(0.0..=1.0).contains(&self.mutation) {
            return Err(Error::config("crossover and mutation rates must lie in [0, 1]"));
        }
        if self.elites >= self.population {
            return Err(Error::config("elites must be fewer than the population"));
        }
        Ok(())
    }
}

/// Best and mean fitness per generation, one entry per pool.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvoTrace {
    pub best: Vec<[f64; 2]>,
    pub mean: Vec<[f64; 2]>,
}

pub(crate) trait Genome: Clone + Send + Sync {
    fn random(rng: &mut StreamRng, own_actions: usize, other_actions: usize) -> Self;
    fn crossover(&self, other: &Self, rng: &mut StreamRng) -> Self;
    fn mutate(&mut self, rate: f64, rng: &mut StreamRng);
    fn behaviour(&self) -> BehaviourRef;
}

/// Random histories of length 0..=6 for comparing behaviours.
pub fn probe_histories(num_actions: [usize; 2], count: usize, seed: u64) -> Vec<History> {
    let mut rng = StreamRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.random_range(0..=6);
            let mut h = History::new(0);
            for _ in 0..len {
                h.push(vec![rng.random_range(0..num_actions[0]), rng.random_range(0..num_actions[1])], 0);
            }
            h
        })
        .collect()
}

/// Mean total-variation distance between two behaviours over the probes.
/// For deterministic behaviours this is the disagreement rate.
pub fn behaviour_distance(a: &dyn Behaviour, b: &dyn Behaviour, probes: &[History], player: usize) -> f64 {
    if probes.is_empty() {
        return 0.0;
    }
    let total: f64 = probes
        .iter()
        .map(|h| {
            let p = a.distribution(h, player);
            let q = b.distribution(h, player);
            0.5 * p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum::<f64>()
        })
        .sum();
    total / probes.len() as f64
}

fn payoff_range(game: &Game, p: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..game.num_joint() {
        let u = game.payoff(0, &game.joint_from_index(j))[p];
        lo = lo.min(u);
        hi = hi.max(u);
    }
    (lo, hi)
}

/// Normalised average payoff of `x` (as player `p`) against sampled opponents.
fn match_payoff(game: &Game, x: &dyn Behaviour, opps: &[&dyn Behaviour], p: usize, rounds: usize, rng: &mut StreamRng) -> f64 {
    let (lo, hi) = payoff_range(game, p);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut total = 0.0;
    for y in opps {
        let mut h = History::new(0);
        for _ in 0..rounds {
            let ax = sample_index(&x.distribution(&h, p), rng);
            let ay = sample_index(&y.distribution(&h, 1 - p), rng);
            let joint: Vec<Action> = if p == 0 { vec![ax, ay] } else { vec![ay, ax] };
            total += (game.payoff(0, &joint)[p] - lo) / span;
            h.push(joint, 0);
        }
    }
    total / (opps.len() * rounds) as f64
}

pub(crate) fn fitness(
    game: &Game,
    x: &dyn Behaviour,
    pool: &[BehaviourRef],
    opponents: &[&dyn Behaviour],
    p: usize,
    params: &EvoParams,
    probes: &[History],
    rng: &mut StreamRng,
) -> f64 {
    let pay = match_payoff(game, x, opponents, p, params.rounds, rng);
    let others: Vec<&BehaviourRef> = pool.iter().filter(|b| !std::ptr::addr_eq(b.as_ref(), x)).collect();
    let dissim = if others.is_empty() {
        0.0
    } else {
        others.iter().map(|b| behaviour_distance(x, b.as_ref(), probes, p)).sum::<f64>() / others.len() as f64
    };
    pay + params.dissimilarity_weight * dissim
}

fn tournament<'a, G>(pop: &'a [(G, f64)], k: usize, rng: &mut StreamRng) -> &'a G {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..k {
        let c = rng.random_range(0..pop.len());
        if pop[c].1 > pop[best].1 {
            best = c;
        }
    }
    &pop[best].0
}

fn evaluate<G: Genome>(
    game: &Game,
    pop: &[G],
    opp_pool: &[BehaviourRef],
    p: usize,
    params: &EvoParams,
    probes: &[History],
    rng: &mut StreamRng,
) -> Vec<f64> {
    let behaviours: Vec<BehaviourRef> = pop.iter().map(|g| g.behaviour()).collect();
    let seeds: Vec<u64> = pop.iter().map(|_| rng.random()).collect();
    behaviours
        .par_iter()
        .zip(seeds)
        .map(|(b, seed)| {
            let mut r = StreamRng::seed_from_u64(seed);
            let opps: Vec<&dyn Behaviour> =
                (0..params.opponents).map(|_| opp_pool[r.random_range(0..opp_pool.len())].as_ref()).collect();
            fitness(game, b.as_ref(), &behaviours, &opps, p, params, probes, &mut r)
        })
        .collect()
}

fn sort_desc<G>(pop: &mut [(G, f64)]) {
    pop.sort_by(|a, b| b.1.total_cmp(&a.1));
}

/// Runs two concurrent pools, one per player, and returns both final
/// populations sorted by fitness.
pub(crate) fn coevolve<G: Genome>(
    game: &Game,
    params: &EvoParams,
    rng: &mut StreamRng,
) -> Result<([Vec<(G, f64)>; 2], EvoTrace, Vec<History>)> {
    params.validate()?;
    if game.num_players() != 2 || game.num_states() != 1 {
        return Err(Error::config("co-evolution needs a two-player repeated matrix game"));
    }
    let n = [game.num_actions(0), game.num_actions(1)];
    let probes = probe_histories(n, params.probes, rng.random());
    let mut pops: [Vec<G>; 2] = [
        (0..params.population).map(|_| G::random(rng, n[0], n[1])).collect(),
        (0..params.population).map(|_| G::random(rng, n[1], n[0])).collect(),
    ];
    let mut scored: [Vec<(G, f64)>; 2] = [Vec::new(), Vec::new()];
    for p in 0..2 {
        let opp: Vec<BehaviourRef> = pops[1 - p].iter().map(|g| g.behaviour()).collect();
        let f = evaluate(game, &pops[p], &opp, p, params, &probes, rng);
        scored[p] = pops[p].iter().cloned().zip(f).collect();
        sort_desc(&mut scored[p]);
    }
    let mut trace = EvoTrace::default();
    let record = |scored: &[Vec<(G, f64)>; 2], trace: &mut EvoTrace| {
        let best = [scored[0][0].1, scored[1][0].1];
        let mean = [0, 1].map(|p| scored[p].iter().map(|x| x.1).sum::<f64>() / scored[p].len() as f64);
        trace.best.push(best);
        trace.mean.push(mean);
    };
    record(&scored, &mut trace);
    for _ in 1..params.generations {
        let mut next: [Vec<(G, f64)>; 2] = [Vec::new(), Vec::new()];
        for p in 0..2 {
            let parents = &scored[p];
            let elites: Vec<(G, f64)> = parents[..params.elites].to_vec();
            let mut children = Vec::with_capacity(params.population - params.elites);
            while children.len() < params.population - params.elites {
                let a = tournament(parents, params.tournament, rng);
                let mut c = if rng.random::<f64>() < params.crossover {
                    let b = tournament(parents, params.tournament, rng);
                    a.crossover(b, rng)
                } else {
                    a.clone()
                };
                c.mutate(params.mutation, rng);
                children.push(c);
            }
            pops[p] = elites.iter().map(|e| e.0.clone()).chain(children.iter().cloned()).collect();
            let opp: Vec<BehaviourRef> = scored[1 - p].iter().map(|g| g.0.behaviour()).collect();
            let f = evaluate(game, &children, &opp, p, params, &probes, rng);
            // Elites keep their recorded fitness, which makes best-of-pool monotone.
            next[p] = elites.into_iter().chain(children.into_iter().zip(f)).collect();
            sort_desc(&mut next[p]);
        }
        scored = next;
        record(&scored, &mut trace);
    }
    Ok((scored, trace, probes))
}

/// Keeps the fittest representative of each behaviourally distinct class.
pub(crate) fn distinct<G: Genome>(sorted: &[(G, f64)], probes: &[History], player: usize) -> Vec<G> {
    let mut out: Vec<(G, BehaviourRef)> = Vec::new();
    for (g, _) in sorted {
        let b = g.behaviour();
        if out.iter().all(|(_, c)| behaviour_distance(b.as_ref(), c.as_ref(), probes, player) > 0.0) {
            out.push((g.clone(), b));
        }
    }
    out.into_iter().map(|x| x.0).collect()
}
