//! Automatic prior beliefs over a hypothesised type set.
//!
//! Value priors score each type by the payoffs obtained when the planner
//! knows it, raised to a booster exponent. LP priors choose the distribution
//! minimising the worst expected loss from planning against the wrong type.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behaviours::{Behaviour, BehaviourRef};
use crate::error::{Error, Result};
use crate::planner::argmax_set;
use crate::rng::StreamRng;
use crate::sbg::{Game, History};

pub mod lp;

pub use lp::{solve_lp, Lp, LpOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// The planner's own payoff.
    Utility,
    /// The other player's payoff.
    Stackelberg,
    /// Sum of both payoffs.
    Welfare,
    /// Product of both payoffs.
    Fairness,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Utility, Metric::Stackelberg, Metric::Welfare, Metric::Fairness];

    /// Applies the metric to `[planner payoff, other payoff]`.
    pub fn apply(self, u: [f64; 2]) -> f64 {
        match self {
            Metric::Utility => u[0],
            Metric::Stackelberg => u[1],
            Metric::Welfare => u[0] + u[1],
            Metric::Fairness => u[0] * u[1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Utility => "utility",
            Metric::Stackelberg => "stackelberg",
            Metric::Welfare => "welfare",
            Metric::Fairness => "fairness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "metric")]
pub enum PriorKind {
    Uniform,
    Random,
    Value(Metric),
    Lp(Metric),
}

impl PriorKind {
    pub fn all() -> Vec<PriorKind> {
        let mut v = vec![PriorKind::Uniform, PriorKind::Random];
        v.extend(Metric::ALL.iter().map(|m| PriorKind::Value(*m)));
        v.extend(Metric::ALL.iter().map(|m| PriorKind::Lp(*m)));
        v
    }

    pub fn name(self) -> String {
        match self {
            PriorKind::Uniform => "uniform".into(),
            PriorKind::Random => "random".into(),
            PriorKind::Value(m) => m.name().into(),
            PriorKind::Lp(m) => format!("lp-{}", m.name()),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        PriorKind::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown prior method {s:?}")))
    }

    pub fn needs_cross_valuations(self) -> bool {
        matches!(self, PriorKind::Lp(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub horizon: usize,
    pub booster: f64,
    /// Lower bound on every LP prior probability.
    pub floor: f64,
    /// Seeds the random prior's choice of down-weighted types.
    pub seed: u64,
    pub node_budget: usize,
}

impl PriorSpec {
    pub fn new(kind: PriorKind) -> Self {
        PriorSpec { kind, horizon: 5, booster: 10.0, floor: 1e-4, seed: 0, node_budget: 5_000_000 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.booster < 1.0 || self.floor <= 0.0 {
            return Err(Error::config("prior needs horizon >= 1, booster >= 1 and a positive floor"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorResult {
    pub probs: Vec<f64>,
    /// Set when the method could not produce a distribution and the uniform
    /// prior was returned instead.
    pub fallback: bool,
}

/// Exact values of the believed-type plan, memoised by history.
struct BelievedValues<'a> {
    game: &'a Game,
    believed: &'a dyn Behaviour,
    player: usize,
    other: usize,
    end: usize,
    memo: HashMap<History, Vec<f64>>,
    nodes: usize,
    budget: usize,
}

impl BelievedValues<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    /// Value of each planner action with `end - h.t()` steps left, assuming
    /// the other player is the believed type.
    fn action_values(&mut self, h: &mut History) -> Result<Vec<f64>> {
        if let Some(v) = self.memo.get(h) {
            return Ok(v.clone());
        }
        self.tick()?;
        let g = self.game;
        let s = h.current_state();
        let left = self.end - h.t();
        let dist = self.believed.distribution(h, self.other);
        let mut out = vec![0.0; g.num_actions(self.player)];
        for (ai, slot) in out.iter_mut().enumerate() {
            for (aj, &pj) in dist.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                let mut joint = vec![0; 2];
                joint[self.player] = ai;
                joint[self.other] = aj;
                let u = g.payoff(s, &joint)[self.player];
                for &(next, pt) in g.transition(s, &joint) {
                    if pt == 0.0 {
                        continue;
                    }
                    let mut future = 0.0;
                    if left > 1 && !g.is_terminal(next) {
                        h.push(joint.clone(), next);
                        let v = self.action_values(h);
                        h.pop();
                        future = v?.into_iter().fold(f64::NEG_INFINITY, f64::max);
                    }
                    *slot += pj * pt * (u + future);
                }
            }
        }
        self.memo.insert(h.clone(), out.clone());
        Ok(out)
    }
}

fn realised(bv: &mut BelievedValues, actual: &dyn Behaviour, h: &mut History) -> Result<[f64; 2]> {
    let g = bv.game;
    let s = h.current_state();
    if h.t() >= bv.end || g.is_terminal(s) {
        return Ok([0.0; 2]);
    }
    bv.tick()?;
    let chosen = argmax_set(&bv.action_values(h)?, 1e-9);
    let dist = actual.distribution(h, bv.other);
    let mut out = [0.0; 2];
    for &ai in &chosen {
        for (aj, &pj) in dist.iter().enumerate() {
            if pj == 0.0 {
                continue;
            }
            let mut joint = vec![0; 2];
            joint[bv.player] = ai;
            joint[bv.other] = aj;
            let u = g.payoff(s, &joint);
            let w = pj / chosen.len() as f64;
            for &(next, pt) in g.transition(s, &joint) {
                if pt == 0.0 {
                    continue;
                }
                h.push(joint.clone(), next);
                let rest = realised(bv, actual, h);
                h.pop();
                let rest = rest?;
                out[0] += w * pt * (u[bv.player] + rest[0]);
                out[1] += w * pt * (u[bv.other] + rest[1]);
            }
        }
    }
    Ok(out)
}

fn check_two_player(game: &Game, player: usize) -> Result<usize> {
    if game.num_players() != 2 || player > 1 {
        return Err(Error::config("priors are defined for two-player games"));
    }
    Ok(1 - player)
}

/// Expected cumulative `[planner, other]` payoffs over `horizon` steps when
/// the other player is `actual` and the planner plans optimally against
/// `believed`, splitting uniformly over tied actions.
pub fn valuation(
    game: &Game,
    actual: &dyn Behaviour,
    believed: &dyn Behaviour,
    horizon: usize,
    player: usize,
    node_budget: usize,
) -> Result<[f64; 2]> {
    let other = check_two_player(game, player)?;
    let mut bv = BelievedValues { game, believed, player, other, end: horizon, memo: HashMap::new(), nodes: 0, budget: node_budget };
    realised(&mut bv, actual, &mut History::new(game.initial_state()))
}

/// `m[j][k]` = valuation with actual type `j` and believed type `k`. With
/// `diagonal_only` the off-diagonal entries are left at zero.
pub fn valuation_matrix(
    game: &Game,
    types: &[BehaviourRef],
    horizon: usize,
    player: usize,
    node_budget: usize,
    diagonal_only: bool,
) -> Result<Vec<Vec<[f64; 2]>>> {
    let other = check_two_player(game, player)?;
    let n = types.len();
    let columns: Vec<Vec<[f64; 2]>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut bv = BelievedValues {
                game,
                believed: types[k].as_ref(),
                player,
                other,
                end: horizon,
                memo: HashMap::new(),
                nodes: 0,
                budget: node_budget,
            };
            (0..n)
                .map(|j| {
                    if diagonal_only && j != k {
                        return Ok([0.0; 2]);
                    }
                    realised(&mut bv, types[j].as_ref(), &mut History::new(game.initial_state()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..n).map(|j| (0..n).map(|k| columns[k][j]).collect()).collect())
}

/// Loss of planning against type `k` when the truth is type `j`, measured
/// by `metric`.
pub fn loss_matrix(metric: Metric, vals: &[Vec<[f64; 2]>]) -> Vec<Vec<f64>> {
    vals.iter()
        .enumerate()
        .map(|(j, row)| {
            let best = metric.apply(row[j]);
            row.iter().map(|u| best - metric.apply(*u)).collect()
        })
        .collect()
}

pub fn uniform_prior(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// A seeded random half of the types (rounded down) gets `1e-4`, the rest
/// share the remaining mass.
pub fn random_prior(n: usize, seed: u64) -> Vec<f64> {
    let low = n / 2;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut StreamRng::seed_from_u64(seed));
    let high = (1.0 - low as f64 * 1e-4) / (n - low) as f64;
    let mut p = vec![high; n];
    for &i in &idx[..low] {
        p[i] = 1e-4;
    }
    p
}

/// Normalised `psi^b`. Negative scores are rejected.
pub fn value_prior(psi: &[f64], booster: f64) -> Result<PriorResult> {
    if psi.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::Domain(format!("value prior scores must be non-negative, got {psi:?}")));
    }
    let top = psi.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(PriorResult { probs: uniform_prior(psi.len()), fallback: true });
    }
    let w: Vec<f64> = psi.iter().map(|x| (x / top).powf(booster)).collect();
    let z: f64 = w.iter().sum();
    Ok(PriorResult { probs: w.iter().map(|x| x / z).collect(), fallback: false })
}

/// Solves `min l` over `(l, p)` with `A p <= l` row-wise, `sum p = 1` and
/// `p >= floor`. Returns the uniform prior, flagged, if the program fails.
pub fn lp_prior(loss: &[Vec<f64>], floor: f64) -> PriorResult {
    let n = loss.len();
    let mut c = vec![0.0; n + 1];
    c[0] = 1.0;
    let a_ub: Vec<Vec<f64>> = loss.iter().map(|row| std::iter::once(-1.0).chain(row.iter().copied()).collect()).collect();
    let mut sum = vec![1.0; n + 1];
    sum[0] = 0.0;
    let lower: Vec<Option<f64>> = std::iter::once(None).chain(std::iter::repeat_n(Some(floor), n)).collect();
    let prog = Lp { c, b_ub: vec![0.0; n], a_ub, a_eq: vec![sum], b_eq: vec![1.0], lower };
    match solve_lp(&prog) {
        LpOutcome::Optimal { x, .. } => {
            let p: Vec<f64> = x[1..].iter().map(|v| v.max(floor)).collect();
            let z: f64 = p.iter().sum();
            PriorResult { probs: p.iter().map(|v| v / z).collect(), fallback: false }
        }
        other => {
            log::warn!("LP prior failed ({other:?}); using the uniform prior");
            PriorResult { probs: uniform_prior(n), fallback: true }
        }
    }
}

/// Prior over `types`, the hypothesised types of the player other than
/// `player`.
pub fn compute_prior(spec: &PriorSpec, game: &Game, types: &[BehaviourRef], player: usize) -> Result<PriorResult> {
    spec.validate()?;
    let n = types.len();
    if n == 0 {
        return Err(Error::config("prior over an empty type set"));
    }
    let vals = match spec.kind {
        PriorKind::Uniform | PriorKind::Random => None,
        k => Some(valuation_matrix(game, types, spec.horizon, player, spec.node_budget, !k.needs_cross_valuations())?),
    };
    prior_from_valuations(spec, n, vals.as_deref())
}

/// As [`compute_prior`] with valuations computed beforehand, so that several
/// methods can share one valuation matrix.
pub fn prior_from_valuations(spec: &PriorSpec, n: usize, vals: Option<&[Vec<[f64; 2]>]>) -> Result<PriorResult> {
    let need = || vals.ok_or_else(|| Error::config("value and LP priors need valuations"));
    match spec.kind {
        PriorKind::Uniform => Ok(PriorResult { probs: uniform_prior(n), fallback: false }),
        PriorKind::Random => Ok(PriorResult { probs: random_prior(n, spec.seed), fallback: false }),
        PriorKind::Value(m) => {
            let v = need()?;
            let psi: Vec<f64> = (0..n).map(|j| m.apply(v[j][j])).collect();
            value_prior(&psi, spec.booster)
        }
        PriorKind::Lp(m) => {
            if n == 1 {
                return Ok(PriorResult { probs: vec![1.0], fallback: false });
            }
            Ok(lp_prior(&loss_matrix(m, need()?), spec.floor))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviours::{make_lft_pool, default_targets, Constant, LambdaTrigger, RandomBehaviour};
    use crate::beliefs::{BeliefState, PosteriorMode};
    use crate::planner::{plan, PlannerConfig};
    use std::sync::Arc;

    fn pd() -> Game {
        Game::bimatrix(&[vec![3.0, 1.0], vec![4.0, 2.0]], &[vec![3.0, 4.0], vec![1.0, 2.0]]).unwrap()
    }

    /// Real process rolled out with the general planner at every node.
    fn planner_valuation(g: &Game, actual: &BehaviourRef, believed: &BehaviourRef, h: &mut History, left: usize) -> [f64; 2] {
        if left == 0 {
            return [0.0; 2];
        }
        let bs = BeliefState::uniform(PosteriorMode::Product, 1, vec![believed.clone()]).unwrap();
        let p = plan(g, &PlannerConfig::depth_limited(left), 0, &bs, h).unwrap();
        let mut out = [0.0; 2];
        for (ai, pi) in p.policy.iter().enumerate() {
            for (aj, pj) in actual.distribution(h, 1).iter().enumerate() {
                if pi * pj == 0.0 {
                    continue;
                }
                let u = g.payoff(0, &[ai, aj]).to_vec();
                h.push(vec![ai, aj], 0);
                let r = planner_valuation(g, actual, believed, h, left - 1);
                h.pop();
                out[0] += pi * pj * (u[0] + r[0]);
                out[1] += pi * pj * (u[1] + r[1]);
            }
        }
        out
    }

    #[test]
    fn constant_game_accumulates() {
        let g = Game::bimatrix(&vec![vec![2.5; 2]; 2], &vec![vec![1.0; 2]; 2]).unwrap();
        let t: BehaviourRef = Arc::new(RandomBehaviour::new(2, 3));
        let v = valuation(&g, t.as_ref(), t.as_ref(), 4, 0, 1_000_000).unwrap();
        assert!((v[0] - 10.0).abs() < 1e-12 && (v[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn one_step_best_response() {
        let g = pd();
        let col1 = Constant::always(2, 0);
        assert_eq!(valuation(&g, &col1, &col1, 1, 0, 1000).unwrap()[0], 4.0);
    }

    #[test]
    fn matches_planner_rollout() {
        let g = pd();
        let types: Vec<BehaviourRef> = vec![
            Arc::new(LambdaTrigger { lambda: 1.0 }),
            Arc::new(LambdaTrigger { lambda: 0.4 }),
            Arc::new(RandomBehaviour::new(2, 9)),
            Arc::new(Constant::new(vec![0.3, 0.7])),
        ];
        let m = valuation_matrix(&g, &types, 4, 0, 10_000_000, false).unwrap();
        for j in 0..types.len() {
            for k in 0..types.len() {
                let o = planner_valuation(&g, &types[j], &types[k], &mut History::new(0), 4);
                for c in 0..2 {
                    assert!((m[j][k][c] - o[c]).abs() < 1e-9, "{j} {k}: {:?} vs {o:?}", m[j][k]);
                }
            }
        }
    }

    #[test]
    fn budget_reported() {
        let t = RandomBehaviour::new(2, 1);
        assert!(matches!(valuation(&pd(), &t, &t, 5, 0, 10), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn uniform_and_random_shapes() {
        assert_eq!(uniform_prior(10), vec![0.1; 10]);
        let p = random_prior(10, 4);
        assert_eq!(p.iter().filter(|x| **x == 1e-4).count(), 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(random_prior(10, 4), p);
        assert_eq!(random_prior(1, 4), vec![1.0]);
        let odd = random_prior(5, 1);
        assert_eq!(odd.iter().filter(|x| **x == 1e-4).count(), 2);
    }

    #[test]
    fn booster_behaviour() {
        assert_eq!(value_prior(&[3.0; 4], 10.0).unwrap().probs, vec![0.25; 4]);
        let a = value_prior(&[2.0, 1.0], 1.0).unwrap().probs;
        let b = value_prior(&[2.0, 1.0], 10.0).unwrap().probs;
        assert!(a[0] > a[1] && b[0] / b[1] > a[0] / a[1]);
        assert!(matches!(value_prior(&[-1.0, 1.0], 10.0), Err(Error::Domain(_))));
    }

    #[test]
    fn lp_prior_is_full_support_distribution() {
        let loss = vec![vec![0.0, 3.0, 1.0], vec![2.0, 0.0, 2.0], vec![1.0, 1.0, 0.0]];
        let r = lp_prior(&loss, 1e-4);
        assert!(!r.fallback);
        assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(r.probs.iter().all(|p| *p >= 1e-4 - 1e-12));
        // No feasible point can have a smaller worst-row loss than the solution.
        let worst = |p: &[f64]| loss.iter().map(|r| r.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()).fold(f64::MIN, f64::max);
        assert!(worst(&r.probs) <= worst(&uniform_prior(3)) + 1e-9);
    }

    #[test]
    fn all_methods_on_lft_pool() {
        let g = pd();
        let pool = make_lft_pool(&g, &default_targets(2, 2)).unwrap();
        let types: Vec<BehaviourRef> = pool.into_iter().take(10).collect();
        let vals = valuation_matrix(&g, &types, 5, 0, 10_000_000, false).unwrap();
        for kind in PriorKind::all() {
            let r = prior_from_valuations(&PriorSpec::new(kind).with_seed(3), types.len(), Some(&vals)).unwrap();
            assert_eq!(r.probs.len(), 10);
            assert!((r.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{kind:?}");
            assert!(r.probs.iter().all(|p| *p > 0.0), "{kind:?}: {:?}", r.probs);
        }
        let util = prior_from_valuations(&PriorSpec::new(PriorKind::Value(Metric::Utility)), 10, Some(&vals)).unwrap();
        let best_u = (0..10).map(|j| vals[j][j][0]).fold(f64::MIN, f64::max);
        let modal = crate::behaviours::argmax(&util.probs);
        assert_eq!(vals[modal][modal][0], best_u);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PriorKind::all() {
            assert_eq!(PriorKind::parse(&k.name()).unwrap(), k);
        }
        assert_eq!(PriorKind::all().len(), 10);
    }
}
