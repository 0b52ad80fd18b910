//! Online testing of a behavioural hypothesis against observed actions.
//!
//! Each step extends the observed vector, one vector sampled from the
//! hypothesis and N further sampled vectors. The statistic of each sampled
//! vector against the first forms the data the skew-normal test
//! distribution is fitted to; the p-value is the density of the observed
//! statistic relative to the density at the mode.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behaviours::BehaviourRef;
use crate::error::{Error, Result};
use crate::rng::sample_index;
use crate::sbg::{Action, History};

pub mod optim;
pub mod scores;
pub mod skewnormal;

pub use scores::{score_z1, score_z2, score_z3, test_statistic, Score, WeightScheme};
pub use skewnormal::{fit_skew_normal, skew_normal_mode, SkewFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypTestConfig {
    pub scores: Vec<Score>,
    pub scheme: WeightScheme,
    /// Number of additional sampled vectors.
    pub samples: usize,
    pub alpha: f64,
    pub beta_clamp: Option<f64>,
}

impl Default for HypTestConfig {
    fn default() -> Self {
        HypTestConfig {
            scores: vec![Score::Z1, Score::Z2, Score::Z3],
            scheme: WeightScheme::Uniform,
            samples: 50,
            alpha: 0.01,
            beta_clamp: None,
        }
    }
}

impl HypTestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scores.is_empty() {
            return Err(Error::config("at least one score function is required"));
        }
        if self.samples < 2 {
            return Err(Error::config("at least two sampled vectors are needed for a fit"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("significance level outside [0, 1]"));
        }
        Ok(())
    }
}

/// Incremental score state of one action vector.
#[derive(Debug, Clone, PartialEq)]
struct VectorScores {
    actions: Vec<Action>,
    z1_sum: f64,
    z2_sum: f64,
    counts: Vec<f64>,
}

impl VectorScores {
    fn new(n: usize) -> Self {
        VectorScores { actions: Vec::new(), z1_sum: 0.0, z2_sum: 0.0, counts: vec![0.0; n] }
    }

    fn push(&mut self, dist: &[f64], a: Action) {
        self.actions.push(a);
        self.z1_sum += scores::z1_term(dist, a);
        self.z2_sum += scores::z2_term(dist, a);
        self.counts[a] += 1.0;
    }

    fn current(&self, which: &[Score], prob_sums: &[f64]) -> Vec<f64> {
        let t = self.actions.len();
        which
            .iter()
            .map(|s| match s {
                Score::Z1 => self.z1_sum / t as f64,
                Score::Z2 => self.z2_sum / t as f64,
                Score::Z3 => scores::z3_from(&self.counts, prob_sums, t),
            })
            .collect()
    }
}

/// One row of the streaming trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub statistic: f64,
    pub xi: f64,
    pub omega: f64,
    pub beta: f64,
    pub mode: f64,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct HypTestState {
    cfg: HypTestConfig,
    hypothesis: BehaviourRef,
    player: usize,
    t: usize,
    prob_sums: Vec<f64>,
    observed: VectorScores,
    hat: VectorScores,
    nulls: Vec<VectorScores>,
    /// Running sums of weighted score gaps: the observed pair first, then
    /// one per sampled vector.
    pair_sums: Vec<f64>,
    fit: Option<(SkewFit, f64)>,
    next_fit: usize,
    fits: usize,
    p: f64,
}

impl HypTestState {
    pub fn new(cfg: HypTestConfig, hypothesis: BehaviourRef, player: usize) -> Result<Self> {
        cfg.validate()?;
        let n = hypothesis.num_actions();
        Ok(HypTestState {
            observed: VectorScores::new(n),
            hat: VectorScores::new(n),
            nulls: vec![VectorScores::new(n); cfg.samples],
            pair_sums: vec![0.0; cfg.samples + 1],
            prob_sums: vec![0.0; n],
            cfg,
            hypothesis,
            player,
            t: 0,
            fit: None,
            next_fit: 1,
            fits: 0,
            p: 1.0,
        })
    }

    pub fn config(&self) -> &HypTestConfig {
        &self.cfg
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn fits(&self) -> usize {
        self.fits
    }

    pub fn p_value(&self) -> f64 {
        self.p
    }

    pub fn rejected(&self) -> bool {
        self.p < self.cfg.alpha
    }

    pub fn observed_actions(&self) -> &[Action] {
        &self.observed.actions
    }

    pub fn sampled_actions(&self) -> &[Action] {
        &self.hat.actions
    }

    pub fn null_actions(&self, n: usize) -> &[Action] {
        &self.nulls[n].actions
    }

    /// Current fitted parameters and mode.
    pub fn fit(&self) -> Option<(SkewFit, f64)> {
        self.fit
    }

    /// Statistic of the observed vector against the hypothesis-sampled one.
    pub fn statistic(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.pair_sums[0] / self.t as f64
        }
    }

    /// Statistics of the sampled vectors, the data of the last fit.
    pub fn null_statistics(&self) -> Vec<f64> {
        self.pair_sums[1..].iter().map(|s| s / self.t.max(1) as f64).collect()
    }

    /// Folds in the action the other player took after `h_prev` and returns
    /// the updated p-value.
    pub fn observe<R: Rng + ?Sized>(&mut self, h_prev: &History, observed: Action, rng: &mut R) -> f64 {
        let dist = self.hypothesis.distribution(h_prev, self.player);
        self.t += 1;
        for (s, p) in self.prob_sums.iter_mut().zip(&dist) {
            *s += p;
        }
        self.observed.push(&dist, observed);
        let a_hat = sample_index(&dist, rng);
        self.hat.push(&dist, a_hat);
        for v in self.nulls.iter_mut() {
            let a = sample_index(&dist, rng);
            v.push(&dist, a);
        }

        let which = &self.cfg.scores;
        let base = self.hat.current(which, &self.prob_sums);
        let gaps_of = |v: &VectorScores| -> Vec<f64> {
            v.current(which, &self.prob_sums).iter().zip(&base).map(|(a, b)| a - b).collect()
        };
        let reference = gaps_of(&self.observed);
        let add = |slot: &mut f64, gaps: &[f64]| {
            let w = scores::weights(self.cfg.scheme, gaps, &reference);
            *slot += w.iter().zip(gaps).map(|(a, b)| a * b).sum::<f64>();
        };
        add(&mut self.pair_sums[0], &reference);
        for (n, v) in self.nulls.iter().enumerate() {
            let g = gaps_of(v);
            add(&mut self.pair_sums[n + 1], &g);
        }

        if self.t == self.next_fit {
            let data = self.null_statistics();
            let fit = fit_skew_normal(&data, self.cfg.beta_clamp);
            let mode = if fit.degenerate { fit.xi } else { skew_normal_mode(fit.xi, fit.omega, fit.beta) };
            self.fit = Some((fit, mode));
            self.fits += 1;
            self.next_fit = self.t + (self.t as f64).sqrt().floor() as usize;
        }
        let (fit, mode) = self.fit.expect("fitted at t = 1");
        self.p = skewnormal::p_value(self.statistic(), &fit, mode);
        self.p
    }

    pub fn trace_row(&self) -> TraceRow {
        let (fit, mode) = self.fit.unwrap_or((SkewFit { xi: 0.0, omega: 0.0, beta: 0.0, nll: 0.0, degenerate: true }, 0.0));
        TraceRow { t: self.t, statistic: self.statistic(), xi: fit.xi, omega: fit.omega, beta: fit.beta, mode, p: self.p }
    }
}

/// Times at which parameters are refitted, up to `t_max`.
pub fn refit_schedule(t_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = 1;
    while t <= t_max {
        out.push(t);
        t += (t as f64).sqrt().floor() as usize;
    }
    out
}

/// Hypothesised distributions along a history, for the batch scores.
pub fn hypothesis_dists(hypothesis: &BehaviourRef, h: &History, player: usize) -> Vec<Vec<f64>> {
    (0..h.t()).map(|tau| hypothesis.distribution(&h.prefix(tau), player)).collect()
}
