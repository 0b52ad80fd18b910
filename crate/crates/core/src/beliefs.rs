//! Posterior beliefs over hypothesised types and their convergence diagnostics.

use serde::{Deserialize, Serialize};

use crate::behaviours::BehaviourRef;
use crate::error::{Error, Result};
use crate::sbg::{Action, History};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorMode {
    /// Running product of action likelihoods, kept in log space.
    Product,
    /// Running sum of action likelihoods.
    Sum,
    /// Running sum over time of per-tuple likelihood products.
    Correlated,
}

/// Normalised posterior. When `degenerate` is set the normaliser was zero and
/// the probabilities hold the prior instead; what to do about it is the
/// caller's decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub marginals: Vec<Vec<f64>>,
    /// Joint distribution over type tuples in mixed-radix order, opponent 0
    /// most significant. Present in correlated mode.
    pub joint: Option<Vec<f64>>,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct BeliefState {
    mode: PosteriorMode,
    opponents: Vec<usize>,
    types: Vec<Vec<BehaviourRef>>,
    priors: Vec<Vec<f64>>,
    joint_prior: Vec<f64>,
    acc: Vec<Vec<f64>>,
    joint_acc: Vec<f64>,
    t: usize,
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() || p.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(Error::config(format!("{what} must be a non-empty non-negative vector")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("{what} sums to {s}")));
    }
    Ok(())
}

impl BeliefState {
    /// `types[k]` and `priors[k]` describe the player `opponents[k]`.
    pub fn new(
        mode: PosteriorMode,
        opponents: Vec<usize>,
        types: Vec<Vec<BehaviourRef>>,
        priors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if opponents.len() != types.len() || types.len() != priors.len() || types.is_empty() {
            return Err(Error::config("one type list and prior per opponent"));
        }
        for (t, p) in types.iter().zip(&priors) {
            if t.len() != p.len() {
                return Err(Error::config("prior length differs from type count"));
            }
            check_distribution(p, "prior")?;
        }
        let sizes: Vec<usize> = types.iter().map(|t| t.len()).collect();
        let tuples: usize = sizes.iter().product();
        let mut joint_prior = vec![1.0; tuples];
        for (idx, jp) in joint_prior.iter_mut().enumerate() {
            for (k, &ki) in decode_tuple(idx, &sizes).iter().enumerate() {
                *jp *= priors[k][ki];
            }
        }
        let init = match mode {
            PosteriorMode::Product | PosteriorMode::Sum => 0.0,
            PosteriorMode::Correlated => 0.0,
        };
        Ok(BeliefState {
            mode,
            opponents,
            acc: sizes.iter().map(|n| vec![init; *n]).collect(),
            joint_acc: if mode == PosteriorMode::Correlated { vec![0.0; tuples] } else { Vec::new() },
            types,
            priors,
            joint_prior,
            t: 0,
        })
    }

    /// Single opponent with a uniform prior.
    pub fn uniform(mode: PosteriorMode, opponent: usize, types: Vec<BehaviourRef>) -> Result<Self> {
        let n = types.len();
        BeliefState::new(mode, vec![opponent], vec![types], vec![vec![1.0 / n as f64; n]])
    }

    /// Replaces the product-of-priors default for the correlated posterior.
    pub fn with_joint_prior(mut self, prior: Vec<f64>) -> Result<Self> {
        if prior.len() != self.joint_prior.len() {
            return Err(Error::config("joint prior length differs from tuple count"));
        }
        check_distribution(&prior, "joint prior")?;
        self.joint_prior = prior;
        Ok(self)
    }

    pub fn mode(&self) -> PosteriorMode {
        self.mode
    }

    pub fn opponents(&self) -> &[usize] {
        &self.opponents
    }

    pub fn types(&self) -> &[Vec<BehaviourRef>] {
        &self.types
    }

    pub fn priors(&self) -> &[Vec<f64>] {
        &self.priors
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.types.iter().map(|t| t.len()).collect()
    }

    /// Likelihood accumulators; log-likelihoods in product mode.
    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.acc
    }

    pub fn joint_accumulators(&self) -> &[f64] {
        &self.joint_acc
    }

    /// `probs[k][m]` = probability that hypothesised type m of opponent k
    /// plays its component of `joint` after history `h`.
    pub fn step_probs(&self, h: &History, joint: &[Action]) -> Vec<Vec<f64>> {
        self.opponents
            .iter()
            .zip(&self.types)
            .map(|(&j, ts)| ts.iter().map(|th| th.prob(h, j, joint[j])).collect())
            .collect()
    }

    /// Folds in one observed joint action taken after history `h`.
    pub fn update(&mut self, h: &History, joint: &[Action]) {
        let probs = self.step_probs(h, joint);
        self.apply(&probs);
    }

    /// Folds in precomputed step probabilities, as returned by `step_probs`.
    pub fn apply(&mut self, probs: &[Vec<f64>]) {
        match self.mode {
            PosteriorMode::Product => {
                for (acc, p) in self.acc.iter_mut().zip(probs) {
                    for (a, x) in acc.iter_mut().zip(p) {
                        *a += x.ln();
                    }
                }
            }
            PosteriorMode::Sum => {
                for (acc, p) in self.acc.iter_mut().zip(probs) {
                    for (a, x) in acc.iter_mut().zip(p) {
                        *a += x;
                    }
                }
            }
            PosteriorMode::Correlated => {
                let sizes = self.sizes();
                for (idx, a) in self.joint_acc.iter_mut().enumerate() {
                    let mut prod = 1.0;
                    let mut rem = idx;
                    for k in (0..sizes.len()).rev() {
                        prod *= probs[k][rem % sizes[k]];
                        rem /= sizes[k];
                    }
                    *a += prod;
                }
            }
        }
        self.t += 1;
    }

    pub fn posterior(&self) -> Posterior {
        match self.mode {
            PosteriorMode::Product => {
                if self.t == 0 {
                    return Posterior { marginals: self.priors.clone(), joint: None, degenerate: false };
                }
                let mut degenerate = false;
                let marginals = self
                    .acc
                    .iter()
                    .zip(&self.priors)
                    .map(|(acc, prior)| {
                        let logs: Vec<f64> = acc.iter().zip(prior).map(|(l, p)| l + p.ln()).collect();
                        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        if m == f64::NEG_INFINITY {
                            degenerate = true;
                            return prior.clone();
                        }
                        let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
                        let z: f64 = w.iter().sum();
                        w.iter().map(|x| x / z).collect()
                    })
                    .collect();
                Posterior { marginals, joint: None, degenerate }
            }
            PosteriorMode::Sum => {
                if self.t == 0 {
                    return Posterior { marginals: self.priors.clone(), joint: None, degenerate: false };
                }
                let mut degenerate = false;
                let marginals = self
                    .acc
                    .iter()
                    .zip(&self.priors)
                    .map(|(acc, prior)| {
                        let w: Vec<f64> = acc.iter().zip(prior).map(|(l, p)| l * p).collect();
                        let z: f64 = w.iter().sum();
                        if z <= 0.0 {
                            degenerate = true;
                            return prior.clone();
                        }
                        w.iter().map(|x| x / z).collect()
                    })
                    .collect();
                Posterior { marginals, joint: None, degenerate }
            }
            PosteriorMode::Correlated => {
                let (joint, degenerate) = if self.t == 0 {
                    (self.joint_prior.clone(), false)
                } else {
                    let w: Vec<f64> = self.joint_acc.iter().zip(&self.joint_prior).map(|(l, p)| l * p).collect();
                    let z: f64 = w.iter().sum();
                    if z <= 0.0 {
                        (self.joint_prior.clone(), true)
                    } else {
                        (w.iter().map(|x| x / z).collect(), false)
                    }
                };
                let sizes = self.sizes();
                let mut marginals: Vec<Vec<f64>> = sizes.iter().map(|n| vec![0.0; *n]).collect();
                for (idx, p) in joint.iter().enumerate() {
                    for (k, ki) in decode_tuple(idx, &sizes).into_iter().enumerate() {
                        marginals[k][ki] += p;
                    }
                }
                Posterior { marginals, joint: Some(joint), degenerate }
            }
        }
    }

    /// Posterior over type tuples: the product of marginals outside correlated
    /// mode. Zero-probability tuples are omitted.
    pub fn tuple_weights(&self) -> Vec<(Vec<usize>, f64)> {
        let post = self.posterior();
        let sizes = self.sizes();
        let total: usize = sizes.iter().product();
        (0..total)
            .filter_map(|idx| {
                let tuple = decode_tuple(idx, &sizes);
                let w = match &post.joint {
                    Some(j) => j[idx],
                    None => tuple.iter().enumerate().map(|(k, ki)| post.marginals[k][*ki]).product(),
                };
                (w > 0.0).then_some((tuple, w))
            })
            .collect()
    }

    /// Posterior-weighted prediction of opponent k's next action.
    pub fn predictive(&self, h: &History, k: usize) -> Vec<f64> {
        let post = self.posterior();
        let j = self.opponents[k];
        let n = self.types[k][0].num_actions();
        let mut out = vec![0.0; n];
        for (th, w) in self.types[k].iter().zip(&post.marginals[k]) {
            if *w > 0.0 {
                for (o, p) in out.iter_mut().zip(th.distribution(h, j)) {
                    *o += w * p;
                }
            }
        }
        out
    }
}

/// Mixed-radix decoding of a tuple index, first position most significant.
pub fn decode_tuple(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    let mut t = vec![0; sizes.len()];
    for k in (0..sizes.len()).rev() {
        t[k] = idx % sizes[k];
        idx /= sizes[k];
    }
    t
}

/// Average overlap of player `j` over the whole history.
pub fn average_overlap(h: &History, j: usize, types: &[BehaviourRef]) -> f64 {
    let t = h.t();
    if t == 0 || types.is_empty() {
        return 0.0;
    }
    let n = types.len() as f64;
    let mut total = 0.0;
    for tau in 0..t {
        let prefix = h.prefix(tau);
        let a = h.action(tau)[j];
        let probs: Vec<f64> = types.iter().map(|th| th.prob(&prefix, j, a)).collect();
        if probs.iter().filter(|p| **p > 0.0).count() >= 2 {
            total += probs.iter().sum::<f64>() / n;
        }
    }
    total / t as f64
}

/// Average stochasticity of player `j` over the whole history.
pub fn average_stochasticity(h: &History, j: usize, types: &[BehaviourRef]) -> f64 {
    let t = h.t();
    if t == 0 || types.is_empty() {
        return 0.0;
    }
    let n = types.len() as f64;
    let mut total = 0.0;
    for tau in 0..t {
        let prefix = h.prefix(tau);
        for th in types {
            let d = th.distribution(&prefix, j);
            let m = d.len() as f64;
            // Only the modal probability enters, so tie-breaking is irrelevant.
            let top = d.iter().cloned().fold(0.0, f64::max);
            total += (1.0 - top) / (1.0 - 1.0 / m) / n;
        }
    }
    total / t as f64
}
