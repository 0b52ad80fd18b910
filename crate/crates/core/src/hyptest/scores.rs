//! Score functions and the weighted test statistic, in batch form.
//!
//! `dists[τ]` is the hypothesised distribution at step τ of the real
//! history; every action vector is scored against the same distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sbg::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Score {
    /// Probability of the action relative to the modal probability.
    Z1,
    /// One minus the expected absolute probability gap.
    Z2,
    /// Overlap of the empirical frequencies with the mean hypothesised
    /// distribution.
    Z3,
}

impl Score {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" | "z1" => Ok(Score::Z1),
            "2" | "z2" => Ok(Score::Z2),
            "3" | "z3" => Ok(Score::Z3),
            _ => Err(Error::config(format!("unknown score {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    /// Weight 1 on the first score with the largest gap between the observed
    /// and the hypothesis-sampled vector; applied to every pair.
    TrueMax,
    TrueMin,
    /// As `TrueMax`, with the score chosen separately for each pair.
    Max,
    Min,
}

impl WeightScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WeightScheme::Uniform),
            "truemax" => Ok(WeightScheme::TrueMax),
            "truemin" => Ok(WeightScheme::TrueMin),
            "max" => Ok(WeightScheme::Max),
            "min" => Ok(WeightScheme::Min),
            _ => Err(Error::config(format!("unknown weight scheme {s:?}"))),
        }
    }
}

/// Per-step contribution to z1.
pub fn z1_term(dist: &[f64], a: Action) -> f64 {
    let top = dist.iter().cloned().fold(0.0, f64::max);
    dist[a] / top
}

/// Per-step contribution to z2.
pub fn z2_term(dist: &[f64], a: Action) -> f64 {
    1.0 - dist.iter().map(|p| p * (dist[a] - p).abs()).sum::<f64>()
}

/// z3 from action counts and summed hypothesised probabilities over `t`
/// steps.
pub fn z3_from(counts: &[f64], prob_sums: &[f64], t: usize) -> f64 {
    let t = t as f64;
    counts.iter().zip(prob_sums).map(|(c, p)| (c / t).min(p / t)).sum()
}

pub fn score_z1(actions: &[Action], dists: &[Vec<f64>]) -> f64 {
    actions.iter().zip(dists).map(|(a, d)| z1_term(d, *a)).sum::<f64>() / actions.len() as f64
}

pub fn score_z2(actions: &[Action], dists: &[Vec<f64>]) -> f64 {
    actions.iter().zip(dists).map(|(a, d)| z2_term(d, *a)).sum::<f64>() / actions.len() as f64
}

pub fn score_z3(actions: &[Action], dists: &[Vec<f64>]) -> f64 {
    let n = dists[0].len();
    let mut counts = vec![0.0; n];
    let mut sums = vec![0.0; n];
    for (a, d) in actions.iter().zip(dists) {
        counts[*a] += 1.0;
        for (s, p) in sums.iter_mut().zip(d) {
            *s += p;
        }
    }
    z3_from(&counts, &sums, actions.len())
}

pub fn score(kind: Score, actions: &[Action], dists: &[Vec<f64>]) -> f64 {
    match kind {
        Score::Z1 => score_z1(actions, dists),
        Score::Z2 => score_z2(actions, dists),
        Score::Z3 => score_z3(actions, dists),
    }
}

/// Index of the first score whose absolute gap is largest (`max`) or
/// smallest.
pub fn pick(gaps: &[f64], max: bool) -> usize {
    let mut best = 0;
    for (k, g) in gaps.iter().enumerate() {
        let (g, b) = (g.abs(), gaps[best].abs());
        if (max && g > b) || (!max && g < b) {
            best = k;
        }
    }
    best
}

/// Weights for one step. `pair` holds the per-score gaps of the pair being
/// accumulated and `reference` those of the observed pair.
pub fn weights(scheme: WeightScheme, pair: &[f64], reference: &[f64]) -> Vec<f64> {
    let k = pair.len();
    let one_hot = |i: usize| {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        w
    };
    match scheme {
        WeightScheme::Uniform => vec![1.0 / k as f64; k],
        WeightScheme::TrueMax => one_hot(pick(reference, true)),
        WeightScheme::TrueMin => one_hot(pick(reference, false)),
        WeightScheme::Max => one_hot(pick(pair, true)),
        WeightScheme::Min => one_hot(pick(pair, false)),
    }
}

/// Weighted statistic averaged over all prefixes, recomputed from scratch.
/// `reference` is the observed pair used by the `true*` schemes; it defaults
/// to `(x, y)`.
pub fn test_statistic(
    x: &[Action],
    y: &[Action],
    dists: &[Vec<f64>],
    scores: &[Score],
    scheme: WeightScheme,
    reference: Option<(&[Action], &[Action])>,
) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::config("at least one score function is required"));
    }
    if x.len() != y.len() || x.is_empty() || dists.len() < x.len() {
        return Err(Error::config("action vectors must be non-empty and of equal length"));
    }
    let (rx, ry) = reference.unwrap_or((x, y));
    let t = x.len();
    let mut total = 0.0;
    for tau in 1..=t {
        let d = &dists[..tau];
        let gaps: Vec<f64> = scores.iter().map(|s| score(*s, &x[..tau], d) - score(*s, &y[..tau], d)).collect();
        let rgaps: Vec<f64> = scores.iter().map(|s| score(*s, &rx[..tau], d) - score(*s, &ry[..tau], d)).collect();
        let w = weights(scheme, &gaps, &rgaps);
        total += w.iter().zip(&gaps).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total / t as f64)
}
