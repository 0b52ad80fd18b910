//! Seeded experiment drivers: prior methods on the 78 ordinal games,
//! hypothesis-test accuracy, posterior convergence traces and a bisimulation
//! suite. Every stochastic component draws from a stream derived from the
//! plan seed, and outputs carry the plan hash.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behaviours::{
    default_targets, evolve_cdt_pool, evolve_cnn_pool, make_lft_pool, BehaviourRef, Constant, Cycle, EvoParams,
    FictitiousPlay, QLearner, RandomBehaviour,
};
use crate::beliefs::{average_overlap, average_stochasticity, BeliefState, PosteriorMode};
use crate::bisim::{self, LabelledChain};
use crate::error::{Error, Result};
use crate::games78::{enumerate_games, filter_dominant_player2, slice_bounds, slice_metrics, ConflictClass, OrdinalGame};
use crate::hyptest::{HypTestConfig, HypTestState};
use crate::planner::{HbaAgent, PlannerConfig};
use crate::priors::{prior_from_valuations, valuation_matrix, PriorKind, PriorSpec};
use crate::rng::{sample_index, StreamRng, Streams};
use crate::sbg::{run_episode, Controller, Game, History, TypeDistribution, TypeKind};

pub mod emit;
pub mod stats;

pub use emit::{Format, Metadata, Record};
pub use stats::{paired_t_test, PairedT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MatrixPriors,
    HyptestRandom,
    HyptestAdaptive,
    BeliefConvergence,
    BisimSuite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Lft,
    Cdt,
    Cnn,
}

impl Generator {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lft" => Ok(Generator::Lft),
            "cdt" => Ok(Generator::Cdt),
            "cnn" => Ok(Generator::Cnn),
            _ => Err(Error::config(format!("unknown type generator {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::Lft => "lft",
            Generator::Cdt => "cdt",
            Generator::Cnn => "cnn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentKind {
    /// One of the generated types.
    Rt,
    Fp,
    Cfp,
}

impl OpponentKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rt" => Ok(OpponentKind::Rt),
            "fp" => Ok(OpponentKind::Fp),
            "cfp" => Ok(OpponentKind::Cfp),
            _ => Err(Error::config(format!("unknown opponent {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OpponentKind::Rt => "rt",
            OpponentKind::Fp => "fp",
            OpponentKind::Cfp => "cfp",
        }
    }
}

/// Everything an experiment run depends on. Counts are at scale 1 and are
/// multiplied by `scale` when the plan runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub scale: f64,
    /// Game ids to play; empty means every eligible game.
    pub games: Vec<usize>,
    /// Seeded subset of the eligible games, when set.
    pub max_games: Option<usize>,
    pub generator: Generator,
    pub priors: Vec<PriorKind>,
    pub opponents: Vec<OpponentKind>,
    pub rounds_rt: usize,
    pub rounds_fp: usize,
    pub repetitions: usize,
    pub planner_depth: usize,
    pub prior_horizon: usize,
    pub slices: usize,
    pub evo: EvoParams,
    /// Hypothesis-test processes per condition.
    pub processes: usize,
    pub steps: usize,
    pub num_actions: usize,
    pub hyptest: HypTestConfig,
    /// Processes whose full p-value trace is kept.
    pub trace_processes: usize,
    pub belief_steps: usize,
    pub belief_every: usize,
    pub rl_states: usize,
    pub rl_actions: usize,
    pub rl_steps: usize,
    pub bisim_pairs: usize,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentPlan {
            kind,
            seed,
            scale: 1.0,
            games: Vec::new(),
            max_games: None,
            generator: Generator::Lft,
            priors: PriorKind::all(),
            opponents: vec![OpponentKind::Rt, OpponentKind::Fp, OpponentKind::Cfp],
            rounds_rt: 100,
            rounds_fp: 1000,
            repetitions: 1,
            planner_depth: 2,
            prior_horizon: 5,
            slices: 10,
            evo: EvoParams { population: 20, generations: 10, ..EvoParams::default() },
            processes: 50,
            steps: 1000,
            num_actions: 2,
            hyptest: HypTestConfig::default(),
            trace_processes: 0,
            belief_steps: 5000,
            belief_every: 50,
            rl_states: 10,
            rl_actions: 4,
            rl_steps: 1500,
            bisim_pairs: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config("scale must be positive"));
        }
        if self.num_actions < 2 {
            return Err(Error::config("random behaviours need at least two actions"));
        }
        if self.slices == 0 || self.belief_every == 0 {
            return Err(Error::config("slice count and trace stride must be positive"));
        }
        if self.kind == ExperimentKind::MatrixPriors && (self.priors.is_empty() || self.opponents.is_empty()) {
            return Err(Error::config("matrix experiments need prior methods and opponents"));
        }
        self.hyptest.validate()?;
        self.evo.validate()
    }

    fn scaled(&self, n: usize) -> usize {
        ((n as f64 * self.scale).round() as usize).max(1)
    }

    /// SHA-256 of the plan's JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("plans serialise");
        hex::encode(Sha256::digest(&json))
    }

    pub fn metadata(&self) -> Metadata {
        Metadata { plan_hash: self.hash(), seed: self.seed }
    }

    fn streams(&self) -> Streams {
        Streams::new(self.seed)
    }

    /// Games for one opponent kind: player-2 dominance filtering applies to
    /// fictitious opponents.
    pub fn select_games(&self, opponent: OpponentKind) -> Vec<OrdinalGame> {
        let all = enumerate_games();
        let mut pool = match opponent {
            OpponentKind::Rt => all,
            _ => filter_dominant_player2(&all),
        };
        if !self.games.is_empty() {
            pool.retain(|g| self.games.contains(&g.id));
        }
        if let Some(k) = self.max_games {
            let mut rng = self.streams().stream("game-subset");
            pool.shuffle(&mut rng);
            pool.truncate(k);
            pool.sort_by_key(|g| g.id);
        }
        pool
    }
}

/// A work item that could not be completed, with a reason code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionRow {
    pub item: String,
    pub code: String,
    pub detail: String,
}

impl Record for ExceptionRow {
    const COLUMNS: &'static [&'static str] = &["item", "code", "detail"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub game: usize,
    pub class: String,
    pub opponent: String,
    pub generator: String,
    pub repetition: usize,
    pub prior: String,
    pub prior_fallback: bool,
    pub prior_min: f64,
    pub prior_sum: f64,
    pub true_type: usize,
    pub degenerate_steps: usize,
    pub slice: usize,
    pub start: usize,
    pub end: usize,
    pub converged_hba: bool,
    pub converged_other: bool,
    pub payoff_hba: f64,
    pub payoff_other: f64,
    pub welfare: f64,
    pub fairness: f64,
    pub nash: bool,
    pub pareto: bool,
    pub welfare_optimal: bool,
    pub fairness_optimal: bool,
}

impl Record for MatrixRow {
    const COLUMNS: &'static [&'static str] = &[
        "game",
        "class",
        "opponent",
        "generator",
        "repetition",
        "prior",
        "prior_fallback",
        "prior_min",
        "prior_sum",
        "true_type",
        "degenerate_steps",
        "slice",
        "start",
        "end",
        "converged_hba",
        "converged_other",
        "payoff_hba",
        "payoff_other",
        "welfare",
        "fairness",
        "nash",
        "pareto",
        "welfare_optimal",
        "fairness_optimal",
    ];
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixDataset {
    pub rows: Vec<MatrixRow>,
    pub exceptions: Vec<ExceptionRow>,
}

/// Play-level averages of one prior method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaySummary {
    pub payoff_hba: f64,
    pub welfare: f64,
    pub fairness: f64,
    pub converged: f64,
}

pub type PlayKey = (usize, String, usize);

impl MatrixDataset {
    /// Slice averages per play and prior method.
    pub fn summaries(&self) -> BTreeMap<PlayKey, BTreeMap<String, PlaySummary>> {
        let mut acc: BTreeMap<PlayKey, BTreeMap<String, (PlaySummary, usize)>> = BTreeMap::new();
        for r in &self.rows {
            let e = acc
                .entry((r.game, r.opponent.clone(), r.repetition))
                .or_default()
                .entry(r.prior.clone())
                .or_insert((PlaySummary { payoff_hba: 0.0, welfare: 0.0, fairness: 0.0, converged: 0.0 }, 0));
            e.0.payoff_hba += r.payoff_hba;
            e.0.welfare += r.welfare;
            e.0.fairness += r.fairness;
            e.0.converged += f64::from(u8::from(r.converged_hba && r.converged_other));
            e.1 += 1;
        }
        acc.into_iter()
            .map(|(k, m)| {
                let m = m
                    .into_iter()
                    .map(|(p, (s, n))| {
                        let n = n as f64;
                        (p, PlaySummary { payoff_hba: s.payoff_hba / n, welfare: s.welfare / n, fairness: s.fairness / n, converged: s.converged / n })
                    })
                    .collect();
                (k, m)
            })
            .collect()
    }

    /// Paired two-sided comparisons of prior `a` against `b` over the plays
    /// that ran both, one per metric.
    pub fn compare(&self, a: &str, b: &str) -> Result<Vec<(&'static str, PairedT)>> {
        let sums = self.summaries();
        let pairs: Vec<(PlaySummary, PlaySummary)> = sums.values().filter_map(|m| Some((*m.get(a)?, *m.get(b)?))).collect();
        let metric = |f: fn(&PlaySummary) -> f64| -> Result<PairedT> {
            let xa: Vec<f64> = pairs.iter().map(|(x, _)| f(x)).collect();
            let xb: Vec<f64> = pairs.iter().map(|(_, y)| f(y)).collect();
            paired_t_test(&xa, &xb)
        };
        Ok(vec![
            ("payoff_hba", metric(|s| s.payoff_hba)?),
            ("welfare", metric(|s| s.welfare)?),
            ("fairness", metric(|s| s.fairness)?),
            ("converged", metric(|s| s.converged)?),
        ])
    }
}

fn distinct(pool: Vec<BehaviourRef>) -> Vec<BehaviourRef> {
    let mut seen = std::collections::HashSet::new();
    pool.into_iter().filter(|b| seen.insert(b.id())).collect()
}

/// Generated types for player 2 of `game`.
pub fn generate_types(generator: Generator, game: &Game, evo: &EvoParams, rng: &mut StreamRng) -> Result<Vec<BehaviourRef>> {
    let pool: Vec<BehaviourRef> = match generator {
        Generator::Lft => make_lft_pool(game, &default_targets(game.num_actions(0), game.num_actions(1)))?,
        Generator::Cdt => evolve_cdt_pool(game, evo, 1, rng)?.0.into_iter().map(|t| Arc::new(t) as BehaviourRef).collect(),
        Generator::Cnn => evolve_cnn_pool(game, evo, 1, rng)?.0.into_iter().map(|t| Arc::new(t) as BehaviourRef).collect(),
    };
    Ok(distinct(pool))
}

fn class_name(c: ConflictClass) -> &'static str {
    match c {
        ConflictClass::NoConflict => "no-conflict",
        ConflictClass::Conflict => "conflict",
    }
}

/// Player 2's own payoffs, `[own][other]`.
fn column_payoffs(og: &OrdinalGame) -> Vec<Vec<f64>> {
    (0..2).map(|c| (0..2).map(|r| og.payoff(1, r, c)).collect()).collect()
}

struct PlayOutcome {
    rows: Vec<MatrixRow>,
    exceptions: Vec<ExceptionRow>,
}

fn play(plan: &ExperimentPlan, og: &OrdinalGame, opponent: OpponentKind, rep: usize, streams: &Streams) -> PlayOutcome {
    let item = format!("game={} opponent={} rep={}", og.id, opponent.name(), rep);
    let mut out = PlayOutcome { rows: Vec::new(), exceptions: Vec::new() };
    let fail = |out: &mut PlayOutcome, code: &str, detail: String| {
        log::warn!("{item}: {code}: {detail}");
        out.exceptions.push(ExceptionRow { item: item.clone(), code: code.into(), detail });
    };
    let game = og.to_game();
    let mut rng = streams.stream("types");
    let mut pool = match generate_types(plan.generator, &game, &plan.evo, &mut rng) {
        Ok(p) => p,
        Err(e) => {
            fail(&mut out, "generator-error", e.to_string());
            return out;
        }
    };
    let need = if opponent == OpponentKind::Rt { 10 } else { 9 };
    if pool.len() < need {
        fail(&mut out, "generator-short", format!("{} distinct types, {need} needed", pool.len()));
        return out;
    }
    pool.shuffle(&mut rng);
    pool.truncate(need);
    let (types, true_idx) = match opponent {
        OpponentKind::Rt => {
            let k = rng.random_range(0..need);
            (pool, k)
        }
        OpponentKind::Fp | OpponentKind::Cfp => {
            let fp: BehaviourRef = Arc::new(FictitiousPlay::new(column_payoffs(og), opponent == OpponentKind::Cfp));
            pool.push(fp);
            (pool, need)
        }
    };
    let truth = types[true_idx].clone();
    let rounds = plan.scaled(if opponent == OpponentKind::Rt { plan.rounds_rt } else { plan.rounds_fp });

    let needs_vals = plan.priors.iter().any(|k| !matches!(k, PriorKind::Uniform | PriorKind::Random));
    let cross = plan.priors.iter().any(|k| k.needs_cross_valuations());
    let budget = PriorSpec::new(PriorKind::Uniform).node_budget;
    let vals = if needs_vals {
        match valuation_matrix(&game, &types, plan.prior_horizon, 0, budget, !cross) {
            Ok(v) => Some(v),
            Err(e) => {
                fail(&mut out, "valuation-error", e.to_string());
                return out;
            }
        }
    } else {
        None
    };

    for kind in &plan.priors {
        let spec = PriorSpec { horizon: plan.prior_horizon, ..PriorSpec::new(*kind).with_seed(streams.seed("random-prior")) };
        let prior = match prior_from_valuations(&spec, types.len(), vals.as_deref()) {
            Ok(p) => p,
            Err(e) => {
                fail(&mut out, "prior-error", format!("{}: {e}", kind.name()));
                continue;
            }
        };
        if prior.fallback {
            fail(&mut out, "prior-fallback", format!("{} fell back to uniform", kind.name()));
        }
        let episode = (|| -> Result<(crate::sbg::Episode, usize)> {
            let beliefs = BeliefState::new(PosteriorMode::Product, vec![1], vec![types.clone()], vec![prior.probs.clone()])?;
            let mut agent = HbaAgent::new(game.clone(), PlannerConfig::depth_limited(plan.planner_depth), beliefs)?;
            let ep = {
                let mut ctrls = [Controller::Agent(&mut agent), Controller::Typed(vec![truth.clone()])];
                run_episode(&game, &mut ctrls, &TypeDistribution::pure(vec![0, 0]), rounds, false, &streams.child("episode", 0))?
            };
            Ok((ep, agent.degenerate_steps))
        })();
        let (ep, degenerate) = match episode {
            Ok(x) => x,
            Err(e) => {
                fail(&mut out, "play-error", format!("{}: {e}", kind.name()));
                continue;
            }
        };
        for (k, (s, e)) in slice_bounds(ep.history.t(), plan.slices).into_iter().enumerate() {
            let m = match slice_metrics(og, &ep.history, &ep.policies, s, e) {
                Ok(m) => m,
                Err(err) => {
                    fail(&mut out, "metric-error", err.to_string());
                    continue;
                }
            };
            out.rows.push(MatrixRow {
                game: og.id,
                class: class_name(og.class).into(),
                opponent: opponent.name().into(),
                generator: plan.generator.name().into(),
                repetition: rep,
                prior: kind.name(),
                prior_fallback: prior.fallback,
                prior_min: prior.probs.iter().cloned().fold(f64::INFINITY, f64::min),
                prior_sum: prior.probs.iter().sum(),
                true_type: true_idx,
                degenerate_steps: degenerate,
                slice: k,
                start: s,
                end: e,
                converged_hba: m.converged[0],
                converged_other: m.converged[1],
                payoff_hba: m.payoff[0],
                payoff_other: m.payoff[1],
                welfare: m.welfare,
                fairness: m.fairness,
                nash: m.solutions.nash,
                pareto: m.solutions.pareto,
                welfare_optimal: m.solutions.welfare,
                fairness_optimal: m.solutions.fairness,
            });
        }
    }
    out
}

/// HBA (player 1) against generated or fictitious opponents, one play per
/// (game, opponent, repetition) and prior method. All prior methods of a
/// play share its types and random streams, so comparisons are paired.
pub fn run_matrix_experiment(plan: &ExperimentPlan) -> Result<MatrixDataset> {
    plan.validate()?;
    let streams = plan.streams();
    let mut items = Vec::new();
    for &opp in &plan.opponents {
        for og in plan.select_games(opp) {
            for rep in 0..plan.scaled(plan.repetitions) {
                items.push((og.clone(), opp, rep));
            }
        }
    }
    let outcomes: Vec<PlayOutcome> = items
        .par_iter()
        .map(|(og, opp, rep)| {
            let s = streams.child(&format!("play/{}/{}", og.id, opp.name()), *rep as u64);
            play(plan, og, *opp, *rep, &s)
        })
        .collect();
    let mut ds = MatrixDataset::default();
    for o in outcomes {
        ds.rows.extend(o.rows);
        ds.exceptions.extend(o.exceptions);
    }
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyptestRow {
    pub process: usize,
    pub correct_hypothesis: bool,
    pub scores: String,
    pub scheme: String,
    pub samples: usize,
    pub steps: usize,
    pub accuracy: f64,
    pub final_p: f64,
    pub final_statistic: f64,
    /// First step with p below the significance level, or -1.
    pub first_rejection: i64,
}

impl Record for HyptestRow {
    const COLUMNS: &'static [&'static str] = &[
        "process",
        "correct_hypothesis",
        "scores",
        "scheme",
        "samples",
        "steps",
        "accuracy",
        "final_p",
        "final_statistic",
        "first_rejection",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyptestTraceRow {
    pub process: usize,
    pub t: usize,
    pub statistic: f64,
    pub xi: f64,
    pub omega: f64,
    pub beta: f64,
    pub mode: f64,
    pub p: f64,
}

impl Record for HyptestTraceRow {
    const COLUMNS: &'static [&'static str] = &["process", "t", "statistic", "xi", "omega", "beta", "mode", "p"];
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HyptestDataset {
    pub rows: Vec<HyptestRow>,
    pub traces: Vec<HyptestTraceRow>,
}

impl HyptestDataset {
    pub fn mean_accuracy(&self, correct: bool) -> f64 {
        let xs: Vec<f64> = self.rows.iter().filter(|r| r.correct_hypothesis == correct).map(|r| r.accuracy).collect();
        stats::mean(&xs)
    }
}

fn score_names(cfg: &HypTestConfig) -> String {
    cfg.scores
        .iter()
        .map(|s| match s {
            crate::hyptest::Score::Z1 => "z1",
            crate::hyptest::Score::Z2 => "z2",
            crate::hyptest::Score::Z3 => "z3",
        })
        .collect::<Vec<_>>()
        .join("+")
}

fn scheme_name(cfg: &HypTestConfig) -> String {
    serde_json::to_value(cfg.scheme).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Interaction behaviours of one hypothesis-test process: own behaviour, true
/// other behaviour and the hypothesis, plus the game they play.
type ProcessSetup = (Game, BehaviourRef, BehaviourRef, BehaviourRef);

fn random_setup(plan: &ExperimentPlan, correct: bool, rng: &mut StreamRng) -> Result<ProcessSetup> {
    let n = plan.num_actions;
    let zeros = vec![vec![0.0; n]; n];
    let game = Game::bimatrix(&zeros, &zeros)?;
    let mine: BehaviourRef = Arc::new(RandomBehaviour::new(n, rng.random()));
    let truth: BehaviourRef = Arc::new(RandomBehaviour::new(n, rng.random()));
    let hyp = if correct { truth.clone() } else { Arc::new(RandomBehaviour::new(n, rng.random())) as BehaviourRef };
    Ok((game, mine, truth, hyp))
}

fn adaptive_setup(plan: &ExperimentPlan, correct: bool, rng: &mut StreamRng) -> Result<ProcessSetup> {
    let games = enumerate_games();
    let og = &games[rng.random_range(0..games.len())];
    let game = og.to_game();
    let pool = generate_types(plan.generator, &game, &plan.evo, rng)?;
    if pool.len() < 2 {
        return Err(Error::model("generator produced fewer than two distinct types"));
    }
    let k = rng.random_range(0..pool.len());
    let truth = pool[k].clone();
    let hyp = if correct {
        truth.clone()
    } else {
        let mut m = rng.random_range(0..pool.len() - 1);
        if m >= k {
            m += 1;
        }
        pool[m].clone()
    };
    let mine: BehaviourRef = Arc::new(RandomBehaviour::new(2, rng.random()));
    Ok((game, mine, truth, hyp))
}

fn hyptest_process(plan: &ExperimentPlan, process: usize, correct: bool, streams: &Streams, steps: usize) -> Result<(HyptestRow, Vec<HyptestTraceRow>)> {
    let mut rng = streams.stream("setup");
    let (_game, mine, truth, hyp) = match plan.kind {
        ExperimentKind::HyptestAdaptive => adaptive_setup(plan, correct, &mut rng)?,
        _ => random_setup(plan, correct, &mut rng)?,
    };
    let mut act_rng = streams.stream("actions");
    let mut test_rng = streams.stream("test");
    let mut st = HypTestState::new(plan.hyptest.clone(), hyp, 1)?;
    let mut h = History::new(0);
    let mut right = 0usize;
    let mut first = -1i64;
    let mut trace = Vec::new();
    for t in 1..=steps {
        let a_i = sample_index(&mine.distribution(&h, 0), &mut act_rng);
        let a_j = sample_index(&truth.distribution(&h, 1), &mut act_rng);
        st.observe(&h, a_j, &mut test_rng);
        h.push(vec![a_i, a_j], 0);
        let rejected = st.rejected();
        if rejected != correct {
            right += 1;
        }
        if rejected && first < 0 {
            first = t as i64;
        }
        if process < plan.trace_processes {
            let r = st.trace_row();
            trace.push(HyptestTraceRow { process, t, statistic: r.statistic, xi: r.xi, omega: r.omega, beta: r.beta, mode: r.mode, p: r.p });
        }
    }
    let row = HyptestRow {
        process,
        correct_hypothesis: correct,
        scores: score_names(&plan.hyptest),
        scheme: scheme_name(&plan.hyptest),
        samples: plan.hyptest.samples,
        steps,
        accuracy: right as f64 / steps as f64,
        final_p: st.p_value(),
        final_statistic: st.statistic(),
        first_rejection: first,
    };
    Ok((row, trace))
}

/// Processes `0..P` test a correct hypothesis, `P..2P` an incorrect one.
/// Accuracy is the share of steps on which the test decided correctly:
/// keeping a correct hypothesis or rejecting an incorrect one.
pub fn run_hyptest_experiment(plan: &ExperimentPlan) -> Result<HyptestDataset> {
    plan.validate()?;
    let streams = plan.streams();
    let per = plan.scaled(plan.processes);
    let steps = plan.scaled(plan.steps);
    let results: Vec<Result<(HyptestRow, Vec<HyptestTraceRow>)>> = (0..2 * per)
        .into_par_iter()
        .map(|k| hyptest_process(plan, k, k < per, &streams.child("process", k as u64), steps))
        .collect();
    let mut ds = HyptestDataset::default();
    for r in results {
        let (row, trace) = r?;
        ds.rows.push(row);
        ds.traces.extend(trace);
    }
    Ok(ds)
}

/// Posterior-convergence scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefFixture {
    /// The other player alternates L, R; hypotheses include that cycle.
    PureCycle,
    /// Each step the other player is "always A" or "always B" with equal
    /// probability.
    DisjointMixed,
    /// The other player always plays A; hypotheses are "always A" and
    /// "uniform".
    OverlapAlwaysA,
    /// Two other players whose types are drawn jointly as (A, B) or (B, A).
    CorrelatedPair,
    /// Q-learning types in a random stochastic game, drawn each step.
    RlTypes,
}

impl BeliefFixture {
    pub const ALL: [BeliefFixture; 5] =
        [BeliefFixture::PureCycle, BeliefFixture::DisjointMixed, BeliefFixture::OverlapAlwaysA, BeliefFixture::CorrelatedPair, BeliefFixture::RlTypes];

    pub fn name(self) -> &'static str {
        match self {
            BeliefFixture::PureCycle => "pure-cycle",
            BeliefFixture::DisjointMixed => "disjoint-mixed",
            BeliefFixture::OverlapAlwaysA => "overlap-always-a",
            BeliefFixture::CorrelatedPair => "correlated-pair",
            BeliefFixture::RlTypes => "rl-types",
        }
    }
}

/// A convergence scenario: the game, the pools of every player (player 0's
/// pool holds its fixed behaviour), the true type process, the opponents
/// being modelled and the target distribution over their type tuples.
pub struct BeliefScenario {
    pub game: Game,
    pub pools: Vec<Vec<BehaviourRef>>,
    pub truth: TypeDistribution,
    pub resample: bool,
    pub opponents: Vec<usize>,
    pub target: Vec<(Vec<usize>, f64)>,
}

fn always(a: usize) -> BehaviourRef {
    Arc::new(Constant::always(2, a))
}

fn uniform2() -> BehaviourRef {
    Arc::new(Constant::new(vec![0.5, 0.5]))
}

/// Random stochastic game with `states` states and Q-learning types for
/// player 2.
pub fn random_sbg(states: usize, actions: usize, rng: &mut StreamRng) -> Result<Game> {
    let mut g = Game::new(states, 0, &[], vec![actions, actions])?;
    for s in 0..states {
        for a in 0..actions {
            for b in 0..actions {
                let k = rng.random_range(1..=states.min(3));
                let mut next: Vec<(usize, f64)> = (0..k).map(|_| (rng.random_range(0..states), rng.random::<f64>() + 0.01)).collect();
                let z: f64 = next.iter().map(|x| x.1).sum();
                next.iter_mut().for_each(|x| x.1 /= z);
                let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
                for (n, p) in next {
                    *merged.entry(n).or_insert(0.0) += p;
                }
                g.set_transition(s, &[a, b], merged.into_iter().collect())?;
                g.set_payoff(s, &[a, b], vec![rng.random(), rng.random()])?;
            }
        }
    }
    Ok(g)
}

pub fn belief_scenario(fixture: BeliefFixture, plan: &ExperimentPlan, rng: &mut StreamRng) -> Result<BeliefScenario> {
    let two = || Game::bimatrix(&vec![vec![0.0; 2]; 2], &vec![vec![0.0; 2]; 2]);
    Ok(match fixture {
        BeliefFixture::PureCycle => {
            let cycle: BehaviourRef = Arc::new(Cycle::new(vec![0, 1], 2));
            BeliefScenario {
                game: two()?,
                pools: vec![vec![uniform2()], vec![cycle, always(0), uniform2(), always(1)]],
                truth: TypeDistribution::pure(vec![0, 0]),
                resample: false,
                opponents: vec![1],
                target: vec![(vec![0], 1.0)],
            }
        }
        BeliefFixture::DisjointMixed => BeliefScenario {
            game: two()?,
            pools: vec![vec![uniform2()], vec![always(0), always(1)]],
            truth: TypeDistribution::new(vec![vec![0, 0], vec![0, 1]], vec![0.5, 0.5], TypeKind::Mixed)?,
            resample: true,
            opponents: vec![1],
            target: vec![(vec![0], 0.5), (vec![1], 0.5)],
        },
        BeliefFixture::OverlapAlwaysA => BeliefScenario {
            game: two()?,
            pools: vec![vec![uniform2()], vec![always(0), uniform2()]],
            truth: TypeDistribution::pure(vec![0, 0]),
            resample: false,
            opponents: vec![1],
            target: vec![(vec![0], 1.0)],
        },
        BeliefFixture::CorrelatedPair => BeliefScenario {
            game: Game::single_state(vec![2, 2, 2], |_| vec![0.0; 3])?,
            pools: vec![vec![uniform2()], vec![always(0), always(1)], vec![always(0), always(1)]],
            truth: TypeDistribution::new(vec![vec![0, 0, 1], vec![0, 1, 0]], vec![0.5, 0.5], TypeKind::Correlated)?,
            resample: true,
            opponents: vec![1, 2],
            target: vec![(vec![0, 1], 0.5), (vec![1, 0], 0.5)],
        },
        BeliefFixture::RlTypes => {
            let (s, a) = (plan.rl_states, plan.rl_actions);
            let game = random_sbg(s, a, rng)?;
            let learners: Vec<BehaviourRef> = (0..3)
                .map(|k| {
                    let reward = (0..s).map(|_| (0..a).map(|_| rng.random::<f64>()).collect()).collect();
                    let mut q = QLearner::new(reward, format!("rl{k}"));
                    q.eps_hold = plan.rl_steps / 2;
                    q.eps_zero_at = plan.rl_steps;
                    Arc::new(q) as BehaviourRef
                })
                .collect();
            let me: BehaviourRef = Arc::new(Constant::new(vec![1.0 / a as f64; a]));
            BeliefScenario {
                game,
                pools: vec![vec![me], learners],
                truth: TypeDistribution::new(vec![vec![0, 0], vec![0, 1]], vec![0.5, 0.5], TypeKind::Mixed)?,
                resample: true,
                opponents: vec![1],
                target: vec![(vec![0], 0.5), (vec![1], 0.5)],
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefRow {
    pub fixture: String,
    pub mode: String,
    pub t: usize,
    /// Sum of absolute differences between posterior and target over type
    /// tuples.
    pub error: f64,
    /// Posterior tuple weights as `tuple:weight` entries separated by `;`.
    pub posterior: String,
    pub degenerate: bool,
    pub overlap: f64,
    pub stochasticity: f64,
}

impl Record for BeliefRow {
    const COLUMNS: &'static [&'static str] = &["fixture", "mode", "t", "error", "posterior", "degenerate", "overlap", "stochasticity"];
}

fn mode_name(m: PosteriorMode) -> &'static str {
    match m {
        PosteriorMode::Product => "product",
        PosteriorMode::Sum => "sum",
        PosteriorMode::Correlated => "correlated",
    }
}

/// Tuple-space error of a posterior against a target.
pub fn tuple_error(weights: &[(Vec<usize>, f64)], target: &[(Vec<usize>, f64)], sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().product();
    (0..total)
        .map(|idx| {
            let tuple = crate::beliefs::decode_tuple(idx, sizes);
            let w = weights.iter().find(|(t, _)| *t == tuple).map_or(0.0, |x| x.1);
            let u = target.iter().find(|(t, _)| *t == tuple).map_or(0.0, |x| x.1);
            (w - u).abs()
        })
        .sum()
}

/// Runs one scenario and records the posterior of every mode along the same
/// history, every `every` steps and at the end.
pub fn belief_trace(fixture: BeliefFixture, plan: &ExperimentPlan, streams: &Streams, steps: usize) -> Result<Vec<BeliefRow>> {
    let mut rng = streams.stream("scenario");
    let sc = belief_scenario(fixture, plan, &mut rng)?;
    let mut ctrls: Vec<Controller> = sc.pools.iter().map(|p| Controller::Typed(p.clone())).collect();
    let ep = run_episode(&sc.game, &mut ctrls, &sc.truth, steps, sc.resample, &streams.child("episode", 0))?;
    let h = &ep.history;
    let modes = [PosteriorMode::Product, PosteriorMode::Sum, PosteriorMode::Correlated];
    let types: Vec<Vec<BehaviourRef>> = sc.opponents.iter().map(|j| sc.pools[*j].clone()).collect();
    let priors: Vec<Vec<f64>> = types.iter().map(|t| vec![1.0 / t.len() as f64; t.len()]).collect();
    let sizes: Vec<usize> = types.iter().map(|t| t.len()).collect();
    let mut states: Vec<BeliefState> =
        modes.iter().map(|m| BeliefState::new(*m, sc.opponents.clone(), types.clone(), priors.clone())).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for tau in 0..h.t() {
        let prefix = h.prefix(tau);
        let joint = h.action(tau);
        for bs in states.iter_mut() {
            bs.update(&prefix, joint);
        }
        let t = tau + 1;
        if t % plan.belief_every != 0 && t != h.t() {
            continue;
        }
        let hp = h.prefix(t);
        let (ao, asx) = (average_overlap(&hp, sc.opponents[0], &types[0]), average_stochasticity(&hp, sc.opponents[0], &types[0]));
        for bs in &states {
            let w = bs.tuple_weights();
            let post = w.iter().map(|(tp, p)| format!("{tp:?}:{p:?}")).collect::<Vec<_>>().join(";");
            rows.push(BeliefRow {
                fixture: fixture.name().into(),
                mode: mode_name(bs.mode()).into(),
                t,
                error: tuple_error(&w, &sc.target, &sizes),
                posterior: post,
                degenerate: bs.posterior().degenerate,
                overlap: ao,
                stochasticity: asx,
            });
        }
    }
    Ok(rows)
}

pub fn run_belief_convergence(plan: &ExperimentPlan) -> Result<Vec<BeliefRow>> {
    plan.validate()?;
    let streams = plan.streams();
    let out: Vec<Result<Vec<BeliefRow>>> = BeliefFixture::ALL
        .par_iter()
        .map(|f| {
            let steps = if *f == BeliefFixture::RlTypes { plan.rl_steps } else { plan.belief_steps };
            belief_trace(*f, plan, &streams.child(f.name(), 0), plan.scaled(steps))
        })
        .collect();
    let mut rows = Vec::new();
    for r in out {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisimRow {
    pub pair: usize,
    pub relation: String,
    pub bisimilar: bool,
    pub classes: usize,
    pub witness_size: usize,
    pub max_gap: f64,
    pub term_x: f64,
    pub term_y: f64,
}

impl Record for BisimRow {
    const COLUMNS: &'static [&'static str] = &["pair", "relation", "bisimilar", "classes", "witness_size", "max_gap", "term_x", "term_y"];
}

/// Largest gap between bounded termination probabilities for t <= horizon.
pub fn max_termination_gap(a: &LabelledChain, b: &LabelledChain, horizon: usize) -> f64 {
    (0..=horizon)
        .map(|t| (bisim::termination_probability(a, Some(t)) - bisim::termination_probability(b, Some(t))).abs())
        .fold(0.0, f64::max)
}

/// Lumped pairs (a random chain and a copy with one node split) and pairs
/// whose term reachability differs.
pub fn run_bisim_suite(plan: &ExperimentPlan) -> Result<Vec<BisimRow>> {
    plan.validate()?;
    let streams = plan.streams();
    let mut rows = Vec::new();
    for k in 0..plan.bisim_pairs {
        let mut rng = streams.indexed("bisim", k as u64);
        let c = bisim::random_chain(4 + k % 5, 1 + k % 2, &mut rng);
        let live: Vec<usize> = (0..c.len()).filter(|n| !c.term[*n]).collect();
        let node = live[rng.random_range(0..live.len())];
        let frac = rng.random_range(0.1..0.9);
        let split = bisim::split_node(&c, node, frac)?;
        let stuck = bisim::without_term(&c)?;
        for (relation, other) in [("split", &split), ("term-removed", &stuck)] {
            let r = bisim::bisimulation_check(&c, other);
            rows.push(BisimRow {
                pair: k,
                relation: relation.into(),
                bisimilar: r.bisimilar,
                classes: r.partition.len(),
                witness_size: r.witness.as_ref().map_or(0, |w| w.len()),
                max_gap: max_termination_gap(&c, other, 50),
                term_x: bisim::termination_probability(&c, None),
                term_y: bisim::termination_probability(other, None),
            });
        }
    }
    Ok(rows)
}

/// Outcome of one acceptance-tagged check on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Assertion { name: name.into(), passed, detail }
    }
}

/// Every prior used has full support and sums to one, and the true type's
/// presence keeps the product posterior from degenerating.
pub fn matrix_assertions(ds: &MatrixDataset) -> Vec<Assertion> {
    let bad_prior = ds.rows.iter().filter(|r| !(r.prior_min > 0.0 && (r.prior_sum - 1.0).abs() < 1e-9)).count();
    let degenerate = ds.rows.iter().filter(|r| r.degenerate_steps > 0).count();
    vec![
        Assertion::new("prior-support", bad_prior == 0, format!("{bad_prior} rows with an invalid prior")),
        Assertion::new("no-degenerate-posterior", degenerate == 0, format!("{degenerate} rows with degenerate planning steps")),
    ]
}

/// The accuracy bound applies to random behaviours over two actions with
/// the combined statistic; other settings are reported only.
pub fn hyptest_assertions(plan: &ExperimentPlan, ds: &HyptestDataset) -> Vec<Assertion> {
    use crate::hyptest::Score;
    let (c, i) = (ds.mean_accuracy(true), ds.mean_accuracy(false));
    let detail = format!("accuracy correct {:.3}, incorrect {:.3}", c, i);
    let tagged = plan.kind == ExperimentKind::HyptestRandom
        && plan.num_actions == 2
        && [Score::Z1, Score::Z2, Score::Z3].iter().all(|s| plan.hyptest.scores.contains(s));
    if tagged {
        vec![Assertion::new("accuracy-at-least-0.9", c >= 0.9 && i >= 0.9, detail)]
    } else {
        vec![Assertion::new("accuracy-reported", true, detail)]
    }
}

fn final_row<'a>(rows: &'a [BeliefRow], fixture: BeliefFixture, mode: &str) -> Option<&'a BeliefRow> {
    rows.iter().filter(|r| r.fixture == fixture.name() && r.mode == mode).max_by_key(|r| r.t)
}

/// Limits of the example fixtures. The always-A fixture's error is measured
/// against the true type, so a sum posterior of 2/3 shows as error 2/3.
pub fn belief_assertions(rows: &[BeliefRow]) -> Vec<Assertion> {
    let mut out = Vec::new();
    if let Some(r) = final_row(rows, BeliefFixture::OverlapAlwaysA, "sum") {
        out.push(Assertion::new(
            "sum-posterior-two-thirds",
            (r.error - 2.0 / 3.0).abs() <= 0.04,
            format!("t={} error {:.4} ({})", r.t, r.error, r.posterior),
        ));
        out.push(Assertion::new(
            "overlap-diagnostics",
            r.overlap == 0.75 && r.stochasticity == 0.5,
            format!("AO {} AS {}", r.overlap, r.stochasticity),
        ));
    }
    if let Some(r) = final_row(rows, BeliefFixture::DisjointMixed, "product") {
        let fired = rows.iter().any(|x| x.fixture == r.fixture && x.mode == "product" && x.degenerate);
        out.push(Assertion::new("product-posterior-degenerates", fired, format!("degenerate by t={}: {fired}", r.t)));
    }
    if let Some(r) = final_row(rows, BeliefFixture::CorrelatedPair, "correlated") {
        let by_1000 = rows
            .iter()
            .filter(|x| x.fixture == r.fixture && x.mode == "correlated" && x.t >= 1000)
            .all(|x| x.error < 0.05);
        out.push(Assertion::new("correlated-posterior-recovers", r.error < 0.05 && by_1000, format!("t={} error {:.4}", r.t, r.error)));
    }
    out
}
