//! Acceptance criteria 1 to 9. Runs without the libtest harness so every
//! criterion prints exactly one PASS or FAIL line; the process exits non-zero
//! when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use hba_core::behaviours::{make_lft_pool, default_targets, BehaviourRef, Constant, FictitiousPlay, RandomBehaviour};
use hba_core::beliefs::{average_overlap, average_stochasticity, BeliefState, PosteriorMode};
use hba_core::bisim;
use hba_core::games78::{enumerate_games, filter_dominant_player2, ConflictClass};
use hba_core::harness::{self, BeliefFixture, ExperimentKind, ExperimentPlan, Generator, OpponentKind};
use hba_core::hyptest::{fit_skew_normal, skew_normal_mode, skewnormal, HypTestConfig, Score};
use hba_core::planner::{expected_payoffs, PlannerConfig};
use hba_core::priors::{compute_prior, solve_lp, valuation_matrix, Lp, LpOutcome, Metric, PriorKind, PriorSpec};
use hba_core::rng::{sample_index, StreamRng, Streams};
use hba_core::sbg::{run_episode, Controller, Game, History};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> String {
    format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64())
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let all = enumerate_games();
    let nc = all.iter().filter(|g| g.class == ConflictClass::NoConflict).count();
    let kept = filter_dominant_player2(&all);
    let knc = kept.iter().filter(|g| g.class == ConflictClass::NoConflict).count();
    let el = start.elapsed();
    let detail = format!(
        "games {} ({} no-conflict, {} conflict); after player-2 dominance filter {} ({} + {}); {}",
        all.len(),
        nc,
        all.len() - nc,
        kept.len(),
        knc,
        kept.len() - knc,
        within(el, Duration::from_secs(1))
    );
    check(
        all.len() == 78 && nc == 21 && kept.len() == 48 && knc == 15 && el < Duration::from_secs(1),
        detail,
    )
}

// ---------------------------------------------------------------- 2

fn run_fixture(f: BeliefFixture, steps: usize, seed: u64) -> (History, harness::BeliefScenario) {
    let plan = ExperimentPlan::new(ExperimentKind::BeliefConvergence, seed);
    let streams = Streams::new(seed);
    let sc = harness::belief_scenario(f, &plan, &mut streams.stream("scenario")).unwrap();
    let mut ctrls: Vec<Controller> = sc.pools.iter().map(|p| Controller::Typed(p.clone())).collect();
    let ep = run_episode(&sc.game, &mut ctrls, &sc.truth, steps, sc.resample, &streams.child("episode", 0)).unwrap();
    (ep.history, sc)
}

/// Tuple weights after replaying `h`, plus whether the posterior was ever
/// degenerate along the way.
fn replay(mode: PosteriorMode, h: &History, sc: &harness::BeliefScenario) -> (BTreeMap<Vec<usize>, f64>, bool) {
    let types: Vec<Vec<BehaviourRef>> = sc.opponents.iter().map(|j| sc.pools[*j].clone()).collect();
    let priors = types.iter().map(|t| vec![1.0 / t.len() as f64; t.len()]).collect();
    let mut bs = BeliefState::new(mode, sc.opponents.clone(), types, priors).unwrap();
    let mut ever = false;
    for tau in 0..h.t() {
        bs.update(&h.prefix(tau), h.action(tau));
        ever |= bs.posterior().degenerate;
    }
    (bs.tuple_weights().into_iter().collect(), ever)
}

fn near(w: &BTreeMap<Vec<usize>, f64>, tuple: &[usize], v: f64, tol: f64) -> bool {
    (w.get(tuple).copied().unwrap_or(0.0) - v).abs() <= tol
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;

    let (h, sc) = run_fixture(BeliefFixture::OverlapAlwaysA, 5000, 1);
    let (w, _) = replay(PosteriorMode::Sum, &h, &sc);
    let e3 = near(&w, &[0], 2.0 / 3.0, 0.02) && near(&w, &[1], 1.0 / 3.0, 0.02);
    parts.push(format!("ex3 sum {:.4}/{:.4} {}", w[&vec![0]], w[&vec![1]], if e3 { "ok" } else { "bad" }));
    ok &= e3;

    let mut exact = true;
    for t in [1, 2, 10, 100, 5000] {
        let hp = h.prefix(t);
        exact &= average_overlap(&hp, 1, &sc.pools[1]) == 0.75 && average_stochasticity(&hp, 1, &sc.pools[1]) == 0.5;
    }
    parts.push(format!("ex4 AO/AS exact {exact}"));
    ok &= exact;

    let (h, sc) = run_fixture(BeliefFixture::DisjointMixed, 5000, 2);
    let (_, degenerate) = replay(PosteriorMode::Product, &h, &sc);
    let first_b = h.player_actions(1).position(|a| a == 1);
    let (w, _) = replay(PosteriorMode::Sum, &h, &sc);
    let e2 = degenerate && first_b.is_some() && near(&w, &[0], 0.5, 0.02) && near(&w, &[1], 0.5, 0.02);
    parts.push(format!("ex2 product degenerate {degenerate} (first switch t={first_b:?}), sum {:.4}/{:.4}", w[&vec![0]], w[&vec![1]]));
    ok &= e2;

    let (h, sc) = run_fixture(BeliefFixture::CorrelatedPair, 5000, 3);
    let (ws, _) = replay(PosteriorMode::Sum, &h, &sc);
    let (wc, _) = replay(PosteriorMode::Correlated, &h, &sc);
    let tuples = [vec![0, 1], vec![1, 0], vec![0, 0], vec![1, 1]];
    let sum_ok = tuples.iter().all(|t| near(&ws, t, 0.25, 0.02));
    let corr_ok = tuples.iter().zip([0.5, 0.5, 0.0, 0.0]).all(|(t, v)| near(&wc, t, v, 0.02));
    let show = |w: &BTreeMap<Vec<usize>, f64>| tuples.iter().map(|t| format!("{:.3}", w.get(t).copied().unwrap_or(0.0))).collect::<Vec<_>>().join("/");
    parts.push(format!("ex5 sum {} correlated {}", show(&ws), show(&wc)));
    ok &= sum_ok && corr_ok;

    check(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 3

/// One-step prediction error of the product posterior against a pure true
/// type, over the last `window` steps of a `steps`-step run.
fn pure_type_run(seed: u64, steps: usize, window: usize) -> f64 {
    let streams = Streams::new(seed);
    let mut rng = streams.stream("setup");
    let n = rng.random_range(2..=3);
    let k = rng.random_range(2..=6);
    let mut pool: Vec<BehaviourRef> = (0..k)
        .map(|m| -> BehaviourRef {
            match m % 3 {
                0 | 1 => Arc::new(RandomBehaviour::new(n, rng.random())),
                _ => {
                    let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
                    let z: f64 = p.iter().sum();
                    p.iter_mut().for_each(|x| *x /= z);
                    Arc::new(Constant::new(p))
                }
            }
        })
        .collect();
    if rng.random_bool(0.5) {
        pool.push(Arc::new(Constant::always(n, rng.random_range(0..n))));
    }
    let truth = pool[rng.random_range(0..pool.len())].clone();
    let prior: Vec<f64> = {
        let p: Vec<f64> = pool.iter().map(|_| rng.random::<f64>() + 0.01).collect();
        let z: f64 = p.iter().sum();
        p.into_iter().map(|x| x / z).collect()
    };
    let mine: BehaviourRef = Arc::new(RandomBehaviour::new(n, rng.random()));
    let mut bs = BeliefState::new(PosteriorMode::Product, vec![1], vec![pool], vec![prior]).unwrap();
    let mut act = streams.stream("actions");
    let mut h = History::new(0);
    let mut worst: f64 = 0.0;
    for t in 0..steps {
        if t >= steps - window {
            let pred = bs.predictive(&h, 0);
            let real = truth.distribution(&h, 1);
            worst = worst.max(pred.iter().zip(&real).map(|(a, b)| (a - b).abs()).sum());
        }
        let joint = vec![sample_index(&mine.distribution(&h, 0), &mut act), sample_index(&truth.distribution(&h, 1), &mut act)];
        bs.update(&h, &joint);
        h.push(joint, 0);
    }
    worst
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let errs: Vec<f64> = (0..100).map(|s| pure_type_run(1000 + s, 400, 100)).collect();
    let good = errs.iter().filter(|e| **e < 0.05).count();
    let el = start.elapsed();
    check(
        good >= 95 && el < Duration::from_secs(60),
        format!("{good}/100 runs with error < 0.05 over steps 300..400; {}", within(el, Duration::from_secs(60))),
    )
}

// ---------------------------------------------------------------- 4

struct Instance {
    game: Game,
    player: usize,
    opponents: Vec<usize>,
    types: Vec<Vec<BehaviourRef>>,
    priors: Vec<Vec<f64>>,
    history: History,
    cfg: PlannerConfig,
}

fn random_instance(rng: &mut StreamRng) -> Instance {
    let players = if rng.random_bool(0.7) { 2 } else { 3 };
    let actions: Vec<usize> = (0..players).map(|_| rng.random_range(2..=if players == 2 { 3 } else { 2 })).collect();
    let states = rng.random_range(1..=3);
    let terminals: Vec<usize> = (1..states).filter(|_| rng.random_bool(0.3)).collect();
    let mut game = Game::new(states, 0, &terminals, actions.clone()).unwrap();
    let joints: usize = actions.iter().product();
    for s in 0..states {
        for j in 0..joints {
            let a = game.joint_from_index(j);
            let mut next: BTreeMap<usize, f64> = BTreeMap::new();
            for _ in 0..2 {
                *next.entry(rng.random_range(0..states)).or_default() += rng.random::<f64>() + 0.01;
            }
            let z: f64 = next.values().sum();
            game.set_transition(s, &a, next.into_iter().map(|(k, p)| (k, p / z)).collect()).unwrap();
            game.set_payoff(s, &a, (0..players).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        }
    }
    let player = rng.random_range(0..players);
    let opponents: Vec<usize> = (0..players).filter(|p| *p != player).collect();
    let types: Vec<Vec<BehaviourRef>> = opponents
        .iter()
        .map(|&j| {
            let k = rng.random_range(1..=3);
            (0..k)
                .map(|m| -> BehaviourRef {
                    if m == 1 && players == 2 {
                        let payoff = (0..actions[j]).map(|_| (0..actions[player]).map(|_| rng.random::<f64>()).collect()).collect();
                        Arc::new(FictitiousPlay::new(payoff, rng.random_bool(0.5)))
                    } else {
                        Arc::new(RandomBehaviour::new(actions[j], rng.random()))
                    }
                })
                .collect()
        })
        .collect();
    let priors = types
        .iter()
        .map(|t| {
            let p: Vec<f64> = t.iter().map(|_| rng.random::<f64>() + 0.05).collect();
            let z: f64 = p.iter().sum();
            p.into_iter().map(|x| x / z).collect()
        })
        .collect();
    // A short prefix played by the first hypothesised type of each opponent,
    // so every posterior stays well defined.
    let mut history = History::new(0);
    for _ in 0..rng.random_range(0..=2) {
        let s = history.current_state();
        if game.is_terminal(s) {
            break;
        }
        let mut joint = vec![0; players];
        joint[player] = rng.random_range(0..actions[player]);
        for (k, &j) in opponents.iter().enumerate() {
            joint[j] = sample_index(&types[k][0].distribution(&history, j), rng);
        }
        let next = sample_index(&game.transition(s, &joint).iter().map(|x| x.1).collect::<Vec<_>>(), rng);
        let next = game.transition(s, &joint)[next].0;
        history.push(joint, next);
    }
    let depth = rng.random_range(1..=3);
    let cfg = if rng.random_bool(0.5) { PlannerConfig::depth_limited(depth) } else { PlannerConfig::discounted(rng.random_range(0.5..1.0), depth) };
    Instance { game, player, opponents, types, priors, history, cfg }
}

/// Product-posterior weight of each type tuple, recomputed from scratch.
fn oracle_posterior(inst: &Instance, h: &History) -> Vec<(Vec<usize>, f64)> {
    let sizes: Vec<usize> = inst.types.iter().map(|t| t.len()).collect();
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut tuple = vec![0; sizes.len()];
        let mut r = idx;
        for k in (0..sizes.len()).rev() {
            tuple[k] = r % sizes[k];
            r /= sizes[k];
        }
        let mut w: f64 = tuple.iter().enumerate().map(|(k, m)| inst.priors[k][*m]).product();
        for tau in 0..h.t() {
            let pre = h.prefix(tau);
            for (k, &j) in inst.opponents.iter().enumerate() {
                w *= inst.types[k][tuple[k]].distribution(&pre, j)[h.action(tau)[j]];
            }
        }
        out.push((tuple, w));
    }
    let z: f64 = out.iter().map(|x| x.1).sum();
    out.into_iter().map(|(t, w)| (t, w / z)).collect()
}

/// Every opponent joint action, in lexicographic order.
fn opponent_joints(inst: &Instance) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &j in &inst.opponents {
        out = out.into_iter().flat_map(|p: Vec<usize>| (0..inst.game.num_actions(j)).map(move |a| [p.clone(), vec![a]].concat())).collect();
    }
    out
}

fn oracle_values(inst: &Instance, h: &History, depth: usize) -> Vec<f64> {
    let g = &inst.game;
    let post = oracle_posterior(inst, h);
    let s = h.current_state();
    let mut vals = vec![0.0; g.num_actions(inst.player)];
    for acts in opponent_joints(inst) {
        let p: f64 = post
            .iter()
            .map(|(tuple, w)| {
                w * inst.opponents.iter().enumerate().map(|(k, &j)| inst.types[k][tuple[k]].distribution(h, j)[acts[k]]).product::<f64>()
            })
            .sum();
        if p == 0.0 {
            continue;
        }
        for (ai, v) in vals.iter_mut().enumerate() {
            let mut joint = vec![0; g.num_players()];
            joint[inst.player] = ai;
            for (k, &j) in inst.opponents.iter().enumerate() {
                joint[j] = acts[k];
            }
            for &(next, pt) in g.transition(s, &joint) {
                let mut q = g.payoff(s, &joint)[inst.player];
                if depth > 1 && !g.is_terminal(next) && inst.cfg.gamma > 0.0 {
                    let mut h2 = h.clone();
                    h2.push(joint.clone(), next);
                    q += inst.cfg.gamma * oracle_values(inst, &h2, depth - 1).into_iter().fold(f64::NEG_INFINITY, f64::max);
                }
                *v += p * pt * q;
            }
        }
    }
    vals
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = Streams::new(4).stream("instances");
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let inst = random_instance(&mut rng);
        let mut bs = BeliefState::new(PosteriorMode::Product, inst.opponents.clone(), inst.types.clone(), inst.priors.clone()).unwrap();
        for tau in 0..inst.history.t() {
            bs.update(&inst.history.prefix(tau), inst.history.action(tau));
        }
        let got = expected_payoffs(&inst.game, &inst.cfg, inst.player, &bs, &inst.history).unwrap();
        let want = if inst.game.is_terminal(inst.history.current_state()) {
            vec![0.0; got.len()]
        } else {
            oracle_values(&inst, &inst.history, inst.cfg.depth)
        };
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    let el = start.elapsed();
    check(
        worst <= 1e-9 && el < Duration::from_secs(60),
        format!("max |planner - enumerator| = {worst:.2e} over 100 instances; {}", within(el, Duration::from_secs(60))),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut plan = ExperimentPlan::new(ExperimentKind::HyptestRandom, 5);
    plan.hyptest = HypTestConfig::default();
    let full = harness::run_hyptest_experiment(&plan).unwrap();
    let (c, i) = (full.mean_accuracy(true), full.mean_accuracy(false));
    plan.hyptest.scores = vec![Score::Z3];
    let z3 = harness::run_hyptest_experiment(&plan).unwrap();
    let z3i = z3.mean_accuracy(false);
    check(
        c >= 0.9 && i >= 0.9 && z3i < 0.5,
        format!("[z1 z2 z3] accuracy correct {:.1}% incorrect {:.1}%; z3 alone incorrect {:.1}%", 100.0 * c, 100.0 * i, 100.0 * z3i),
    )
}

// ---------------------------------------------------------------- 6

fn skew_sample(rng: &mut StreamRng, n: usize, xi: f64, omega: f64, beta: f64) -> Vec<f64> {
    let d = beta / (1.0 + beta * beta).sqrt();
    let normal = rand_distr::StandardNormal;
    (0..n)
        .map(|_| {
            let u0: f64 = rng.sample::<f64, _>(normal).abs();
            let u1: f64 = rng.sample(normal);
            xi + omega * (d * u0 + (1.0 - d * d).sqrt() * u1)
        })
        .collect()
}

fn normal_nll(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let sd = (data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    skewnormal::nll(data, m, sd, 0.0)
}

fn criterion_6() -> Outcome {
    let mut rng = Streams::new(6).stream("data");
    let mut sets: Vec<(String, Vec<f64>)> = Vec::new();
    for (k, beta) in [0.0, 5.0, -3.0, 1.0, 10.0].into_iter().enumerate() {
        for n in [20, 200, 5000] {
            let (xi, omega) = (rng.random_range(-1.0..1.0), rng.random_range(0.1..2.0));
            sets.push((format!("sn{k}/{n}"), skew_sample(&mut rng, n, xi, omega, beta)));
        }
    }
    sets.push(("exponential".into(), (0..500).map(|_| -rng.random::<f64>().ln()).collect()));
    sets.push(("uniform".into(), (0..500).map(|_| rng.random::<f64>()).collect()));
    let mut nll_ok = true;
    for (name, d) in &sets {
        let f = fit_skew_normal(d, None);
        if f.nll > normal_nll(d) + 1e-9 {
            nll_ok = false;
            eprintln!("NLL above normal on {name}");
        }
    }
    let mode_ok = [(0.0, 1.0), (3.5, 0.2), (-2.0, 7.0)].iter().all(|(x, o)| skew_normal_mode(*x, *o, 0.0) == *x);
    let fit = fit_skew_normal(&sets[5].1, None);
    let mu = skew_normal_mode(fit.xi, fit.omega, fit.beta);
    let p_ok = skewnormal::p_value(mu, &fit, mu) == 1.0;

    let normal = skew_sample(&mut rng, 5000, 0.0, 1.0, 0.0);
    let nf = fit_skew_normal(&normal, None);
    let normal_ok = nf.xi.abs() < 0.1 && (nf.omega - 1.0).abs() < 0.1 && nf.beta.abs() < 0.5;
    let skewed = skew_sample(&mut rng, 5000, 0.0, 1.0, 5.0);
    let sf = fit_skew_normal(&skewed, None);
    let skew_ok = sf.beta > 1.0;
    check(
        nll_ok && mode_ok && p_ok && normal_ok && skew_ok,
        format!(
            "NLL <= normal on {} sets: {nll_ok}; mode(beta=0)=xi: {mode_ok}; p(mode)=1: {p_ok}; Normal(0,1) fit xi={:.3} omega={:.3} beta={:.3}: {normal_ok}; beta=5 fit beta={:.2}: {skew_ok}",
            sets.len(),
            nf.xi,
            nf.omega,
            nf.beta,
            sf.beta
        ),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let mut plan = ExperimentPlan::new(ExperimentKind::BisimSuite, 7);
    plan.bisim_pairs = 12;
    let rows = harness::run_bisim_suite(&plan).unwrap();
    let split: Vec<_> = rows.iter().filter(|r| r.relation == "split").collect();
    let other: Vec<_> = rows.iter().filter(|r| r.relation != "split").collect();
    let gap = split.iter().map(|r| r.max_gap).fold(0.0, f64::max);
    let split_ok = split.len() >= 10 && split.iter().all(|r| r.bisimilar) && gap <= 1e-9;
    let other_ok = other.iter().all(|r| !r.bisimilar && r.witness_size > 0);

    // Witness classes must separate the initial nodes directly as well.
    let mut rng = Streams::new(7).stream("extra");
    let mut witness_ok = true;
    for k in 0..10 {
        let c = bisim::random_chain(3 + k % 4, 1, &mut rng);
        let d = bisim::without_term(&c).unwrap();
        let r = bisim::bisimulation_check(&c, &d);
        witness_ok &= !r.bisimilar && r.witness.as_ref().is_some_and(|w| !w.is_empty());
        witness_ok &= (bisim::termination_probability(&c, Some(50)) - bisim::termination_probability(&d, Some(50))).abs() > 1e-9;
    }
    check(
        split_ok && other_ok && witness_ok,
        format!("{} bisimilar pairs, max bounded-termination gap {gap:.1e}; {} non-bisimilar pairs all with distinguishing class: {}", split.len(), other.len(), other_ok && witness_ok),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let games = enumerate_games();
    let mut support_ok = true;
    let mut modal_ok = true;
    for og in games.iter().step_by(13) {
        let game = og.to_game();
        let types = make_lft_pool(&game, &default_targets(2, 2)).unwrap();
        let types: Vec<BehaviourRef> = types.into_iter().take(8).collect();
        for kind in PriorKind::all() {
            let spec = PriorSpec { horizon: 3, ..PriorSpec::new(kind).with_seed(og.id as u64) };
            let p = compute_prior(&spec, &game, &types, 0).unwrap();
            support_ok &= p.probs.iter().all(|x| *x > 0.0) && (p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9;
            if kind == PriorKind::Value(Metric::Utility) {
                let vals = valuation_matrix(&game, &types, 3, 0, spec.node_budget, true).unwrap();
                let u: Vec<f64> = (0..types.len()).map(|j| vals[j][j][0]).collect();
                let best = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let top = p.probs.iter().cloned().fold(0.0, f64::max);
                let modal: Vec<usize> = (0..types.len()).filter(|j| p.probs[*j] >= top - 1e-12).collect();
                modal_ok &= modal.iter().all(|j| u[*j] >= best - 1e-9);
            }
        }
    }
    let mut plan = ExperimentPlan::new(ExperimentKind::MatrixPriors, 8);
    plan.generator = Generator::Lft;
    plan.opponents = vec![OpponentKind::Rt];
    plan.priors = vec![PriorKind::Uniform, PriorKind::Random];
    plan.max_games = Some(20);
    let ds = harness::run_matrix_experiment(&plan).unwrap();
    let cmp = ds.compare("uniform", "random").unwrap();
    let mut no_diff = true;
    let mut shown = Vec::new();
    for (metric, t) in &cmp {
        if *metric == "converged" {
            continue;
        }
        no_diff &= !t.significant(0.05);
        shown.push(format!("{metric} p={:.3}", t.p_two_sided));
    }
    check(
        support_ok && modal_ok && no_diff && ds.exceptions.is_empty(),
        format!(
            "full support: {support_ok}; utility mode maximises U: {modal_ok}; uniform vs random over {} plays: {}",
            cmp[0].1.n,
            shown.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- 9

/// Minimum over basic feasible solutions of `min c.x, A x <= b, x >= 0`.
fn vertex_oracle(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().cloned()).collect();
    for i in 0..n {
        let mut r = vec![0.0; n];
        r[i] = -1.0;
        rows.push((r, 0.0));
    }
    let m = rows.len();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn combos(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            combos(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    combos(0, m, n, &mut Vec::new(), &mut all);
    for set in all {
        pick.copy_from_slice(&set);
        let mat = DMatrix::from_fn(n, n, |r, col| rows[pick[r]].0[col]);
        let rhs = DVector::from_fn(n, |r, _| rows[pick[r]].1);
        let Some(x) = mat.lu().solve(&rhs) else { continue };
        if !x.iter().all(|v| v.is_finite()) {
            continue;
        }
        let feasible = rows.iter().all(|(r, bb)| r.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= bb + 1e-9);
        if feasible {
            let obj: f64 = c.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(obj, |v: f64| v.min(obj)));
        }
    }
    best
}

fn criterion_9() -> Outcome {
    let mut rng = Streams::new(9).stream("lp");
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for _ in 0..200 {
        let n = 5;
        let m = rng.random_range(2..=4);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut b: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0)).collect();
        a.push(vec![1.0; n]);
        b.push(rng.random_range(1.0..5.0));
        let lp = Lp { c: c.clone(), a_ub: a.clone(), b_ub: b.clone(), a_eq: vec![], b_eq: vec![], lower: vec![Some(0.0); n] };
        let oracle = vertex_oracle(&c, &a, &b);
        match (solve_lp(&lp), oracle) {
            (LpOutcome::Optimal { objective, .. }, Some(o)) => worst = worst.max((objective - o).abs()),
            _ => mismatched += 1,
        }
    }
    check(worst <= 1e-7 && mismatched == 0, format!("200 programs, max objective gap {worst:.2e}, status mismatches {mismatched}"))
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, f) in criteria {
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {k}: PASS ({secs:.1}s) {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {k}: FAIL ({secs:.1}s) {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
