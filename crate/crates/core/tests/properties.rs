use std::sync::Arc;

use hba_core::behaviours::{BehaviourRef, Constant, RandomBehaviour};
use hba_core::beliefs::{BeliefState, PosteriorMode};
use hba_core::bisim::{self, LabelledChain};
use hba_core::harness::paired_t_test;
use hba_core::hyptest::{fit_skew_normal, score_z1, score_z2, score_z3, skewnormal, test_statistic, Score, WeightScheme};
use hba_core::priors::{prior_from_valuations, solve_lp, Lp, LpOutcome, PriorKind, PriorSpec};
use hba_core::rng::Streams;
use hba_core::sbg::History;
use proptest::prelude::*;

fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|v| {
        let v: Vec<f64> = v.into_iter().map(|x| x + 1e-3).collect();
        let z: f64 = v.iter().sum();
        v.into_iter().map(|x| x / z).collect()
    })
}

fn trajectory() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, Vec<usize>)> {
    (1usize..30).prop_flat_map(|t| (prop::collection::vec(dist(3), t), prop::collection::vec(0usize..3, t), prop::collection::vec(0usize..3, t)))
}

fn scheme() -> impl Strategy<Value = WeightScheme> {
    prop_oneof![
        Just(WeightScheme::Uniform),
        Just(WeightScheme::TrueMax),
        Just(WeightScheme::TrueMin),
        Just(WeightScheme::Max),
        Just(WeightScheme::Min)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scores_are_bounded((d, x, _) in trajectory()) {
        for s in [score_z1(&x, &d), score_z2(&x, &d), score_z3(&x, &d)] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        }
    }

    #[test]
    fn statistic_is_antisymmetric((d, x, y) in trajectory(), sch in scheme()) {
        let scores = [Score::Z1, Score::Z2, Score::Z3];
        let xx = test_statistic(&x, &x, &d, &scores, sch, None).unwrap();
        prop_assert_eq!(xx, 0.0);
        if sch == WeightScheme::Uniform || sch == WeightScheme::Max || sch == WeightScheme::Min {
            let xy = test_statistic(&x, &y, &d, &scores, sch, None).unwrap();
            let yx = test_statistic(&y, &x, &d, &scores, sch, None).unwrap();
            prop_assert!((xy + yx).abs() < 1e-12);
        }
    }

    #[test]
    fn posteriors_are_distributions(seed in any::<u64>(), steps in 1usize..60, k in 1usize..5) {
        let streams = Streams::new(seed);
        let types: Vec<BehaviourRef> = (0..k).map(|m| Arc::new(RandomBehaviour::new(2, seed ^ m as u64)) as BehaviourRef).collect();
        let truth = RandomBehaviour::new(2, seed.wrapping_add(1));
        let mut rng = streams.stream("a");
        for mode in [PosteriorMode::Product, PosteriorMode::Sum, PosteriorMode::Correlated] {
            let mut bs = BeliefState::uniform(mode, 1, types.clone()).unwrap();
            let mut h = History::new(0);
            for _ in 0..steps {
                use hba_core::Behaviour;
                let a = hba_core::rng::sample_index(&truth.distribution(&h, 1), &mut rng);
                let joint = vec![0, a];
                bs.update(&h, &joint);
                h.push(joint, 0);
            }
            let p = bs.posterior();
            prop_assert!(!p.degenerate);
            let total: f64 = bs.tuple_weights().iter().map(|x| x.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(p.marginals[0].iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn lp_solutions_are_feasible_and_no_worse_than_origin(
        c in prop::collection::vec(-1.0f64..1.0, 4),
        a in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..4),
        b in prop::collection::vec(0.0f64..2.0, 4),
    ) {
        let m = a.len();
        let mut a_ub = a.clone();
        let mut b_ub: Vec<f64> = b[..m].to_vec();
        a_ub.push(vec![1.0; 4]);
        b_ub.push(3.0);
        let lp = Lp { c: c.clone(), a_ub: a_ub.clone(), b_ub: b_ub.clone(), a_eq: vec![], b_eq: vec![], lower: vec![Some(0.0); 4] };
        match solve_lp(&lp) {
            LpOutcome::Optimal { x, objective } => {
                prop_assert!(objective <= 1e-9);
                prop_assert!(x.iter().all(|v| *v >= -1e-9));
                for (row, bb) in a_ub.iter().zip(&b_ub) {
                    prop_assert!(row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= bb + 1e-9);
                }
                prop_assert!((c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - objective).abs() < 1e-9);
            }
            other => prop_assert!(false, "bounded feasible program reported {:?}", other),
        }
    }

    #[test]
    fn splitting_a_node_preserves_bisimilarity(seed in any::<u64>(), live in 1usize..8, terms in 1usize..3, frac in 0.05f64..0.95) {
        let mut rng = Streams::new(seed).stream("chain");
        let c = bisim::random_chain(live, terms, &mut rng);
        let node = (seed as usize) % c.len();
        let d = bisim::split_node(&c, node, frac).unwrap();
        let r = bisim::bisimulation_check(&c, &d);
        prop_assert!(r.bisimilar);
        prop_assert!(bisim::is_bisimulation(&c, &d, &r.partition));
        for t in [0, 1, 5, 20] {
            let gap = bisim::termination_probability(&c, Some(t)) - bisim::termination_probability(&d, Some(t));
            prop_assert!(gap.abs() < 1e-9);
        }
        let back = LabelledChain::from_json(&d.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn skew_fit_never_worse_than_normal(data in prop::collection::vec(-5.0f64..5.0, 5..80)) {
        let n = data.len() as f64;
        let m = data.iter().sum::<f64>() / n;
        let sd = (data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        prop_assume!(sd > 1e-6);
        let f = fit_skew_normal(&data, None);
        prop_assert!(f.omega > 0.0);
        prop_assert!(f.nll <= skewnormal::nll(&data, m, sd, 0.0) + 1e-9);
    }

    #[test]
    fn every_prior_method_has_full_support(
        n in 1usize..7,
        seed in any::<u64>(),
        raw in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 36),
    ) {
        let vals: Vec<Vec<[f64; 2]>> = (0..n).map(|j| (0..n).map(|k| { let (a, b) = raw[j * 6 + k]; [a, b] }).collect()).collect();
        for kind in PriorKind::all() {
            let spec = PriorSpec::new(kind).with_seed(seed);
            let p = prior_from_valuations(&spec, n, Some(&vals)).unwrap();
            prop_assert_eq!(p.probs.len(), n);
            prop_assert!(p.probs.iter().all(|x| *x > 0.0));
            prop_assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn paired_t_is_antisymmetric(a in prop::collection::vec(-10.0f64..10.0, 3..30), shift in -1.0f64..1.0) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * 0.9 + shift + (i % 3) as f64 * 0.1).collect();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert!((ab.p_two_sided - ba.p_two_sided).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_two_sided));
        prop_assert!((ab.p_greater + ba.p_greater - 1.0).abs() < 1e-9 || ab.t.is_infinite());
    }
}

#[test]
fn constant_hypothesis_matches_constant_behaviour() {
    let c: BehaviourRef = Arc::new(Constant::new(vec![0.3, 0.7]));
    let bs = BeliefState::uniform(PosteriorMode::Product, 1, vec![c]).unwrap();
    assert_eq!(bs.predictive(&History::new(0), 0), vec![0.3, 0.7]);
}
