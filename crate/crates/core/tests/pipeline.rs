use proptest::prelude::*;
use qdtl_core::boosting::{conservative_weight, KkBoost, TrainingSet};
use qdtl_core::channel::{adversarial_flips, make_agnostic, make_realizable};
use qdtl_core::harness::{aggregate, generate_problem, records_from_csv, records_to_csv, run_experiment, run_trial};
use qdtl_core::rng::{Rng as StdRng, Streams};
use qdtl_core::weak::ExactParityLearner;
use qdtl_core::{random_tree, wht, CombinedHypothesis, DecisionTree, ExperimentConfig, Hypothesis, QueryLedger};
use rand::SeedableRng;

#[test]
fn tree_text_round_trip_preserves_truth_table() {
    let mut r = StdRng::seed_from_u64(1);
    for t in 1..12 {
        let tree = random_tree(7, t, &mut r).unwrap();
        let back = DecisionTree::parse(7, &tree.to_string()).unwrap();
        assert_eq!(back.to_function(), tree.to_function());
        assert_eq!(back.size(), t);
    }
}

#[test]
fn records_survive_csv() {
    for text in ["setting = rcn\ntrials = 3", "setting = agnostic\npipeline = qgl\ntrials = 3"] {
        let recs = run_experiment(&ExperimentConfig::parse(text).unwrap()).unwrap();
        let csv = records_to_csv(&recs);
        assert_eq!(records_to_csv(&records_from_csv(&csv).unwrap()), csv);
    }
}

#[test]
fn trials_are_independent_of_scheduling() {
    let c = ExperimentConfig::parse("setting = agnostic\ntrials = 6\nseed = 5").unwrap();
    let all = run_experiment(&c).unwrap();
    for (i, rec) in all.iter().enumerate() {
        let mut alone = run_trial(&c, i).unwrap();
        alone.wall_ms = rec.wall_ms;
        assert_eq!(&alone, rec);
    }
}

#[test]
fn problem_noise_stream_is_separate() {
    // Changing the flip fraction must not change the tree.
    let a = ExperimentConfig::parse("setting = agnostic\nnoise = 0.05").unwrap();
    let b = ExperimentConfig::parse("setting = agnostic\nnoise = 0.2").unwrap();
    let pa = generate_problem(&a, &mut Streams::new(9)).unwrap();
    let pb = generate_problem(&b, &mut Streams::new(9)).unwrap();
    assert_eq!(pa.target, pb.target);
    assert_ne!(pa.channel, pb.channel);
}

#[test]
fn aggregate_counts_every_record() {
    let c = ExperimentConfig::parse("pipeline = classical\nrounds = 20\ntrials = 4").unwrap();
    let recs = run_experiment(&c).unwrap();
    let rep = aggregate(&recs);
    assert_eq!(rep.len(), 1);
    assert_eq!(rep[0].trials, 4);
}

#[test]
fn classical_boost_recovers_single_parity() {
    let f = qdtl_core::BooleanFunction::parity(6, 0b101001).unwrap();
    let ch = make_realizable(&f);
    let mut r = StdRng::seed_from_u64(3);
    let out = KkBoost::new(10, 0.25, 0.2)
        .unwrap()
        .run(&ExactParityLearner, &ch, TrainingSet::Channel(&ch), &mut r, &mut QueryLedger::new())
        .unwrap();
    assert_eq!(out.hypothesis.to_function(), f);
    assert_eq!(out.best_t, 1);
}

proptest! {
    #[test]
    fn spectrum_of_tree_is_exactly_reconstructable(seed in any::<u64>(), n in 4usize..9, t in 1usize..17) {
        let mut r = StdRng::seed_from_u64(seed);
        let f = random_tree(n, t, &mut r).unwrap().to_function();
        let spec = wht(&f);
        let back = qdtl_core::boolean::inverse_wht(&spec);
        for (x, v) in back.iter().enumerate() {
            prop_assert_eq!(*v, f.value(x) as f64);
        }
    }

    #[test]
    fn adversarial_flips_lower_tree_correlation_by_twice_the_mass(seed in any::<u64>(), frac in 0.0f64..0.5) {
        let mut r = StdRng::seed_from_u64(seed);
        let f = random_tree(6, 4, &mut r).unwrap().to_function();
        let ch = make_agnostic(&f, &adversarial_flips(&f, frac, &mut r).unwrap()).unwrap();
        let flipped = (frac * f.len() as f64).floor() / f.len() as f64;
        prop_assert!((ch.correlation(&f) - (1.0 - 2.0 * flipped)).abs() < 1e-9);
    }

    #[test]
    fn weights_are_conservative_for_sign(score in -5.0f64..5.0) {
        let predicted = if score >= 0.0 { 1 } else { -1 };
        prop_assert_eq!(conservative_weight(score, -predicted), 1.0);
        prop_assert!(conservative_weight(score, predicted) <= 1.0);
    }

    #[test]
    fn combined_hypothesis_text_round_trip(seed in any::<u64>(), terms in 0usize..8) {
        use rand::Rng;
        let mut r = StdRng::seed_from_u64(seed);
        let mut h = CombinedHypothesis::zero(5).unwrap();
        for _ in 0..terms {
            h.add(r.random_range(0.0..1.0), Hypothesis { mask: r.random_range(0..32), sign: 1 });
            h.scale(r.random_range(0.5..1.0));
        }
        let back = CombinedHypothesis::from_text(5, &h.to_text()).unwrap();
        for x in 0..32 {
            prop_assert!((back.score(x) - h.score(x)).abs() < 1e-9);
        }
    }
}
