mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use topdown::evalf1::{labeled_f1, RunningStandardizer};
use topdown::oracle::{oracle_action, oracle_completion, GoldIndex};
use topdown::transition::{tree_to_actions, OpenCaps, TransitionSystem};
use topdown::treebank::{read_tree, write_bracketed, Label};

const LABELS: [&str; 3] = ["A", "B", "C"];

fn system() -> TransitionSystem {
    TransitionSystem::new(LABELS.map(Label::new), OpenCaps::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn trees_round_trip(seed: u64, n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&LABELS, 0, n, 4, &mut rng);
        let sentence = sentence_of(n);
        let text = write_bracketed(&tree, &sentence);
        let (s2, t2) = read_tree(&text).unwrap();
        prop_assert_eq!(&s2, &sentence);
        prop_assert_eq!(&t2, &tree);
        let rebuilt = system().actions_to_tree(&sentence, &tree_to_actions(&tree)).unwrap();
        prop_assert_eq!(rebuilt, tree);
    }

    #[test]
    fn f1_matches_naive_counts(seed: u64, n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred = random_tree(&LABELS, 0, n, 4, &mut rng);
        let gold = random_tree(&LABELS, 0, n, 4, &mut rng);
        let (mut p, mut g) = (Vec::new(), Vec::new());
        naive_spans(&pred, &mut p);
        naive_spans(&gold, &mut g);
        let score = labeled_f1(&pred, &gold).unwrap();
        prop_assert_eq!(score.matched, naive_matched(&p, &g));
        prop_assert_eq!(score.predicted, p.len());
        prop_assert_eq!(score.gold, g.len());
        // Symmetric in its arguments, up to swapping P and R.
        let swapped = labeled_f1(&gold, &pred).unwrap();
        prop_assert!((swapped.f1 - score.f1).abs() < 1e-15);
        prop_assert!(score.f1 >= 0.0 && score.f1 <= 1.0);
    }

    #[test]
    fn oracle_is_legal_and_terminates(seed: u64, n in 1usize..8, len in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gold = random_tree(&LABELS, 0, n, 4, &mut rng);
        let sentence = sentence_of(n);
        let system = system();
        let index = GoldIndex::new(&gold);
        if let Some((state, _)) = random_prefix(&system, &sentence, len, &mut rng) {
            let a = oracle_action(&system, &state, &index).unwrap();
            prop_assert!(system.legal_actions(&state).unwrap().contains(&a));
            let (actions, tree) = oracle_completion(&system, &state, &index).unwrap();
            prop_assert!(state.steps() + actions.len() <= system.max_steps(n));
            tree.validate(n).unwrap();
        }
    }

    #[test]
    fn standardizer_matches_batch_statistics(values in prop::collection::vec(-1.0f64..0.0, 1..200)) {
        let mut s = RunningStandardizer::new();
        for (i, &v) in values.iter().enumerate() {
            let z = s.standardize(v).unwrap();
            let seen = &values[..=i];
            let mean = seen.iter().sum::<f64>() / seen.len() as f64;
            let var = seen.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / seen.len() as f64;
            prop_assert!((s.mean - mean).abs() < 1e-10);
            prop_assert!((s.variance() - var).abs() < 1e-10);
            let expected = if seen.len() < 2 { 0.0 } else { (v - mean) / var.sqrt().max(1e-8) };
            prop_assert!((z - expected).abs() < 1e-6 * (1.0 + expected.abs()), "{} vs {}", z, expected);
        }
    }
}

#[test]
fn standardizer_guards_constant_streams() {
    let mut s = RunningStandardizer::new();
    for _ in 0..10 {
        assert_eq!(s.standardize(-0.5).unwrap(), 0.0);
    }
}
