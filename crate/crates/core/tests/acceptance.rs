//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any hard criterion fails.
//!
//! Criterion 9 compares procedures on a 50-sentence test set. A miss on its
//! two directional comparisons is printed as FAIL but does not fail the
//! run: one seeded run at this scale cannot settle a directional claim.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use topdown::decode::{decode_beam, decode_greedy, sentence_rng};
use topdown::enumerate::{count_completions, for_each_completion, scored_derivations};
use topdown::evalf1::{cost, labeled_f1};
use topdown::experiment::{run_matrix, ExperimentMatrix, MatrixSummary};
use topdown::oracle::{oracle_action, oracle_completion, GoldIndex};
use topdown::scorer::{grad_log_prob, score, score_margin, Objective, ScorerParams};
use topdown::training::{exact_risk, sampled_risk_gradient, Procedure, TrainConfig};
use topdown::transition::{tree_to_actions, Action, OpenCaps, TransitionSystem};
use topdown::treebank::{read_tree, write_bracketed, Label, Sentence, Tree};

struct Outcome {
    pass: bool,
    /// False only for failures that should not fail the run.
    fatal: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        fatal: true,
        detail: detail.into(),
    }
}

/// Id, name, time budget in seconds, check.
type Criterion = (u32, &'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "round trip", 5, round_trip),
        (2, "oracle gold path", 5, oracle_gold_path),
        (3, "oracle soundness and termination", 60, oracle_soundness),
        (4, "oracle quality diagnostic", 600, oracle_quality),
        (5, "gradient correctness", 120, gradient_checks),
        (6, "estimator unbiasedness", 120, unbiasedness),
        (7, "F1 against a naive reference", 5, f1_reference),
        (8, "decoding", 60, decoding),
        (9, "desk-scale procedure comparison", 600, procedure_comparison),
        (10, "k sensitivity", 600, k_sensitivity),
        (11, "determinism", 1200, determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        let started = Instant::now();
        let result = run();
        let elapsed = started.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = result.pass && in_time;
        let status = match (pass, result.fatal || !in_time) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (reported, non-fatal)",
        };
        println!(
            "criterion {id:>2} {status} {name}: {} [{:.2}s of {budget}s]",
            result.detail,
            elapsed.as_secs_f64()
        );
        if !pass && (result.fatal || !in_time) {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn all_corpora() -> Vec<(&'static str, Corpus)> {
    ["synthetic.train", "synthetic.dev", "synthetic.test", "handwritten.trees"]
        .into_iter()
        .map(|name| (name, load(name)))
        .collect()
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn round_trip() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for name in ["synthetic.train", "handwritten.trees"] {
        let text = data_text(name);
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let corpus = load(name);
        if lines.len() != corpus.len() {
            bad.push(format!("{name}: {} lines, {} trees", lines.len(), corpus.len()));
            continue;
        }
        let system = TransitionSystem::from_corpus(corpus.iter().map(|(_, t)| t), OpenCaps::default());
        for (line, (sentence, tree)) in lines.iter().zip(&corpus) {
            checked += 1;
            if squash(&write_bracketed(tree, sentence)) != squash(line) {
                bad.push(format!("write: {line}"));
            }
            match system.actions_to_tree(sentence, &tree_to_actions(tree)) {
                Ok(t) if &t == tree => {}
                _ => bad.push(format!("actions: {line}")),
            }
        }
    }
    let hand_unary = handwritten()
        .iter()
        .filter(|(_, t)| has_unary_chain(t))
        .count();
    outcome(
        bad.is_empty() && checked >= 350 && hand_unary > 0,
        format!(
            "{checked} trees, {hand_unary} hand-written with unary chains, {} failures {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn has_unary_chain(tree: &Tree) -> bool {
    let mut found = false;
    tree.for_each_node(&mut |n| {
        if let [topdown::treebank::Child::Node(_)] = n.children() {
            found = true;
        }
    });
    found
}

fn oracle_gold_path() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (name, corpus) in all_corpora() {
        let system = TransitionSystem::from_corpus(corpus.iter().map(|(_, t)| t), OpenCaps::default());
        for (i, (sentence, gold)) in corpus.iter().enumerate() {
            checked += 1;
            let index = GoldIndex::new(gold);
            let mut state = system.initial_state(sentence);
            let mut path = Vec::new();
            while !state.is_finished() && path.len() <= system.max_steps(sentence.len()) {
                let a = oracle_action(&system, &state, &index).unwrap();
                system.apply_mut(&mut state, &a).unwrap();
                path.push(a);
            }
            if path != tree_to_actions(gold) {
                bad.push(format!("{name}#{i} path"));
            }
            let (_, tree) = oracle_completion(&system, &system.initial_state(sentence), &index).unwrap();
            if labeled_f1(&tree, gold).unwrap().f1 != 1.0 {
                bad.push(format!("{name}#{i} F1"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{checked} trees, {} failures {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()),
    )
}

fn oracle_soundness() -> Outcome {
    let corpora = all_corpora();
    let systems: Vec<TransitionSystem> = corpora
        .iter()
        .map(|(_, c)| TransitionSystem::from_corpus(c.iter().map(|(_, t)| t), OpenCaps::default()))
        .collect();
    let indexes: Vec<Vec<GoldIndex>> = corpora
        .iter()
        .map(|(_, c)| c.iter().map(|(_, t)| GoldIndex::new(t)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let target = 100_000;
    let (mut prefixes, mut states, mut illegal, mut stuck) = (0usize, 0usize, 0usize, 0usize);
    while prefixes < target {
        let c = rng.random_range(0..corpora.len());
        let i = rng.random_range(0..corpora[c].1.len());
        let (sentence, _) = &corpora[c].1[i];
        let system = &systems[c];
        let len = rng.random_range(1..=6);
        let Some((mut state, _)) = random_prefix(system, sentence, len, &mut rng) else {
            continue;
        };
        prefixes += 1;
        let bound = system.max_steps(sentence.len());
        // Walk the oracle's completion by hand so every state on it is checked.
        while !state.is_finished() {
            states += 1;
            if state.steps() >= bound {
                stuck += 1;
                break;
            }
            let a = oracle_action(system, &state, &indexes[c][i]).unwrap();
            if !system.legal_actions(&state).unwrap().contains(&a) {
                illegal += 1;
                break;
            }
            system.apply_mut(&mut state, &a).unwrap();
        }
        if let Some(tree) = state.tree() {
            tree.validate(sentence.len()).unwrap();
        }
    }
    outcome(
        illegal == 0 && stuck == 0,
        format!("{prefixes} perturbed states ({states} oracle calls): {illegal} illegal, {stuck} past the step bound"),
    )
}

/// The smallest caps under which every tree in `trees` is derivable, with
/// `per_word` fixed at 1.
fn tight_caps<'a>(trees: impl IntoIterator<Item = &'a (Sentence, Tree)>) -> OpenCaps {
    let (mut chain, mut base) = (1, 0);
    for (sentence, tree) in trees {
        let mut run = 0;
        for a in tree_to_actions(tree) {
            if matches!(a, Action::Open(_)) {
                run += 1;
                chain = chain.max(run);
            } else {
                run = 0;
            }
        }
        base = base.max(tree.num_nodes().saturating_sub(sentence.len()));
    }
    OpenCaps {
        chain,
        per_word: 1,
        base,
    }
}

fn best_reachable_f1(system: &TransitionSystem, state: &topdown::transition::ParserState, gold: &Tree) -> f64 {
    let mut best: f64 = 0.0;
    for_each_completion(system, state, &mut |_, tree| {
        best = best.max(labeled_f1(tree, gold).unwrap().f1);
    })
    .unwrap();
    best
}

fn oracle_quality() -> Outcome {
    let corpus: Corpus = synthetic_train()
        .into_iter()
        .filter(|(s, _)| s.len() <= 4)
        .collect();
    let caps = tight_caps(&corpus);
    let system = TransitionSystem::from_corpus(corpus.iter().map(|(_, t)| t), caps);
    assert_eq!(system.labels().len(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut initial_gaps = 0;
    let mut gaps = Vec::new();
    let mut wrong_root_gaps = Vec::new();
    for (sentence, gold) in &corpus {
        let index = GoldIndex::new(gold);
        let initial = system.initial_state(sentence);
        let (_, tree) = oracle_completion(&system, &initial, &index).unwrap();
        if best_reachable_f1(&system, &initial, gold) - labeled_f1(&tree, gold).unwrap().f1 != 0.0 {
            initial_gaps += 1;
        }
        let mut perturbed = Vec::new();
        for _ in 0..4 {
            let len = rng.random_range(1..=6);
            if let Some((state, _)) = random_prefix(&system, sentence, len, &mut rng) {
                perturbed.push((state, false));
            }
        }
        let wrong = system
            .labels()
            .iter()
            .find(|l| *l != gold.label())
            .cloned()
            .unwrap();
        perturbed.push((system.apply(&initial, &Action::Open(wrong)).unwrap(), true));
        for (state, wrong_root) in perturbed {
            let (_, tree) = oracle_completion(&system, &state, &index).unwrap();
            let gap = best_reachable_f1(&system, &state, gold) - labeled_f1(&tree, gold).unwrap().f1;
            assert!(gap >= -1e-12, "oracle beat brute force");
            gaps.push(gap);
            if wrong_root {
                wrong_root_gaps.push(gap);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let nonzero = gaps.iter().filter(|g| **g > 1e-12).count();
    outcome(
        initial_gaps == 0,
        format!(
            "{} sentences, caps {caps:?}; initial-state gap 0 on all but {initial_gaps}; \
             perturbed states: {} with mean gap {:.4}, {nonzero} nonzero, max {:.4}; \
             wrong-root states: mean gap {:.4}",
            corpus.len(),
            gaps.len(),
            mean(&gaps),
            gaps.iter().cloned().fold(0.0, f64::max),
            mean(&wrong_root_gaps)
        ),
    )
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn gradient_checks() -> Outcome {
    // (a) log-probability gradients against central differences, every
    // coordinate of a small hashed model.
    let corpus = synthetic_train();
    let system = TransitionSystem::from_corpus(corpus.iter().map(|(_, t)| t), OpenCaps::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    let mut worst_a: f64 = 0.0;
    let mut states = 0;
    while states < 100 {
        let (sentence, gold) = corpus.choose(&mut rng).unwrap();
        let params = ScorerParams::random(system.clone(), 10, rng.random(), 0.5);
        let len = rng.random_range(0..=6);
        let state = match len {
            0 => system.initial_state(sentence),
            _ => match random_prefix(&system, sentence, len, &mut rng) {
                Some((s, _)) => s,
                None => continue,
            },
        };
        let legal = system.legal_actions(&state).unwrap();
        let action = legal.choose(&mut rng).unwrap().clone();
        let objective = if states % 2 == 0 {
            Objective::Likelihood
        } else {
            Objective::Margin(oracle_action(&system, &state, &GoldIndex::new(gold)).unwrap())
        };
        let log_p = |p: &ScorerParams| {
            let dist = match &objective {
                Objective::Likelihood => score(&state, sentence, p).unwrap(),
                Objective::Margin(o) => score_margin(&state, sentence, p, o).unwrap(),
            };
            dist.log_prob(&action).unwrap()
        };
        let analytic = grad_log_prob(&state, sentence, &params, &action, &objective).unwrap();
        let dims = params.weights().len();
        let mut fd = vec![0.0; dims];
        let mut probe = params.clone();
        for (id, slot) in fd.iter_mut().enumerate() {
            let w = params.weight(id as u32);
            probe.set_weight(id as u32, w + h);
            let up = log_p(&probe);
            probe.set_weight(id as u32, w - h);
            let down = log_p(&probe);
            probe.set_weight(id as u32, w);
            *slot = (up - down) / (2.0 * h);
        }
        let exact: Vec<f64> = (0..dims).map(|id| analytic.get(id as u32)).collect();
        worst_a = worst_a.max(relative_error(&exact, &fd));
        states += 1;
    }

    // (b) the enumerated risk gradient against differences of the risk.
    let (sentence, gold) = read_tree("(S (X a b) c)").unwrap();
    let caps = OpenCaps {
        chain: 2,
        per_word: 0,
        base: 3,
    };
    let small = TransitionSystem::new([Label::new("S"), Label::new("X")], caps);
    let derivations = count_completions(&small, &small.initial_state(&sentence)).unwrap();
    let h = 1e-4;
    let mut worst_b: f64 = 0.0;
    for t in 0..20 {
        let params = ScorerParams::random(small.clone(), 8, 100 + t, 1.0);
        let (_, gradient) = exact_risk(&sentence, &gold, &params).unwrap();
        let dims = params.weights().len();
        let mut fd = vec![0.0; dims];
        let mut probe = params.clone();
        for (id, slot) in fd.iter_mut().enumerate() {
            let w = params.weight(id as u32);
            probe.set_weight(id as u32, w + h);
            let up = exact_risk(&sentence, &gold, &probe).unwrap().0;
            probe.set_weight(id as u32, w - h);
            let down = exact_risk(&sentence, &gold, &probe).unwrap().0;
            probe.set_weight(id as u32, w);
            *slot = (up - down) / (2.0 * h);
        }
        let exact: Vec<f64> = (0..dims).map(|id| gradient.get(id as u32)).collect();
        worst_b = worst_b.max(relative_error(&exact, &fd));
    }
    outcome(
        worst_a <= 1e-6 && worst_b <= 1e-4,
        format!(
            "(a) 100 states, worst relative error {worst_a:.2e} (limit 1e-6); \
             (b) 20 parameter draws over {derivations} derivations, worst {worst_b:.2e} (limit 1e-4)"
        ),
    )
}

/// Per-coordinate mean and variance of the single-sample estimator
/// `Δ(y) ∇ log p(y)`, `y ~ p`, by enumerating every derivation and summing
/// per-step gradients.
fn enumerated_moments(sentence: &Sentence, gold: &Tree, params: &ScorerParams) -> (Vec<f64>, Vec<f64>) {
    let system = params.system();
    let dims = params.weights().len();
    let (mut first, mut second) = (vec![0.0; dims], vec![0.0; dims]);
    for d in scored_derivations(sentence, params).unwrap() {
        let p = d.log_prob.exp();
        let delta = cost(&d.tree, gold).unwrap();
        let mut g = vec![0.0; dims];
        let mut state = system.initial_state(sentence);
        for a in &d.actions {
            let step = grad_log_prob(&state, sentence, params, a, &Objective::Likelihood).unwrap();
            for &(id, v) in step.entries() {
                g[id as usize] += v;
            }
            system.apply_mut(&mut state, a).unwrap();
        }
        for id in 0..dims {
            let x = delta * g[id];
            first[id] += p * x;
            second[id] += p * x * x;
        }
    }
    let variance = first.iter().zip(&second).map(|(m, s)| (s - m * m).max(0.0)).collect();
    (first, variance)
}

fn unbiasedness() -> Outcome {
    let (sentence, gold) = read_tree("(S (X a) b)").unwrap();
    let system = TransitionSystem::new(
        [Label::new("S"), Label::new("X")],
        OpenCaps {
            chain: 2,
            per_word: 0,
            base: 3,
        },
    );
    let params = ScorerParams::random(system, 6, 1, 1.0);
    let (exact, variance) = enumerated_moments(&sentence, &gold, &params);
    let (_, library) = exact_risk(&sentence, &gold, &params).unwrap();
    let library: Vec<f64> = (0..exact.len()).map(|id| library.get(id as u32)).collect();
    let library_error = relative_error(&library, &exact);

    let samples = 10_000;
    let mut sum = vec![0.0; exact.len()];
    for i in 0..samples {
        let mut rng = sentence_rng(1, 0, i);
        let g = sampled_risk_gradient(&sentence, &gold, &params, 1, &mut rng).unwrap();
        for (id, slot) in sum.iter_mut().enumerate() {
            *slot += g.get(id as u32);
        }
    }
    let n = samples as f64;
    let (mut worst_z, mut outside, mut constant_mismatch, mut tested) = (0.0f64, 0, 0, 0);
    for id in 0..exact.len() {
        let mean = sum[id] / n;
        // Standard error of the mean from the estimator's exact variance.
        let se = (variance[id] / n).sqrt();
        if se < 1e-15 {
            if (mean - exact[id]).abs() > 1e-12 {
                constant_mismatch += 1;
            }
            continue;
        }
        tested += 1;
        let z = (mean - exact[id]).abs() / se;
        worst_z = worst_z.max(z);
        if z > 3.0 {
            outside += 1;
        }
    }
    outcome(
        outside == 0 && constant_mismatch == 0 && library_error < 1e-10,
        format!(
            "{samples} single-sample estimates, {tested} varying coordinates: \
             {outside} beyond 3 SE (worst {worst_z:.2} SE), {constant_mismatch} constant mismatches; \
             library exact gradient vs enumeration: relative error {library_error:.1e}"
        ),
    )
}

fn f1_reference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let pred = random_tree(&["A", "B", "C"], 0, n, 4, &mut rng);
        let gold = random_tree(&["A", "B", "C"], 0, n, 4, &mut rng);
        let (mut p, mut g) = (Vec::new(), Vec::new());
        naive_spans(&pred, &mut p);
        naive_spans(&gold, &mut g);
        let m = naive_matched(&p, &g);
        let precision = m as f64 / p.len() as f64;
        let recall = m as f64 / g.len() as f64;
        let f1 = if m == 0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        let s = labeled_f1(&pred, &gold).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        if s.matched != m || s.predicted != p.len() || s.gold != g.len()
            || !close(s.precision, precision) || !close(s.recall, recall) || !close(s.f1, f1)
        {
            mismatches += 1;
        }
    }
    let (_, pred) = read_tree("(S (NP the cat) sleeps)").unwrap();
    let (_, gold) = read_tree("(S (NP the cat) (VP sleeps))").unwrap();
    let worked = labeled_f1(&pred, &gold).unwrap();
    let worked_ok = worked.precision == 1.0 && worked.recall == 2.0 / 3.0 && worked.f1 == 0.8;
    outcome(
        mismatches == 0 && worked_ok,
        format!(
            "1000 random pairs, {mismatches} mismatches; worked example P={} R={:.6} F1={}",
            worked.precision, worked.recall, worked.f1
        ),
    )
}

fn decoding() -> Outcome {
    let corpus = synthetic_train();
    let system = TransitionSystem::from_corpus(corpus.iter().map(|(_, t)| t), OpenCaps::default());
    let params = ScorerParams::random(system, 16, 8, 1.0);
    let mut greedy_mismatch = 0;
    let mut monotone_violations = 0;
    for (sentence, _) in corpus.iter().take(100) {
        let greedy = decode_greedy(sentence, &params).unwrap();
        let beam = decode_beam(sentence, &params, 1).unwrap();
        if greedy.actions != beam.actions || greedy.tree != beam.tree || greedy.log_prob != beam.log_prob {
            greedy_mismatch += 1;
        }
        let mut last = f64::NEG_INFINITY;
        for width in 1..=16 {
            let lp = decode_beam(sentence, &params, width).unwrap().log_prob;
            if lp < last - 1e-12 {
                monotone_violations += 1;
            }
            last = last.max(lp);
        }
    }

    let short: Corpus = corpus.iter().filter(|(s, _)| s.len() <= 3).cloned().collect();
    let caps = tight_caps(&short);
    let small = TransitionSystem::from_corpus(short.iter().map(|(_, t)| t), caps);
    let small_params = ScorerParams::random(small.clone(), 16, 9, 1.0);
    let mut seen = BTreeMap::new();
    let mut exact_mismatch = 0;
    let mut largest = 0;
    for (sentence, _) in &short {
        if seen.insert(sentence.tokens().to_vec(), ()).is_some() {
            continue;
        }
        let all = scored_derivations(sentence, &small_params).unwrap();
        largest = largest.max(all.len());
        let best = all
            .iter()
            .max_by(|a, b| a.log_prob.partial_cmp(&b.log_prob).unwrap())
            .unwrap();
        let beam = decode_beam(sentence, &small_params, all.len()).unwrap();
        if (beam.log_prob - best.log_prob).abs() > 1e-12 || beam.tree != best.tree {
            exact_mismatch += 1;
        }
        let mut last = f64::NEG_INFINITY;
        for width in 1..=all.len().min(64) {
            let lp = decode_beam(sentence, &small_params, width).unwrap().log_prob;
            if lp < last - 1e-12 {
                monotone_violations += 1;
            }
            last = last.max(lp);
        }
    }
    outcome(
        greedy_mismatch == 0 && exact_mismatch == 0 && monotone_violations == 0,
        format!(
            "width 1 vs greedy: {greedy_mismatch}/100 differ; exhaustive argmax on {} sentences \
             (n <= 3, up to {largest} derivations): {exact_mismatch} differ; \
             {monotone_violations} width-monotonicity violations",
            seen.len()
        ),
    )
}

const THRESHOLD: f64 = 0.7;

fn acceptance_config() -> TrainConfig {
    TrainConfig::default()
}

fn run_comparison(out: &Path) -> MatrixSummary {
    let mut matrix = ExperimentMatrix::grid(&Procedure::ALL, &[10]).unwrap();
    matrix.threshold = THRESHOLD;
    run_matrix(
        &matrix,
        &load("synthetic.train"),
        &load("synthetic.dev"),
        &load("synthetic.test"),
        &acceptance_config(),
        Some(out),
    )
    .unwrap()
}

fn run_k_sweep(out: &Path) -> MatrixSummary {
    let mut matrix = ExperimentMatrix::grid(&[Procedure::PolicyGradient], &[2, 5, 10]).unwrap();
    matrix.threshold = THRESHOLD;
    run_matrix(
        &matrix,
        &load("synthetic.train"),
        &load("synthetic.dev"),
        &load("synthetic.test"),
        &acceptance_config(),
        Some(out),
    )
    .unwrap()
}

fn procedure_comparison() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_comparison(dir.path());
    let test_f1 = |p| summary.get(p, 10).unwrap().test_f1;
    let likelihood = test_f1(Procedure::Likelihood);
    let pg = test_f1(Procedure::PolicyGradient);
    let smm_explore = test_f1(Procedure::SmmExplore);
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let mut ordering: Vec<_> = summary.cells.iter().collect();
    ordering.sort_by(|a, b| b.test_f1.partial_cmp(&a.test_f1).unwrap());
    let ordering: Vec<String> = ordering
        .iter()
        .map(|c| {
            let epochs = c.epochs_to_threshold.map_or("-".into(), |e| e.to_string());
            format!("{} {:.4} (dev {:.4}, epochs to {THRESHOLD}: {epochs})", c.procedure, c.test_f1, c.dev_f1)
        })
        .collect();
    let epoch0: Vec<Option<f64>> = summary.cells.iter().map(|c| c.report.records[0].dev_f1).collect();
    let shared_init = epoch0.iter().all(|f| *f == epoch0[0]);
    let curves = fs::read_dir(dir.path().join("curves")).unwrap().count();
    let directional = pg >= likelihood - 0.005 && smm_explore >= likelihood - 0.005;
    let structural = shared_init && curves == 5;
    Outcome {
        pass: directional && structural,
        fatal: !structural,
        detail: format!(
            "(i) policy_gradient {pg:.4} >= likelihood {likelihood:.4} - 0.005: {}; \
             (ii) smm_explore {smm_explore:.4} >= likelihood - 0.005: {}; \
             test F1 ordering: {}; shared epoch-0 dev F1: {shared_init}",
            verdict(pg >= likelihood - 0.005),
            verdict(smm_explore >= likelihood - 0.005),
            ordering.join(", ")
        ),
    }
}

fn k_sensitivity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_k_sweep(dir.path());
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [2, 5, 10] {
        let cell = summary.get(Procedure::PolicyGradient, k).unwrap();
        let epochs: Vec<usize> = cell.report.records.iter().map(|r| r.epoch).collect();
        let config = acceptance_config();
        ok &= epochs == (0..=config.epochs).collect::<Vec<_>>();
        let text = fs::read_to_string(dir.path().join("curves").join(format!("{}.jsonl", cell.name()))).unwrap();
        ok &= text.lines().count() == epochs.len();
        parts.push(format!("k={k} dev {:.4} test {:.4}", cell.dev_f1, cell.test_f1));
    }
    outcome(ok, format!("policy_gradient {}", parts.join(", ")))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in ["", "curves", "models"] {
        for entry in fs::read_dir(dir.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.is_file() {
                let key = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let mut differing = Vec::new();
    let mut compared = 0;
    for run in [run_comparison as fn(&Path) -> MatrixSummary, run_k_sweep] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(a.path());
        run(b.path());
        let (fa, fb) = (files(a.path()), files(b.path()));
        if fa.keys().ne(fb.keys()) {
            differing.push("file sets".to_string());
        }
        for (name, bytes) in &fa {
            compared += 1;
            if fb.get(name) != Some(bytes) {
                differing.push(name.clone());
            }
        }
    }
    outcome(
        differing.is_empty(),
        format!("{compared} report, summary and model files compared; differing: {differing:?}"),
    )
}
