//! Inference and exploration: ancestral sampling, greedy decoding and
//! action-level beam search.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evalf1::{cost, RunningStandardizer};
use crate::scorer::{ScoredState, ScorerParams};
use crate::transition::{tree_to_actions, Action, ParserState};
use crate::treebank::{Sentence, Tree};

/// A complete derivation with its model log probability. `cost` and
/// `standardized_cost` are filled in once the candidate joins a
/// [`CandidateSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub tree: Tree,
    pub actions: Vec<Action>,
    pub log_prob: f64,
    pub is_gold: bool,
    pub cost: f64,
    pub standardized_cost: f64,
}

impl Candidate {
    fn new(tree: Tree, actions: Vec<Action>, log_prob: f64) -> Candidate {
        Candidate {
            tree,
            actions,
            log_prob,
            is_gold: false,
            cost: 0.0,
            standardized_cost: 0.0,
        }
    }
}

/// The candidates for one training sentence: samples from the model plus
/// (normally) the gold tree, which comes last.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub gold: Tree,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    /// Streams each candidate's cost through `standardizer`, in order.
    pub fn standardize(&mut self, standardizer: &mut RunningStandardizer) -> Result<()> {
        for c in &mut self.candidates {
            c.standardized_cost = standardizer.standardize(c.cost)?;
        }
        Ok(())
    }
}

/// A random stream for one sentence in one epoch. Streams for different
/// `(epoch, index)` pairs are independent, so sentences can be processed in
/// any order or in parallel.
pub fn sentence_rng(seed: u64, epoch: u32, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(epoch) << 32) | u64::from(index));
    rng
}

/// Draws a derivation from the model by ancestral sampling.
pub fn sample_tree(sentence: &Sentence, params: &ScorerParams, rng: &mut ChaCha8Rng) -> Result<Candidate> {
    run_policy(sentence, params, |scored| {
        let dist = scored.distribution();
        let i = dist.sample(rng);
        (i, dist.log_probs[i])
    })
}

/// Takes the most probable action at every step; ties go to the earliest
/// action in `Shift < Open(label) < Close` order.
pub fn decode_greedy(sentence: &Sentence, params: &ScorerParams) -> Result<Candidate> {
    run_policy(sentence, params, |scored| {
        let dist = scored.distribution();
        let i = dist.argmax();
        (i, dist.log_probs[i])
    })
}

fn run_policy(
    sentence: &Sentence,
    params: &ScorerParams,
    mut choose: impl FnMut(&ScoredState) -> (usize, f64),
) -> Result<Candidate> {
    let system = params.system();
    let mut state = system.initial_state(sentence);
    let mut actions = Vec::new();
    let mut log_prob = 0.0;
    let bound = system.max_steps(sentence.len());
    while !state.is_finished() {
        if actions.len() >= bound {
            return Err(Error::Transition(format!("derivation exceeded {bound} steps")));
        }
        let scored = ScoredState::new(&state, sentence, params)?;
        let (i, lp) = choose(&scored);
        let action = scored.actions[i].clone();
        system.apply_mut(&mut state, &action)?;
        actions.push(action);
        log_prob += lp;
    }
    Ok(Candidate::new(state.into_tree().expect("finished"), actions, log_prob))
}

/// Log probability of a complete action sequence under the model.
pub fn sequence_log_prob(sentence: &Sentence, params: &ScorerParams, actions: &[Action]) -> Result<f64> {
    let system = params.system();
    let mut state = system.initial_state(sentence);
    let mut total = 0.0;
    for action in actions {
        let scored = ScoredState::new(&state, sentence, params)?;
        let i = scored.index_of_legal(action).map_err(|_| {
            Error::Transition(format!("{action} is illegal at step {}", state.steps()))
        })?;
        total += scored.distribution().log_probs[i];
        system.apply_mut(&mut state, action)?;
    }
    Ok(total)
}

/// The gold tree as a candidate.
pub fn gold_candidate(sentence: &Sentence, gold: &Tree, params: &ScorerParams) -> Result<Candidate> {
    let actions = tree_to_actions(gold);
    let log_prob = sequence_log_prob(sentence, params, &actions)?;
    let mut c = Candidate::new(gold.clone(), actions, log_prob);
    c.is_gold = true;
    Ok(c)
}

/// `k − 1` samples followed by the gold tree, with raw costs filled in but
/// not yet standardized. With `include_gold` off, all `k` are samples.
pub fn sample_candidates(
    sentence: &Sentence,
    gold: &Tree,
    params: &ScorerParams,
    k: usize,
    include_gold: bool,
    rng: &mut ChaCha8Rng,
) -> Result<CandidateSet> {
    if k == 0 || (include_gold && k < 2) {
        return Err(Error::Usage(format!("candidate count {k} is too small")));
    }
    let samples = if include_gold { k - 1 } else { k };
    let mut candidates = Vec::with_capacity(k);
    for _ in 0..samples {
        candidates.push(sample_tree(sentence, params, rng)?);
    }
    if include_gold {
        candidates.push(gold_candidate(sentence, gold, params)?);
    }
    for c in &mut candidates {
        c.cost = cost(&c.tree, gold)?;
    }
    Ok(CandidateSet {
        gold: gold.clone(),
        candidates,
    })
}

/// Samples a gold-augmented candidate set and standardizes its costs.
pub fn build_candidate_set(
    sentence: &Sentence,
    gold: &Tree,
    params: &ScorerParams,
    k: usize,
    rng: &mut ChaCha8Rng,
    standardizer: &mut RunningStandardizer,
) -> Result<CandidateSet> {
    let mut set = sample_candidates(sentence, gold, params, k, true, rng)?;
    set.standardize(standardizer)?;
    Ok(set)
}

struct Hypothesis {
    state: ParserState,
    actions: Vec<Action>,
    log_prob: f64,
}

/// Action-level beam search. Unfinished hypotheses compete for `width`
/// slots at each step; finished ones are set aside and the best of them is
/// returned once no unfinished hypothesis can beat it.
pub fn decode_beam(sentence: &Sentence, params: &ScorerParams, width: usize) -> Result<Candidate> {
    if width == 0 {
        return Err(Error::Usage("beam width must be at least 1".into()));
    }
    let system = params.system();
    let mut beam = vec![Hypothesis {
        state: system.initial_state(sentence),
        actions: Vec::new(),
        log_prob: 0.0,
    }];
    let mut best: Option<Hypothesis> = None;
    let bound = system.max_steps(sentence.len());

    while !beam.is_empty() {
        let frontier = beam
            .iter()
            .map(|h| h.log_prob)
            .fold(f64::NEG_INFINITY, f64::max);
        if best.as_ref().is_some_and(|b| b.log_prob >= frontier) {
            break;
        }
        if beam[0].actions.len() >= bound {
            return Err(Error::Transition(format!("beam exceeded {bound} steps")));
        }

        let mut expansions = Vec::new();
        for (h, hyp) in beam.iter().enumerate() {
            let scored = ScoredState::new(&hyp.state, sentence, params)?;
            let dist = scored.distribution();
            for (a, (action, lp)) in dist.actions.into_iter().zip(dist.log_probs).enumerate() {
                expansions.push((h, a, action, hyp.log_prob + lp));
            }
        }
        // Stable: equal scores keep hypothesis order, then action order.
        expansions.sort_by(|x, y| y.3.partial_cmp(&x.3).unwrap_or(Ordering::Equal));

        let mut next = Vec::with_capacity(width);
        for (h, _, action, log_prob) in expansions {
            let parent = &beam[h];
            let finishes = action == Action::Close
                && parent.state.stack().len() == 1
                && parent.state.shifted() == parent.state.sentence_len();
            if !finishes && next.len() >= width {
                continue;
            }
            if finishes && best.as_ref().is_some_and(|b| b.log_prob >= log_prob) {
                continue;
            }
            let mut state = parent.state.clone();
            system.apply_mut(&mut state, &action)?;
            let mut actions = parent.actions.clone();
            actions.push(action);
            let hyp = Hypothesis {
                state,
                actions,
                log_prob,
            };
            if finishes {
                best = Some(hyp);
            } else {
                next.push(hyp);
            }
        }
        beam = next;
    }

    let best = best.ok_or_else(|| Error::Transition("beam search found no derivation".into()))?;
    let tree = best.state.into_tree().expect("finished");
    Ok(Candidate::new(tree, best.actions, best.log_prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::{OpenCaps, TransitionSystem};
    use crate::treebank::{read_tree, Label};

    fn params(labels: &[&str]) -> ScorerParams {
        let system = TransitionSystem::new(labels.iter().map(|l| Label::new(l)), OpenCaps::default());
        ScorerParams::new(system, 12)
    }

    #[test]
    fn forced_derivation_with_tight_caps() {
        let system = TransitionSystem::new(
            [Label::new("X")],
            OpenCaps {
                chain: 1,
                per_word: 0,
                base: 1,
            },
        );
        let p = ScorerParams::new(system, 8);
        let sentence = Sentence::from_line("a").unwrap();
        let mut rng = sentence_rng(3, 0, 0);
        let c = sample_tree(&sentence, &p, &mut rng).unwrap();
        assert_eq!(c.tree, read_tree("(X a)").unwrap().1);
        assert_eq!(c.log_prob, 0.0);
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = params(&["A", "B"]);
        let sentence = Sentence::from_line("w x y z").unwrap();
        let a = sample_tree(&sentence, &p, &mut sentence_rng(7, 1, 2)).unwrap();
        let b = sample_tree(&sentence, &p, &mut sentence_rng(7, 1, 2)).unwrap();
        assert_eq!(a, b);
        a.tree.validate(4).unwrap();
    }

    #[test]
    fn zero_weight_greedy_uses_tie_order() {
        let p = params(&["A", "B"]);
        let sentence = Sentence::from_line("w x").unwrap();
        let c = decode_greedy(&sentence, &p).unwrap();
        // Open(A) first, then Shift wins every tie until the root must close.
        assert_eq!(c.tree, read_tree("(A w x)").unwrap().1);
    }

    #[test]
    fn width_one_matches_greedy() {
        let p = ScorerParams::random(params(&["A", "B"]).system().clone(), 12, 4, 0.5);
        let sentence = Sentence::from_line("w x y").unwrap();
        let greedy = decode_greedy(&sentence, &p).unwrap();
        let beam = decode_beam(&sentence, &p, 1).unwrap();
        assert_eq!(greedy.actions, beam.actions);
        assert!((greedy.log_prob - beam.log_prob).abs() < 1e-12);
    }

    #[test]
    fn candidate_set_shape() {
        let p = params(&["S", "NP", "VP"]);
        let (sentence, gold) = read_tree("(S (NP the cat) (VP sleeps))").unwrap();
        let mut std = RunningStandardizer::new();
        let set = build_candidate_set(&sentence, &gold, &p, 2, &mut sentence_rng(1, 0, 0), &mut std).unwrap();
        assert_eq!(set.candidates.len(), 2);
        assert_eq!(set.candidates.iter().filter(|c| c.is_gold).count(), 1);
        let g = set.candidates.last().unwrap();
        assert!(g.is_gold);
        assert_eq!(g.cost, -1.0);
        assert_eq!(std.count, 2);
        assert!(sample_candidates(&sentence, &gold, &p, 1, true, &mut sentence_rng(1, 0, 0)).is_err());
    }

    #[test]
    fn beam_rejects_zero_width() {
        let p = params(&["A"]);
        let sentence = Sentence::from_line("w").unwrap();
        assert!(decode_beam(&sentence, &p, 0).is_err());
    }

    #[test]
    fn gold_log_prob_matches_sequence() {
        let p = ScorerParams::random(params(&["S", "NP", "VP"]).system().clone(), 12, 9, 0.3);
        let (sentence, gold) = read_tree("(S (NP the cat) (VP sleeps))").unwrap();
        let c = gold_candidate(&sentence, &gold, &p).unwrap();
        assert!(c.log_prob < 0.0);
        assert_eq!(c.log_prob, sequence_log_prob(&sentence, &p, &c.actions).unwrap());
    }
}
