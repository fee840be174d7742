//! Exhaustive enumeration of derivations.
//!
//! Only practical for short sentences with tight Open caps. Used to compute
//! exact expectations and as a brute-force reference for search and the
//! oracle.

use crate::error::Result;
use crate::scorer::{ScoredState, ScorerParams};
use crate::transition::{Action, ParserState, TransitionSystem};
use crate::treebank::{Sentence, Tree};

/// Calls `visit` with every complete derivation reachable from `state`.
/// Actions passed to `visit` are those taken after `state`.
pub fn for_each_completion(
    system: &TransitionSystem,
    state: &ParserState,
    visit: &mut impl FnMut(&[Action], &Tree),
) -> Result<()> {
    let mut path = Vec::new();
    walk(system, state, &mut path, visit)
}

fn walk(
    system: &TransitionSystem,
    state: &ParserState,
    path: &mut Vec<Action>,
    visit: &mut impl FnMut(&[Action], &Tree),
) -> Result<()> {
    if let Some(tree) = state.tree() {
        visit(path, tree);
        return Ok(());
    }
    for action in system.legal_actions(state)? {
        let next = system.apply(state, &action)?;
        path.push(action);
        walk(system, &next, path, visit)?;
        path.pop();
    }
    Ok(())
}

pub fn count_completions(system: &TransitionSystem, state: &ParserState) -> Result<usize> {
    let mut count = 0;
    for_each_completion(system, state, &mut |_, _| count += 1)?;
    Ok(count)
}

/// A derivation with its log probability under a model.
#[derive(Clone, Debug)]
pub struct ScoredDerivation {
    pub actions: Vec<Action>,
    pub tree: Tree,
    pub log_prob: f64,
}

/// Every derivation of `sentence` with its model log probability, in
/// depth-first action order.
pub fn scored_derivations(sentence: &Sentence, params: &ScorerParams) -> Result<Vec<ScoredDerivation>> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    let state = params.system().initial_state(sentence);
    scored_walk(sentence, params, &state, 0.0, &mut path, &mut out)?;
    Ok(out)
}

fn scored_walk(
    sentence: &Sentence,
    params: &ScorerParams,
    state: &ParserState,
    log_prob: f64,
    path: &mut Vec<Action>,
    out: &mut Vec<ScoredDerivation>,
) -> Result<()> {
    if let Some(tree) = state.tree() {
        out.push(ScoredDerivation {
            actions: path.clone(),
            tree: tree.clone(),
            log_prob,
        });
        return Ok(());
    }
    let dist = ScoredState::new(state, sentence, params)?.distribution();
    for (action, lp) in dist.actions.into_iter().zip(dist.log_probs) {
        let next = params.system().apply(state, &action)?;
        path.push(action);
        scored_walk(sentence, params, &next, log_prob + lp, path, out)?;
        path.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::OpenCaps;
    use crate::treebank::Label;

    #[test]
    fn counts_small_instance() {
        // One word, labels {A, B}, at most two opens: X, or X over Y.
        let system = TransitionSystem::new(
            [Label::new("A"), Label::new("B")],
            OpenCaps {
                chain: 2,
                per_word: 0,
                base: 2,
            },
        );
        assert_eq!(count_completions(&system, &ParserState::new(1)).unwrap(), 6);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let system = TransitionSystem::new(
            [Label::new("A"), Label::new("B")],
            OpenCaps {
                chain: 2,
                per_word: 1,
                base: 0,
            },
        );
        let params = ScorerParams::random(system, 10, 1, 0.7);
        let sentence = Sentence::from_line("x y").unwrap();
        let all = scored_derivations(&sentence, &params).unwrap();
        let total: f64 = all.iter().map(|d| d.log_prob.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12, "{total}");
    }
}
