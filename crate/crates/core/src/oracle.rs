//! A dynamic oracle for the top-down transition system.
//!
//! Given any reachable parser state and the gold tree, the oracle picks a
//! single action meant to lead to the best tree still reachable. The rules,
//! checked in order:
//!
//! 0. If every word has been shifted, `Close` (nothing else is legal).
//! 1. If the top constituent can close, close it when that produces a gold
//!    constituent not yet produced, or when no gold constituent with the same
//!    label and start ends later.
//! 2. Otherwise open the outermost gold constituent starting at the next
//!    unshifted word that has not been opened yet.
//! 3. Otherwise shift.
//!
//! The oracle is exact on the gold path but makes no optimality claim from
//! arbitrary states.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::transition::{Action, ParserState, TransitionSystem};
use crate::treebank::{brackets, Bracket, BracketMultiset, Label, Tree};

/// Gold constituents grouped by start position.
#[derive(Clone, Debug)]
pub struct GoldIndex {
    /// `by_start[i]` holds every gold bracket starting at word `i`,
    /// outermost first: descending end, then gold pre-order.
    by_start: Vec<Vec<Bracket>>,
    all: BracketMultiset,
}

impl GoldIndex {
    pub fn new(gold: &Tree) -> GoldIndex {
        let n = gold.end();
        let mut by_start: Vec<Vec<(usize, Bracket)>> = vec![Vec::new(); n];
        let mut order = 0;
        gold.for_each_node(&mut |node| {
            by_start[node.start()].push((
                order,
                Bracket::new(node.label().clone(), node.start(), node.end()),
            ));
            order += 1;
        });
        let by_start = by_start
            .into_iter()
            .map(|mut list| {
                list.sort_by(|(oa, a), (ob, b)| b.end.cmp(&a.end).then(oa.cmp(ob)));
                list.into_iter().map(|(_, b)| b).collect()
            })
            .collect();
        GoldIndex {
            by_start,
            all: brackets(gold, true),
        }
    }

    pub fn sentence_len(&self) -> usize {
        self.by_start.len()
    }

    pub fn starting_at(&self, i: usize) -> &[Bracket] {
        &self.by_start[i]
    }

    pub fn brackets(&self) -> &BracketMultiset {
        &self.all
    }
}

/// Which oracle rule chose the action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    BufferEmpty = 0,
    Close = 1,
    Open = 2,
    Shift = 3,
}

impl Rule {
    pub fn id(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub action: Action,
    pub rule: Rule,
    /// Rule 2 wanted to open a constituent but the Open caps (or the label
    /// inventory) forbade it.
    pub capped: bool,
}

/// The oracle action for `state`, with the rule that produced it.
pub fn oracle_decision(
    system: &TransitionSystem,
    state: &ParserState,
    gold: &GoldIndex,
) -> Result<Decision> {
    if state.is_finished() {
        return Err(Error::Usage("the oracle was asked about a finished state".into()));
    }
    if state.sentence_len() != gold.sentence_len() {
        return Err(Error::Usage(format!(
            "state is over {} words but the gold tree covers {}",
            state.sentence_len(),
            gold.sentence_len()
        )));
    }
    let j = state.shifted();
    let decide = |action, rule| Decision {
        action,
        rule,
        capped: false,
    };
    if j == state.sentence_len() {
        return Ok(decide(Action::Close, Rule::BufferEmpty));
    }

    if let Some(top) = state.top() {
        // The root may not close before the buffer is empty.
        if top.is_closable() && state.stack().len() > 1 {
            let here = Bracket::new(top.label.clone(), top.start, j);
            let unproduced = gold.all.count(&here) > state.produced().count(&here);
            let later = gold.by_start[top.start]
                .iter()
                .any(|b| b.label == top.label && b.end > j);
            if unproduced || !later {
                return Ok(decide(Action::Close, Rule::Close));
            }
        }
    }

    let mut capped = false;
    if let Some(label) = next_unopened(state, &gold.by_start[j]) {
        let open = Action::Open(label.clone());
        if system.check(state, &open).is_ok() {
            return Ok(decide(open, Rule::Open));
        }
        capped = true;
    }

    Ok(Decision {
        action: Action::Shift,
        rule: Rule::Shift,
        capped,
    })
}

/// Matches constituents already opened at this position to gold brackets
/// outermost-first, label by label, and returns the label of the outermost
/// gold bracket left unmatched.
fn next_unopened<'a>(state: &ParserState, starting_here: &'a [Bracket]) -> Option<&'a Label> {
    let mut opened: HashMap<&Label, u32> = HashMap::new();
    for b in starting_here {
        let remaining = opened
            .entry(&b.label)
            .or_insert_with(|| state.opened_count(&b.label, b.start));
        if *remaining == 0 {
            return Some(&b.label);
        }
        *remaining -= 1;
    }
    None
}

pub fn oracle_action(
    system: &TransitionSystem,
    state: &ParserState,
    gold: &GoldIndex,
) -> Result<Action> {
    oracle_decision(system, state, gold).map(|d| d.action)
}

/// Follows the oracle from `state` to a finished tree.
pub fn oracle_completion(
    system: &TransitionSystem,
    state: &ParserState,
    gold: &GoldIndex,
) -> Result<(Vec<Action>, Tree)> {
    let mut state = state.clone();
    let mut actions = Vec::new();
    let bound = system.max_steps(state.sentence_len());
    while !state.is_finished() {
        if state.steps() >= bound {
            return Err(Error::Transition(format!(
                "oracle completion exceeded {bound} steps"
            )));
        }
        let action = oracle_action(system, &state, gold)?;
        system.apply_mut(&mut state, &action)?;
        actions.push(action);
    }
    Ok((actions, state.into_tree().expect("finished")))
}
