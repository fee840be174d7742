//! The top-down Open/Shift/Close transition system.
//!
//! A derivation builds a tree in depth-first pre-order: `Open(label)` pushes
//! a constituent that starts at the next unshifted word, `Shift` attaches
//! that word to the constituent on top of the stack, and `Close` pops the top
//! constituent, ending its span after the last shifted word.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::treebank::{Bracket, BracketMultiset, Child, Label, Sentence, Tree};

/// A parser action. The derived ordering (`Shift`, then `Open` by label,
/// then `Close`) is the tie-breaking order used by decoding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Shift,
    Open(Label),
    Close,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Shift => f.write_str("SHIFT"),
            Action::Open(label) => write!(f, "NT({label})"),
            Action::Close => f.write_str("REDUCE"),
        }
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Action> {
        match s {
            "SHIFT" => Ok(Action::Shift),
            "REDUCE" => Ok(Action::Close),
            _ => s
                .strip_prefix("NT(")
                .and_then(|rest| rest.strip_suffix(')'))
                .filter(|label| !label.is_empty())
                .map(|label| Action::Open(Label::new(label)))
                .ok_or_else(|| Error::Usage(format!("unknown action {s:?}"))),
        }
    }
}

/// Formats actions as whitespace-separated `NT(X)`, `SHIFT`, `REDUCE` tokens.
pub fn format_actions(actions: &[Action]) -> String {
    actions
        .iter()
        .map(Action::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_actions(text: &str) -> Result<Vec<Action>> {
    text.split_whitespace().map(str::parse).collect()
}

/// Bounds on Open actions. Without them a sampler could open constituents
/// forever.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpenCaps {
    /// Maximum number of consecutive Opens without a Shift or Close between.
    pub chain: usize,
    /// Total Opens allowed for an `n`-word sentence: `per_word * n + base`.
    pub per_word: usize,
    pub base: usize,
}

impl Default for OpenCaps {
    fn default() -> Self {
        OpenCaps {
            chain: 8,
            per_word: 4,
            base: 8,
        }
    }
}

impl OpenCaps {
    pub fn total(&self, n: usize) -> usize {
        self.per_word * n + self.base
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenConstituent {
    pub label: Label,
    pub start: usize,
    pub children: Vec<Child>,
}

impl OpenConstituent {
    /// A constituent may close once a word has been shifted since it was
    /// opened, i.e. once it has any child at all.
    pub fn is_closable(&self) -> bool {
        !self.children.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParserState {
    n: usize,
    stack: Vec<OpenConstituent>,
    shifted: usize,
    finished: Option<Tree>,
    produced: BracketMultiset,
    opened: BTreeMap<(Label, usize), u32>,
    consecutive_opens: usize,
    total_opens: usize,
    last_action: Option<Action>,
    steps: usize,
}

impl ParserState {
    /// The initial state for an `n`-word sentence.
    pub fn new(n: usize) -> ParserState {
        assert!(n >= 1, "sentences have at least one word");
        ParserState {
            n,
            stack: Vec::new(),
            shifted: 0,
            finished: None,
            produced: BracketMultiset::new(),
            opened: BTreeMap::new(),
            consecutive_opens: 0,
            total_opens: 0,
            last_action: None,
            steps: 0,
        }
    }

    pub fn sentence_len(&self) -> usize {
        self.n
    }

    /// Number of words consumed; also the index of the next unshifted word.
    pub fn shifted(&self) -> usize {
        self.shifted
    }

    pub fn stack(&self) -> &[OpenConstituent] {
        &self.stack
    }

    pub fn top(&self) -> Option<&OpenConstituent> {
        self.stack.last()
    }

    pub fn is_finished(&self) -> bool {
        self.finished.is_some()
    }

    /// The completed tree, once finished.
    pub fn tree(&self) -> Option<&Tree> {
        self.finished.as_ref()
    }

    pub fn into_tree(self) -> Option<Tree> {
        self.finished
    }

    /// Constituents closed so far.
    pub fn produced(&self) -> &BracketMultiset {
        &self.produced
    }

    /// How many constituents with this label and start have been opened.
    pub fn opened_count(&self, label: &Label, start: usize) -> u32 {
        self.opened
            .get(&(label.clone(), start))
            .copied()
            .unwrap_or(0)
    }

    pub fn consecutive_opens(&self) -> usize {
        self.consecutive_opens
    }

    pub fn total_opens(&self) -> usize {
        self.total_opens
    }

    pub fn last_action(&self) -> Option<&Action> {
        self.last_action.as_ref()
    }

    /// Actions taken to reach this state.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// One-line summary used by the oracle trace.
    pub fn summary(&self) -> String {
        let stack: Vec<String> = self
            .stack
            .iter()
            .map(|c| format!("{}@{}", c.label, c.start))
            .collect();
        format!("stack=[{}] j={}/{}", stack.join(" "), self.shifted, self.n)
    }
}

/// The transition system: a label inventory plus Open caps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    labels: Vec<Label>,
    caps: OpenCaps,
}

impl TransitionSystem {
    /// Labels are sorted and deduplicated so that action order does not
    /// depend on the order they were listed in.
    pub fn new(labels: impl IntoIterator<Item = Label>, caps: OpenCaps) -> TransitionSystem {
        let mut labels: Vec<Label> = labels.into_iter().collect();
        labels.sort();
        labels.dedup();
        TransitionSystem { labels, caps }
    }

    /// The label inventory of a corpus.
    pub fn from_corpus<'a>(
        trees: impl IntoIterator<Item = &'a Tree>,
        caps: OpenCaps,
    ) -> TransitionSystem {
        let mut labels = Vec::new();
        for tree in trees {
            tree.for_each_node(&mut |node| labels.push(node.label().clone()));
        }
        TransitionSystem::new(labels, caps)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn caps(&self) -> OpenCaps {
        self.caps
    }

    pub fn initial_state(&self, sentence: &Sentence) -> ParserState {
        ParserState::new(sentence.len())
    }

    /// Upper bound on the length of any derivation for `n` words.
    pub fn max_steps(&self, n: usize) -> usize {
        n + 2 * self.caps.total(n)
    }

    fn open_allowed(&self, state: &ParserState) -> bool {
        state.shifted < state.n
            && state.consecutive_opens < self.caps.chain
            && state.total_opens < self.caps.total(state.n)
    }

    fn close_allowed(&self, state: &ParserState) -> bool {
        match state.stack.last() {
            Some(top) => {
                top.is_closable() && (state.stack.len() > 1 || state.shifted == state.n)
            }
            None => false,
        }
    }

    /// Legal actions in tie-breaking order.
    pub fn legal_actions(&self, state: &ParserState) -> Result<Vec<Action>> {
        if state.is_finished() {
            return Err(Error::Usage("no actions are legal in a finished state".into()));
        }
        let mut actions = Vec::with_capacity(self.labels.len() + 2);
        if state.shifted < state.n && !state.stack.is_empty() {
            actions.push(Action::Shift);
        }
        if self.open_allowed(state) {
            actions.extend(self.labels.iter().cloned().map(Action::Open));
        }
        if self.close_allowed(state) {
            actions.push(Action::Close);
        }
        debug_assert!(!actions.is_empty(), "dead end at {}", state.summary());
        Ok(actions)
    }

    /// Why `action` is illegal in `state`, if it is.
    pub fn check(&self, state: &ParserState, action: &Action) -> Result<()> {
        let violation = |rule: &str| Err(Error::Transition(format!("{action} {rule}")));
        if state.is_finished() {
            return violation("applied to a finished state");
        }
        match action {
            Action::Shift => {
                if state.shifted >= state.n {
                    return violation("with an empty buffer");
                }
                if state.stack.is_empty() {
                    return violation("with no open constituent");
                }
            }
            Action::Open(label) => {
                if self.labels.binary_search(label).is_err() {
                    return violation("uses a label outside the inventory");
                }
                if state.shifted >= state.n {
                    return violation("with an empty buffer");
                }
                if state.consecutive_opens >= self.caps.chain {
                    return violation("exceeds the consecutive-open cap");
                }
                if state.total_opens >= self.caps.total(state.n) {
                    return violation("exceeds the total-open cap");
                }
            }
            Action::Close => match state.stack.last() {
                None => return violation("with no open constituent"),
                Some(top) if !top.is_closable() => {
                    return violation("on a constituent with no words")
                }
                Some(_) if state.stack.len() == 1 && state.shifted < state.n => {
                    return violation("on the root before the buffer is empty")
                }
                Some(_) => {}
            },
        }
        Ok(())
    }

    pub fn apply(&self, state: &ParserState, action: &Action) -> Result<ParserState> {
        let mut next = state.clone();
        self.apply_mut(&mut next, action)?;
        Ok(next)
    }

    pub fn apply_mut(&self, state: &mut ParserState, action: &Action) -> Result<()> {
        self.check(state, action)?;
        match action {
            Action::Open(label) => {
                state.stack.push(OpenConstituent {
                    label: label.clone(),
                    start: state.shifted,
                    children: Vec::new(),
                });
                *state
                    .opened
                    .entry((label.clone(), state.shifted))
                    .or_insert(0) += 1;
                state.consecutive_opens += 1;
                state.total_opens += 1;
            }
            Action::Shift => {
                let top = state.stack.last_mut().expect("checked");
                top.children.push(Child::Word(state.shifted));
                state.shifted += 1;
                state.consecutive_opens = 0;
            }
            Action::Close => {
                let top = state.stack.pop().expect("checked");
                state
                    .produced
                    .insert(Bracket::new(top.label.clone(), top.start, state.shifted));
                let node = Tree::new(top.label, top.children).expect("children are contiguous");
                match state.stack.last_mut() {
                    Some(parent) => parent.children.push(Child::Node(node)),
                    None => state.finished = Some(node),
                }
                state.consecutive_opens = 0;
            }
        }
        state.last_action = Some(action.clone());
        state.steps += 1;
        Ok(())
    }

    /// Runs `actions` from the initial state and returns the finished tree.
    pub fn actions_to_tree(&self, sentence: &Sentence, actions: &[Action]) -> Result<Tree> {
        let mut state = self.initial_state(sentence);
        for action in actions {
            self.apply_mut(&mut state, action)?;
        }
        state.into_tree().ok_or_else(|| {
            Error::Transition(format!(
                "{} actions leave the derivation unfinished",
                actions.len()
            ))
        })
    }
}

/// The canonical pre-order linearization of a tree.
pub fn tree_to_actions(tree: &Tree) -> Vec<Action> {
    fn walk(tree: &Tree, out: &mut Vec<Action>) {
        out.push(Action::Open(tree.label().clone()));
        for child in tree.children() {
            match child {
                Child::Word(_) => out.push(Action::Shift),
                Child::Node(t) => walk(t, out),
            }
        }
        out.push(Action::Close);
    }
    let mut out = Vec::with_capacity(3 * tree.num_nodes());
    walk(tree, &mut out);
    out
}
