#![allow(dead_code)]

use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use topdown::transition::{Action, ParserState, TransitionSystem};
use topdown::treebank::{read_bracketed, Child, Label, Sentence, Tree};

pub type Corpus = Vec<(Sentence, Tree)>;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn data_text(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap()
}

pub fn load(name: &str) -> Corpus {
    read_bracketed(&data_text(name)).unwrap()
}

pub fn synthetic_train() -> Corpus {
    load("synthetic.train")
}

pub fn handwritten() -> Corpus {
    load("handwritten.trees")
}

/// Applies up to `len` uniformly chosen legal actions. Returns `None` when
/// the derivation finishes first.
pub fn random_prefix(
    system: &TransitionSystem,
    sentence: &Sentence,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(ParserState, Vec<Action>)> {
    let mut state = system.initial_state(sentence);
    let mut actions = Vec::new();
    for _ in 0..len {
        if state.is_finished() {
            return None;
        }
        let legal = system.legal_actions(&state).unwrap();
        let a = legal.choose(rng).unwrap().clone();
        system.apply_mut(&mut state, &a).unwrap();
        actions.push(a);
    }
    if state.is_finished() {
        None
    } else {
        Some((state, actions))
    }
}

/// Every `(label, start, end)` of a tree as a plain list, root included.
pub fn naive_spans(tree: &Tree, out: &mut Vec<(String, usize, usize)>) {
    out.push((tree.label().as_str().to_string(), tree.start(), tree.end()));
    for c in tree.children() {
        if let Child::Node(t) = c {
            naive_spans(t, out);
        }
    }
}

/// Matched bracket count by deleting each matched gold span from a list.
pub fn naive_matched(pred: &[(String, usize, usize)], gold: &[(String, usize, usize)]) -> usize {
    let mut remaining = gold.to_vec();
    let mut matched = 0;
    for p in pred {
        if let Some(i) = remaining.iter().position(|g| g == p) {
            remaining.swap_remove(i);
            matched += 1;
        }
    }
    matched
}

/// A random tree over words `start..end` with labels from `labels`. Unary
/// chains and repeated brackets are common.
pub fn random_tree(labels: &[&str], start: usize, end: usize, depth: usize, rng: &mut ChaCha8Rng) -> Tree {
    let label = Label::new(labels.choose(rng).unwrap());
    let len = end - start;
    if depth == 0 || (len == 1 && rng.random_bool(0.5)) {
        return Tree::flat(label, start..end);
    }
    let mut children = Vec::new();
    let mut at = start;
    while at < end {
        let size = rng.random_range(1..=end - at);
        if size == 1 && rng.random_bool(0.5) {
            children.push(Child::Word(at));
        } else {
            children.push(Child::Node(random_tree(labels, at, at + size, depth - 1, rng)));
        }
        at += size;
    }
    Tree::new(label, children).unwrap()
}

pub fn sentence_of(n: usize) -> Sentence {
    Sentence::new((0..n).map(|i| format!("w{i}"))).unwrap()
}
