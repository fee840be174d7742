//! Sentences, constituency trees, bracketed I/O and a synthetic treebank
//! generator.
//!
//! Trees are n-ary and labeled; leaves are word positions rather than word
//! strings, so a tree is always interpreted relative to a [`Sentence`].

use std::borrow::Borrow;
use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// A nonterminal label. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: &str) -> Label {
        Label(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Label {
    fn from(name: &str) -> Label {
        Label::new(name)
    }
}

impl Borrow<str> for Label {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Sentence> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::Usage("a sentence needs at least one word".into()));
        }
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::Usage(format!("invalid token {bad:?}")));
        }
        Ok(Sentence { tokens })
    }

    /// Splits a line on whitespace.
    pub fn from_line(line: &str) -> Result<Sentence> {
        Sentence::new(line.split_whitespace().map(unescape_token))
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.tokens[i]
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, token) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&escape_token(token))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Child {
    /// Index of a word in the sentence.
    Word(usize),
    Node(Tree),
}

impl Child {
    pub fn span(&self) -> (usize, usize) {
        match self {
            Child::Word(i) => (*i, i + 1),
            Child::Node(t) => t.span(),
        }
    }
}

/// A labeled constituent with its children. The span is derived from the
/// children and is half-open: `(start, end)` covers words `start..end`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tree {
    label: Label,
    children: Vec<Child>,
    start: usize,
    end: usize,
}

impl Tree {
    /// Builds a node, checking that the children are non-empty and tile a
    /// contiguous span.
    pub fn new(label: Label, children: Vec<Child>) -> Result<Tree> {
        let first = children
            .first()
            .ok_or_else(|| Error::Usage(format!("constituent {label} has no children")))?;
        let start = first.span().0;
        let mut end = start;
        for child in &children {
            let (s, e) = child.span();
            if s != end {
                return Err(Error::Usage(format!(
                    "children of {label} are not contiguous at word {end}"
                )));
            }
            end = e;
        }
        Ok(Tree {
            label,
            children,
            start,
            end,
        })
    }

    /// A node covering `words`, all attached directly.
    pub fn flat(label: Label, words: std::ops::Range<usize>) -> Tree {
        assert!(!words.is_empty(), "flat constituent over an empty range");
        Tree {
            label,
            start: words.start,
            end: words.end,
            children: words.map(Child::Word).collect(),
        }
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn children(&self) -> &[Child] {
        &self.children
    }

    pub fn span(&self) -> (usize, usize) {
        (self.start, self.end)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of internal nodes, this one included.
    pub fn num_nodes(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                Child::Word(_) => 0,
                Child::Node(t) => t.num_nodes(),
            })
            .sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|c| match c {
                Child::Word(_) => 0,
                Child::Node(t) => t.depth(),
            })
            .max()
            .unwrap_or(0)
    }

    /// Visits internal nodes in pre-order.
    pub fn for_each_node<'a>(&'a self, f: &mut impl FnMut(&'a Tree)) {
        f(self);
        for child in &self.children {
            if let Child::Node(t) = child {
                t.for_each_node(f);
            }
        }
    }

    /// Checks that this tree is a complete analysis of a sentence of `n` words.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.span() != (0, n) {
            return Err(Error::Usage(format!(
                "tree spans {:?} but the sentence has {n} words",
                self.span()
            )));
        }
        fn check(t: &Tree) -> Result<()> {
            let mut at = t.start;
            if t.children.is_empty() {
                return Err(Error::Usage(format!("empty constituent {}", t.label)));
            }
            for c in &t.children {
                let (s, e) = c.span();
                if s != at || e <= s {
                    return Err(Error::Usage(format!("bad child span under {}", t.label)));
                }
                if let Child::Node(sub) = c {
                    check(sub)?;
                }
                at = e;
            }
            if at != t.end {
                return Err(Error::Usage(format!("children do not cover {}", t.label)));
            }
            Ok(())
        }
        check(self)
    }
}

/// A labeled span `(label, start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bracket {
    pub label: Label,
    pub start: usize,
    pub end: usize,
}

impl Bracket {
    pub fn new(label: Label, start: usize, end: usize) -> Bracket {
        Bracket { label, start, end }
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.label, self.start, self.end)
    }
}

/// A multiset of brackets. Unary chains with repeated labels produce counts
/// above one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BracketMultiset {
    counts: BTreeMap<Bracket, u32>,
    total: usize,
}

impl BracketMultiset {
    pub fn new() -> BracketMultiset {
        BracketMultiset::default()
    }

    pub fn insert(&mut self, bracket: Bracket) {
        *self.counts.entry(bracket).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn count(&self, bracket: &Bracket) -> u32 {
        self.counts.get(bracket).copied().unwrap_or(0)
    }

    /// Total number of entries, counting multiplicity.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn iter(&self) -> btree_map::Iter<'_, Bracket, u32> {
        self.counts.iter()
    }

    /// Size of the multiset intersection.
    pub fn matched(&self, other: &BracketMultiset) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(b, &c)| c.min(large.count(b)) as usize)
            .sum()
    }
}

impl FromIterator<Bracket> for BracketMultiset {
    fn from_iter<I: IntoIterator<Item = Bracket>>(iter: I) -> Self {
        let mut set = BracketMultiset::new();
        for b in iter {
            set.insert(b);
        }
        set
    }
}

/// All brackets of a tree, one per internal node. The root bracket is
/// skipped when `include_root` is false.
pub fn brackets(tree: &Tree, include_root: bool) -> BracketMultiset {
    let mut set = BracketMultiset::new();
    tree.for_each_node(&mut |node| {
        if include_root || !std::ptr::eq(node, tree) {
            set.insert(Bracket::new(node.label.clone(), node.start, node.end));
        }
    });
    set
}

fn escape_token(token: &str) -> String {
    token.replace('(', "-LRB-").replace(')', "-RRB-")
}

fn unescape_token(token: &str) -> String {
    token.replace("-LRB-", "(").replace("-RRB-", ")")
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    /// Treat `(TAG word)` nodes as part-of-speech preterminals and drop them,
    /// keeping only the word. Off by default; synthetic corpora have no tags.
    pub strip_preterminals: bool,
}

/// Reads every tree in `text` with default options.
pub fn read_bracketed(text: &str) -> Result<Vec<(Sentence, Tree)>> {
    read_bracketed_with(text, ReadOptions::default())
}

pub fn read_bracketed_with(text: &str, options: ReadOptions) -> Result<Vec<(Sentence, Tree)>> {
    let mut reader = SexpReader::new(text);
    let mut out = Vec::new();
    while let Some(sexp) = reader.next_tree()? {
        let mut tokens = Vec::new();
        let tree = convert(&sexp, &mut tokens, options, true)?;
        let tree = match tree {
            Child::Node(t) => t,
            Child::Word(_) => unreachable!("top-level expressions are always lists"),
        };
        out.push((Sentence { tokens }, tree));
    }
    Ok(out)
}

/// Reads exactly one tree.
pub fn read_tree(text: &str) -> Result<(Sentence, Tree)> {
    let mut trees = read_bracketed(text)?;
    match trees.len() {
        1 => Ok(trees.pop().unwrap()),
        n => Err(Error::Usage(format!("expected one tree, found {n}"))),
    }
}

pub fn write_bracketed(tree: &Tree, sentence: &Sentence) -> String {
    let mut out = String::new();
    write_node(tree, sentence, &mut out);
    out
}

fn write_node(tree: &Tree, sentence: &Sentence, out: &mut String) {
    out.push('(');
    out.push_str(tree.label.as_str());
    for child in &tree.children {
        out.push(' ');
        match child {
            Child::Word(i) => out.push_str(&escape_token(sentence.word(*i))),
            Child::Node(t) => write_node(t, sentence, out),
        }
    }
    out.push(')');
}

/// Writes a corpus, one tree per line.
pub fn write_corpus<'a>(trees: impl IntoIterator<Item = &'a (Sentence, Tree)>) -> String {
    let mut out = String::new();
    for (sentence, tree) in trees {
        out.push_str(&write_bracketed(tree, sentence));
        out.push('\n');
    }
    out
}

#[derive(Debug)]
enum Sexp {
    Atom {
        text: String,
    },
    List {
        items: Vec<Sexp>,
        line: usize,
        column: usize,
    },
}

struct SexpReader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> SexpReader<'a> {
    fn new(text: &'a str) -> Self {
        SexpReader {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_space(&mut self) {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        })
    }

    fn next_tree(&mut self) -> Result<Option<Sexp>> {
        self.skip_space();
        match self.chars.peek() {
            None => Ok(None),
            Some('(') => self.list().map(Some),
            Some(_) => self.error("expected '(' at the start of a tree"),
        }
    }

    fn list(&mut self) -> Result<Sexp> {
        let (line, column) = (self.line, self.column);
        self.bump();
        let mut items = Vec::new();
        loop {
            self.skip_space();
            match self.chars.peek() {
                None => {
                    return Err(Error::Parse {
                        line,
                        column,
                        message: "unbalanced parentheses: '(' is never closed".into(),
                    })
                }
                Some(')') => {
                    self.bump();
                    return Ok(Sexp::List {
                        items,
                        line,
                        column,
                    });
                }
                Some('(') => items.push(self.list()?),
                Some(_) => {
                    let mut text = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' {
                            break;
                        }
                        text.push(c);
                        self.bump();
                    }
                    items.push(Sexp::Atom { text });
                }
            }
        }
    }
}

fn convert(
    sexp: &Sexp,
    tokens: &mut Vec<String>,
    options: ReadOptions,
    top: bool,
) -> Result<Child> {
    let (items, line, column) = match sexp {
        Sexp::Atom { text } => {
            tokens.push(unescape_token(text));
            return Ok(Child::Word(tokens.len() - 1));
        }
        Sexp::List {
            items,
            line,
            column,
        } => (items, *line, *column),
    };
    let err = |message: &str| Error::Parse {
        line,
        column,
        message: message.into(),
    };
    match items.as_slice() {
        [] => Err(err("empty constituent")),
        // `( (S ...) )`: the unlabeled wrapper used by treebank files.
        [only @ Sexp::List { .. }] if top => convert(only, tokens, options, true),
        [Sexp::List { .. }, ..] => Err(err("constituent has no label")),
        [Sexp::Atom { .. }] => Err(err("empty constituent")),
        [Sexp::Atom { text: label }, rest @ ..] => {
            if options.strip_preterminals && !top {
                if let [Sexp::Atom { text }] = rest {
                    tokens.push(unescape_token(text));
                    return Ok(Child::Word(tokens.len() - 1));
                }
            }
            let children = rest
                .iter()
                .map(|c| convert(c, tokens, options, false))
                .collect::<Result<Vec<_>>>()?;
            Tree::new(Label::new(label), children)
                .map(Child::Node)
                .map_err(|e| err(&e.to_string()))
        }
    }
}

/// Settings for the synthetic treebank generator.
///
/// Trees are grown top-down under a depth budget. Each label owns a slice of
/// the vocabulary, split into words that begin a constituent and words that
/// continue one, so that bracketing decisions are partly predictable from the
/// words.
#[derive(Clone, Debug, PartialEq)]
pub struct GrammarSpec {
    pub labels: Vec<String>,
    /// Words per label.
    pub vocab_size: usize,
    pub min_length: usize,
    pub max_length: usize,
    /// Maximum number of internal nodes on a root-to-leaf path.
    pub max_depth: usize,
    /// `arity[i]` is the probability that a node has `i + 1` children.
    pub arity: Vec<f64>,
    /// Probability that a single-word part becomes a constituent rather than
    /// a bare word.
    pub unary: f64,
    pub seed: u64,
}

impl Default for GrammarSpec {
    fn default() -> Self {
        GrammarSpec {
            labels: vec!["S".into(), "X".into()],
            vocab_size: 6,
            min_length: 1,
            max_length: 4,
            max_depth: 3,
            arity: vec![0.15, 0.6, 0.25],
            unary: 0.3,
            seed: 1,
        }
    }
}

impl GrammarSpec {
    /// Parses the plain-text `key = value` form. Unset keys keep their
    /// defaults.
    pub fn from_key_values(kv: &KeyValues) -> Result<GrammarSpec> {
        let mut spec = GrammarSpec::default();
        for (key, value) in kv.iter() {
            let bad = || Error::Config(format!("bad value for {key}: {value:?}"));
            match key {
                "labels" => spec.labels = value.split_whitespace().map(String::from).collect(),
                "vocab_size" => spec.vocab_size = value.parse().map_err(|_| bad())?,
                "min_length" => spec.min_length = value.parse().map_err(|_| bad())?,
                "max_length" => spec.max_length = value.parse().map_err(|_| bad())?,
                "max_depth" => spec.max_depth = value.parse().map_err(|_| bad())?,
                "arity" => {
                    spec.arity = value
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad())?
                }
                "unary" => spec.unary = value.parse().map_err(|_| bad())?,
                "seed" => spec.seed = value.parse().map_err(|_| bad())?,
                other => return Err(Error::Config(format!("unknown grammar key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_key_values(&self) -> String {
        let arity: Vec<String> = self.arity.iter().map(|p| p.to_string()).collect();
        format!(
            "labels = {}\nvocab_size = {}\nmin_length = {}\nmax_length = {}\nmax_depth = {}\narity = {}\nunary = {}\nseed = {}\n",
            self.labels.join(" "),
            self.vocab_size,
            self.min_length,
            self.max_length,
            self.max_depth,
            arity.join(" "),
            self.unary,
            self.seed
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.labels.is_empty() {
            return fail("grammar needs at least one label".into());
        }
        for label in &self.labels {
            if label.is_empty() || label.contains(['(', ')']) || label.contains(char::is_whitespace) {
                return fail(format!("invalid label {label:?}"));
            }
        }
        if self.vocab_size < 2 {
            return fail("vocab_size must be at least 2".into());
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return fail(format!(
                "length range {}..={} is empty",
                self.min_length, self.max_length
            ));
        }
        if self.max_depth == 0 {
            return fail("max_depth must be at least 1 to hold a root".into());
        }
        if self.arity.is_empty() || self.arity.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return fail("arity must be a list of probabilities".into());
        }
        let total: f64 = self.arity.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return fail(format!("arity probabilities sum to {total}, not 1"));
        }
        if self.arity.len() == 1 && self.max_depth > 1 && self.max_length > 1 {
            // Every node would have a single child: a chain that never
            // branches cannot cover more than one word before the depth
            // budget runs out.
            return fail("arity must allow more than one child".into());
        }
        if !(0.0..=1.0).contains(&self.unary) {
            return fail("unary must be a probability".into());
        }
        Ok(())
    }
}

/// Generates `count` trees. Output depends only on `spec` (seed included).
pub fn generate_corpus(spec: &GrammarSpec, count: usize) -> Result<Vec<(Sentence, Tree)>> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::Config("corpus size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<Label> = spec.labels.iter().map(|l| Label::new(l)).collect();
    // Per-parent preferences over child labels, fixed by the seed.
    let child_weights: Vec<Vec<f64>> = labels
        .iter()
        .map(|_| labels.iter().map(|_| rng.random_range(0.05..1.0)).collect())
        .collect();
    let generator = Generator {
        spec,
        labels,
        child_weights,
    };
    let mut corpus = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.random_range(spec.min_length..=spec.max_length);
        let mut tokens = Vec::with_capacity(n);
        let tree = generator.node(0, 0, n, 1, &mut tokens, &mut rng);
        debug_assert!(tree.validate(n).is_ok());
        corpus.push((Sentence { tokens }, tree));
    }
    Ok(corpus)
}

struct Generator<'a> {
    spec: &'a GrammarSpec,
    labels: Vec<Label>,
    child_weights: Vec<Vec<f64>>,
}

impl Generator<'_> {
    fn word(&self, label: usize, initial: bool, rng: &mut ChaCha8Rng) -> String {
        let half = self.spec.vocab_size / 2;
        let index = if initial {
            rng.random_range(0..half)
        } else {
            rng.random_range(half..self.spec.vocab_size)
        };
        format!("{}{}", self.labels[label].as_str().to_lowercase(), index)
    }

    fn child_label(&self, parent: usize, rng: &mut ChaCha8Rng) -> usize {
        let weights = &self.child_weights[parent];
        let total: f64 = weights.iter().sum();
        let mut x = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weights.len() - 1
    }

    fn arity(&self, rng: &mut ChaCha8Rng) -> usize {
        let mut x = rng.random::<f64>();
        for (i, p) in self.spec.arity.iter().enumerate() {
            if x < *p {
                return i + 1;
            }
            x -= p;
        }
        self.spec.arity.len()
    }

    fn node(
        &self,
        label: usize,
        start: usize,
        len: usize,
        depth: usize,
        tokens: &mut Vec<String>,
        rng: &mut ChaCha8Rng,
    ) -> Tree {
        let label_name = self.labels[label].clone();
        if depth >= self.spec.max_depth {
            for i in 0..len {
                tokens.push(self.word(label, i == 0, rng));
            }
            return Tree::flat(label_name, start..start + len);
        }
        let parts = self.arity(rng).min(len);
        let sizes = split(len, parts, rng);
        let mut children = Vec::with_capacity(parts);
        let mut at = start;
        for (i, size) in sizes.into_iter().enumerate() {
            // A lone part covering the whole span must be a constituent or
            // the node would be a plain preterminal; that is allowed too.
            let make_node = size > 1 || rng.random::<f64>() < self.spec.unary;
            if make_node {
                let child = self.child_label(label, rng);
                children.push(Child::Node(self.node(child, at, size, depth + 1, tokens, rng)));
            } else {
                tokens.push(self.word(label, i == 0, rng));
                children.push(Child::Word(at));
            }
            at += size;
        }
        Tree {
            label: label_name,
            children,
            start,
            end: start + len,
        }
    }
}

/// Splits `len` into `parts` positive sizes with uniformly chosen cut points.
fn split(len: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let positions: Vec<usize> = (1..len).collect();
    let mut cuts: Vec<usize> = positions
        .choose_multiple(rng, parts - 1)
        .copied()
        .collect();
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(parts);
    let mut prev = 0;
    for cut in cuts.into_iter().chain(std::iter::once(len)) {
        sizes.push(cut - prev);
        prev = cut;
    }
    sizes
}
