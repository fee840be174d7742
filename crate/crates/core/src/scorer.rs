//! A featurized log-linear action model.
//!
//! Each legal action `a` in state `s` gets a score `z(a, s) = θ · φ(s, a)`,
//! where `φ` conjoins a set of state templates with the action and hashes
//! the result into a fixed number of buckets. Probabilities are a softmax
//! over legal actions only. The softmax-margin variant adds one to the score
//! of every action other than the oracle action before normalizing.

use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};

use fnv::{FnvHashMap, FnvHasher};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::transition::{Action, OpenCaps, ParserState, TransitionSystem};
use crate::treebank::{Label, Sentence};

/// Bumped whenever the feature templates change; model files record it.
pub const TEMPLATE_VERSION: u32 = 1;

pub const DEFAULT_HASH_BITS: u32 = 22;

const MODEL_MAGIC: &str = "topdown-model";
const MODEL_FORMAT: u32 = 1;

/// State templates. Every template is conjoined with the action being scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    Bias,
    TopLabel,
    TopLabelClosable,
    SecondLabel,
    TopTwoLabels,
    TopWidth,
    TopStartsSentence,
    NextWord,
    SecondWord,
    NextWordTopLabel,
    NextWordClosable,
    LastWordTopLabel,
    StackHeight,
    OpenChain,
    LastAction,
    LastActionTopLabel,
    Remaining,
}

impl Template {
    /// Whether the template looks at words still in the buffer.
    pub fn reads_buffer(self) -> bool {
        matches!(
            self,
            Template::NextWord
                | Template::SecondWord
                | Template::NextWordTopLabel
                | Template::NextWordClosable
        )
    }
}

const NONE: &str = "<none>";
const END: &str = "</s>";

fn hash_of(parts: impl Hash) -> u64 {
    let mut h = FnvHasher::default();
    parts.hash(&mut h);
    h.finish()
}

/// Hashes of the state templates that fire in `state`.
pub fn state_templates(state: &ParserState, sentence: &Sentence) -> Vec<(Template, u64)> {
    let stack = state.stack();
    let top = stack.last();
    let second = stack.len().checked_sub(2).map(|i| &stack[i]);
    let label = |c: Option<&crate::transition::OpenConstituent>| {
        c.map_or(NONE, |c| c.label.as_str()).to_string()
    };
    let top_label = label(top);
    let j = state.shifted();
    let n = state.sentence_len();
    let w0 = if j < n { sentence.word(j) } else { END };
    let w1 = if j + 1 < n { sentence.word(j + 1) } else { END };
    let w_prev = if j > 0 { sentence.word(j - 1) } else { NONE };
    let closable = top.is_some_and(|c| c.is_closable());
    let width = top.map_or(0, |c| (j - c.start).min(4));
    let last = state.last_action().map_or(NONE.to_string(), Action::to_string);

    use Template::*;
    vec![
        (Bias, hash_of(Bias)),
        (TopLabel, hash_of((TopLabel, &top_label))),
        (TopLabelClosable, hash_of((TopLabelClosable, &top_label, closable))),
        (SecondLabel, hash_of((SecondLabel, label(second)))),
        (TopTwoLabels, hash_of((TopTwoLabels, &top_label, label(second)))),
        (TopWidth, hash_of((TopWidth, width))),
        (TopStartsSentence, hash_of((TopStartsSentence, top.map(|c| c.start == 0)))),
        (NextWord, hash_of((NextWord, w0))),
        (SecondWord, hash_of((SecondWord, w1))),
        (NextWordTopLabel, hash_of((NextWordTopLabel, w0, &top_label))),
        (NextWordClosable, hash_of((NextWordClosable, w0, closable))),
        (LastWordTopLabel, hash_of((LastWordTopLabel, w_prev, &top_label))),
        (StackHeight, hash_of((StackHeight, stack.len().min(5)))),
        (OpenChain, hash_of((OpenChain, state.consecutive_opens().min(4)))),
        (LastAction, hash_of((LastAction, &last))),
        (LastActionTopLabel, hash_of((LastActionTopLabel, &last, &top_label))),
        (Remaining, hash_of((Remaining, (n - j).min(4)))),
    ]
}

fn action_key(action: &Action) -> u64 {
    match action {
        Action::Shift => hash_of(0u8),
        Action::Close => hash_of(1u8),
        Action::Open(label) => hash_of((2u8, label.as_str())),
    }
}

/// Sparse vector over feature buckets, sorted by bucket with duplicates
/// merged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> FeatureVector {
        entries.sort_by_key(|(id, _)| *id);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (id, v) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == id => *acc += v,
                _ => merged.push((id, v)),
            }
        }
        merged.retain(|(_, v)| *v != 0.0);
        FeatureVector { entries: merged }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn get(&self, id: u32) -> f64 {
        self.entries
            .binary_search_by_key(&id, |(i, _)| *i)
            .map_or(0.0, |at| self.entries[at].1)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

/// Feature vectors for the legal actions of a state, aligned with the
/// action list.
pub fn featurize(
    state: &ParserState,
    sentence: &Sentence,
    params: &ScorerParams,
) -> Result<Vec<(Action, FeatureVector)>> {
    let scored = ScoredState::new(state, sentence, params)?;
    Ok(scored
        .actions
        .into_iter()
        .zip(scored.features)
        .map(|(a, ids)| {
            let fv = FeatureVector::from_entries(ids.into_iter().map(|id| (id, 1.0)).collect());
            (a, fv)
        })
        .collect())
}

/// Model weights plus the transition system they were trained for.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerParams {
    system: TransitionSystem,
    hash_bits: u32,
    weights: Vec<f64>,
}

impl ScorerParams {
    /// All-zero weights.
    pub fn new(system: TransitionSystem, hash_bits: u32) -> ScorerParams {
        assert!((1..=30).contains(&hash_bits), "hash_bits out of range");
        ScorerParams {
            system,
            hash_bits,
            weights: vec![0.0; 1 << hash_bits],
        }
    }

    /// Gaussian weights with standard deviation `scale`, fully determined by
    /// `seed`.
    pub fn random(system: TransitionSystem, hash_bits: u32, seed: u64, scale: f64) -> ScorerParams {
        let mut params = ScorerParams::new(system, hash_bits);
        if scale > 0.0 {
            let normal = Normal::new(0.0, scale).expect("positive scale");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for w in &mut params.weights {
                *w = normal.sample(&mut rng);
            }
        }
        params
    }

    pub fn system(&self) -> &TransitionSystem {
        &self.system
    }

    pub fn labels(&self) -> &[Label] {
        self.system.labels()
    }

    pub fn hash_bits(&self) -> u32 {
        self.hash_bits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, id: u32) -> f64 {
        self.weights[id as usize]
    }

    pub fn set_weight(&mut self, id: u32, value: f64) {
        self.weights[id as usize] = value;
    }

    fn bucket(&self, base: u64, action: u64) -> u32 {
        let mixed = base ^ action.rotate_left(29).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mixed = mixed ^ (mixed >> 31);
        (mixed & ((1u64 << self.hash_bits) - 1)) as u32
    }

    /// `θ ← θ − rate · g`.
    pub fn descend(&mut self, gradient: &Gradient, rate: f64) {
        for (&id, &g) in &gradient.0 {
            self.weights[id as usize] -= rate * g;
        }
    }

    pub fn save(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{MODEL_MAGIC} {MODEL_FORMAT}")?;
        writeln!(out, "template_version {TEMPLATE_VERSION}")?;
        writeln!(out, "hash_bits {}", self.hash_bits)?;
        let labels: Vec<&str> = self.labels().iter().map(Label::as_str).collect();
        writeln!(out, "labels {}", labels.join(" "))?;
        let caps = self.system.caps();
        writeln!(out, "open_caps {} {} {}", caps.chain, caps.per_word, caps.base)?;
        let nonzero = self.weights.iter().filter(|w| **w != 0.0).count();
        writeln!(out, "weights {nonzero}")?;
        for (id, w) in self.weights.iter().enumerate() {
            if *w != 0.0 {
                writeln!(out, "{id} {w}")?;
            }
        }
        Ok(())
    }

    pub fn load(input: impl BufRead) -> Result<ScorerParams> {
        let mut lines = input.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Model(format!("missing {key} line")))??;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| Error::Model(format!("expected {key}, found {line:?}")))
        };
        let format = header(MODEL_MAGIC)?;
        if format != MODEL_FORMAT.to_string() {
            return Err(Error::Model(format!("unsupported model format {format}")));
        }
        let version = header("template_version")?;
        if version != TEMPLATE_VERSION.to_string() {
            return Err(Error::Model(format!(
                "model uses feature templates v{version}, this build has v{TEMPLATE_VERSION}"
            )));
        }
        let bad = |what: &str| Error::Model(format!("bad {what}"));
        let hash_bits: u32 = header("hash_bits")?.parse().map_err(|_| bad("hash_bits"))?;
        if !(1..=30).contains(&hash_bits) {
            return Err(bad("hash_bits"));
        }
        let labels: Vec<Label> = header("labels")?.split_whitespace().map(Label::new).collect();
        let caps: Vec<usize> = header("open_caps")?
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("open_caps"))?;
        let [chain, per_word, base] = caps[..] else {
            return Err(bad("open_caps"));
        };
        let count: usize = header("weights")?.parse().map_err(|_| bad("weight count"))?;
        let system = TransitionSystem::new(labels, OpenCaps { chain, per_word, base });
        let mut params = ScorerParams::new(system, hash_bits);
        for _ in 0..count {
            let line = lines.next().ok_or_else(|| bad("weight list (truncated)"))??;
            let (id, w) = line.split_once(' ').ok_or_else(|| bad("weight line"))?;
            let id: usize = id.parse().map_err(|_| bad("weight id"))?;
            let w: f64 = w.parse().map_err(|_| bad("weight value"))?;
            if id >= params.weights.len() || !w.is_finite() {
                return Err(bad("weight entry"));
            }
            params.weights[id] = w;
        }
        Ok(params)
    }
}

/// Sparse gradient accumulator over feature buckets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradient(pub FnvHashMap<u32, f64>);

impl Gradient {
    pub fn new() -> Gradient {
        Gradient::default()
    }

    pub fn get(&self, id: u32) -> f64 {
        self.0.get(&id).copied().unwrap_or(0.0)
    }

    pub fn add(&mut self, id: u32, value: f64) {
        *self.0.entry(id).or_insert(0.0) += value;
    }

    pub fn add_vector(&mut self, v: &FeatureVector, scale: f64) {
        for &(id, x) in v.entries() {
            self.add(id, scale * x);
        }
    }

    pub fn merge(&mut self, other: &Gradient, scale: f64) {
        for (&id, &x) in &other.0 {
            self.add(id, scale * x);
        }
    }

    pub fn to_vector(&self) -> FeatureVector {
        FeatureVector::from_entries(self.0.iter().map(|(&id, &x)| (id, x)).collect())
    }
}

/// A probability distribution over the legal actions of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionDistribution {
    pub actions: Vec<Action>,
    pub log_probs: Vec<f64>,
}

impl ActionDistribution {
    fn from_scores(actions: Vec<Action>, scores: &[f64]) -> ActionDistribution {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        ActionDistribution {
            actions,
            log_probs: scores.iter().map(|s| s - log_z).collect(),
        }
    }

    pub fn index_of(&self, action: &Action) -> Option<usize> {
        self.actions.iter().position(|a| a == action)
    }

    pub fn log_prob(&self, action: &Action) -> Option<f64> {
        self.index_of(action).map(|i| self.log_probs[i])
    }

    /// Probability of `action`; zero for actions outside the support.
    pub fn prob(&self, action: &Action) -> f64 {
        self.log_prob(action).map_or(0.0, f64::exp)
    }

    /// Most probable action, earliest in action order on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, lp) in self.log_probs.iter().enumerate() {
            if *lp > self.log_probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let mut x: f64 = rng.random();
        for (i, lp) in self.log_probs.iter().enumerate() {
            let p = lp.exp();
            if x < p {
                return i;
            }
            x -= p;
        }
        // Rounding left a sliver of mass unassigned; give it to the last
        // action with nonzero probability.
        self.log_probs
            .iter()
            .rposition(|lp| lp.exp() > 0.0)
            .unwrap_or(self.log_probs.len() - 1)
    }
}

/// A state together with its legal actions, their feature buckets and raw
/// scores. Lets training compute several distributions and gradients
/// without featurizing twice.
#[derive(Clone, Debug)]
pub struct ScoredState {
    pub actions: Vec<Action>,
    features: Vec<Vec<u32>>,
    scores: Vec<f64>,
}

impl ScoredState {
    pub fn new(state: &ParserState, sentence: &Sentence, params: &ScorerParams) -> Result<ScoredState> {
        let actions = params.system.legal_actions(state)?;
        let templates = state_templates(state, sentence);
        let features: Vec<Vec<u32>> = actions
            .iter()
            .map(|a| {
                let key = action_key(a);
                templates.iter().map(|(_, base)| params.bucket(*base, key)).collect()
            })
            .collect();
        let scores = features
            .iter()
            .map(|ids| ids.iter().map(|&id| params.weight(id)).sum())
            .collect();
        Ok(ScoredState {
            actions,
            features,
            scores,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn distribution(&self) -> ActionDistribution {
        ActionDistribution::from_scores(self.actions.clone(), &self.scores)
    }

    /// Softmax with a cost of one added to every action except `oracle`.
    pub fn margin_distribution(&self, oracle: &Action) -> Result<ActionDistribution> {
        self.margin_distribution_with(oracle, 1.0)
    }

    /// Softmax with `margin` added to every action except `oracle`. A zero
    /// margin gives the plain distribution.
    pub fn margin_distribution_with(&self, oracle: &Action, margin: f64) -> Result<ActionDistribution> {
        let target = self.index_of_legal(oracle)?;
        let scores: Vec<f64> = self
            .scores
            .iter()
            .enumerate()
            .map(|(i, s)| if i == target { *s } else { s + margin })
            .collect();
        Ok(ActionDistribution::from_scores(self.actions.clone(), &scores))
    }

    pub fn index_of_legal(&self, action: &Action) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a == action)
            .ok_or_else(|| Error::Usage(format!("{action} is not legal in this state")))
    }

    /// Adds `scale · ∇ log p(actions[target])` under `dist` to `grad`.
    ///
    /// `dist` must come from this state (either variant); the gradient of a
    /// log-linear model is the same expression for both because the margin
    /// term does not depend on the weights.
    pub fn accumulate_grad_log_prob(
        &self,
        dist: &ActionDistribution,
        target: usize,
        scale: f64,
        grad: &mut Gradient,
    ) {
        for &id in &self.features[target] {
            grad.add(id, scale);
        }
        for (ids, lp) in self.features.iter().zip(&dist.log_probs) {
            let p = lp.exp();
            if p == 0.0 {
                continue;
            }
            for &id in ids {
                grad.add(id, -scale * p);
            }
        }
    }
}

pub fn score(state: &ParserState, sentence: &Sentence, params: &ScorerParams) -> Result<ActionDistribution> {
    Ok(ScoredState::new(state, sentence, params)?.distribution())
}

pub fn score_margin(
    state: &ParserState,
    sentence: &Sentence,
    params: &ScorerParams,
    oracle_action: &Action,
) -> Result<ActionDistribution> {
    ScoredState::new(state, sentence, params)?.margin_distribution(oracle_action)
}

/// Which action distribution a log-probability refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Objective {
    Likelihood,
    /// Softmax margin against the given oracle action.
    Margin(Action),
}

/// `∇_θ log p(action | state)`: `φ(s, a) − Σ_a' p(a' | s) φ(s, a')`.
pub fn grad_log_prob(
    state: &ParserState,
    sentence: &Sentence,
    params: &ScorerParams,
    action: &Action,
    objective: &Objective,
) -> Result<FeatureVector> {
    let scored = ScoredState::new(state, sentence, params)?;
    let target = scored.index_of_legal(action)?;
    let dist = match objective {
        Objective::Likelihood => scored.distribution(),
        Objective::Margin(oracle) => scored.margin_distribution(oracle)?,
    };
    let mut grad = Gradient::new();
    scored.accumulate_grad_log_prob(&dist, target, 1.0, &mut grad);
    Ok(grad.to_vector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::parse_actions;

    fn params() -> ScorerParams {
        let system = TransitionSystem::new(
            ["S", "NP", "VP"].map(Label::new),
            OpenCaps::default(),
        );
        ScorerParams::new(system, 16)
    }

    fn state_after(params: &ScorerParams, n: usize, prefix: &str) -> ParserState {
        let mut state = ParserState::new(n);
        for a in parse_actions(prefix).unwrap() {
            params.system().apply_mut(&mut state, &a).unwrap();
        }
        state
    }

    fn sentence() -> Sentence {
        Sentence::from_line("the cat sleeps").unwrap()
    }

    #[test]
    fn zero_weights_give_uniform() {
        let p = params();
        let state = state_after(&p, 3, "NT(S)");
        let dist = score(&state, &sentence(), &p).unwrap();
        let expected = -(dist.actions.len() as f64).ln();
        for lp in &dist.log_probs {
            assert!((lp - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn single_legal_action_has_log_prob_zero() {
        let p = params();
        let state = state_after(&p, 1, "NT(S) SHIFT");
        let dist = score(&state, &Sentence::from_line("a").unwrap(), &p).unwrap();
        assert_eq!(dist.actions, vec![Action::Close]);
        assert_eq!(dist.log_probs, vec![0.0]);
        let margin = score_margin(&state, &Sentence::from_line("a").unwrap(), &p, &Action::Close).unwrap();
        assert_eq!(margin.log_probs, vec![0.0]);
        let g = grad_log_prob(
            &state,
            &Sentence::from_line("a").unwrap(),
            &p,
            &Action::Close,
            &Objective::Likelihood,
        )
        .unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn two_action_softmax_values() {
        let dist = ActionDistribution::from_scores(vec![Action::Shift, Action::Close], &[2.0, 0.0]);
        assert!((dist.prob(&Action::Shift) - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert!((dist.prob(&Action::Close) - 0.119_202_922_022_117_6).abs() < 1e-12);
    }

    #[test]
    fn margin_values() {
        let scored = ScoredState {
            actions: vec![Action::Shift, Action::Close],
            features: vec![vec![], vec![]],
            scores: vec![2.0, 0.0],
        };
        let dist = scored.margin_distribution(&Action::Shift).unwrap();
        assert!((dist.prob(&Action::Shift) - 0.731_058_578_630_004_9).abs() < 1e-12);
        assert!((dist.prob(&Action::Close) - 0.268_941_421_369_995_1).abs() < 1e-12);

        let uniform = ScoredState {
            actions: vec![Action::Shift, Action::Close],
            features: vec![vec![], vec![]],
            scores: vec![0.0, 0.0],
        };
        let d = uniform.margin_distribution(&Action::Shift).unwrap();
        let e = std::f64::consts::E;
        assert!((d.prob(&Action::Shift) - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!(uniform.margin_distribution(&Action::Open(Label::new("S"))).is_err());
    }

    #[test]
    fn illegal_actions_are_masked() {
        let p = params();
        let state = ParserState::new(3);
        let dist = score(&state, &sentence(), &p).unwrap();
        assert_eq!(dist.prob(&Action::Shift), 0.0);
        assert_eq!(dist.prob(&Action::Close), 0.0);
        assert!(score_margin(&state, &sentence(), &p, &Action::Shift).is_err());
    }

    #[test]
    fn empty_stack_indicator() {
        let p = params();
        let templates = state_templates(&ParserState::new(3), &sentence());
        let top = templates.iter().find(|(t, _)| *t == Template::TopLabel).unwrap();
        assert_eq!(top.1, hash_of((Template::TopLabel, NONE.to_string())));
        let again = featurize(&ParserState::new(3), &sentence(), &p).unwrap();
        assert_eq!(again, featurize(&ParserState::new(3), &sentence(), &p).unwrap());
        assert_eq!(again.len(), 3);
    }

    #[test]
    fn buffer_words_only_touch_word_templates() {
        let p = params();
        let state = state_after(&p, 3, "NT(S) SHIFT");
        let a = state_templates(&state, &Sentence::from_line("the cat sleeps").unwrap());
        let b = state_templates(&state, &Sentence::from_line("the dog sleeps").unwrap());
        for ((ta, ha), (tb, hb)) in a.iter().zip(&b) {
            assert_eq!(ta, tb);
            if ta.reads_buffer() {
                if *ta != Template::SecondWord {
                    assert_ne!(ha, hb, "{ta:?}");
                }
            } else {
                assert_eq!(ha, hb, "{ta:?}");
            }
        }
    }

    #[test]
    fn action_independent_features_cancel() {
        let scored = ScoredState {
            actions: vec![Action::Shift, Action::Close],
            features: vec![vec![7, 9], vec![7, 9]],
            scores: vec![0.0, 0.0],
        };
        let mut g = Gradient::new();
        scored.accumulate_grad_log_prob(&scored.distribution(), 0, 1.0, &mut g);
        assert!(g.to_vector().is_zero());
    }

    #[test]
    fn model_round_trip() {
        let mut p = params();
        p.set_weight(3, 0.125);
        p.set_weight(65535, -1.0 / 3.0);
        let mut buf = Vec::new();
        p.save(&mut buf).unwrap();
        let loaded = ScorerParams::load(&buf[..]).unwrap();
        assert_eq!(loaded, p);
    }

    #[test]
    fn rejects_other_template_version() {
        let mut buf = Vec::new();
        params().save(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace(
            &format!("template_version {TEMPLATE_VERSION}"),
            "template_version 999",
        );
        assert!(matches!(
            ScorerParams::load(text.as_bytes()),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn random_init_is_seeded() {
        let system = params().system().clone();
        let a = ScorerParams::random(system.clone(), 10, 5, 0.1);
        let b = ScorerParams::random(system.clone(), 10, 5, 0.1);
        let c = ScorerParams::random(system, 10, 6, 0.1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
