//! Training procedures.
//!
//! All five procedures share one loop: shuffle, split into mini-batches,
//! build per-sentence supervision, accumulate a gradient of the loss and
//! take a descent step. They differ in which states are supervised and with
//! what target:
//!
//! | procedure            | states             | target                              |
//! |----------------------|--------------------|-------------------------------------|
//! | `likelihood`         | gold path          | gold action, softmax                |
//! | `policy_gradient`    | sampled candidates | candidate action, weighted by cost  |
//! | `likelihood_explore` | sampled candidates | oracle action, softmax              |
//! | `smm`                | gold path          | gold action, softmax margin         |
//! | `smm_explore`        | sampled candidates | oracle action, softmax margin       |
//!
//! Exploring procedures draw the same candidate sets from the same random
//! streams, so for a fixed seed they explore identically until their
//! parameters diverge.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{decode_beam, decode_greedy, sample_candidates, sentence_rng, CandidateSet};
use crate::enumerate::scored_derivations;
use crate::error::{Error, Result};
use crate::evalf1::{corpus_f1, cost, F1Convention, F1Score, RunningStandardizer};
use crate::oracle::{oracle_action, GoldIndex};
use crate::scorer::{Gradient, ScoredState, ScorerParams, DEFAULT_HASH_BITS};
use crate::transition::{tree_to_actions, Action, OpenCaps, TransitionSystem};
use crate::treebank::{Sentence, Tree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Likelihood,
    PolicyGradient,
    LikelihoodExplore,
    Smm,
    SmmExplore,
}

impl Procedure {
    pub const ALL: [Procedure; 5] = [
        Procedure::Likelihood,
        Procedure::PolicyGradient,
        Procedure::LikelihoodExplore,
        Procedure::Smm,
        Procedure::SmmExplore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Procedure::Likelihood => "likelihood",
            Procedure::PolicyGradient => "policy_gradient",
            Procedure::LikelihoodExplore => "likelihood_explore",
            Procedure::Smm => "smm",
            Procedure::SmmExplore => "smm_explore",
        }
    }

    /// Whether the procedure trains on sampled candidate sets.
    pub fn explores(self) -> bool {
        matches!(
            self,
            Procedure::PolicyGradient | Procedure::LikelihoodExplore | Procedure::SmmExplore
        )
    }

    pub fn uses_oracle(self) -> bool {
        !matches!(self, Procedure::Likelihood | Procedure::PolicyGradient)
    }

    fn uses_margin(self) -> bool {
        matches!(self, Procedure::Smm | Procedure::SmmExplore)
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Procedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Procedure> {
        let normalized = s.trim().to_ascii_lowercase().replace('-', "_");
        match normalized.as_str() {
            "likelihood" => Ok(Procedure::Likelihood),
            "policy_gradient" | "pg" => Ok(Procedure::PolicyGradient),
            "likelihood_explore" => Ok(Procedure::LikelihoodExplore),
            "smm" | "softmax_margin" => Ok(Procedure::Smm),
            "smm_explore" | "softmax_margin_explore" => Ok(Procedure::SmmExplore),
            _ => Err(Error::Config(format!("unknown training procedure {s:?}"))),
        }
    }
}

/// How dev sentences are decoded during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoding {
    Greedy,
    Beam(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub procedure: Procedure,
    /// Candidates per sentence, gold tree included.
    pub k: usize,
    pub epochs: usize,
    /// Sentences per update.
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Inverse-time decay: epoch `e` (from 1) uses `lr / (1 + decay · (e − 1))`.
    pub lr_decay: f64,
    pub seed: u64,
    /// Evaluate on dev every this many epochs (and always after the last).
    pub eval_every: usize,
    pub dev_decoding: Decoding,
    /// Standard deviation of the random initial weights; 0 for all zeros.
    pub init_scale: f64,
    pub hash_bits: u32,
    pub caps: OpenCaps,
    /// Cost added to non-oracle actions by the softmax-margin procedures.
    pub margin: f64,
    /// Standardize candidate costs before weighting policy-gradient terms.
    /// Turning this off is only useful for checking the estimator.
    pub standardize: bool,
    /// Put the gold tree in every candidate set.
    pub include_gold: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            procedure: Procedure::Likelihood,
            k: 10,
            epochs: 10,
            batch_size: 16,
            learning_rate: 0.1,
            lr_decay: 0.1,
            seed: 1,
            eval_every: 1,
            dev_decoding: Decoding::Greedy,
            init_scale: 0.0,
            hash_bits: DEFAULT_HASH_BITS,
            caps: OpenCaps::default(),
            margin: 1.0,
            standardize: true,
            include_gold: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.procedure.explores() {
            let min = if self.include_gold { 2 } else { 1 };
            if self.k < min {
                return fail("exploring procedures need k >= 2 (the gold tree plus a sample)");
            }
        }
        if self.epochs == 0 || self.batch_size == 0 || self.eval_every == 0 {
            return fail("epochs, batch size and eval-every must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return fail("learning rate must be a non-negative number");
        }
        if !(self.lr_decay >= 0.0 && self.lr_decay.is_finite()) {
            return fail("learning-rate decay must be a non-negative number");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return fail("init scale must be a non-negative number");
        }
        if !(1..=30).contains(&self.hash_bits) {
            return fail("hash bits must be between 1 and 30");
        }
        if let Decoding::Beam(0) = self.dev_decoding {
            return fail("beam width must be at least 1");
        }
        if self.caps.chain == 0 || self.caps.total(1) == 0 {
            return fail("open caps must allow at least one open");
        }
        Ok(())
    }

    fn rate(&self, epoch: usize) -> f64 {
        self.learning_rate / (1.0 + self.lr_decay * (epoch - 1) as f64)
    }
}

/// Initial weights shared by every procedure: depends only on the training
/// corpus labels, the caps, the hash size, the seed and the init scale.
pub fn initial_params(train: &[(Sentence, Tree)], config: &TrainConfig) -> Result<ScorerParams> {
    config.validate()?;
    let system = TransitionSystem::from_corpus(train.iter().map(|(_, t)| t), config.caps);
    Ok(ScorerParams::random(
        system,
        config.hash_bits,
        config.seed,
        config.init_scale,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizerSummary {
    pub count: u64,
    pub mean: f64,
    pub std_dev: f64,
}

impl From<&RunningStandardizer> for StandardizerSummary {
    fn from(s: &RunningStandardizer) -> Self {
        StandardizerSummary {
            count: s.count,
            mean: s.mean,
            std_dev: s.std_dev(),
        }
    }
}

/// One line of a training report. Epoch 0 describes the initial weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub procedure: Procedure,
    pub k: usize,
    pub epoch: usize,
    pub dev_f1: Option<f64>,
    /// Mean per-sentence training loss of the procedure's own objective.
    pub train_loss: Option<f64>,
    /// Mean cost of the sampled (non-gold) candidates.
    pub mean_sample_cost: Option<f64>,
    pub standardizer: Option<StandardizerSummary>,
    pub learning_rate: Option<f64>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
}

impl TrainReport {
    /// JSON lines, one record per epoch. Wall-clock times are left out so
    /// that reruns produce identical files.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// First epoch whose dev F1 reached `threshold`.
    pub fn epochs_to(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.dev_f1.is_some_and(|f| f >= threshold))
            .map(|r| r.epoch)
    }
}

pub struct TrainOutcome {
    /// Weights from the epoch with the best dev F1.
    pub best: ScorerParams,
    /// Weights after the last epoch.
    pub last: ScorerParams,
    pub report: TrainReport,
}

/// Decodes every dev sentence and scores the result against gold.
pub fn evaluate_dev(params: &ScorerParams, dev: &[(Sentence, Tree)], decoding: Decoding) -> Result<F1Score> {
    let predictions = decode_corpus(params, dev.iter().map(|(s, _)| s), decoding)?;
    corpus_f1(
        predictions.iter().zip(dev.iter().map(|(_, t)| t)),
        F1Convention::REWARD,
    )
}

pub fn decode_corpus<'a>(
    params: &ScorerParams,
    sentences: impl IntoIterator<Item = &'a Sentence>,
    decoding: Decoding,
) -> Result<Vec<Tree>> {
    let sentences: Vec<&Sentence> = sentences.into_iter().collect();
    sentences
        .par_iter()
        .map(|s| {
            let c = match decoding {
                Decoding::Greedy => decode_greedy(s, params)?,
                Decoding::Beam(w) => decode_beam(s, params, w)?,
            };
            Ok(c.tree)
        })
        .collect()
}

/// Loss and gradient contributed by one sentence.
#[derive(Debug, Default)]
pub struct SentenceUpdate {
    pub gradient: Gradient,
    pub loss: f64,
}

/// Gradient of one sentence's loss. `candidates` must be present for the
/// exploring procedures and is ignored by the others.
pub fn sentence_gradient(
    procedure: Procedure,
    params: &ScorerParams,
    sentence: &Sentence,
    gold: &Tree,
    candidates: Option<&CandidateSet>,
    margin: f64,
) -> Result<SentenceUpdate> {
    let mut update = SentenceUpdate::default();
    let gold_actions;
    let paths: Vec<(&[Action], f64)> = if procedure.explores() {
        let set = candidates
            .ok_or_else(|| Error::Usage(format!("{procedure} needs a candidate set")))?;
        set.candidates
            .iter()
            .map(|c| (c.actions.as_slice(), c.standardized_cost))
            .collect()
    } else {
        gold_actions = tree_to_actions(gold);
        vec![(gold_actions.as_slice(), 0.0)]
    };
    let index = procedure.uses_oracle().then(|| GoldIndex::new(gold));
    let system = params.system();

    for (actions, weight) in paths {
        let mut state = system.initial_state(sentence);
        for action in actions {
            let scored = ScoredState::new(&state, sentence, params)?;
            match procedure {
                Procedure::PolicyGradient => {
                    // Descend Σ_y Δ̃(y) ∇ log p(y): every step of the path
                    // shares the candidate's standardized cost.
                    let dist = scored.distribution();
                    let target = scored.index_of_legal(action)?;
                    scored.accumulate_grad_log_prob(&dist, target, weight, &mut update.gradient);
                    update.loss += weight * dist.log_probs[target];
                }
                _ => {
                    let target_action = match &index {
                        Some(index) => oracle_action(system, &state, index)?,
                        None => action.clone(),
                    };
                    let dist = if procedure.uses_margin() {
                        scored.margin_distribution_with(&target_action, margin)?
                    } else {
                        scored.distribution()
                    };
                    let target = scored.index_of_legal(&target_action)?;
                    // Loss is −log p(target); its gradient is −∇ log p.
                    scored.accumulate_grad_log_prob(&dist, target, -1.0, &mut update.gradient);
                    update.loss -= dist.log_probs[target];
                }
            }
            system.apply_mut(&mut state, action)?;
        }
    }
    Ok(update)
}

/// Checks that every gold tree can be derived under the model's label
/// inventory and caps.
fn check_derivable(train: &[(Sentence, Tree)], system: &TransitionSystem) -> Result<()> {
    for (i, (sentence, tree)) in train.iter().enumerate() {
        tree.validate(sentence.len())
            .map_err(|e| Error::Config(format!("training tree {i}: {e}")))?;
        system
            .actions_to_tree(sentence, &tree_to_actions(tree))
            .map_err(|e| Error::Config(format!("training tree {i} is not derivable: {e}")))?;
    }
    Ok(())
}

/// Trains from `init` with the configured procedure.
pub fn train(
    train: &[(Sentence, Tree)],
    dev: &[(Sentence, Tree)],
    init: ScorerParams,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Config("training and dev corpora must be non-empty".into()));
    }
    check_derivable(train, init.system())?;

    let mut params = init;
    let mut standardizer = RunningStandardizer::new();
    let mut report = TrainReport::default();
    let started = Instant::now();

    let initial_f1 = evaluate_dev(&params, dev, config.dev_decoding)?.f1;
    report.records.push(EpochRecord {
        procedure: config.procedure,
        k: config.k,
        epoch: 0,
        dev_f1: Some(initial_f1),
        train_loss: None,
        mean_sample_cost: None,
        standardizer: None,
        learning_rate: None,
        wall_seconds: started.elapsed().as_secs_f64(),
    });
    report.best_dev_f1 = initial_f1;
    let mut best = params.clone();

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_5eed);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let rate = config.rate(epoch);
        let mut loss_sum = 0.0;
        let (mut sample_cost_sum, mut sample_count) = (0.0, 0usize);

        for batch in order.chunks(config.batch_size) {
            let mut sets: Vec<Option<CandidateSet>> = if config.procedure.explores() {
                batch
                    .par_iter()
                    .map(|&i| {
                        let (sentence, gold) = &train[i];
                        let mut rng = sentence_rng(config.seed, epoch as u32, i as u32);
                        sample_candidates(sentence, gold, &params, config.k, config.include_gold, &mut rng)
                            .map(Some)
                    })
                    .collect::<Result<_>>()?
            } else {
                vec![None; batch.len()]
            };

            // One standardizer for the whole run, fed in batch order then
            // candidate order.
            for set in sets.iter_mut().flatten() {
                if config.standardize {
                    set.standardize(&mut standardizer)?;
                } else {
                    for c in &mut set.candidates {
                        c.standardized_cost = c.cost;
                    }
                }
                for c in set.candidates.iter().filter(|c| !c.is_gold) {
                    sample_cost_sum += c.cost;
                    sample_count += 1;
                }
            }

            let updates: Vec<SentenceUpdate> = batch
                .par_iter()
                .zip(sets.par_iter())
                .map(|(&i, set)| {
                    let (sentence, gold) = &train[i];
                    sentence_gradient(config.procedure, &params, sentence, gold, set.as_ref(), config.margin)
                })
                .collect::<Result<_>>()?;

            let mut gradient = Gradient::new();
            let scale = 1.0 / batch.len() as f64;
            for u in &updates {
                gradient.merge(&u.gradient, scale);
                loss_sum += u.loss;
            }
            params.descend(&gradient, rate);
        }

        let evaluate = epoch % config.eval_every == 0 || epoch == config.epochs;
        let dev_f1 = if evaluate {
            let f1 = evaluate_dev(&params, dev, config.dev_decoding)?.f1;
            if f1 > report.best_dev_f1 {
                report.best_dev_f1 = f1;
                report.best_epoch = epoch;
                best = params.clone();
            }
            Some(f1)
        } else {
            None
        };
        report.records.push(EpochRecord {
            procedure: config.procedure,
            k: config.k,
            epoch,
            dev_f1,
            train_loss: Some(loss_sum / train.len() as f64),
            mean_sample_cost: (sample_count > 0).then(|| sample_cost_sum / sample_count as f64),
            standardizer: config.procedure.explores().then(|| (&standardizer).into()),
            learning_rate: Some(rate),
            wall_seconds: started.elapsed().as_secs_f64(),
        });
    }

    Ok(TrainOutcome {
        best,
        last: params,
        report,
    })
}

fn train_with(
    procedure: Procedure,
    corpus: &[(Sentence, Tree)],
    dev: &[(Sentence, Tree)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let config = TrainConfig {
        procedure,
        ..config.clone()
    };
    let init = initial_params(corpus, &config)?;
    train(corpus, dev, init, &config)
}

pub fn train_likelihood(corpus: &[(Sentence, Tree)], dev: &[(Sentence, Tree)], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(Procedure::Likelihood, corpus, dev, config)
}

pub fn train_policy_gradient(corpus: &[(Sentence, Tree)], dev: &[(Sentence, Tree)], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(Procedure::PolicyGradient, corpus, dev, config)
}

pub fn train_likelihood_explore(corpus: &[(Sentence, Tree)], dev: &[(Sentence, Tree)], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(Procedure::LikelihoodExplore, corpus, dev, config)
}

pub fn train_smm(corpus: &[(Sentence, Tree)], dev: &[(Sentence, Tree)], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(Procedure::Smm, corpus, dev, config)
}

pub fn train_smm_explore(corpus: &[(Sentence, Tree)], dev: &[(Sentence, Tree)], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(Procedure::SmmExplore, corpus, dev, config)
}

/// Exact expected cost `R = Σ_y p(y) Δ(y)` for one sentence and its gradient
/// `Σ_y p(y) Δ(y) ∇ log p(y)`, by enumerating every derivation.
pub fn exact_risk(sentence: &Sentence, gold: &Tree, params: &ScorerParams) -> Result<(f64, Gradient)> {
    let system = params.system();
    let mut risk = 0.0;
    let mut gradient = Gradient::new();
    for d in scored_derivations(sentence, params)? {
        let p = d.log_prob.exp();
        let delta = cost(&d.tree, gold)?;
        risk += p * delta;
        if p * delta == 0.0 {
            continue;
        }
        let mut state = system.initial_state(sentence);
        for action in &d.actions {
            let scored = ScoredState::new(&state, sentence, params)?;
            let target = scored.index_of_legal(action)?;
            scored.accumulate_grad_log_prob(&scored.distribution(), target, p * delta, &mut gradient);
            system.apply_mut(&mut state, action)?;
        }
    }
    Ok((risk, gradient))
}

/// A policy-gradient estimate for one sentence from `k` fresh samples,
/// without standardization or gold augmentation: `(1/k) Σ Δ(y) ∇ log p(y)`.
pub fn sampled_risk_gradient(
    sentence: &Sentence,
    gold: &Tree,
    params: &ScorerParams,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Gradient> {
    let mut set = sample_candidates(sentence, gold, params, k, false, rng)?;
    for c in &mut set.candidates {
        c.standardized_cost = c.cost;
    }
    let update = sentence_gradient(Procedure::PolicyGradient, params, sentence, gold, Some(&set), 0.0)?;
    let mut scaled = Gradient::new();
    scaled.merge(&update.gradient, 1.0 / k as f64);
    Ok(scaled)
}
