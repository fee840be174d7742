//! Labeled bracketing F1 and the running reward standardizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::treebank::{brackets, Tree};

/// Bracket-scoring conventions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct F1Convention {
    /// Count the root bracket. On for training rewards; evalb leaves it out.
    pub include_root: bool,
}

impl F1Convention {
    pub const REWARD: F1Convention = F1Convention { include_root: true };
    pub const EVALB: F1Convention = F1Convention {
        include_root: false,
    };
}

impl Default for F1Convention {
    fn default() -> Self {
        F1Convention::REWARD
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl F1Score {
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> F1Score {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(matched, predicted);
        let recall = ratio(matched, gold);
        let f1 = if matched == 0 {
            0.0
        } else {
            // 2PR/(P+R) written in counts, which is exact for integer inputs.
            2.0 * matched as f64 / (predicted + gold) as f64
        };
        F1Score {
            precision,
            recall,
            f1,
            matched,
            predicted,
            gold,
        }
    }
}

pub fn labeled_f1(pred: &Tree, gold: &Tree) -> Result<F1Score> {
    labeled_f1_with(pred, gold, F1Convention::default())
}

pub fn labeled_f1_with(pred: &Tree, gold: &Tree, convention: F1Convention) -> Result<F1Score> {
    if pred.span() != gold.span() {
        return Err(Error::Usage(format!(
            "predicted tree spans {:?} but gold spans {:?}",
            pred.span(),
            gold.span()
        )));
    }
    let p = brackets(pred, convention.include_root);
    let g = brackets(gold, convention.include_root);
    Ok(F1Score::from_counts(p.matched(&g), p.len(), g.len()))
}

/// Micro-averaged F1 over a corpus.
pub fn corpus_f1<'a>(
    pairs: impl IntoIterator<Item = (&'a Tree, &'a Tree)>,
    convention: F1Convention,
) -> Result<F1Score> {
    let (mut matched, mut predicted, mut gold, mut count) = (0, 0, 0, 0);
    for (p, g) in pairs {
        let s = labeled_f1_with(p, g, convention)?;
        matched += s.matched;
        predicted += s.predicted;
        gold += s.gold;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Usage("corpus F1 of an empty corpus".into()));
    }
    Ok(F1Score::from_counts(matched, predicted, gold))
}

/// Negative labeled F1, the training cost. Lower is better; the gold tree
/// scores −1.
pub fn cost(pred: &Tree, gold: &Tree) -> Result<f64> {
    Ok(-labeled_f1(pred, gold)?.f1)
}

/// Streaming mean and population standard deviation (Welford's update).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStandardizer {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub epsilon: f64,
}

impl Default for RunningStandardizer {
    fn default() -> Self {
        RunningStandardizer {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            epsilon: 1e-8,
        }
    }
}

impl RunningStandardizer {
    pub fn new() -> RunningStandardizer {
        RunningStandardizer::default()
    }

    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Adds `value` to the statistics, then standardizes it against the
    /// updated mean and deviation. Returns 0 until two values have been seen.
    pub fn standardize(&mut self, value: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::Usage(format!("cannot standardize {value}")));
        }
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
        if self.count < 2 {
            return Ok(0.0);
        }
        Ok((value - self.mean) / self.std_dev().max(self.epsilon))
    }
}
