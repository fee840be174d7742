//! Procedure × k experiment matrices.
//!
//! Every cell trains from the same initial weights and is evaluated on the
//! same dev and test sets. Cells are independent and run concurrently.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evalf1::{corpus_f1, F1Convention};
use crate::scorer::ScorerParams;
use crate::training::{decode_corpus, initial_params, train, Procedure, TrainConfig, TrainReport};
use crate::treebank::{Sentence, Tree};

/// Candidate counts tried by default.
pub const DEFAULT_KS: [usize; 3] = [2, 5, 10];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentMatrix {
    pub cells: Vec<(Procedure, usize)>,
    /// Dev F1 used to report epochs-to-threshold per cell.
    pub threshold: f64,
}

impl ExperimentMatrix {
    /// Every procedure paired with every k.
    pub fn grid(procedures: &[Procedure], ks: &[usize]) -> Result<ExperimentMatrix> {
        let cells = procedures
            .iter()
            .flat_map(|&p| ks.iter().map(move |&k| (p, k)))
            .collect();
        ExperimentMatrix::new(cells)
    }

    pub fn new(cells: Vec<(Procedure, usize)>) -> Result<ExperimentMatrix> {
        if cells.is_empty() {
            return Err(Error::Config("experiment matrix has no cells".into()));
        }
        for (i, cell) in cells.iter().enumerate() {
            if cells[..i].contains(cell) {
                return Err(Error::Config(format!(
                    "duplicate cell {}:{}",
                    cell.0, cell.1
                )));
            }
            if cell.1 < 2 {
                return Err(Error::Config(format!("cell {}:{} needs k >= 2", cell.0, cell.1)));
            }
        }
        Ok(ExperimentMatrix {
            cells,
            threshold: 0.9,
        })
    }

    /// Parses `procedure:k` pairs separated by commas, e.g.
    /// `likelihood:10,policy_gradient:10`.
    pub fn parse_cells(text: &str) -> Result<ExperimentMatrix> {
        let cells = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|cell| {
                let (p, k) = cell
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("cell {cell:?} is not procedure:k")))?;
                let k = k
                    .parse()
                    .map_err(|_| Error::Config(format!("bad k in cell {cell:?}")))?;
                Ok((p.parse()?, k))
            })
            .collect::<Result<_>>()?;
        ExperimentMatrix::new(cells)
    }
}

#[derive(Clone)]
pub struct CellResult {
    pub procedure: Procedure,
    pub k: usize,
    pub best_epoch: usize,
    pub dev_f1: f64,
    pub test_f1: f64,
    pub epochs_to_threshold: Option<usize>,
    pub report: TrainReport,
    pub model: ScorerParams,
}

impl CellResult {
    pub fn name(&self) -> String {
        format!("{}_k{}", self.procedure, self.k)
    }
}

pub struct MatrixSummary {
    pub cells: Vec<CellResult>,
}

impl MatrixSummary {
    /// Tab-separated summary, one row per cell in matrix order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("procedure\tk\tbest_epoch\tdev_f1\ttest_f1\tepochs_to_threshold\n");
        for c in &self.cells {
            let epochs = c
                .epochs_to_threshold
                .map_or_else(|| "-".to_string(), |e| e.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{}",
                c.procedure, c.k, c.best_epoch, c.dev_f1, c.test_f1, epochs
            )
            .unwrap();
        }
        out
    }

    pub fn get(&self, procedure: Procedure, k: usize) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.procedure == procedure && c.k == k)
    }
}

/// Trains one cell from `init` and scores its best checkpoint on `test`.
#[allow(clippy::too_many_arguments)]
pub fn run_cell(
    train_set: &[(Sentence, Tree)],
    dev: &[(Sentence, Tree)],
    test: &[(Sentence, Tree)],
    init: &ScorerParams,
    base: &TrainConfig,
    procedure: Procedure,
    k: usize,
    threshold: f64,
) -> Result<CellResult> {
    let config = TrainConfig {
        procedure,
        k,
        ..base.clone()
    };
    let outcome = train(train_set, dev, init.clone(), &config)?;
    let predictions = decode_corpus(&outcome.best, test.iter().map(|(s, _)| s), config.dev_decoding)?;
    let test_f1 = corpus_f1(
        predictions.iter().zip(test.iter().map(|(_, t)| t)),
        F1Convention::REWARD,
    )?
    .f1;
    Ok(CellResult {
        procedure,
        k,
        best_epoch: outcome.report.best_epoch,
        dev_f1: outcome.report.best_dev_f1,
        test_f1,
        epochs_to_threshold: outcome.report.epochs_to(threshold),
        report: outcome.report,
        model: outcome.best,
    })
}

/// Runs every cell. With `out_dir`, writes `summary.tsv`, one
/// `curves/<procedure>_k<k>.jsonl` report per cell and the best model of
/// each cell under `models/`. Cells that finish are written even if another
/// cell fails; the error is returned afterwards.
pub fn run_matrix(
    matrix: &ExperimentMatrix,
    train_set: &[(Sentence, Tree)],
    dev: &[(Sentence, Tree)],
    test: &[(Sentence, Tree)],
    base: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<MatrixSummary> {
    if test.is_empty() {
        return Err(Error::Config("test corpus is empty".into()));
    }
    let init = initial_params(train_set, base)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir.join("curves"))?;
        fs::create_dir_all(dir.join("models"))?;
    }
    let results: Vec<Result<CellResult>> = matrix
        .cells
        .par_iter()
        .map(|&(procedure, k)| {
            let cell = run_cell(train_set, dev, test, &init, base, procedure, k, matrix.threshold)?;
            if let Some(dir) = out_dir {
                let name = cell.name();
                fs::write(
                    dir.join("curves").join(format!("{name}.jsonl")),
                    cell.report.to_json_lines(),
                )?;
                let file = fs::File::create(dir.join("models").join(format!("{name}.model")))?;
                cell.model.save(std::io::BufWriter::new(file))?;
            }
            Ok(cell)
        })
        .collect();

    let mut cells = Vec::new();
    let mut first_error = None;
    for r in results {
        match r {
            Ok(c) => cells.push(c),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let summary = MatrixSummary { cells };
    if let Some(dir) = out_dir {
        fs::write(dir.join("summary.tsv"), summary.to_tsv())?;
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
