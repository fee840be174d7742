use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use topdown::config::KeyValues;
use topdown::decode::{decode_beam, decode_greedy, sample_tree, sentence_rng};
use topdown::error::{Error, Result};
use topdown::evalf1::{labeled_f1_with, F1Convention, F1Score};
use topdown::experiment::{run_matrix, ExperimentMatrix, DEFAULT_KS};
use topdown::oracle::{oracle_decision, GoldIndex};
use topdown::scorer::ScorerParams;
use topdown::training::{initial_params, train, Decoding, Procedure, TrainConfig};
use topdown::transition::{parse_actions, OpenCaps, TransitionSystem};
use topdown::treebank::{
    generate_corpus, read_bracketed_with, write_corpus, GrammarSpec, ReadOptions, Sentence, Tree,
};

/// Top-down constituency parser training toolkit.
///
/// Every flag can also be set through a `TOPDOWN_<FLAG>` environment variable
/// or a `key = value` line in the file given to `--config`. Flags win over
/// the environment, which wins over the file.
#[derive(Parser)]
#[command(name = "topdown", version)]
struct Cli {
    /// Plain-text `key = value` file with defaults for the subcommand's flags.
    #[arg(long, global = true, env = "TOPDOWN_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model with one of the five procedures.
    Train(TrainCmd),
    /// Parse sentences (one per line) into bracketed trees.
    Parse(ParseCmd),
    /// Score predicted trees against gold trees with labeled bracket F1.
    Evaluate(EvaluateCmd),
    /// Show the dynamic oracle's decisions step by step.
    OracleTrace(OracleTraceCmd),
    /// Generate a synthetic treebank.
    GenCorpus(GenCorpusCmd),
    /// Train a procedure × k matrix from a shared initialization.
    Experiment(ExperimentCmd),
}

#[derive(Args, Clone)]
struct CorpusArgs {
    /// Training trees (bracketed).
    #[arg(long, env = "TOPDOWN_TRAIN")]
    train: PathBuf,

    /// Development trees (bracketed).
    #[arg(long, env = "TOPDOWN_DEV")]
    dev: PathBuf,

    /// Drop `(TAG word)` preterminals when reading trees.
    #[arg(long, env = "TOPDOWN_STRIP_TAGS")]
    strip_tags: bool,
}

#[derive(Args, Clone)]
struct HyperArgs {
    /// Candidates per sentence, gold tree included.
    #[arg(long, default_value_t = 10, env = "TOPDOWN_K")]
    k: usize,

    #[arg(long, default_value_t = 10, env = "TOPDOWN_EPOCHS")]
    epochs: usize,

    /// Sentences per update.
    #[arg(long, default_value_t = 16, env = "TOPDOWN_BATCH_SIZE")]
    batch_size: usize,

    #[arg(long, default_value_t = 0.1, env = "TOPDOWN_LR")]
    lr: f64,

    /// Inverse-time decay applied per epoch.
    #[arg(long, default_value_t = 0.1, env = "TOPDOWN_LR_DECAY")]
    lr_decay: f64,

    #[arg(long, default_value_t = 1, env = "TOPDOWN_SEED")]
    seed: u64,

    #[arg(long, default_value_t = 1, env = "TOPDOWN_EVAL_EVERY")]
    eval_every: usize,

    /// Beam width for dev decoding; 1 decodes greedily.
    #[arg(long, default_value_t = 1, env = "TOPDOWN_BEAM_WIDTH")]
    beam_width: usize,

    /// Standard deviation of the random initial weights.
    #[arg(long, default_value_t = 0.0, env = "TOPDOWN_INIT_SCALE")]
    init_scale: f64,

    /// log2 of the number of feature buckets.
    #[arg(long, default_value_t = topdown::scorer::DEFAULT_HASH_BITS, env = "TOPDOWN_HASH_BITS")]
    hash_bits: u32,

    /// Cost added to non-oracle actions by the softmax-margin procedures.
    #[arg(long, default_value_t = 1.0, env = "TOPDOWN_MARGIN")]
    margin: f64,

    /// Maximum consecutive Open actions.
    #[arg(long, default_value_t = 8, env = "TOPDOWN_OPEN_CHAIN_CAP")]
    open_chain_cap: usize,

    /// Total Opens allowed per word of the sentence...
    #[arg(long, default_value_t = 4, env = "TOPDOWN_OPEN_PER_WORD")]
    open_per_word: usize,

    /// ...plus this many.
    #[arg(long, default_value_t = 8, env = "TOPDOWN_OPEN_BASE")]
    open_base: usize,
}

impl HyperArgs {
    fn config(&self, procedure: Procedure) -> TrainConfig {
        TrainConfig {
            procedure,
            k: self.k,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            lr_decay: self.lr_decay,
            seed: self.seed,
            eval_every: self.eval_every,
            dev_decoding: if self.beam_width <= 1 {
                Decoding::Greedy
            } else {
                Decoding::Beam(self.beam_width)
            },
            init_scale: self.init_scale,
            hash_bits: self.hash_bits,
            caps: OpenCaps {
                chain: self.open_chain_cap,
                per_word: self.open_per_word,
                base: self.open_base,
            },
            margin: self.margin,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct TrainCmd {
    /// likelihood, policy_gradient, likelihood_explore, smm or smm_explore.
    #[arg(long, env = "TOPDOWN_PROCEDURE")]
    procedure: String,

    #[command(flatten)]
    corpus: CorpusArgs,

    #[command(flatten)]
    hyper: HyperArgs,

    /// Where to write the JSON-lines report; stdout if absent.
    #[arg(long, env = "TOPDOWN_REPORT")]
    report: Option<PathBuf>,

    /// Where to write the best model.
    #[arg(long, env = "TOPDOWN_MODEL")]
    model: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Greedy,
    Beam,
    Sample,
}

#[derive(Args)]
struct ParseCmd {
    #[arg(long, env = "TOPDOWN_MODEL")]
    model: PathBuf,

    /// Sentences, one per line; stdin if absent.
    #[arg(long, env = "TOPDOWN_INPUT")]
    input: Option<PathBuf>,

    /// Output file; stdout if absent.
    #[arg(long, env = "TOPDOWN_OUTPUT")]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "greedy", env = "TOPDOWN_MODE")]
    mode: Mode,

    #[arg(long, default_value_t = 10, env = "TOPDOWN_BEAM_WIDTH")]
    beam_width: usize,

    #[arg(long, default_value_t = 1, env = "TOPDOWN_SEED")]
    seed: u64,
}

#[derive(Args)]
struct EvaluateCmd {
    /// Predicted trees.
    #[arg(long, env = "TOPDOWN_PRED")]
    pred: PathBuf,

    /// Gold trees.
    #[arg(long, env = "TOPDOWN_GOLD")]
    gold: PathBuf,

    /// Leave the root bracket out, as evalb does.
    #[arg(long, env = "TOPDOWN_EVALB")]
    evalb: bool,

    #[arg(long, env = "TOPDOWN_STRIP_TAGS")]
    strip_tags: bool,

    /// Write per-sentence counts and scores as TSV.
    #[arg(long, env = "TOPDOWN_PER_SENTENCE")]
    per_sentence: Option<PathBuf>,
}

#[derive(Args)]
struct OracleTraceCmd {
    /// File holding the gold tree.
    #[arg(long, env = "TOPDOWN_GOLD")]
    gold: PathBuf,

    /// Which tree of the file to trace.
    #[arg(long, default_value_t = 0, env = "TOPDOWN_INDEX")]
    index: usize,

    /// Actions applied before the oracle takes over, e.g. "NT(S) NT(VP)".
    #[arg(long, default_value = "", env = "TOPDOWN_PREFIX")]
    prefix: String,

    #[arg(long, default_value_t = 8, env = "TOPDOWN_OPEN_CHAIN_CAP")]
    open_chain_cap: usize,

    #[arg(long, env = "TOPDOWN_STRIP_TAGS")]
    strip_tags: bool,
}

#[derive(Args)]
struct GenCorpusCmd {
    /// Grammar spec (`key = value`); built-in defaults if absent.
    #[arg(long, env = "TOPDOWN_GRAMMAR")]
    grammar: Option<PathBuf>,

    #[arg(long, default_value_t = 300, env = "TOPDOWN_COUNT")]
    count: usize,

    /// Overrides the grammar's seed.
    #[arg(long, env = "TOPDOWN_SEED")]
    seed: Option<u64>,

    /// Output file (stdout if absent). With --split, a path prefix.
    #[arg(long, env = "TOPDOWN_OUTPUT")]
    output: Option<PathBuf>,

    /// Split sizes `train,dev,test`; writes `<output>.train` and so on.
    #[arg(long, env = "TOPDOWN_SPLIT")]
    split: Option<String>,
}

#[derive(Args)]
struct ExperimentCmd {
    #[command(flatten)]
    corpus: CorpusArgs,

    /// Test trees (bracketed).
    #[arg(long, env = "TOPDOWN_TEST")]
    test: PathBuf,

    /// Explicit cells, `procedure:k,...`. Overrides --procedures/--ks.
    #[arg(long, env = "TOPDOWN_CELLS")]
    cells: Option<String>,

    /// Comma-separated procedures, or "all".
    #[arg(long, default_value = "all", env = "TOPDOWN_PROCEDURES")]
    procedures: String,

    /// Comma-separated candidate counts.
    #[arg(long, default_value = "2,5,10", env = "TOPDOWN_KS")]
    ks: String,

    /// Dev F1 at which to record epochs-to-threshold.
    #[arg(long, default_value_t = 0.9, env = "TOPDOWN_THRESHOLD")]
    threshold: f64,

    #[arg(long, env = "TOPDOWN_OUT_DIR")]
    out_dir: PathBuf,

    #[command(flatten)]
    hyper: HyperArgs,
}

fn main() -> ExitCode {
    let cli = match parse_cli(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(CliError::Clap(e)) => e.exit(),
        Err(CliError::App(e)) => return fail(&e),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("topdown: {e}");
    ExitCode::from(e.exit_code() as u8)
}

enum CliError {
    Clap(clap::Error),
    App(Error),
}

/// Parses the command line, filling in flags the user did not give from the
/// `--config` file.
fn parse_cli(mut argv: Vec<OsString>) -> std::result::Result<Cli, CliError> {
    let matches = Cli::command()
        .try_get_matches_from(&argv)
        .map_err(CliError::Clap)?;
    if let Some(path) = matches.get_one::<PathBuf>("config") {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::App(Error::Config(format!("{}: {e}", path.display()))))?;
        let kv = KeyValues::parse(&text).map_err(CliError::App)?;
        let (name, sub) = matches.subcommand().expect("subcommand is required");
        argv.extend(config_args(name, sub, &kv).map_err(CliError::App)?);
    }
    let matches = Cli::command()
        .try_get_matches_from(&argv)
        .map_err(CliError::Clap)?;
    Cli::from_arg_matches(&matches).map_err(CliError::Clap)
}

fn config_args(subcommand: &str, matches: &ArgMatches, kv: &KeyValues) -> Result<Vec<OsString>> {
    let command = Cli::command();
    let sub = command
        .find_subcommand(subcommand)
        .expect("matched subcommand exists");
    let mut extra = Vec::new();
    for (key, value) in kv.iter() {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_id().as_str() == key && a.get_long().is_some())
            .ok_or_else(|| Error::Config(format!("{key} is not an option of {subcommand}")))?;
        let explicit = matches!(
            matches.value_source(key),
            Some(ValueSource::CommandLine | ValueSource::EnvVariable)
        );
        if explicit {
            continue;
        }
        let flag = format!("--{}", arg.get_long().unwrap());
        if arg.get_action().takes_values() {
            extra.push(OsString::from(flag));
            extra.push(OsString::from(value));
        } else {
            match value {
                "true" | "yes" | "1" => extra.push(OsString::from(flag)),
                "false" | "no" | "0" => {}
                _ => return Err(Error::Config(format!("{key} expects true or false"))),
            }
        }
    }
    Ok(extra)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(cmd) => cmd_train(cmd),
        Command::Parse(cmd) => cmd_parse(cmd),
        Command::Evaluate(cmd) => cmd_evaluate(cmd),
        Command::OracleTrace(cmd) => cmd_oracle_trace(cmd),
        Command::GenCorpus(cmd) => cmd_gen_corpus(cmd),
        Command::Experiment(cmd) => cmd_experiment(cmd),
    }
}

fn read_trees(path: &Path, strip_tags: bool) -> Result<Vec<(Sentence, Tree)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_bracketed_with(
        &text,
        ReadOptions {
            strip_preterminals: strip_tags,
        },
    )
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_model(path: &Path) -> Result<ScorerParams> {
    let file = fs::File::open(path)?;
    ScorerParams::load(BufReader::new(file))
}

fn cmd_train(cmd: TrainCmd) -> Result<()> {
    let procedure: Procedure = cmd.procedure.parse()?;
    let config = cmd.hyper.config(procedure);
    config.validate()?;
    let train_set = read_trees(&cmd.corpus.train, cmd.corpus.strip_tags)?;
    let dev = read_trees(&cmd.corpus.dev, cmd.corpus.strip_tags)?;
    let init = initial_params(&train_set, &config)?;
    let outcome = train(&train_set, &dev, init, &config)?;

    let mut report = output(cmd.report.as_deref())?;
    report.write_all(outcome.report.to_json_lines().as_bytes())?;
    report.flush()?;
    let file = fs::File::create(&cmd.model)?;
    let mut writer = BufWriter::new(file);
    outcome.best.save(&mut writer)?;
    writer.flush()?;
    eprintln!(
        "{procedure}: best dev F1 {:.2} at epoch {}",
        100.0 * outcome.report.best_dev_f1,
        outcome.report.best_epoch
    );
    Ok(())
}

fn cmd_parse(cmd: ParseCmd) -> Result<()> {
    let params = load_model(&cmd.model)?;
    let mut text = String::new();
    match &cmd.input {
        Some(p) => text = fs::read_to_string(p)?,
        None => {
            io::stdin().read_to_string(&mut text)?;
        }
    }
    let mut out = output(cmd.output.as_deref())?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let sentence = Sentence::from_line(line)?;
        let candidate = match cmd.mode {
            Mode::Greedy => decode_greedy(&sentence, &params)?,
            Mode::Beam => decode_beam(&sentence, &params, cmd.beam_width)?,
            Mode::Sample => sample_tree(&sentence, &params, &mut sentence_rng(cmd.seed, 0, i as u32))?,
        };
        writeln!(
            out,
            "{}",
            topdown::treebank::write_bracketed(&candidate.tree, &sentence)
        )?;
    }
    out.flush()?;
    Ok(())
}

fn percent(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn cmd_evaluate(cmd: EvaluateCmd) -> Result<()> {
    let pred = read_trees(&cmd.pred, cmd.strip_tags)?;
    let gold = read_trees(&cmd.gold, cmd.strip_tags)?;
    if pred.len() != gold.len() {
        return Err(Error::Usage(format!(
            "{} predicted trees but {} gold trees",
            pred.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Usage("no trees to evaluate".into()));
    }
    let convention = if cmd.evalb {
        F1Convention::EVALB
    } else {
        F1Convention::REWARD
    };
    let mut per_sentence = match &cmd.per_sentence {
        Some(p) => {
            let mut w = BufWriter::new(fs::File::create(p)?);
            writeln!(w, "sentence\tmatched\tpredicted\tgold\tprecision\trecall\tf1")?;
            Some(w)
        }
        None => None,
    };
    let (mut matched, mut predicted, mut gold_count) = (0, 0, 0);
    for (i, ((_, p), (_, g))) in pred.iter().zip(&gold).enumerate() {
        let s = labeled_f1_with(p, g, convention)
            .map_err(|e| Error::Usage(format!("sentence {}: {e}", i + 1)))?;
        matched += s.matched;
        predicted += s.predicted;
        gold_count += s.gold;
        if let Some(w) = per_sentence.as_mut() {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                s.matched,
                s.predicted,
                s.gold,
                percent(s.precision),
                percent(s.recall),
                percent(s.f1)
            )?;
        }
    }
    if let Some(mut w) = per_sentence {
        w.flush()?;
    }
    let total = F1Score::from_counts(matched, predicted, gold_count);
    let mut out = io::stdout().lock();
    writeln!(out, "sentences\t{}", gold.len())?;
    writeln!(out, "matched\t{}", total.matched)?;
    writeln!(out, "predicted\t{}", total.predicted)?;
    writeln!(out, "gold\t{}", total.gold)?;
    writeln!(out, "precision\t{}", percent(total.precision))?;
    writeln!(out, "recall\t{}", percent(total.recall))?;
    writeln!(out, "f1\t{}", percent(total.f1))?;
    Ok(())
}

fn cmd_oracle_trace(cmd: OracleTraceCmd) -> Result<()> {
    let trees = read_trees(&cmd.gold, cmd.strip_tags)?;
    let (sentence, gold) = trees
        .get(cmd.index)
        .ok_or_else(|| Error::Usage(format!("no tree at index {}", cmd.index)))?;
    let caps = OpenCaps {
        chain: cmd.open_chain_cap,
        ..OpenCaps::default()
    };
    let prefix = parse_actions(&cmd.prefix)?;
    // Prefix actions may name labels the gold tree lacks.
    let mut labels: Vec<_> = gold_labels(gold);
    for a in &prefix {
        if let topdown::transition::Action::Open(l) = a {
            labels.push(l.clone());
        }
    }
    let system = TransitionSystem::new(labels, caps);
    let index = GoldIndex::new(gold);
    let mut state = system.initial_state(sentence);
    for action in &prefix {
        system
            .apply_mut(&mut state, action)
            .map_err(|e| Error::Usage(format!("illegal prefix: {e}")))?;
    }
    if state.is_finished() {
        return Err(Error::Usage("the prefix already finishes the derivation".into()));
    }
    let mut out = io::stdout().lock();
    while !state.is_finished() {
        let decision = oracle_decision(&system, &state, &index)?;
        let capped = if decision.capped { "\tcapped" } else { "" };
        writeln!(
            out,
            "{}\t{}\t{}\trule {}{}",
            state.steps() + 1,
            state.summary(),
            decision.action,
            decision.rule,
            capped
        )?;
        system.apply_mut(&mut state, &decision.action)?;
    }
    Ok(())
}

fn gold_labels(tree: &Tree) -> Vec<topdown::treebank::Label> {
    let mut labels = Vec::new();
    tree.for_each_node(&mut |n| labels.push(n.label().clone()));
    labels
}

fn cmd_gen_corpus(cmd: GenCorpusCmd) -> Result<()> {
    let mut spec = match &cmd.grammar {
        Some(p) => GrammarSpec::from_key_values(&KeyValues::parse(&fs::read_to_string(p)?)?)?,
        None => GrammarSpec::default(),
    };
    if let Some(seed) = cmd.seed {
        spec.seed = seed;
    }
    match &cmd.split {
        None => {
            let corpus = generate_corpus(&spec, cmd.count)?;
            let mut out = output(cmd.output.as_deref())?;
            out.write_all(write_corpus(&corpus).as_bytes())?;
            out.flush()?;
        }
        Some(split) => {
            let sizes: Vec<usize> = split
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("bad split {split:?}")))?;
            let [train_n, dev_n, test_n] = sizes[..] else {
                return Err(Error::Config("split needs three sizes: train,dev,test".into()));
            };
            let prefix = cmd
                .output
                .as_ref()
                .ok_or_else(|| Error::Config("--split needs --output as a path prefix".into()))?;
            let corpus = generate_corpus(&spec, train_n + dev_n + test_n)?;
            let (train_set, rest) = corpus.split_at(train_n);
            let (dev, test) = rest.split_at(dev_n);
            for (part, trees) in [("train", train_set), ("dev", dev), ("test", test)] {
                let mut path = prefix.clone().into_os_string();
                path.push(format!(".{part}"));
                fs::write(PathBuf::from(path), write_corpus(trees))?;
            }
        }
    }
    Ok(())
}

fn cmd_experiment(cmd: ExperimentCmd) -> Result<()> {
    let mut matrix = match &cmd.cells {
        Some(cells) => ExperimentMatrix::parse_cells(cells)?,
        None => {
            let procedures: Vec<Procedure> = if cmd.procedures.trim() == "all" {
                Procedure::ALL.to_vec()
            } else {
                cmd.procedures
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<_>>()?
            };
            let ks: Vec<usize> = if cmd.ks.trim().is_empty() {
                DEFAULT_KS.to_vec()
            } else {
                cmd.ks
                    .split(',')
                    .map(|k| k.trim().parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Config(format!("bad k list {:?}", cmd.ks)))?
            };
            ExperimentMatrix::grid(&procedures, &ks)?
        }
    };
    matrix.threshold = cmd.threshold;
    let base = cmd.hyper.config(Procedure::Likelihood);
    base.validate()?;
    let train_set = read_trees(&cmd.corpus.train, cmd.corpus.strip_tags)?;
    let dev = read_trees(&cmd.corpus.dev, cmd.corpus.strip_tags)?;
    let test = read_trees(&cmd.test, cmd.corpus.strip_tags)?;
    let summary = run_matrix(&matrix, &train_set, &dev, &test, &base, Some(&cmd.out_dir))?;
    print!("{}", summary.to_tsv());
    Ok(())
}

