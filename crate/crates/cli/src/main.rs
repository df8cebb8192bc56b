//! Command-line front end for the parsing toolkit.
//!
//! Subcommands cover the whole workflow: `synth` generates random DAG
//! corpora, `oracle` derives transition sequences, `train` fits a model,
//! `parse` decodes, `eval` scores predictions, `stats` relates sentence
//! length to transition count. Data goes to files or stdout; logs go to
//! stderr. Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
//! failure.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use decoder::{linear_fit, oracle_stats, parse_beam, parse_greedy, DecodeError, SentenceStat};
use graph_core::synth::{generate_corpus, SynthConfig};
use graph_core::{jsonl, sdp, SemanticGraph};
use scorer::{
    load_external_embeddings, validate_external, ExternalEmbeddings, Model, ModelConfig,
    ScorerError, Vocab,
};
use transitions::{oracle, replay, write_sequences};

#[derive(Parser)]
#[command(name = "sdparse", version, about = "Transition-based semantic dependency parser")]
struct Cli {
    /// Formalism tag carried through log lines (dm, pas, psd). Informational only.
    #[arg(long, global = true)]
    formalism: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the canonical transition sequence for each gold graph.
    Oracle(OracleArgs),
    /// Train a model on a gold corpus.
    Train(TrainArgs),
    /// Parse a corpus with a trained model.
    Parse(ParseArgs),
    /// Score a predicted corpus against gold.
    Eval(EvalArgs),
    /// Per-sentence transition counts and a linear length fit.
    Stats(StatsArgs),
    /// Generate a random labelled-DAG corpus.
    Synth(SynthArgs),
}

#[derive(clap::Args)]
struct OracleArgs {
    /// Gold corpus (.sdp or .jsonl).
    corpus: PathBuf,
    /// Output file for the sequences; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Replay each sequence and check it rebuilds the gold graph.
    #[arg(long)]
    verify: bool,
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Training corpus (.sdp or .jsonl).
    corpus: PathBuf,
    /// Where to save the trained model.
    #[arg(short, long)]
    model: PathBuf,
    /// Held-out corpus scored after each epoch; best checkpoint wins.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// TOML hyperparameter file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Pretrained embeddings for the training corpus.
    #[arg(long)]
    external_emb: Option<PathBuf>,
    /// Pretrained embeddings for the dev corpus.
    #[arg(long, requires = "dev")]
    dev_external_emb: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ParseArgs {
    /// Input corpus; gold arcs are ignored (.sdp or .jsonl).
    corpus: PathBuf,
    /// Trained model file.
    #[arg(short, long)]
    model: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Beam width; 1 decodes greedily.
    #[arg(long, default_value_t = 5)]
    beam: usize,
    /// Worker threads; 0 uses one per core. Output order is unaffected.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Pretrained embeddings for the input corpus.
    #[arg(long)]
    external_emb: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Predicted corpus.
    predicted: PathBuf,
    /// Gold corpus over the same sentences.
    gold: PathBuf,
}

#[derive(clap::Args)]
struct StatsArgs {
    /// Corpus to measure (.sdp or .jsonl).
    corpus: PathBuf,
    /// Count transitions from this model's decoder instead of the oracle.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Beam width when a model is given.
    #[arg(long, default_value_t = 1)]
    beam: usize,
    /// Pretrained embeddings for the corpus.
    #[arg(long, requires = "model")]
    external_emb: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    sentences: usize,
    #[arg(long, default_value_t = 5)]
    min_len: usize,
    #[arg(long, default_value_t = 25)]
    max_len: usize,
    /// Arcs per word.
    #[arg(long, default_value_t = 0.8)]
    arc_ratio: f64,
    /// Exact share of tokens left without any arc.
    #[arg(long)]
    singleton_share: Option<f64>,
    /// Density preset mirroring a published formalism.
    #[arg(long, value_enum, conflicts_with_all = ["arc_ratio", "singleton_share"])]
    preset: Option<Preset>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Arc density and singleton share pairs observed in the three standard
/// target representations.
#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Dm,
    Pas,
    Psd,
}

impl Preset {
    fn density(self) -> (f64, f64) {
        match self {
            Preset::Dm => (0.79, 0.23),
            Preset::Pas => (0.99, 0.06),
            Preset::Psd => (0.70, 0.35),
        }
    }
}

enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) | Failure::Data(msg) | Failure::Numeric(msg) => f.write_str(msg),
        }
    }
}

fn data(err: impl fmt::Display) -> Failure {
    Failure::Data(err.to_string())
}

fn scorer_failure(err: ScorerError) -> Failure {
    match err {
        ScorerError::NonFinite { .. } => Failure::Numeric(err.to_string()),
        other => Failure::Data(other.to_string()),
    }
}

fn decode_failure(err: DecodeError) -> Failure {
    match err {
        DecodeError::ZeroWidth => Failure::Usage(err.to_string()),
        DecodeError::Scorer(inner) => scorer_failure(inner),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap exits with 2 by default; this tool reserves 2 for data
            // errors, so usage problems are remapped to 1.
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            err.print().expect("diagnostics are writable");
            return ExitCode::from(code);
        }
    };
    if let Some(tag) = &cli.formalism {
        eprintln!("formalism: {tag}");
    }
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}

fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Oracle(args) => cmd_oracle(args),
        Command::Train(args) => cmd_train(args),
        Command::Parse(args) => cmd_parse(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext == "jsonl")
}

fn read_corpus(path: &Path) -> Result<Vec<SemanticGraph>, Failure> {
    if is_jsonl(path) {
        jsonl::read_jsonl_file(path).map_err(data)
    } else {
        sdp::read_sdp_file(path).map_err(data)
    }
}

fn write_corpus(graphs: &[SemanticGraph], path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(path) if is_jsonl(path) => jsonl::write_jsonl_file(graphs, path).map_err(data),
        Some(path) => sdp::write_sdp_file(graphs, path).map_err(data),
        None => sdp::write_sdp_corpus(graphs, io::stdout().lock()).map_err(data),
    }
}

/// Loads and validates external embeddings against a corpus, insisting that
/// the flag and the model's reserved width agree on whether they exist.
fn load_external(
    flag: &str,
    path: Option<&PathBuf>,
    corpus: &[SemanticGraph],
    dim: usize,
) -> Result<Option<ExternalEmbeddings>, Failure> {
    match (path, dim) {
        (None, 0) => Ok(None),
        (Some(path), dim) if dim > 0 => {
            let external = load_external_embeddings(path).map_err(scorer_failure)?;
            let counts: Vec<usize> = corpus.iter().map(|g| g.n()).collect();
            validate_external(&external, &counts, dim).map_err(scorer_failure)?;
            Ok(Some(external))
        }
        (Some(_), _) => Err(Failure::Usage(format!(
            "{flag} given but no external dimensions are reserved"
        ))),
        (None, _) => Err(Failure::Usage(format!(
            "external dimensions are reserved; {flag} is required"
        ))),
    }
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), Failure> {
    let corpus = read_corpus(&args.corpus)?;
    let mut sequences = Vec::with_capacity(corpus.len());
    for (index, gold) in corpus.iter().enumerate() {
        let sequence =
            oracle(gold).map_err(|e| Failure::Data(format!("sentence {index}: {e}")))?;
        if args.verify {
            let rebuilt = replay(gold.sentence().clone(), &sequence)
                .map_err(|e| Failure::Data(format!("sentence {index}: replay failed: {e}")))?;
            if &rebuilt != gold {
                return Err(Failure::Data(format!(
                    "sentence {index}: replay differs from gold"
                )));
            }
        }
        sequences.push(sequence);
    }
    match &args.output {
        Some(path) => {
            let file = File::create(path).map_err(data)?;
            write_sequences(&sequences, BufWriter::new(file)).map_err(data)?;
        }
        None => write_sequences(&sequences, io::stdout().lock()).map_err(data)?,
    }
    if args.verify {
        eprintln!("verified {} oracle sequences by replay", sequences.len());
    }
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<(), Failure> {
    let corpus = read_corpus(&args.corpus)?;
    let mut config = match &args.config {
        Some(path) => ModelConfig::load(path).map_err(scorer_failure)?,
        None => ModelConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let external = load_external(
        "--external-emb",
        args.external_emb.as_ref(),
        &corpus,
        config.external_dim,
    )?;
    let dev_corpus = match &args.dev {
        Some(path) => Some(read_corpus(path)?),
        None => None,
    };
    let dev_external = match &dev_corpus {
        Some(dev) => load_external(
            "--dev-external-emb",
            args.dev_external_emb.as_ref(),
            dev,
            config.external_dim,
        )?,
        None => None,
    };

    let vocab = Vocab::from_corpus(&corpus);
    let mut model = Model::new(config.clone(), vocab, config.seed).map_err(scorer_failure)?;

    eprintln!("epoch\tloss\tdev_lf1\tlearning_rate");
    let mut hook = |epoch: usize, loss: f64, dev: Option<f64>, lr: f64| match dev {
        Some(score) => eprintln!("{epoch}\t{loss:.6}\t{score:.4}\t{lr:.6}"),
        None => eprintln!("{epoch}\t{loss:.6}\t-\t{lr:.6}"),
    };

    let metrics = match &dev_corpus {
        Some(dev) => {
            let mut dev_metric =
                |model: &Model| dev_labelled_f1(model, dev, dev_external.as_ref());
            scorer::train(
                &mut model,
                &corpus,
                external.as_ref(),
                Some(&mut dev_metric),
                Some(&mut hook),
            )
        }
        None => scorer::train(&mut model, &corpus, external.as_ref(), None, Some(&mut hook)),
    }
    .map_err(scorer_failure)?;

    model.save(&args.model).map_err(scorer_failure)?;
    match metrics.best_dev {
        Some(best) => eprintln!(
            "saved best checkpoint (dev LF1 {best:.4}) to {}",
            args.model.display()
        ),
        None => eprintln!("saved final model to {}", args.model.display()),
    }
    Ok(())
}

fn dev_labelled_f1(
    model: &Model,
    dev: &[SemanticGraph],
    external: Option<&ExternalEmbeddings>,
) -> f64 {
    let mut predicted = Vec::with_capacity(dev.len());
    for (index, gold) in dev.iter().enumerate() {
        let vectors = external.map(|e| e[index].as_slice());
        let result = parse_greedy(model, gold.sentence(), vectors)
            .expect("dev externals were validated before training");
        predicted.push(result.graph);
    }
    eval::evaluate(&predicted, dev)
        .expect("predictions align with the dev corpus")
        .labelled_f1()
}

fn cmd_parse(args: &ParseArgs) -> Result<(), Failure> {
    if args.beam == 0 {
        return Err(Failure::Usage("beam width must be at least 1".into()));
    }
    let corpus = read_corpus(&args.corpus)?;
    let model = Model::load(&args.model).map_err(scorer_failure)?;
    let external = load_external(
        "--external-emb",
        args.external_emb.as_ref(),
        &corpus,
        model.config().external_dim,
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(data)?;
    let graphs = pool.install(|| -> Result<Vec<SemanticGraph>, Failure> {
        use rayon::prelude::*;
        corpus
            .par_iter()
            .enumerate()
            .map(|(index, gold)| {
                let vectors = external.as_ref().map(|e| e[index].as_slice());
                let result = if args.beam == 1 {
                    parse_greedy(&model, gold.sentence(), vectors)
                } else {
                    parse_beam(&model, gold.sentence(), vectors, args.beam)
                };
                result.map(|r| r.graph).map_err(decode_failure)
            })
            .collect()
    })?;

    write_corpus(&graphs, args.output.as_deref())?;
    eprintln!("parsed {} sentences (beam {})", graphs.len(), args.beam);
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let predicted = read_corpus(&args.predicted)?;
    let gold = read_corpus(&args.gold)?;
    let evaluation = eval::evaluate(&predicted, &gold).map_err(data)?;
    print!("{}", evaluation.format_table());
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<(), Failure> {
    let corpus = read_corpus(&args.corpus)?;
    let stats: Vec<SentenceStat> = match &args.model {
        None => oracle_stats(&corpus).map_err(data)?,
        Some(path) => {
            if args.beam == 0 {
                return Err(Failure::Usage("beam width must be at least 1".into()));
            }
            let model = Model::load(path).map_err(scorer_failure)?;
            let external = load_external(
                "--external-emb",
                args.external_emb.as_ref(),
                &corpus,
                model.config().external_dim,
            )?;
            corpus
                .iter()
                .enumerate()
                .map(|(index, gold)| {
                    let vectors = external.as_ref().map(|e| e[index].as_slice());
                    let result = if args.beam == 1 {
                        parse_greedy(&model, gold.sentence(), vectors)
                    } else {
                        parse_beam(&model, gold.sentence(), vectors, args.beam)
                    };
                    result
                        .map(|r| SentenceStat {
                            index,
                            tokens: gold.n(),
                            transitions: r.transitions.len(),
                        })
                        .map_err(decode_failure)
                })
                .collect::<Result<_, _>>()?
        }
    };

    let mut out = io::stdout().lock();
    let emit = |out: &mut dyn Write| -> io::Result<()> {
        for stat in &stats {
            writeln!(out, "{}\t{}\t{}", stat.index, stat.tokens, stat.transitions)?;
        }
        let points: Vec<(f64, f64)> = stats
            .iter()
            .map(|s| (s.tokens as f64, s.transitions as f64))
            .collect();
        match linear_fit(&points) {
            Some(fit) => writeln!(
                out,
                "# slope\t{:.4}\tintercept\t{:.4}\tr2\t{:.4}",
                fit.slope, fit.intercept, fit.r_squared
            )?,
            None => writeln!(out, "# fit\tnone")?,
        }
        let tokens: usize = stats.iter().map(|s| s.tokens).sum();
        let arcs: usize = corpus.iter().map(|g| g.arc_count()).sum();
        let singletons: usize = corpus.iter().map(|g| g.singleton_count()).sum();
        let per_word = if tokens == 0 { 0.0 } else { arcs as f64 / tokens as f64 };
        let share = if tokens == 0 { 0.0 } else { 100.0 * singletons as f64 / tokens as f64 };
        writeln!(out, "# arcs_per_word\t{per_word:.4}\tsingleton_pct\t{share:.1}")
    };
    emit(&mut out).map_err(data)
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let (arc_ratio, singleton_share) = match args.preset {
        Some(preset) => {
            let (ratio, share) = preset.density();
            (ratio, Some(share))
        }
        None => (args.arc_ratio, args.singleton_share),
    };
    let config = SynthConfig {
        sentences: args.sentences,
        min_len: args.min_len,
        max_len: args.max_len,
        arc_ratio,
        singleton_share,
        seed: args.seed,
    };
    let corpus = generate_corpus(&config).map_err(|e| Failure::Usage(e.to_string()))?;
    write_corpus(&corpus, args.output.as_deref())?;

    let tokens: usize = corpus.iter().map(|g| g.n()).sum();
    let arcs: usize = corpus.iter().map(|g| g.arc_count()).sum();
    eprintln!(
        "generated {} sentences, {} tokens, {} arcs ({:.3} per word)",
        corpus.len(),
        tokens,
        arcs,
        if tokens == 0 { 0.0 } else { arcs as f64 / tokens as f64 }
    );
    Ok(())
}
