use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nerc::config::load_run_config;
use nerc::corpus::{
    self, corpus_stats, detect_scheme, kfold, read_conll, split_fraction, write_conll_file, Corpus,
    TagScheme,
};
use nerc::eval::{evaluate, gold_labels, remap_labels};
use nerc::features::featurize_corpus;
use nerc::induce::{induce_brown, kmeans, preprocess, read_raw_sentences, InductionMode};
use nerc::lexicons::{write_brown, write_flat};
use nerc::model::{train, PerceptronModel, TrainOptions, DEFAULT_BEAM, DEFAULT_EPOCHS};
use nerc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "nerc",
    about = "Named-entity tagger with shallow local features and stacked clustering features",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an averaged perceptron on one or more CoNLL files.
    Train(TrainArgs),
    /// Tag a CoNLL file with a trained model, appending a prediction column.
    Tag(TagArgs),
    /// Score predictions against gold labels, conlleval style.
    Evaluate(EvaluateArgs),
    /// Dump the features generated for every token of a corpus.
    Featurize(FeaturizeArgs),
    /// Induce a cluster lexicon.
    #[command(subcommand)]
    Induce(InduceCommand),
    /// Cut a corpus into a training fraction or k-fold pairs.
    Split(SplitArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Feature configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Where to write the model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_BEAM)]
    beam: usize,
    /// Label column (0-based); default: last column.
    #[arg(long)]
    label_column: Option<usize>,
    /// Training files; several files concatenate.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Gold CoNLL file.
    #[arg(long)]
    gold: PathBuf,
    /// Predictions as a CoNLL file (label in the last column).
    #[arg(long, conflicts_with_all = ["model", "input"])]
    pred: Option<PathBuf>,
    /// Model to tag `--input` with instead of reading `--pred`.
    #[arg(long, requires = "input")]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    input: Option<PathBuf>,
    /// Tag scheme; detected from the gold labels when omitted.
    #[arg(long)]
    scheme: Option<String>,
    /// Type remap file: `FROM<TAB>TO` per line, TO may be O.
    #[arg(long)]
    remap: Option<PathBuf>,
    /// Label column of the gold file (0-based); default: last column.
    #[arg(long)]
    label_column: Option<usize>,
    /// Also print machine-readable key=value lines.
    #[arg(long)]
    machine: bool,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<usize>,
}

#[derive(Subcommand)]
enum InduceCommand {
    /// Brown clustering over a raw corpus (one sentence per line).
    Brown(InduceBrownArgs),
    /// K-means over a word2vec-format embedding table.
    Kmeans(InduceKmeansArgs),
}

#[derive(Args)]
struct InduceBrownArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    classes: usize,
    #[arg(long, default_value_t = 1)]
    min_count: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InduceKmeansArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Namespace recorded in the lexicon (features use the one from the
    /// run configuration).
    #[arg(long, default_value = "km")]
    namespace: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Training fraction, e.g. 1/8 or 0.125.
    #[arg(long, conflicts_with = "kfold")]
    fraction: Option<String>,
    /// Number of cross-validation folds.
    #[arg(long)]
    kfold: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file for --fraction; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output directory for --kfold.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<usize>,
}

fn main() -> ExitCode {
    // die quietly when the downstream pipe closes, like cat or grep
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Tag(args) => cmd_tag(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Featurize(args) => cmd_featurize(args),
        Command::Induce(InduceCommand::Brown(args)) => cmd_induce_brown(args),
        Command::Induce(InduceCommand::Kmeans(args)) => cmd_induce_kmeans(args),
        Command::Split(args) => cmd_split(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = load_run_config(&args.config)?;
    let mut corpus = Corpus::default();
    for file in &args.files {
        corpus.extend(read_conll(file, args.label_column)?);
    }
    let stats = corpus_stats(&corpus, detect_scheme(&corpus));
    print!("{stats}");
    let outcome = train(
        &corpus,
        config,
        &TrainOptions {
            epochs: args.epochs,
            seed: args.seed,
            beam: args.beam,
        },
    )?;
    for (epoch, updates) in outcome.epoch_updates.iter().enumerate() {
        println!("epoch {:>3}: {updates} updates", epoch + 1);
    }
    outcome.model.save(&args.out)?;
    println!("model written to {}", args.out.display());
    Ok(())
}

/// Streams the input file, appending one prediction column to every token
/// line. Sentence and document segmentation mirrors the corpus reader, so
/// the output parses back with one extra column.
fn cmd_tag(args: TagArgs) -> Result<()> {
    let model = PerceptronModel::load(&args.model)?;
    let corpus = read_conll(&args.input, None)?;
    let predictions = model.tag_corpus(&corpus);

    let reader = BufReader::new(
        File::open(&args.input)
            .map_err(|e| Error::Invalid(format!("cannot open {}: {e}", args.input.display())))?,
    );
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut sentence = 0usize;
    let mut token = 0usize;
    let mut in_sentence = false;
    for line in reader.lines() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() || fields[0] == "-DOCSTART-" {
            if in_sentence {
                sentence += 1;
                token = 0;
                in_sentence = false;
            }
            writeln!(out, "{line}")?;
            continue;
        }
        in_sentence = true;
        let label = &predictions[sentence][token];
        writeln!(out, "{line} {label}")?;
        token += 1;
    }
    Ok(())
}

fn read_remap(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let reader = BufReader::new(
        File::open(path)
            .map_err(|e| Error::Invalid(format!("cannot open {}: {e}", path.display())))?,
    );
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((from, to)) = line.split_once('\t') else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected FROM<TAB>TO".to_string(),
            });
        };
        map.insert(from.trim().to_string(), to.trim().to_string());
    }
    Ok(map)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let gold_corpus = read_conll(&args.gold, args.label_column)?;
    let scheme = match &args.scheme {
        Some(s) => TagScheme::parse(s)?,
        None => detect_scheme(&gold_corpus),
    };
    let gold = gold_labels(&gold_corpus, scheme)?;
    let pred: Vec<Vec<String>> = match (&args.pred, &args.model, &args.input) {
        (Some(pred_path), None, None) => {
            let pred_corpus = read_conll(pred_path, None)?;
            gold_labels(&pred_corpus, scheme)?
        }
        (None, Some(model_path), Some(input)) => {
            let model = PerceptronModel::load(model_path)?;
            let corpus = read_conll(input, None)?;
            model
                .tag_corpus(&corpus)
                .into_iter()
                .map(|labels| corpus::convert_scheme(&labels, model.config.scheme, scheme))
                .collect()
        }
        _ => {
            return Err(Error::invalid(
                "provide either --pred FILE or --model FILE --input FILE",
            ))
        }
    };
    let (gold, pred) = match &args.remap {
        Some(path) => {
            let map = read_remap(path)?;
            (
                gold.iter().map(|g| remap_labels(g, &map)).collect(),
                pred.iter().map(|p| remap_labels(p, &map)).collect(),
            )
        }
        None => (gold, pred),
    };
    let report = evaluate(&gold, &pred, scheme)?;
    print!("{report}");
    if args.machine {
        print!("{}", report.to_kv());
    }
    Ok(())
}

fn cmd_featurize(args: FeaturizeArgs) -> Result<()> {
    let config = load_run_config(&args.config)?;
    let corpus = read_conll(&args.input, args.label_column)?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for sentence in featurize_corpus(&corpus, &config) {
        for (surface, keys) in sentence {
            writeln!(out, "{surface}\t{}", keys.join("\t"))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_induce_brown(args: InduceBrownArgs) -> Result<()> {
    let raw = read_raw_sentences(&args.input)?;
    let stream = preprocess(&raw, InductionMode::Brown);
    let lexicon = induce_brown(&stream, args.classes, args.min_count)?;
    let file = File::create(&args.out)?;
    write_brown(&lexicon, BufWriter::new(file))?;
    println!(
        "{} words in {} classes written to {}",
        lexicon.entries.len(),
        args.classes,
        args.out.display()
    );
    Ok(())
}

fn cmd_induce_kmeans(args: InduceKmeansArgs) -> Result<()> {
    let table = nerc::lexicons::load_embeddings(&args.embeddings)?;
    let lexicon = kmeans(&table, args.k, args.seed, args.max_iters, &args.namespace)?;
    let file = File::create(&args.out)?;
    write_flat(&lexicon, BufWriter::new(file))?;
    println!(
        "{} words in {} classes written to {}",
        lexicon.entries.len(),
        args.k,
        args.out.display()
    );
    Ok(())
}

fn parse_fraction(s: &str) -> Result<f64> {
    if let Some((num, den)) = s.split_once('/') {
        let num: f64 = num
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad fraction `{s}`")))?;
        let den: f64 = den
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad fraction `{s}`")))?;
        Ok(num / den)
    } else {
        s.trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad fraction `{s}`")))
    }
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let corpus = read_conll(&args.input, args.label_column)?;
    match (&args.fraction, args.kfold) {
        (Some(fraction), None) => {
            let part = split_fraction(&corpus, parse_fraction(fraction)?)?;
            match &args.out {
                Some(path) => write_conll_file(&part, path)?,
                None => corpus::write_conll(&part, std::io::stdout().lock())?,
            }
            Ok(())
        }
        (None, Some(k)) => {
            let dir = args
                .out_dir
                .ok_or_else(|| Error::invalid("--kfold needs --out-dir"))?;
            std::fs::create_dir_all(&dir)?;
            for (i, (train, test)) in kfold(&corpus, k, args.seed)?.iter().enumerate() {
                write_conll_file(train, dir.join(format!("fold{i}.train.conll")))?;
                write_conll_file(test, dir.join(format!("fold{i}.test.conll")))?;
            }
            Ok(())
        }
        _ => Err(Error::invalid(
            "provide exactly one of --fraction or --kfold",
        )),
    }
}
