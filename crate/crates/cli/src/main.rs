use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use commvec::classify::{read_corpus, run_experiment, Channel, ExperimentConfig, MetricsReport};
use commvec::cooccur::{build_cooccurrence, read_matrix, write_matrix, BuildOptions};
use commvec::embed::{load_embeddings, train, write_binary, write_text, EmbedConfig, VectorExport};
use commvec::ingest::{read_memberships, run_ingest, write_activity, write_memberships, IngestOptions, SubredditVocab};
use commvec::pipeline::{generate_synthetic, run_pipeline, PipelineConfig, SyntheticSpec, MANIFEST_FILE};
use commvec::vecspace::{read_suite, run_eval_suite, Candidate, SuiteKind};
use commvec::EmbeddingSpace;

#[derive(Parser)]
#[command(name = "commvec", version, about = "Community embeddings and context-aware slur classification")]
struct Cli {
    /// Repeat for more logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Comment dumps to filtered activity counts and membership sets.
    Ingest(IngestArgs),
    /// Membership sets to a co-occurrence matrix.
    Cooccur(CooccurArgs),
    /// Train embeddings on a co-occurrence matrix.
    Embed(EmbedArgs),
    /// Ad-hoc queries against an embedding file.
    Query(QueryArgs),
    /// Score a composition or analogy suite.
    Eval(EvalArgs),
    /// Cross-validated classification of a labelled corpus.
    Classify(ClassifyArgs),
    #[command(subcommand)]
    Pipeline(PipelineCommand),
}

#[derive(Args)]
struct IngestArgs {
    /// File or glob; repeatable. `.gz` inputs are decompressed.
    #[arg(long = "input", required = true)]
    inputs: Vec<String>,
    #[arg(long)]
    bots: Option<PathBuf>,
    /// Also treat names ending in "bot" as bots.
    #[arg(long)]
    bot_suffix: bool,
    #[arg(long, default_value_t = commvec::ingest::DEFAULT_MIN_COMMENTS)]
    min_comments: u64,
    #[arg(long, default_value_t = commvec::ingest::DEFAULT_TOP)]
    top: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CooccurArgs {
    #[arg(long)]
    memberships: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the nonzero entries as name/name/count TSV.
    #[arg(long)]
    tsv: Option<PathBuf>,
    #[arg(long)]
    max_memberships: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Export {
    Sum,
    Main,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 150)]
    dim: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `--deterministic=false` switches to lock-free parallel updates.
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    deterministic: bool,
    #[arg(long, value_enum, default_value_t = Export::Sum)]
    export: Export,
    /// Text output, or the binary format when the name ends in `.bin`.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss as JSON.
    #[arg(long)]
    loss_trace: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 10, global = true)]
    k: usize,
    #[command(subcommand)]
    op: QueryOp,
}

#[derive(Subcommand)]
enum QueryOp {
    Sim { a: String, b: String },
    Nn { name: String },
    Compose { left: String, right: String },
    Analogy { a: String, b: String, c: String },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    suite: PathBuf,
    #[arg(long = "type")]
    kind: SuiteKind,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "none")]
    channel: Channel,
    /// Required for the neighborhood channel.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = commvec::classify::folds::DEFAULT_FOLDS)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// L2 strength on the mean loss. Defaults to 1/N_train.
    #[arg(long, conflicts_with = "l2_sweep")]
    l2: Option<f64>,
    /// Comma-separated λ values; prints a summary per value.
    #[arg(long, value_delimiter = ',')]
    l2_sweep: Vec<f64>,
    #[arg(long, default_value_t = commvec::classify::experiment::DEFAULT_NEIGHBOR_K)]
    neighbor_k: usize,
    /// Earlier report to build the flip table against.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Run every enabled stage from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write a synthetic dataset and a matching pipeline config.
    Synth {
        /// Defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_space(path: &Path) -> Result<EmbeddingSpace> {
    Ok(EmbeddingSpace::new(&load_embeddings(path)?)?)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let out = run_ingest(&IngestOptions {
        inputs: a.inputs,
        bots: a.bots,
        bot_suffix_heuristic: a.bot_suffix,
        min_comments: a.min_comments,
        top: a.top,
    })?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = create(&a.out.join("activity.tsv"))?;
    write_activity(&out.table, &mut w)?;
    w.flush()?;
    let mut w = create(&a.out.join("memberships.tsv"))?;
    write_memberships(&out.selection.sets, &mut w)?;
    w.flush()?;
    write_json(&a.out.join("ingest_report.json"), &out.report)?;
    eprintln!(
        "{} records, {} skipped, {} errors; kept {} subreddits and {} users",
        out.report.records,
        out.report.skipped_total(),
        out.report.errors,
        out.report.retained_subreddits,
        out.report.retained_users
    );
    Ok(())
}

fn cooccur(a: CooccurArgs) -> Result<()> {
    let sets = read_memberships(open(&a.memberships)?, &a.memberships)?;
    let vocab = SubredditVocab::from_sets(&sets);
    let opts = BuildOptions {
        max_memberships_per_user: a.max_memberships,
    };
    let (matrix, report) = build_cooccurrence(&sets, &vocab, &opts)?;
    let mut w = create(&a.out)?;
    write_matrix(&matrix, &mut w)?;
    w.flush()?;
    if let Some(p) = &a.tsv {
        matrix.write_tsv(create(p)?)?;
    }
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    eprintln!("{} subreddits, {} nonzero pairs", report.vocab_size, report.nnz);
    Ok(())
}

fn embed(a: EmbedArgs) -> Result<()> {
    let matrix = read_matrix(open(&a.matrix)?, &a.matrix)?;
    let config = EmbedConfig {
        dim: a.dim,
        epochs: a.epochs,
        learning_rate: a.lr,
        seed: a.seed,
        deterministic: a.deterministic,
        export: match a.export {
            Export::Sum => VectorExport::Sum,
            Export::Main => VectorExport::Main,
        },
        ..EmbedConfig::default()
    };
    let out = train(&matrix, &config)?;
    let mut w = create(&a.out)?;
    if a.out.extension().is_some_and(|e| e == "bin") {
        write_binary(&out.embeddings, &mut w)?;
    } else {
        write_text(&out.embeddings, &mut w)?;
    }
    w.flush()?;
    if let Some(p) = &a.loss_trace {
        write_json(p, &out.loss_trace)?;
    }
    if let (Some(first), Some(last)) = (out.loss_trace.first(), out.loss_trace.last()) {
        eprintln!("loss {first:.4} -> {last:.4} over {} epochs", out.loss_trace.len());
    }
    Ok(())
}

fn print_candidates(c: &[Candidate]) {
    for x in c {
        println!("{}\t{:.6}", x.name, x.score);
    }
}

fn query(a: QueryArgs) -> Result<()> {
    let space = load_space(&a.embeddings)?;
    match a.op {
        QueryOp::Sim { a: x, b: y } => println!("{:.6}", space.similarity(&x, &y)?),
        QueryOp::Nn { name } => print_candidates(&space.nearest_neighbors(&name, a.k, &[])?),
        QueryOp::Compose { left, right } => print_candidates(&space.compose(&left, &right, a.k)?),
        QueryOp::Analogy { a: x, b: y, c: z } => print_candidates(&space.analogy(&x, &y, &z, a.k)?),
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let space = load_space(&a.embeddings)?;
    let tests = read_suite(open(&a.suite)?, a.kind, &a.suite)?;
    let name = a.suite.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let report = run_eval_suite(&name, &tests, &space, a.k)?;
    println!(
        "{name}: {}/{} evaluated, hits@1 {:.3}, hits@5 {:.3}, hits@{} {:.3}",
        report.evaluated,
        report.total,
        report.rate_at_1(),
        report.rate_at_5(),
        report.k,
        report.rate_at_k()
    );
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    Ok(())
}

fn summary(r: &MetricsReport) -> serde_json::Value {
    json!({
        "channel": r.channel,
        "accuracy": r.accuracy,
        "macro_f1": r.macro_f1,
        "ndg_false_positive_rate": r.ndg_false_positive_rate,
    })
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let corpus = read_corpus(open(&a.corpus)?)?;
    let space = match (&a.embeddings, a.channel) {
        (Some(p), _) => Some(load_space(p)?),
        (None, Channel::Neighborhood) => bail!("--embeddings is required for the neighborhood channel"),
        (None, _) => None,
    };
    let baseline: Option<MetricsReport> = match &a.baseline {
        Some(p) => Some(serde_json::from_reader(open(p)?).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let config = ExperimentConfig {
        folds: a.folds,
        seed: a.seed,
        l2: a.l2,
        neighbor_k: a.neighbor_k,
        ..ExperimentConfig::default()
    };

    if !a.l2_sweep.is_empty() {
        let mut rows = Vec::new();
        for &l2 in &a.l2_sweep {
            let c = ExperimentConfig { l2: Some(l2), ..config.clone() };
            let r = run_experiment(&corpus, a.channel, space.as_ref(), &c, baseline.as_ref())?;
            let mut row = summary(&r);
            row["l2"] = json!(l2);
            rows.push(row);
        }
        print_json(&rows)?;
        if let Some(p) = &a.report {
            write_json(p, &rows)?;
        }
        return Ok(());
    }

    let r = run_experiment(&corpus, a.channel, space.as_ref(), &config, baseline.as_ref())?;
    print_json(&summary(&r))?;
    if let Some(f) = &r.flips {
        eprintln!(
            "vs {}: {} fixed, {} broken",
            f.baseline, f.overall.fixed_by_context, f.overall.broken_by_context
        );
    }
    if let Some(p) = &a.report {
        write_json(p, &r)?;
    }
    Ok(())
}

fn pipeline(cmd: PipelineCommand) -> Result<()> {
    match cmd {
        PipelineCommand::Run { config, seed, out_dir } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            let manifest = run_pipeline(&cfg)?;
            for a in &manifest.artifacts {
                println!("{}  {}", a.sha256, a.name);
            }
            eprintln!("wrote {}", cfg.out_dir.join(MANIFEST_FILE).display());
        }
        PipelineCommand::Synth { spec, seed, out } => {
            let mut spec = match &spec {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    SyntheticSpec::from_toml(&text)?
                }
                None => SyntheticSpec::default(),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            let data = generate_synthetic(&spec)?;
            for p in data.write(&out, spec.seed)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Cooccur(a) => cooccur(a),
        Command::Embed(a) => embed(a),
        Command::Query(a) => query(a),
        Command::Eval(a) => eval(a),
        Command::Classify(a) => classify(a),
        Command::Pipeline(c) => pipeline(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
