use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tracing::Level;

use asred::config::{Config, EmbedderChoice};
use asred::corpus::{generate_synthetic, load_corpus, save_corpus, Corpus};
use asred::embed::build_embedder;
use asred::pipeline::{emit_report, run_pipeline, ReportFormat};
use asred::rules::certify;
use asred::sat;

const EXIT_INPUT: u8 = 2;
const EXIT_INCIDENT: u8 = 3;

#[derive(Parser)]
#[command(name = "asred", version, about = "Cluster and reduce clocked implication assertion corpora")]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a corpus and write the reduced corpus plus a report.
    Reduce {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 0.6)]
        beta: f64,
        #[arg(long, default_value_t = 0.85)]
        threshold: f64,
        #[arg(long, default_value_t = 500)]
        lasso_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        workers: usize,
        #[arg(long, default_value_t = 200)]
        mcts_iters: usize,
        #[arg(long, default_value_t = 3)]
        patience: usize,
        /// `hash`, an embedding service URL, or `url` to read the URL from
        /// ARCANE_EMBED_URL.
        #[arg(long, default_value = "hash")]
        embedder: String,
        #[arg(long, env = "ARCANE_EMBED_URL", hide_env_values = true)]
        embed_url: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        report: Format,
        /// Cluster the whole corpus as one group.
        #[arg(long)]
        no_coarse_partition: bool,
    },
    /// Write a synthetic corpus with planted redundancies.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check two corpora for equivalence (exit 0 if equivalent, 1 if not).
    Check {
        #[arg(long = "corpus", num_args = 1, required = true)]
        corpora: Vec<PathBuf>,
        #[arg(long, default_value_t = 500)]
        lasso_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_INPUT)
}

fn load(path: &Path) -> Result<Corpus, ExitCode> {
    load_corpus(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn embedder_choice(spec: &str, env_url: Option<String>) -> Result<EmbedderChoice, String> {
    match spec {
        "hash" => Ok(EmbedderChoice::Hash),
        "url" | "remote" => env_url
            .map(EmbedderChoice::Remote)
            .ok_or_else(|| "--embedder url needs ARCANE_EMBED_URL or --embed-url".to_string()),
        s if s.starts_with("http://") || s.starts_with("https://") => Ok(EmbedderChoice::Remote(s.to_string())),
        s => Err(format!("unknown embedder `{s}` (expected hash, url, or an http(s) URL)")),
    }
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.command {
        Command::Reduce {
            corpus,
            out,
            alpha,
            beta,
            threshold,
            lasso_samples,
            seed,
            workers,
            mcts_iters,
            patience,
            embedder,
            embed_url,
            report,
            no_coarse_partition,
        } => {
            let input = load(&corpus)?;
            let mut cfg = Config {
                alpha,
                beta,
                threshold,
                lasso_samples,
                seed,
                workers,
                coarse_partition: !no_coarse_partition,
                embedder: embedder_choice(&embedder, embed_url).map_err(input_error)?,
                ..Config::default()
            };
            cfg.search.iterations = mcts_iters;
            cfg.search.patience = patience;
            cfg.search.seed = seed;
            cfg.validate().map_err(input_error)?;
            let emb = build_embedder(&cfg.embedder, cfg.embed_dim).map_err(input_error)?;
            let (reduced, rep) = run_pipeline(&input, &cfg, emb.as_ref()).map_err(|e| {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            })?;
            std::fs::create_dir_all(&out).map_err(|e| input_error(format!("{}: {e}", out.display())))?;
            save_corpus(&reduced, &out.join("reduced.json")).map_err(input_error)?;
            let (format, name) = match report {
                Format::Json => (ReportFormat::Json, "report.json"),
                Format::Text => (ReportFormat::Text, "report.txt"),
            };
            emit_report(&rep, format, &out.join(name)).map_err(input_error)?;
            print!("{}", rep.to_text());
            if rep.has_incidents() {
                eprintln!(
                    "soundness incident: {} certificate failures, {} rollbacks",
                    rep.certificates.failures,
                    rep.certificates.rollbacks.len()
                );
                return Ok(ExitCode::from(EXIT_INCIDENT));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate { n, r, seed, out } => {
            if n == 0 {
                return Err(input_error("--n must be at least 1"));
            }
            let (mut corpus, truth) = generate_synthetic(n, r, seed);
            corpus.metadata.insert(
                "ground_truth".into(),
                serde_json::to_value(&truth).expect("ground truth serializes"),
            );
            save_corpus(&corpus, &out).map_err(input_error)?;
            println!("wrote {} assertions ({} planted) to {}", corpus.len(), truth.planted.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            corpora,
            lasso_samples,
            seed,
        } => {
            let [a, b] = corpora.as_slice() else {
                return Err(input_error("check takes exactly two --corpus arguments"));
            };
            let (a, b) = (load(a)?, load(b)?);
            let cert = certify(&a.assertions, &b.assertions, lasso_samples, seed);
            let sat = sat::set_equivalent(&a.assertions, &b.assertions);
            println!(
                "lasso: {} ({} samples{}); sat: {}",
                if cert.passed { "agree" } else { "differ" },
                cert.samples,
                cert.counterexample.map(|i| format!(", counterexample #{i}")).unwrap_or_default(),
                match &sat {
                    Ok(true) => "equivalent".to_string(),
                    Ok(false) => "not shown equivalent".to_string(),
                    Err(e) => format!("refused ({e})"),
                }
            );
            Ok(if cert.passed && !cert.skipped {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => Level::WARN,
        1 => Level::INFO,
        2 => Level::DEBUG,
        _ => Level::TRACE,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();
    run(cli).unwrap_or_else(|code| code)
}
