//! Command-line front end for the `ragmark` benchmarking engine.
//!
//! Exit codes: 0 success, 1 corpus violations found by `validate`,
//! 2 configuration problems (including bad flags), 3 provider failures,
//! 4 data problems. `validate` maps an unreadable corpus to 2.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use ragmark::corpus::{collect_findings, save_corpus, Finding};
use ragmark::harness::{
    build_index_for_arm, embed_corpus_for_arm, embed_query_for_arm, generate_qa_corpus,
    load_config, load_report, profile_efficiency, radar_csv, render_text, run_experiment,
    write_artifacts, ConfigError, ExperimentConfig,
};
use ragmark::{Error, ErrorClass};

/// Benchmark retrieval pipelines against corpora with labeled degradation.
#[derive(Parser)]
#[command(name = "ragmark", version, about, max_term_width = 100)]
struct Cli {
    /// Increase log detail (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a corpus file and report every violation found.
    Validate {
        /// Corpus file (one JSON document or qa record per line).
        corpus: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Generate question/answer pairs for every document in the corpus.
    GenerateQa {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set qa_generation.per_doc=5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Where to write the corpus with the generated pairs.
        #[arg(long)]
        out: PathBuf,
        /// Channel to draw document text from (overrides the config).
        #[arg(long)]
        channel: Option<String>,
        /// Pairs to request per document (overrides the config).
        #[arg(long)]
        per_doc: Option<usize>,
    },
    /// Embed the corpus (or a single query) with one arm's providers.
    Embed {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Arm whose embedding providers and channel to use.
        #[arg(long)]
        arm: String,
        /// Write output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Embed this question instead of the corpus documents.
        #[arg(long)]
        query: Option<String>,
    },
    /// Build one arm's index and write its snapshot.
    Index {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        arm: String,
        /// Snapshot file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full evaluation and print the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set k=1` or `--set arms.0.channel=ocr`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Directory for report artifacts (overrides `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Measure embedding cost, retrieval latency, and index footprint.
    Profile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Profile only this arm (default: every arm in the config).
        #[arg(long)]
        arm: Option<String>,
        /// Write the stats here as well as stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved report file.
    Report {
        /// Path to a report.json produced by `run`.
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Print the radar table as CSV instead of the report body.
        #[arg(long)]
        radar: bool,
        /// Regenerate the report artifacts (JSON + CSVs) into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            // Walk the cause chain, skipping causes a parent already inlined
            // into its own message.
            let mut shown = err.to_string();
            eprintln!("error: {shown}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                let message = cause.to_string();
                if !shown.contains(&message) {
                    eprintln!("  caused by: {message}");
                    shown = message;
                }
                source = cause.source();
            }
            match err.class() {
                ErrorClass::Config => ExitCode::from(2),
                ErrorClass::Provider => ExitCode::from(3),
                ErrorClass::Data => ExitCode::from(4),
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Validate { corpus, format } => Ok(cmd_validate(&corpus, format)),
        Command::GenerateQa {
            config,
            set,
            out,
            channel,
            per_doc,
        } => cmd_generate_qa(&config, set, &out, channel, per_doc),
        Command::Embed {
            config,
            set,
            arm,
            out,
            query,
        } => cmd_embed(&config, set, &arm, out.as_deref(), query.as_deref()),
        Command::Index {
            config,
            set,
            arm,
            out,
        } => cmd_index(&config, set, &arm, &out),
        Command::Run {
            config,
            set,
            out,
            seed,
        } => cmd_run(&config, set, out, seed),
        Command::Profile {
            config,
            set,
            arm,
            out,
        } => cmd_profile(&config, set, arm, out.as_deref()),
        Command::Report {
            report,
            format,
            radar,
            out,
        } => cmd_report(&report, format, radar, out.as_deref()),
    }
}

/// Splits repeated `--set KEY=VALUE` flags into override pairs.
fn parse_overrides(set: Vec<String>) -> Result<Vec<(String, String)>, Error> {
    set.into_iter()
        .map(|item| match item.split_once('=') {
            Some((key, value)) if !key.trim().is_empty() => {
                Ok((key.trim().to_string(), value.to_string()))
            }
            _ => Err(ConfigError::Override {
                key: item,
                message: "expected KEY=VALUE".to_string(),
            }
            .into()),
        })
        .collect()
}

fn load(config: &Path, set: Vec<String>, extra: Vec<(String, String)>) -> Result<ExperimentConfig, Error> {
    let mut overrides = parse_overrides(set)?;
    // Dedicated flags win over --set for the same key.
    overrides.extend(extra);
    Ok(load_config(config, &overrides)?)
}

/// Writes to `out` when given, creating parent directories, else to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
            }
            std::fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_validate(corpus: &Path, format: Format) -> ExitCode {
    let findings = match collect_findings(corpus) {
        Ok(findings) => findings,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    match format {
        Format::Text => {
            for finding in &findings {
                match finding.line {
                    Some(line) => println!("line {line}: {}", finding.message),
                    None => println!("{}", finding.message),
                }
            }
            println!("{} violation(s)", findings.len());
        }
        Format::Json => {
            let body = serde_json::json!({
                "violations": findings.len(),
                "findings": findings.iter().map(finding_json).collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&body).expect("findings serialize"));
        }
    }
    if findings.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn finding_json(finding: &Finding) -> serde_json::Value {
    serde_json::to_value(finding).expect("finding serializes")
}

fn cmd_generate_qa(
    config: &Path,
    set: Vec<String>,
    out: &Path,
    channel: Option<String>,
    per_doc: Option<usize>,
) -> Result<ExitCode, Error> {
    let mut extra = Vec::new();
    if let Some(channel) = channel {
        extra.push(("qa_generation.channel".to_string(), channel));
    }
    if let Some(per_doc) = per_doc {
        extra.push(("qa_generation.per_doc".to_string(), per_doc.to_string()));
    }
    let config = load(config, set, extra)?;
    let corpus = generate_qa_corpus(&config)?;
    save_corpus(&corpus, out)?;
    println!(
        "wrote {} document(s) and {} generated pair(s) to {}",
        corpus.documents().len(),
        corpus.qa_pairs().len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_embed(
    config: &Path,
    set: Vec<String>,
    arm: &str,
    out: Option<&Path>,
    query: Option<&str>,
) -> Result<ExitCode, Error> {
    let config = load(config, set, Vec::new())?;
    match query {
        Some(question) => {
            let vectors = embed_query_for_arm(&config, arm, question)?;
            let body = serde_json::json!({
                "arm": arm,
                "question": question,
                "vectors": vectors,
            });
            let mut text =
                serde_json::to_string_pretty(&body).expect("embedding output serializes");
            text.push('\n');
            emit(out, &text)?;
        }
        None => {
            // One JSON object per document so large corpora stream line by line.
            let mut text = String::new();
            for (doc_id, vectors) in embed_corpus_for_arm(&config, arm)? {
                let row = serde_json::json!({ "doc_id": doc_id, "vectors": vectors });
                text.push_str(&serde_json::to_string(&row).expect("embedding row serializes"));
                text.push('\n');
            }
            emit(out, &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_index(config: &Path, set: Vec<String>, arm: &str, out: &Path) -> Result<ExitCode, Error> {
    let config = load(config, set, Vec::new())?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let summary = build_index_for_arm(&config, arm, out)?;
    println!(
        "arm `{}`: {} document(s), {} vector(s), {} bytes -> {}",
        summary.arm,
        summary.docs,
        summary.vectors,
        summary.bytes_written,
        summary.path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(
    config: &Path,
    set: Vec<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<ExitCode, Error> {
    let mut extra = Vec::new();
    if let Some(out) = out {
        extra.push(("out_dir".to_string(), out.to_string_lossy().into_owned()));
    }
    if let Some(seed) = seed {
        extra.push(("seed".to_string(), seed.to_string()));
    }
    let config = load(config, set, extra)?;
    let report = run_experiment(&config)?;
    print!("{}", render_text(&report));
    Ok(ExitCode::SUCCESS)
}

fn cmd_profile(
    config: &Path,
    set: Vec<String>,
    arm: Option<String>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let config = load(config, set, Vec::new())?;
    let arms: Vec<String> = match arm {
        Some(arm) => vec![arm],
        None => config.arms.iter().map(|a| a.name.clone()).collect(),
    };
    let mut stats = serde_json::Map::new();
    for name in arms {
        let measured = profile_efficiency(&config, &name)?;
        stats.insert(
            name,
            serde_json::to_value(measured).expect("efficiency stats serialize"),
        );
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(stats))
        .expect("efficiency stats serialize");
    text.push('\n');
    print!("{text}");
    if out.is_some() {
        emit(out, &text)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(
    report: &Path,
    format: Format,
    radar: bool,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let report = load_report(report)?;
    if radar {
        print!("{}", radar_csv(&report));
    } else {
        match format {
            Format::Text => print!("{}", render_text(&report)),
            Format::Json => print!("{}", report.to_json()),
        }
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_artifacts(&report, dir)?;
    }
    Ok(ExitCode::SUCCESS)
}
