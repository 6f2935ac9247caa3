use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use honeycomb_xai_cli::pipeline::{self, ExplainMethod, Selection};
use honeycomb_xai_cli::{Overrides, Result, RunConfig};

#[derive(Parser)]
#[command(
    name = "hcx",
    version,
    about = "Explainable satisfaction models over survey text"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus file and print a summary.
    Ingest {
        /// Defaults to the configured corpus.
        path: Option<PathBuf>,
    },
    /// Write a synthetic corpus to <out>/corpus.jsonl.
    Generate {
        /// Records per dimension.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Split the corpus and augment the training split.
    Augment,
    /// Train one model per dimension.
    Train,
    /// Explain test records.
    Explain {
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Record id; repeatable.
        #[arg(
            long = "id",
            conflicts_with = "all_test",
            required_unless_present = "all_test"
        )]
        ids: Vec<String>,
        /// Every record of the test split.
        #[arg(long)]
        all_test: bool,
    },
    /// Build per-dimension reports from models and explanations.
    Report,
    /// Every stage in order.
    RunAll,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lime,
    Shap,
    Anchor,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<ExplainMethod> {
        match self {
            MethodArg::Lime => vec![ExplainMethod::Lime],
            MethodArg::Shap => vec![ExplainMethod::Shap],
            MethodArg::Anchor => vec![ExplainMethod::Anchor],
            MethodArg::All => ExplainMethod::ALL.to_vec(),
        }
    }
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
    };
    let cfg = RunConfig::resolve(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Ingest { path } => {
            let summary = match path {
                Some(p) => pipeline::ingest(&p)?,
                None => pipeline::CorpusSummary::of(&pipeline::source_corpus(&cfg)?),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).expect("summary serializes")
            );
        }
        Command::Generate { n } => {
            let n = n
                .or(cfg.synthetic.as_ref().map(|s| s.n_per_dimension))
                .unwrap_or(100);
            let path = pipeline::generate(&cfg.paths.out, cfg.seed, n)?;
            println!("wrote {}", path.display());
        }
        Command::Augment => {
            let s = pipeline::augment(&cfg)?;
            println!(
                "train {} (augmented {}), test {}",
                s.train, s.augmented_train, s.test
            );
        }
        Command::Train => {
            let s = pipeline::train(&cfg)?;
            warn(&s.warnings);
            for (d, m) in &s.metrics {
                println!("{d}: test accuracy {:.4} on {} records", m.accuracy, m.n);
            }
        }
        Command::Explain {
            method,
            ids,
            all_test,
        } => {
            let selection = if all_test {
                Selection::AllTest
            } else {
                Selection::Ids(ids)
            };
            let s = pipeline::explain(&cfg, &method.methods(), &selection)?;
            warn(&s.warnings);
            for ((d, m), n) in &s.written {
                println!("{d}: {n} {} explanations", m.as_str());
            }
        }
        Command::Report => {
            let s = pipeline::report(&cfg)?;
            warn(&s.warnings);
            for p in &s.written {
                println!("wrote {}", p.display());
            }
        }
        Command::RunAll => {
            let s = pipeline::run_all(&cfg)?;
            warn(&s.warnings);
            for (d, m) in &s.train.metrics {
                println!("{d}: test accuracy {:.4} on {} records", m.accuracy, m.n);
            }
            println!(
                "{} report files under {}",
                s.reports.len(),
                cfg.paths.out.join("reports").display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
