use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use policy_audit::report::{analyze_app, corpus, corpus_bigrams, write_corpus_report, AnalyzeOptions};
use policy_audit::vocabulary::load_lexicon;

/// Fact-checks app privacy policies against static-analysis evidence of
/// user-interaction data collection.
#[derive(Parser, Debug)]
#[command(name = "policy-audit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyze one app: policy text plus decoded bundle.
    Analyze {
        /// Privacy policy file (plain text or HTML).
        #[arg(long)]
        policy: PathBuf,
        /// Decoded bundle directory (res/layout*/ + smali*/).
        #[arg(long)]
        bundle: PathBuf,
        /// Lexicon file, or "builtin".
        #[arg(long, env = "POLICY_AUDIT_LEXICON", default_value = "builtin")]
        lexicon: String,
        /// Ground-truth annotations for coverage/evaluation.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Count device data in the consistency rates.
        #[arg(long)]
        include_device_data: bool,
        /// Omit timestamps so identical inputs yield identical reports.
        #[arg(long)]
        no_timestamps: bool,
        /// Output directory for the JSON and markdown reports.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate per-app reports into a corpus report.
    Corpus {
        /// Directory of app-report JSON files.
        #[arg(long)]
        reports: PathBuf,
        /// Output directory for corpus.json and corpus.md.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the most frequent bigrams of the relevant policy sentences.
    Bigrams {
        /// Directory of policy files (.txt/.html/.htm/.md).
        #[arg(long)]
        policies: PathBuf,
        /// Number of bigrams to print.
        #[arg(long)]
        top: usize,
        /// Lexicon file, or "builtin".
        #[arg(long, env = "POLICY_AUDIT_LEXICON", default_value = "builtin")]
        lexicon: String,
    },
}

fn run(cli: Cli) -> policy_audit::Result<()> {
    match cli.command {
        Command::Analyze {
            policy,
            bundle,
            lexicon,
            ground_truth,
            include_device_data,
            no_timestamps,
            out,
        } => {
            let options = AnalyzeOptions {
                ground_truth,
                include_device_data,
                timestamps: !no_timestamps,
                out_dir: Some(out.clone()),
            };
            let report = analyze_app(&policy, &bundle, &lexicon, &options)?;
            println!(
                "{}: data types {}, techniques {}, contexts {} -> {}",
                report.app_id,
                report.consistency.data_type_rate,
                report.consistency.technique_rate,
                report.consistency.context_rate,
                out.join(format!("{}.report.json", report.app_id)).display()
            );
            Ok(())
        }
        Command::Corpus { reports, out } => {
            let report = corpus(&reports)?;
            let (json_path, _) = write_corpus_report(&report, &out)?;
            println!("{} apps -> {}", report.app_count, json_path.display());
            Ok(())
        }
        Command::Bigrams { policies, top, lexicon } => {
            let lexicon = load_lexicon(&lexicon)?;
            for (bigram, count) in corpus_bigrams(&policies, &lexicon, top)? {
                println!("{bigram}\t{count}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
