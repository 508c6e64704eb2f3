use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fpp_lab::commands;
use fpp_lab::config::ConfigArgs;
use fpp_lab::error::CliError;
use fpp_lab::report::Report;

/// Random capacity experiments on discrete cylinders.
#[derive(Parser)]
#[command(name = "fpplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory for the CSV and JSON reports.
    #[arg(long, global = true, env = "FPPLAB_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Max flow, canonical cut, essential and pivotal edges of one sample.
    Flow,
    /// Variance, Efron-Stein and Newman-Piza estimates per side length.
    Variance,
    /// Hit frequencies, thresholds, shift regularity and derivative norms.
    Influence,
    /// Noise-stability curve and its integral.
    Chaos,
    /// Chimney scan of one canonical cut.
    Chimney,
    /// Lipschitz surface of one weight sample.
    Lipschitz,
    /// Boundary avoidance and localization of anchored surfaces.
    Anchored,
    /// Exact oracle fixture for the tiny instances.
    Oracle,
    /// Block subadditivity defect.
    Subadditivity,
    /// The acceptance criteria.
    Suite,
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(vec![format!("jobs: {e}")]))?;
    }
    let cfg = cli.config.resolve()?;
    match cli.command {
        Command::Flow => commands::flow(&cfg),
        Command::Variance => commands::variance(&cfg),
        Command::Influence => commands::influence(&cfg),
        Command::Chaos => commands::chaos(&cfg),
        Command::Chimney => commands::chimney(&cfg),
        Command::Lipschitz => commands::lipschitz(&cfg),
        Command::Anchored => commands::anchored(&cfg),
        Command::Oracle => commands::oracle(&cfg),
        Command::Subadditivity => commands::subadditivity(&cfg),
        Command::Suite => commands::suite(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|report| {
        let (csv, json) = report.write(&cli.out_dir)?;
        println!("wrote {} and {}", csv.display(), json.display());
        commands::check_suite(&report)
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpplab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
