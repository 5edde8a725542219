use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hilladam_cli::config::{parse_config, Mode};
use hilladam_cli::runner::{analyze_report, run_experiment, CellResult, RunSummary};

/// Seeded optimizer-benchmark and color-correction experiment runner.
#[derive(Parser)]
#[command(name = "hilladam", version, about)]
struct Cli {
    /// Experiment configuration: flat `key = value` lines, `#` comments.
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// How many (optimizer, seed) cells to run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    if cli.jobs == 0 {
        return Err("--jobs must be at least 1".into());
    }
    let text =
        fs::read_to_string(&cli.config).map_err(|e| format!("{}: {e}", cli.config.display()))?;
    let mut config = parse_config(&text).map_err(|e| format!("{}: {e}", cli.config.display()))?;
    if let Some(dir) = cli.out_dir {
        config.out_dir = dir;
    }

    if matches!(config.mode, Mode::Analyze { .. }) {
        let report = analyze_report(&config).map_err(|e| e.to_string())?;
        print!("{report}");
        return Ok(ExitCode::SUCCESS);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| e.to_string())?;
    let summaries = pool
        .install(|| run_experiment(&config))
        .map_err(|e| e.to_string())?;

    let mut aborted = 0;
    for summary in &summaries {
        println!("{}", describe(summary));
        if matches!(summary.result, CellResult::Aborted { .. }) {
            aborted += 1;
        }
    }
    println!("wrote {}", config.out_dir.join("summary.csv").display());
    if aborted > 0 {
        eprintln!("error: {aborted} run(s) aborted on non-finite values");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn describe(summary: &RunSummary) -> String {
    let head = format!("{} seed {}", summary.optimizer, summary.seed);
    match &summary.result {
        CellResult::Done {
            best_loss, toggles, ..
        } => {
            let toggles = toggles.map_or(String::new(), |t| format!(", {t} toggle(s)"));
            format!("{head}: best loss {best_loss:.6e}{toggles}")
        }
        CellResult::Aborted { step } => format!("{head}: aborted at step {step}"),
    }
}
