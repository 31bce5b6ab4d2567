use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use diffract_cli::runner::RunOptions;
use diffract_cli::selftest::{run_suite, Suite};
use diffract_cli::{load_document, run_document, scenarios, AppError};

/// Simulate point processes and compare their diffraction with closed forms.
#[derive(Parser)]
#[command(name = "diffract", version = diffract_cli::report::VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario by name.
    Run {
        config: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        realisations: u64,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write realisations 0..N as point files.
        #[arg(long, default_value_t = 0)]
        dump_points: u64,
    },
    /// Run a deterministic identity suite.
    Selftest { suite: Suite },
    /// List the built-in scenarios.
    ListScenarios,
    /// Print the document of a built-in scenario.
    ShowScenario { name: String },
}

const EXIT_ERROR: u8 = 1;
const EXIT_TOLERANCE: u8 = 2;

fn run(config: &str, opts: RunOptions, out: &Path) -> Result<bool, AppError> {
    let doc = load_document(config)?;
    let results = run_document(&doc, &opts, out)?;
    let mut all = true;
    for r in &results {
        let pass = r.outcome.pass();
        all &= pass;
        println!("{} {} -> {}", if pass { "PASS" } else { "FAIL" }, r.name, r.dir.display());
        for c in r.outcome.checks.iter().filter(|c| !c.pass) {
            println!("  {}: {:.6} (limit {:.6})", c.name, c.value, c.limit);
        }
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { config, seed, realisations, threads, out, dump_points } => {
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let opts = RunOptions { seed, realisations, threads, dump_points };
            match run(&config, opts, &out) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(EXIT_TOLERANCE),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_ERROR)
                }
            }
        }
        Command::Selftest { suite } => {
            let checks = run_suite(suite);
            let mut all = true;
            for c in &checks {
                all &= c.pass();
                println!("{} {} (error {:.3e}, limit {:.0e})", if c.pass() { "PASS" } else { "FAIL" }, c.name, c.error, c.limit);
            }
            if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_TOLERANCE)
            }
        }
        Command::ListScenarios => {
            for b in scenarios::BUILTINS {
                println!("{:<22} {}", b.name, b.summary);
            }
            ExitCode::SUCCESS
        }
        Command::ShowScenario { name } => match scenarios::find(&name) {
            Some(b) => {
                print!("{}", b.json);
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no built-in scenario `{name}`");
                ExitCode::from(EXIT_ERROR)
            }
        },
    }
}
