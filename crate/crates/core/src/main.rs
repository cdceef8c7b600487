use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use varq::scenario::{self, RunOptions, ScenarioError};

#[derive(Parser)]
#[command(name = "varq", version, about = "Run probabilistic-variational dynamics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every *.toml scenario in a directory. VARQ_THREADS caps parallelism.
    Sweep {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Parse and validate a scenario file without running it.
    Check { config: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Output directory for report.json and CSV series.
    #[arg(long, default_value = "varq-out")]
    out: PathBuf,
    /// Seed for randomized probe states; overrides the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplier applied to every invariant tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions { seed: self.seed, tol_scale: self.tol_scale }
    }
}

fn read(path: &PathBuf) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::Config(format!("{}: {e}", path.display())))
}

fn threads() -> Result<Option<usize>, ScenarioError> {
    match std::env::var("VARQ_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| ScenarioError::Config(format!("VARQ_THREADS: expected a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn fail(e: &ScenarioError) -> i32 {
    eprintln!("varq: {e}");
    e.exit_code()
}

fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Check { config } => match read(&config).and_then(|t| scenario::check_config(&t)) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.regime.as_str());
                0
            }
            Err(e) => fail(&e),
        },
        Command::Run { config, common } => {
            let outcome = match read(&config).and_then(|t| scenario::run_scenario(&t, &common.options())) {
                Ok(o) => o,
                Err(e) => return fail(&e),
            };
            let path = match scenario::write_outputs(&outcome, &common.out) {
                Ok(p) => p,
                Err(e) => return fail(&e),
            };
            for c in outcome.report.body.checks.iter().filter(|c| !c.passed) {
                eprintln!("varq: check `{}` failed: {:e} > {:e}", c.name, c.value, c.tolerance);
            }
            println!("{}: {} -> {}", config.display(), outcome.report.body.status, path.display());
            outcome.report.exit_code()
        }
        Command::Sweep { dir, common } => {
            let entries = match threads().and_then(|n| scenario::sweep(&dir, &common.out, &common.options(), n)) {
                Ok(e) => e,
                Err(e) => return fail(&e),
            };
            let mut code = 0;
            for entry in &entries {
                match &entry.result {
                    Ok(r) => println!("{}: {}", entry.config.display(), r.body.status),
                    Err(e) => println!("{}: error: {e}", entry.config.display()),
                }
                code = code.max(entry.exit_code());
            }
            code
        }
    }
}

fn main() -> ExitCode {
    let code = execute(Cli::parse());
    ExitCode::from(code as u8)
}
