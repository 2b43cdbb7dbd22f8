use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use semiq::metrics::{efficiency_sqka_with, efficiency_sqpc2, theorem1_check};
use semiq::qsim::Unitary;
use semiq_cli::{parse_config, run_scenario};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "semiq", version, about = "Semi-quantum protocol simulator")]
struct Cli {
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of (or as well as) stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Do not print the report to stdout.
    #[arg(long, global = true)]
    quiet: bool,
    /// Include the session transcript in single-run reports.
    #[arg(long, global = true)]
    transcript: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EffProtocol {
    Sqpc2,
    Sqka,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a JSON config.
    Run { config: PathBuf },
    /// Ledger of an honest run next to the closed-form qubit efficiency.
    Efficiency {
        protocol: EffProtocol,
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
    /// Entangle-measure check with a controlled-rotation entangler.
    Theorem1 {
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
}

enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

fn emit<T: Serialize>(cli: &Cli, out: Option<&Path>, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    if let Some(path) = out {
        fs::write(path, &text).map_err(|e| Failure::io(path, e))?;
    }
    if !cli.quiet {
        std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Run { config } => {
            let text = fs::read_to_string(config).map_err(|e| Failure::io(config, e))?;
            let mut cfg = parse_config(&text).map_err(|e| Failure::Usage(e.to_string()))?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let report = run_scenario(&cfg, cli.transcript).map_err(Failure::Usage)?;
            let out = cli.out.clone().or(cfg.output_path.as_ref().map(PathBuf::from));
            emit(cli, out.as_deref(), &report)
        }
        Command::Efficiency { protocol, n } => {
            let r = match protocol {
                EffProtocol::Sqpc2 => efficiency_sqpc2(*n),
                EffProtocol::Sqka => efficiency_sqka_with(*n),
            }
            .map_err(|e| Failure::Usage(e.to_string()))?;
            emit(cli, cli.out.as_deref(), &r)
        }
        Command::Theorem1 { theta, trials } => {
            if !theta.is_finite() {
                return Err(Failure::Usage("--theta must be finite".into()));
            }
            let u_e = Unitary::controlled_rotation(*theta);
            let r = theorem1_check(&u_e, &Unitary::identity(2), *trials, seed)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            emit(cli, cli.out.as_deref(), &r)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(2)
        }
    }
}
