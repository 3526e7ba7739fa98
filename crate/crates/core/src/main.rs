use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use wulffstab::cli::{self, Command, ExperimentConfig};
use wulffstab::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    Wulff,
    Curvature,
    Kernel,
    Center,
    Sweep,
    Einstein,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Wulff => Command::Wulff,
            Sub::Curvature => Command::Curvature,
            Sub::Kernel => Command::Kernel,
            Sub::Center => Command::Center,
            Sub::Sweep => Command::Sweep,
            Sub::Einstein => Command::Einstein,
        }
    }
}

/// Anisotropic Wulff-shape stability experiments.
///
/// Exit status: 0 when every check passes, 1 when a check or certificate
/// fails (the checks report path is printed), 2 for an invalid configuration.
#[derive(Debug, Parser)]
#[command(name = "wulffstab", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed, overriding the configured one.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configured one (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render SVG line plots.
    #[arg(long)]
    svg: bool,
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("WULFFSTAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("WULFFSTAB_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("WULFFSTAB_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let config = match &args.config {
        None => ExperimentConfig::default(),
        Some(path) => {
            let src = match std::fs::read_to_string(path) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", path.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match ExperimentConfig::parse(&src) {
                Ok(c) => c,
                Err(Error::Config { line, message }) => {
                    eprintln!("{}:{line}: {message}", path.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
        }
    };
    let seed = args.seed.unwrap_or(config.seed);
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(config.out.clone().unwrap_or_else(|| "out".into())));
    let command: Command = args.command.into();
    let outcome = match cli::execute(command, &config, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{} failed: {e}", command.name());
            return ExitCode::from(EXIT_CHECK_FAILED);
        }
    };
    let paths = match outcome.write(command, &out, args.svg) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot write artifacts: {e}");
            return ExitCode::from(EXIT_CHECK_FAILED);
        }
    };
    for c in &outcome.checks {
        println!("{:<5} {} [{}] value={:e} rule {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.subject, c.value, c.rule);
    }
    if outcome.pass() {
        ExitCode::SUCCESS
    } else {
        eprintln!("checks failed; report: {}", paths[0].display());
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}
