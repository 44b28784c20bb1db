use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use speiser::cli::{cmd_counting, cmd_dim_bound, cmd_render, is_usage_error, CommandOutput, RunConfig};
use speiser::selftest::{self, SelftestOptions};
use speiser::Error;

#[derive(Parser)]
#[command(name = "speiser", version, about = "Escaping sets and dimension bounds for Weierstrass-based meromorphic functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counting functions n, N, m, T on a radius grid, with an order fit.
    Counting {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nested-cover lower bound for the Hausdorff dimension.
    DimBound {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Escape-field image (binary PPM) and CSV of escaping pixels.
    Render {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Property battery of every module.
    Selftest {
        #[arg(long)]
        suite: Option<String>,
        /// Optional config; its `c1` overrides the covering constant.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_usage_error(&e) {
            Failure::Usage(e.to_string())
        } else {
            Failure::Failed(e.to_string())
        }
    }
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if out.is_some() {
        cfg.out = out;
    }
    Ok(cfg)
}

fn emit(cfg: &RunConfig, output: CommandOutput) -> Result<(), Failure> {
    for (path, bytes) in &output.files {
        std::fs::write(path, bytes).map_err(|e| Failure::Failed(format!("cannot write {}: {e}", path.display())))?;
    }
    println!("# effective config");
    print!("{}", cfg.effective());
    println!("# end effective config");
    for (path, _) in &output.files {
        println!("wrote {}", path.display());
    }
    println!("{}", output.summary);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Counting { config, out } => {
            let cfg = load(&config, out)?;
            emit(&cfg, cmd_counting(&cfg)?)
        }
        Command::DimBound { config, out } => {
            let cfg = load(&config, out)?;
            emit(&cfg, cmd_dim_bound(&cfg)?)
        }
        Command::Render { config, out } => {
            let cfg = load(&config, out)?;
            emit(&cfg, cmd_render(&cfg)?)
        }
        Command::Selftest { suite, config } => {
            let opts = match config {
                Some(path) => SelftestOptions { c1: load(&path, None)?.c1 },
                None => SelftestOptions::default(),
            };
            let reports = selftest::run(suite.as_deref(), &opts)?;
            print!("{}", selftest::format_report(&reports));
            for r in &reports {
                eprintln!("suite {} took {:.3} s", r.suite, r.elapsed.as_secs_f64());
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.suite).collect();
            if failed.is_empty() {
                println!("all suites passed");
                Ok(())
            } else {
                Err(Failure::Failed(format!("failed suites: {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
