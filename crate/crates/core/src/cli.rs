//! Command-line front end.
//!
//! Exit codes: 0 success, 1 solver or I/O failure, 2 configuration or
//! usage error, 3 an identity outside its tolerance.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, RunConfig};
use crate::diagnostics::{diagnose, flux_ledger};
use crate::error::{ConfigError, Error};
use crate::harness::{run_refinement, threads_from_env};
use crate::output::{diagnostics_summary, refinement_summary, write_report, write_state_csv, write_text};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "visco1d", version, about = "Implicit upwind scheme for 1D viscous isentropic flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one level and write the state history and diagnostics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cell count (default: coarsest configured level).
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Refinement study over the configured (or given) levels.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every discrete identity on one level.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Dump the flux-identity ledger at step m.
    Flux {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        step: usize,
        #[arg(long)]
        cells: Option<usize>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidInput(_) => EXIT_CONFIG,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Error::from(e).into()
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    let cfg = parse_config(&text).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn solver_failure(e: Error) -> Failure {
    Failure {
        code: EXIT_SOLVER,
        message: e.to_string(),
    }
}

fn run_one(cfg: &RunConfig, cells: Option<usize>) -> Result<crate::grid::Trajectory, Failure> {
    let n = cells.unwrap_or(cfg.scenario.levels[0]);
    // Configuration problems surface before the solve starts.
    cfg.scenario.grid(n)?;
    cfg.scenario.run_level(n, &cfg.solver).map_err(|e| match e {
        Error::StepFailure { .. } | Error::SingularMatrix { .. } => solver_failure(e),
        other => other.into(),
    })
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Run { config, out, cells } => {
            let mut cfg = load(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let traj = run_one(&cfg, cells)?;
            let report = diagnose(&traj)?;
            let stem = format!("{}_N{}", file_stem(&cfg.scenario.name), traj.grid.cells);
            let echo = cfg.echo();
            let states = cfg.output_dir.join(format!("{stem}_states.csv"));
            write_state_csv(&traj, &states, &echo)?;
            let summary = cfg.output_dir.join(format!("{stem}_summary.txt"));
            write_text(&summary, &format!("{echo}{}", diagnostics_summary(&report)))?;
            println!("wrote {} and {}", states.display(), summary.display());
            Ok(EXIT_OK)
        }
        Command::Refine { config, levels, out } => {
            let mut cfg = load(&config)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Some(levels) = levels {
                cfg.scenario.levels = levels;
            }
            let report = run_refinement(&cfg.scenario, &cfg.solver, threads_from_env())?;
            let stem = file_stem(&cfg.scenario.name);
            let echo = cfg.echo();
            let csv = cfg.output_dir.join(format!("{stem}_refine.csv"));
            write_report(&report, &csv, &echo)?;
            let text = refinement_summary(&report);
            write_text(&cfg.output_dir.join(format!("{stem}_refine_summary.txt")), &format!("{echo}{text}"))?;
            print!("{text}");
            if let Some(f) = &report.failure {
                return Err(Failure {
                    code: EXIT_SOLVER,
                    message: f.clone(),
                });
            }
            Ok(if report.identities_hold() { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Verify { config, cells } => {
            let cfg = load(&config)?;
            let traj = run_one(&cfg, cells)?;
            let report = diagnose(&traj)?;
            print!("{}", diagnostics_summary(&report));
            Ok(if report.all_passed() { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Flux { config, step, cells } => {
            let cfg = load(&config)?;
            let traj = run_one(&cfg, cells)?;
            let ledger = flux_ledger(&traj, step)?;
            println!("term,value");
            for (name, v) in [
                ("lhs", ledger.lhs),
                ("up_term", ledger.up_term),
                ("terminal", ledger.terminal),
                ("initial", ledger.initial),
                ("E1", ledger.e1),
                ("E2", ledger.e2),
                ("S1", ledger.s1),
                ("S2", ledger.s2),
                ("residual", ledger.residual()),
                ("tolerance", ledger.tolerance),
            ] {
                println!("{name},{v:.16e}");
            }
            Ok(if ledger.holds() { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Parses `args` (including the program name) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
