//! Command-line front end.
//!
//! Every run reads an optional TOML scenario, executes one command, writes
//! its artifacts plus `manifest.json` into the output directory and returns
//! an exit status: 0 success, 2 configuration or input error, 3 numerical
//! failure, 4 a conservation or consistency check exceeded its tolerance.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::algebra::Ordering;
pub use commands::{CliError, Outcome};
pub use config::{Command, Overrides, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "qudit-bloch", version, about = "Qudit Bloch-vector dynamics, rigid-body analogies and stability checks")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, env = "QUDIT_BLOCH_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "QUDIT_BLOCH_OUT")]
    out: Option<PathBuf>,
    /// Seed for randomized inputs.
    #[arg(long, global = true, env = "QUDIT_BLOCH_SEED")]
    seed: Option<u64>,
    /// ODE tolerance.
    #[arg(long, global = true, env = "QUDIT_BLOCH_TOL")]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrderingArg {
    Grouped,
    Standard,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Export a generalized Gell-Mann basis with its structure constants.
    Basis {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, value_enum)]
        ordering: Option<OrderingArg>,
    },
    /// Propagate a density matrix and emit the Bloch trajectory.
    Evolve,
    /// Integrate the generalized Euler equations.
    Euler,
    /// Linear and nonlinear stability analyses.
    Stability {
        /// Run every point of the `[sweep]` grid instead of the single scenario.
        #[arg(long)]
        sweep: bool,
    },
    /// Lax-equation residuals and first integrals along a qubit top.
    LaxCheck,
    /// Heisenberg dimer flow in Fano components.
    Dimer,
    /// Entanglement measures along an oscillating entangled state.
    Entangle,
    /// Validate a scenario file without running it.
    Validate {
        /// Scenario file; defaults to --config.
        path: Option<PathBuf>,
    },
}

/// Builds the manifest for a finished run.
pub fn manifest(cfg: &ScenarioConfig, outcome: &Outcome) -> Value {
    let mut series = Map::new();
    for (name, rel, abs) in &outcome.drift {
        series.insert(name.clone(), json!({ "relative": rel, "absolute": abs }));
    }
    let ok = outcome.checks.iter().all(|c| c.pass);
    json!({
        "command": cfg.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.echo(),
        "seed": cfg.seed,
        "tolerances": { "ode": cfg.ode_tol, "invariant": cfg.invariant_tol },
        "artifacts": outcome.artifacts,
        "drift": { "source": outcome.drift_source, "series": series },
        "checks": outcome.checks.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        "summary": outcome.summary,
        "status": if ok { "ok" } else { "check-failed" },
    })
}

/// Loads, runs and records one scenario; returns the exit status.
pub fn run(cfg: &ScenarioConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let outcome = match commands::execute(cfg, &cfg.out_dir) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return e.exit_code();
        }
    };
    let path = cfg.out_dir.join("manifest.json");
    if let Err(e) = output::write_json(&path, &manifest(cfg, &outcome)) {
        let _ = writeln!(err, "i/o error: {}: {e}", path.display());
        return EXIT_CONFIG;
    }
    for a in outcome.artifacts.iter().chain(std::iter::once(&"manifest.json".to_string())) {
        let _ = writeln!(out, "wrote {}", cfg.out_dir.join(a).display());
    }
    let failed: Vec<_> = outcome.checks.iter().filter(|c| !c.pass).collect();
    for c in &failed {
        let _ = writeln!(err, "check failed: {} = {:e} > {:e}", c.name, c.value, c.limit);
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

fn validate(path: &PathBuf, ov: &Overrides, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match config::load(path, ov) {
        Ok(cfg) => {
            let _ = writeln!(out, "ok: {} ({})", path.display(), cfg.command.name());
            if cfg.defaulted.is_empty() {
                let _ = writeln!(out, "no defaulted fields");
            } else {
                let _ = writeln!(out, "defaulted fields:");
                for f in &cfg.defaulted {
                    let _ = writeln!(out, "  {f}");
                }
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "invalid: {}", path.display());
            for m in &e.messages {
                let _ = writeln!(err, "  {m}");
            }
            EXIT_CONFIG
        }
    }
}

/// Entry point shared by the binary and tests.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let mut ov = Overrides { out: cli.out.clone(), seed: cli.seed, tol: cli.tol, ..Overrides::default() };
    let command = match cli.command {
        Sub::Validate { path } => {
            let Some(p) = path.or(cli.config) else {
                let _ = writeln!(err, "validate needs a scenario path or --config");
                return EXIT_CONFIG;
            };
            return validate(&p, &ov, out, err);
        }
        Sub::Basis { d, ordering } => {
            ov.d = d;
            ov.ordering = ordering.map(|o| match o {
                OrderingArg::Grouped => Ordering::Grouped,
                OrderingArg::Standard => Ordering::Standard,
            });
            Command::Basis
        }
        Sub::Evolve => Command::Evolve,
        Sub::Euler => Command::Euler,
        Sub::Stability { sweep } => {
            ov.sweep = sweep;
            Command::Stability
        }
        Sub::LaxCheck => Command::LaxCheck,
        Sub::Dimer => Command::Dimer,
        Sub::Entangle => Command::Entangle,
    };
    ov.command = Some(command);
    let cfg = match &cli.config {
        Some(p) => config::load(p, &ov),
        None => config::from_overrides(&ov),
    };
    match cfg {
        Ok(cfg) => run(&cfg, out, err),
        Err(e) => {
            let _ = writeln!(err, "{}", CliError::Config(e.messages));
            EXIT_CONFIG
        }
    }
}
