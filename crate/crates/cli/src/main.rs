use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use bcjacobi_cli::{run, Command, ScenarioConfig};

/// Boundary control method for discrete Jacobi systems.
#[derive(Parser)]
#[command(name = "bcj", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON object).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory [default: the config's `out`, else ./out].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for generated specs and the verification suite; overrides the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Criteria (verify) or checks (other commands) to evaluate.
    #[arg(long, global = true, value_name = "NAME")]
    filter: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the command named in the config.
    Run,
    /// Wave field for a boundary control.
    Forward,
    /// Boundary response to the unit impulse.
    Response,
    /// Coefficients from response data.
    Invert,
    /// Response, inversion and comparison for a given or random spec.
    Roundtrip,
    /// Truncated moment problem, solvability and indeterminacy diagnostics.
    Moments,
    /// Finite Toda flow from the initial spec.
    Toda,
    /// Weyl function at a point.
    Weyl,
    /// Stieltjes string pairings against a test function.
    String,
    /// Continuous-time connecting kernels and coefficient recovery.
    Contjacobi,
    /// First-order-in-time system: forward field, or inversion from moments.
    Heat,
    /// Wave on a graph with vertex matching conditions.
    Graph,
    /// Acceptance suite.
    Verify {
        /// Relative perturbation injected into response data.
        #[arg(long)]
        perturbation: Option<f64>,
    },
}

impl Cmd {
    fn command(&self) -> Option<Command> {
        Some(match self {
            Cmd::Run => return None,
            Cmd::Forward => Command::Forward,
            Cmd::Response => Command::Response,
            Cmd::Invert => Command::Invert,
            Cmd::Roundtrip => Command::Roundtrip,
            Cmd::Moments => Command::Moments,
            Cmd::Toda => Command::Toda,
            Cmd::Weyl => Command::Weyl,
            Cmd::String => Command::String,
            Cmd::Contjacobi => Command::Contjacobi,
            Cmd::Heat => Command::Heat,
            Cmd::Graph => Command::Graph,
            Cmd::Verify { .. } => Command::Verify,
        })
    }
}

fn config(cli: &Cli) -> Result<ScenarioConfig> {
    let default = cli.command.command();
    let mut cfg = match &cli.common.config {
        Some(path) => ScenarioConfig::from_file(path, default)?,
        None => ScenarioConfig::from_value(json!({}), default)?,
    };
    if let Some(s) = cli.common.seed {
        cfg.seed = Some(s);
    }
    if let Some(f) = &cli.common.filter {
        cfg.filter = Some(f.clone());
    }
    if let Cmd::Verify { perturbation: Some(p) } = cli.command {
        cfg.payload.insert("perturbation".into(), Value::from(p));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| run(&cfg, cli.common.out.as_deref()));
    match result {
        Ok(manifest) => {
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            for c in manifest.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} = {} (limit {})", c.name, c.value, c.limit);
            }
            if manifest.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
