//! `bethe`: exact transition probabilities, simulation and self-checks for
//! ASEP, PushASEP, ASAP and AZRP.

mod commands;
mod config;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{read_config_file, CommandKind, RunConfig};
use crate::error::{CliError, EXIT_CHECKS_FAILED};

#[derive(Debug, Parser)]
#[command(
    name = "bethe",
    version,
    about = "Exact transition probabilities of interacting particle systems on Z"
)]
struct Cli {
    /// Settings file with `key = value` lines; flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// text, json or csv
    #[arg(long, global = true)]
    format: Option<String>,

    /// Print nothing on stdout; the exit status still reports the outcome
    #[arg(long, global = true)]
    quiet: bool,

    /// Write the result here instead of stdout
    #[arg(long, short, global = true, value_name = "PATH")]
    output: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transition probability P_Y(X; t)
    Prob(ProbArgs),
    /// Law of the m-th AZRP particle over a grid of sites
    Marginal(MarginalArgs),
    /// Gillespie samples of the process
    Simulate(SimulateArgs),
    /// Run numerical self-checks
    Verify(VerifyArgs),
    /// Probabilities over a grid of t, p, mu or lambda
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// asep, push, asap or azrp
    #[arg(long)]
    model: Option<String>,
    /// Right jump rate; the left rate is 1 - p
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
}

#[derive(Debug, Args)]
struct ContourArgs {
    /// Circle radius, one value or one per variable
    #[arg(long, value_name = "R[,R..]")]
    radius: Option<String>,
    /// Initial nodes per circle
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    rel_tol: Option<String>,
    #[arg(long)]
    max_nodes: Option<String>,
}

#[derive(Debug, Args)]
struct ProbArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Initial configuration, e.g. 0,1
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Final configuration
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    t: Option<String>,
    /// Also solve the truncated Markov chain
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    oracle_tol: Option<String>,
    /// Fixed oracle window lo:hi
    #[arg(long, allow_hyphen_values = true, value_name = "LO:HI")]
    window: Option<String>,
    #[command(flatten)]
    contour: ContourArgs,
}

#[derive(Debug, Args)]
struct MarginalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    /// Particle index, 1-based
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    t: Option<String>,
    /// Sites lo:hi or a comma list; default y_m - 5 ..= y_m + 5
    #[arg(long, allow_hyphen_values = true)]
    xs: Option<String>,
    /// homogeneous or tau
    #[arg(long)]
    bracket: Option<String>,
    #[command(flatten)]
    contour: ContourArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Compare with the truncated Markov chain
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    oracle_tol: Option<String>,
    /// Emit one sample path instead of the empirical law
    #[arg(long)]
    trajectory: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma list of checks, or all
    #[arg(long)]
    check: Option<String>,
    /// Particle number
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Fixed time when another parameter is swept
    #[arg(long)]
    t: Option<String>,
    /// t, p, mu or lambda
    #[arg(long)]
    param: Option<String>,
    /// start:stop:step or a comma list; may be empty
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[command(flatten)]
    contour: ContourArgs,
}

type Entries = Vec<(&'static str, Option<String>)>;

fn flag(b: bool) -> Option<String> {
    b.then(|| "true".to_string())
}

impl ModelArgs {
    fn entries(self) -> Entries {
        vec![
            ("model", self.model),
            ("p", self.p),
            ("mu", self.mu),
            ("lambda", self.lambda),
        ]
    }
}

impl ContourArgs {
    fn entries(self) -> Entries {
        vec![
            ("radius", self.radius),
            ("nodes", self.nodes),
            ("rel_tol", self.rel_tol),
            ("max_nodes", self.max_nodes),
        ]
    }
}

impl Command {
    fn entries(self) -> (CommandKind, Entries) {
        match self {
            Command::Prob(a) => {
                let mut e = a.model.entries();
                e.extend([
                    ("y", a.y),
                    ("x", a.x),
                    ("t", a.t),
                    ("oracle", flag(a.oracle)),
                    ("oracle_tol", a.oracle_tol),
                    ("window", a.window),
                ]);
                e.extend(a.contour.entries());
                (CommandKind::Prob, e)
            }
            Command::Marginal(a) => {
                let mut e = a.model.entries();
                e.extend([
                    ("y", a.y),
                    ("m", a.m),
                    ("t", a.t),
                    ("xs", a.xs),
                    ("bracket", a.bracket),
                ]);
                e.extend(a.contour.entries());
                (CommandKind::Marginal, e)
            }
            Command::Simulate(a) => {
                let mut e = a.model.entries();
                e.extend([
                    ("y", a.y),
                    ("t", a.t),
                    ("samples", a.samples),
                    ("seed", a.seed),
                    ("oracle", flag(a.oracle)),
                    ("oracle_tol", a.oracle_tol),
                    ("trajectory", flag(a.trajectory)),
                ]);
                (CommandKind::Simulate, e)
            }
            Command::Verify(a) => {
                let mut e = a.model.entries();
                e.extend([
                    ("check", a.check),
                    ("n", a.n),
                    ("trials", a.trials),
                    ("tol", a.tol),
                    ("seed", a.seed),
                ]);
                (CommandKind::Verify, e)
            }
            Command::Sweep(a) => {
                let mut e = a.model.entries();
                e.extend([
                    ("y", a.y),
                    ("x", a.x),
                    ("t", a.t),
                    ("param", a.param),
                    ("grid", a.grid),
                ]);
                e.extend(a.contour.entries());
                (CommandKind::Sweep, e)
            }
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let file = cli
        .config
        .as_deref()
        .map(read_config_file)
        .transpose()?
        .unwrap_or_default();
    let (kind, mut entries) = cli.command.entries();
    entries.extend([
        ("format", cli.format),
        ("output", cli.output),
        ("quiet", flag(cli.quiet)),
    ]);
    let cfg = RunConfig::new(kind, file, entries)?;
    let format = cfg.format()?;
    let quiet = cfg.flag("quiet")?;
    let outcome = commands::run(&cfg)?;
    let rendered = outcome.table.render(format)?;
    match cfg.raw("output") {
        Some(path) => std::fs::write(path, &rendered).map_err(|source| CliError::Write {
            path: path.to_string(),
            source,
        })?,
        None if !quiet => print!("{rendered}"),
        None => {}
    }
    Ok(if outcome.failed {
        EXIT_CHECKS_FAILED
    } else {
        0
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
