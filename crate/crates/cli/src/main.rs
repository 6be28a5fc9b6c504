use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use swanlab_cli::acceptance;
use swanlab_cli::error::{CliError, EXIT_USAGE};
use swanlab_cli::run::{self, Format, Source};

#[derive(Parser)]
#[command(name = "swanlab", version, about = "Exact differential breaks and Swan conductors of p-adic Dwork-type modules")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct Input {
    /// Module document.
    file: Option<PathBuf>,
    /// Use a built-in zoo entry instead of a file.
    #[arg(long, conflicts_with_all = ["file", "expr"])]
    zoo: Option<String>,
    /// Inline module document.
    #[arg(short = 'e', long, conflicts_with = "file")]
    expr: Option<String>,
}

impl Input {
    fn source(&self) -> Result<Source, CliError> {
        match (&self.file, &self.zoo, &self.expr) {
            (Some(f), None, None) => Ok(Source::File(f.clone())),
            (None, Some(z), None) => Ok(Source::Zoo(z.clone())),
            (None, None, Some(e)) => Ok(Source::Inline(e.clone())),
            _ => Err(CliError::Usage("give exactly one of FILE, --zoo NAME or -e TEXT".into())),
        }
    }
}

#[derive(Args)]
struct SurfaceArgs {
    /// P1xP1 or P2.
    #[arg(long)]
    ambient: Option<String>,
    /// Boundary component, e.g. `t=0`, `x=inf`.
    #[arg(long)]
    divisor: Option<String>,
    /// Grid denominator for edge scans.
    #[arg(long)]
    grid: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Break multiset at one weight.
    Breaks {
        #[command(flatten)]
        input: Input,
        /// Comma-separated rational weights.
        #[arg(long)]
        weights: Option<String>,
        /// simplex, natural, a variable name, or monomial(1,-1).
        #[arg(long)]
        normalize_by: Option<String>,
    },
    /// Breaks over the simplex grid, with fitted surfaces.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        grid: Option<u32>,
        /// Directory for surface.csv and fit.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Subharmonicity, monotonicity and Swan-divisor checks along a boundary divisor.
    SurfaceCheck {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Only this point of the divisor: 0, inf, or a coordinate value.
        #[arg(long)]
        point: Option<String>,
    },
    /// Break functions along the edges at the crossings of the divisor.
    TurningScan {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        surface: SurfaceArgs,
        /// 0, inf, or all.
        #[arg(long)]
        crossing: Option<String>,
    },
    /// Built-in example models.
    Zoo { name: Option<String> },
    /// Run the acceptance suite.
    Selftest,
}

fn dispatch(cli: Cli) -> Result<(String, bool), CliError> {
    let fmt = match cli.format {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    };
    match cli.command {
        Command::Breaks { input, weights, normalize_by } => {
            let l = run::load(&input.source()?)?;
            let w = weights.as_deref().map(run::parse_weights).transpose()?;
            let n = normalize_by.as_deref().map(|s| run::parse_normalization(s, &l.doc.vars)).transpose()?;
            Ok((run::breaks(&l, w, n, fmt)?, true))
        }
        Command::Sweep { input, grid, out } => {
            let l = run::load(&input.source()?)?;
            Ok((run::sweep(&l, grid, out.as_deref(), fmt)?, true))
        }
        Command::SurfaceCheck { input, surface, point } => {
            let l = run::load(&input.source()?)?;
            let o = run::surface_check(
                &l,
                surface.ambient.as_deref(),
                surface.divisor.as_deref(),
                point.as_deref(),
                surface.grid,
                fmt,
            )?;
            Ok((o.text, o.pass))
        }
        Command::TurningScan { input, surface, crossing } => {
            let l = run::load(&input.source()?)?;
            let o = run::turning_scan(
                &l,
                surface.ambient.as_deref(),
                surface.divisor.as_deref(),
                crossing.as_deref(),
                surface.grid,
                fmt,
            )?;
            Ok((o.text, o.pass))
        }
        Command::Zoo { name } => Ok((run::zoo_listing(name.as_deref(), fmt)?, true)),
        Command::Selftest => {
            let results = acceptance::run_all();
            let pass = results.iter().all(|r| r.pass);
            let text = match fmt {
                Format::Text => acceptance::render(&results),
                Format::Json => serde_json::to_string_pretty(&results).map_err(|e| CliError::Io(e.to_string()))? + "\n",
            };
            Ok((text, pass))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    swanlab_cli::init_threads();
    match dispatch(cli) {
        Ok((text, pass)) => {
            print!("{text}");
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("swanlab: a check did not hold");
                ExitCode::from(CliError::CheckFailed(String::new()).exit_code() as u8)
            }
        }
        Err(e) => {
            eprintln!("swanlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
