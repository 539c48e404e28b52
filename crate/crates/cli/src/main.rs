use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relaxlab::experiments::{run, Command, ExperimentSpec, Format, Report, Settings};
use relaxlab::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "relaxlab",
    version,
    about = "Relaxed Dirichlet energy experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Energy accounting of T₀ on a cylinder of height 2.
    T0Energy {
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Slice energies of u_ε against their limit and the fitted deficit exponent.
    RelaxationCheck {
        /// Comma-separated ε values in (0, 1].
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Least E - A over the annulus cone against 8πn a²/(1+a²).
    PropositionSweep {
        /// Comma-separated C₀ values; s = C₀·a.
        #[arg(long, value_delimiter = ',')]
        c0: Option<Vec<f64>>,
        /// Comma-separated ratios a/α.
        #[arg(long, value_delimiter = ',')]
        a_fractions: Option<Vec<f64>>,
        #[arg(long, hide = true)]
        b: Option<f64>,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Relaxed dipole replacement of the axis defect.
    DipoleTradeoff {
        /// Comma-separated half-lengths δ of the removed axis interval.
        #[arg(long, value_delimiter = ',')]
        delta: Option<Vec<f64>>,
        /// Comma-separated ratios r_box/δ.
        #[arg(long, value_delimiter = ',')]
        box_factors: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Minimal connection of a JSON charge file.
    Sigma {
        config: Option<PathBuf>,
        #[command(flatten)]
        io: Output,
    },
}

#[derive(Args)]
struct Grid {
    /// Radial nodes (t0-energy, proposition-sweep) or ln r nodes (dipole-tradeoff).
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// Comma-separated winding numbers.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    /// Comma-separated boundary values α.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    io: Output,
}

#[derive(Args)]
struct Output {
    /// JSON file with experiment parameters; flags take precedence.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl Common {
    fn apply(self, spec: ExperimentSpec) -> ExperimentSpec {
        ExperimentSpec {
            n: self.n,
            alpha: self.alpha,
            workers: self.workers,
            ..spec
        }
    }
}

impl Output {
    fn spec(&self) -> Result<(ExperimentSpec, ExperimentSpec), Error> {
        let file = match &self.spec {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
                ExperimentSpec::from_json(&text)?
            }
            None => ExperimentSpec::default(),
        };
        let flags = ExperimentSpec {
            out: self.out.clone(),
            format: self.format.map(|f| match f {
                OutFormat::Csv => Format::Csv,
                OutFormat::Json => Format::Json,
            }),
            ..Default::default()
        };
        Ok((file, flags))
    }
}

fn settings(cmd: Cmd) -> Result<Settings, Error> {
    let (command, file, flags) = match cmd {
        Cmd::T0Energy { grid, common } => {
            let (file, flags) = common.io.spec()?;
            let flags = ExperimentSpec {
                nodes: grid.nodes,
                ..flags
            };
            (Command::T0Energy, file, common.apply(flags))
        }
        Cmd::RelaxationCheck { eps, common } => {
            let (file, flags) = common.io.spec()?;
            (
                Command::RelaxationCheck,
                file,
                common.apply(ExperimentSpec { eps, ..flags }),
            )
        }
        Cmd::PropositionSweep {
            c0,
            a_fractions,
            b,
            grid,
            common,
        } => {
            let (file, flags) = common.io.spec()?;
            let flags = ExperimentSpec {
                c0,
                a_fractions,
                b,
                nodes: grid.nodes,
                ..flags
            };
            (Command::PropositionSweep, file, common.apply(flags))
        }
        Cmd::DipoleTradeoff {
            delta,
            box_factors,
            seed,
            grid,
            common,
        } => {
            let (file, flags) = common.io.spec()?;
            let flags = ExperimentSpec {
                delta,
                box_factors,
                seed,
                nodes: grid.nodes,
                ..flags
            };
            (Command::DipoleTradeoff, file, common.apply(flags))
        }
        Cmd::Sigma { config, io } => {
            let (file, flags) = io.spec()?;
            (Command::Sigma, file, ExperimentSpec { config, ..flags })
        }
    };
    file.overlay(flags).resolve(command)
}

fn emit(report: &Report, settings: &Settings) -> Result<(), Error> {
    match &settings.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(settings.format, &mut w)?;
            w.flush()?;
        }
        None => report.write(settings.format, io::stdout().lock())?,
    }
    if settings.format == Format::Csv && !report.summary.is_null() {
        eprintln!("{}", serde_json::to_string_pretty(&report.summary)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match settings(cli.command) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let report = match run(&settings) {
        Ok(r) => r,
        Err(e @ Error::NotConverged { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NOT_CONVERGED);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if let Err(e) = emit(&report, &settings) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_INPUT);
    }
    if !report.converged {
        eprintln!("error: some optimizer runs did not converge; see the `converged` column");
        return ExitCode::from(EXIT_NOT_CONVERGED);
    }
    ExitCode::SUCCESS
}
