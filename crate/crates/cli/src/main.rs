use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eraser_cli::{emit, parse_config, parse_time, run, CliError, Format, Kind};

#[derive(Parser)]
#[command(name = "phonon-eraser", version, about = "Simulates phonon transfer and quantum-eraser experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file; defaults are used for anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Integrator step with unit, e.g. "0.025 ns".
    #[arg(long, global = true, value_parser = parse_time)]
    dt: Option<f64>,
    /// Levels per acoustic mode.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    /// Turn off every noise source and use the ideal timeline.
    #[arg(long, global = true)]
    noiseless: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Qubit-to-qubit transfer through the channel.
    Transfer,
    /// Path interferometer over a grid of phases.
    Interferometer,
    /// Full eraser sweep: unheralded, heralded and erased.
    Eraser,
    /// Acoustic decay rates against qubit frequency.
    RateSweep,
    /// Transducer admittance and circuit impedance.
    Circuit,
}

impl Command {
    fn kind(self) -> Kind {
        match self {
            Command::Transfer => Kind::Transfer,
            Command::Interferometer => Kind::Interferometer,
            Command::Eraser => Kind::Eraser,
            Command::RateSweep => Kind::RateSweep,
            Command::Circuit => Kind::Circuit,
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(CliError::io(path))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    cfg.kind = cli.command.kind();
    if let Some(dt) = cli.dt {
        cfg.dt = dt;
    }
    if let Some(n) = cli.truncation {
        if !(2..=4).contains(&n) {
            return Err(CliError::config(0, "numerics.truncation", "must be 2, 3 or 4"));
        }
        cfg.truncation = n;
    }
    if cli.noiseless {
        cfg.make_noiseless();
    }
    let bundle = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(0, "threads", &e.to_string()))?
            .install(|| run(&cfg))?,
        None => run(&cfg)?,
    };
    for path in emit::write(&bundle, cli.format, &cli.out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::to_string(&e.report()).unwrap_or_else(|_| format!("{{\"message\":{:?}}}", e.to_string()));
            eprintln!("error: {e}");
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
