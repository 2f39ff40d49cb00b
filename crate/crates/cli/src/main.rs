use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csie_cli::{execute, CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "csie", version, about = "Boundary-element PEC scattering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve every formulation at every frequency.
    Solve(Common),
    /// Same as solve; reads better for multi-point frequency configs.
    Sweep(Common),
    /// Condition numbers and singular-value spectra.
    Spectrum(Common),
    /// Edge-length statistics of the mesh.
    MeshInfo(Common),
    /// Iterations against Mie error over an alpha list (CSIE-J) and a comb list (CFIE).
    AlphaTradeoff(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment definition (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output folder; overrides [output] dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for assembly and matrix products.
    #[arg(long)]
    threads: Option<usize>,
    /// Folder for cached operator matrices.
    #[arg(long)]
    cache: Option<PathBuf>,
}

fn run(command: Command, args: Common) -> Result<i32, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(csie_cli::ConfigError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let cfg = ExperimentConfig::load(&args.config)?;
    let out = cfg.output_dir(args.out.as_deref())?;
    let outcome = execute(command, &cfg, &out, args.cache.as_deref())?;
    eprintln!(
        "{} of {} runs succeeded; manifest {}",
        outcome.runs - outcome.failures,
        outcome.runs,
        outcome.manifest.display()
    );
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; help and version are not.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Sub::Solve(a) | Sub::Sweep(a) => (Command::Solve, a),
        Sub::Spectrum(a) => (Command::Spectrum, a),
        Sub::MeshInfo(a) => (Command::MeshInfo, a),
        Sub::AlphaTradeoff(a) => (Command::AlphaTradeoff, a),
    };
    match run(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
