use clap::{Args, Parser, Subcommand};
use rtkrylov::bench::{self, ExperimentConfig, ExportTarget};
use rtkrylov::AssemblyMode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rtkrylov", version, about = "Iterative solvers for the polarized two-level-atom transfer benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    config: PathBuf,
    /// Overrides `output_dir` of the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Apply A through transfer sweeps instead of a stored matrix.
    #[arg(long, conflicts_with = "assembled")]
    matrix_free: bool,
    /// Assemble A explicitly.
    #[arg(long)]
    assembled: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell and write per-cell reports and residual histories.
    Solve(Common),
    /// Like `solve`, plus one iteration table per preconditioner.
    Table(Common),
    /// Write A, P⁻¹A or the ILUT factors in Matrix Market format.
    Export {
        #[command(flatten)]
        common: Common,
        /// One of A, PinvA, ilut.
        #[arg(long)]
        target: String,
    },
    /// Solve and write the depth profile and emergent Stokes parameters.
    Profile(Common),
}

fn load(common: &Common) -> rtkrylov::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    if common.matrix_free {
        cfg.assembly = AssemblyMode::MatrixFree;
    } else if common.assembled {
        cfg.assembly = AssemblyMode::Assembled;
    }
    Ok(cfg)
}

fn print_cells(output: &bench::ExperimentOutput) {
    for c in &output.cells {
        let status = match (&c.report, &c.error) {
            (Some(r), _) if r.converged => format!("converged in {} iterations", r.iterations),
            (Some(r), _) => format!("{:?} after {} iterations", r.status, r.iterations),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "no result".into(),
        };
        println!("{:<10} {:<6} {:<24} {status}", c.method.label(), c.preconditioner, c.size.tag());
    }
}

fn run(cli: Cli) -> rtkrylov::Result<bool> {
    match cli.command {
        Command::Solve(common) => {
            let cfg = load(&common)?;
            let output = bench::run_experiment(&cfg)?;
            print_cells(&output);
            println!("wrote {} files to {}", output.files.len(), cfg.output_dir.display());
            Ok(output.all_converged())
        }
        Command::Table(common) => {
            let cfg = load(&common)?;
            let (output, tables) = bench::table(&cfg)?;
            for (p, text) in &tables {
                println!("preconditioner: {p}\n{text}");
            }
            println!("wrote {} files to {}", output.files.len(), cfg.output_dir.display());
            Ok(true)
        }
        Command::Export { common, target } => {
            let target: ExportTarget = target.parse()?;
            let cfg = load(&common)?;
            for f in bench::export(&cfg, target)? {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Command::Profile(common) => {
            let cfg = load(&common)?;
            for f in bench::profile(&cfg)? {
                println!("{}", f.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("rtkrylov: some solves did not converge");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("rtkrylov: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
