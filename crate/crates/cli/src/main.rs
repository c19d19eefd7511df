//! `weingarten`: verification suites, Dirichlet solves and curvature tables.
//!
//! Exit codes: 0 success, 1 failed verification suite, 2 invalid input,
//! 3 continuation stopped before t = 1.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "weingarten", version, about = "Prescribed curvature radial graphs in space forms")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the seeded self-check suites.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flip the sign of the first-order term of the linearization.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Solve the Dirichlet problem described by a configuration file.
    Solve {
        config: PathBuf,
        #[arg(long, value_enum)]
        path: Option<PathArg>,
        /// Write a triangle mesh of the solution (OBJ).
        #[arg(long, value_name = "FILE")]
        export_mesh: Option<PathBuf>,
        /// Write the field table of the solution (CSV).
        #[arg(long, value_name = "FILE")]
        export_field: Option<PathBuf>,
        /// Report file (JSON lines); defaults to <config>.report.jsonl.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Node-wise curvatures, support function and convexity of a field table.
    Curvature {
        field: PathBuf,
        /// Curvature sign; defaults to the model recorded in the table.
        #[arg(long, allow_hyphen_values = true)]
        model: Option<i32>,
        /// Output table; defaults to standard output.
        #[arg(long, short, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Auto,
    #[value(name = "68")]
    Auxiliary,
    #[value(name = "69")]
    Main,
    #[value(name = "71")]
    Spherical,
}

impl From<PathArg> for weingarten::solver::PathSelection {
    fn from(p: PathArg) -> Self {
        use weingarten::solver::PathSelection as S;
        match p {
            PathArg::Auto => S::Auto,
            PathArg::Auxiliary => S::Auxiliary,
            PathArg::Main => S::Main,
            PathArg::Spherical => S::Spherical,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = match cli.command {
        Command::Verify { seed, inject_fault } => commands::verify(seed, inject_fault),
        Command::Solve { config, path, export_mesh, export_field, report } => commands::solve(
            &config,
            commands::SolveFlags {
                path: path.map(Into::into),
                mesh: export_mesh,
                field: export_field,
                report,
            },
        ),
        Command::Curvature { field, model, output } => commands::curvature(&field, model, output.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_INVALID)
        }
    }
}
