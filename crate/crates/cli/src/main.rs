//! `tnl`: command-line front end for the tensor network library.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use tnl::physicality::DEFAULT_TOL;
use tnl::Backend;

#[derive(Parser, Debug)]
#[command(name = "tnl", version, about = "Exact tensor network states: counting, physicality, gadgets, clones")]
pub struct Cli {
    /// Scalar backend for network commands (default: whatever the input uses)
    #[arg(long, global = true)]
    pub backend: Option<Backend>,
    /// Relative tolerance for float zero tests
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Print a JSON report instead of text
    #[arg(long, global = true)]
    pub json: bool,
    /// Include wall-clock time in the report
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// CNF formulas as tensor networks
    #[command(subcommand)]
    Sat(SatCmd),
    /// Whether a network has nonzero norm
    Physical { file: PathBuf },
    /// Closed-loop paradox fixtures
    #[command(subcommand)]
    Paradox(ParadoxCmd),
    /// Chain gates from a library along a word
    Chain {
        /// Directory of `.mat` and `.tnf` gates, taken in file-name order
        #[arg(long)]
        lib: PathBuf,
        /// 1-based gate indices, e.g. `1,2,1`
        #[arg(long, value_delimiter = ',', required = true)]
        word: Vec<usize>,
        /// Report physicality of the chained network
        #[arg(long)]
        check: bool,
    },
    /// Integer matrices as gate gadgets
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Zero-product word search
    #[command(subcommand)]
    Mortality(MortalityCmd),
    /// Polymorphism clones
    #[command(subcommand)]
    Clone(CloneCmd),
    /// Co-clone membership
    #[command(subcommand)]
    Coclone(CocloneCmd),
}

#[derive(Subcommand, Debug)]
pub enum SatCmd {
    /// Count satisfying assignments
    Count {
        file: PathBuf,
        /// Refuse formulas with more variables than this
        #[arg(long, default_value_t = tnl::sat::DEFAULT_MAX_VARS)]
        max_vars: usize,
    },
    /// Find a satisfying assignment (exit 1 when there is none)
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = tnl::sat::DEFAULT_MAX_VARS)]
        max_vars: usize,
    },
    /// Check the tree-network satisfiability condition
    TreeCheck {
        file: PathBuf,
        /// Parent leg of each non-root node as `node:leg,...`
        #[arg(long, default_value = "")]
        parent_legs: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum ParadoxCmd {
    /// Print a fixture network and its contraction
    Demo { name: Fixture },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Fixture {
    Grandfather,
    Unproved,
}

#[derive(Subcommand, Debug)]
pub enum EmbedCmd {
    /// Print the unitaries, postselection and reconstruction error
    Svd { file: PathBuf },
    /// Print the 4x4 embedding of a 3x3 matrix
    M3 { file: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum MortalityCmd {
    /// Breadth-first search for a zero product (exit 1 when none is found)
    Search {
        /// Directory of `.mat` files, taken in file-name order
        #[arg(long)]
        lib: PathBuf,
        #[arg(long, default_value_t = tnl::mortality::DEFAULT_MAX_LEN)]
        max_len: usize,
        /// Write the gadget networks (and the zero word's chain) here
        #[arg(long)]
        emit_circuit: Option<PathBuf>,
        #[arg(long, default_value_t = tnl::mortality::DEFAULT_MEMO_CAP)]
        memo_cap: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum CloneCmd {
    /// Locate the polymorphism clone of a relation set in Post's lattice
    Classify {
        /// Directory of `.rel` files
        #[arg(long)]
        rels: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum CocloneCmd {
    /// Whether the target relation is constructible from the set (exit 1 if not)
    Member {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        rels: PathBuf,
        /// No free wire copying: search fanout-free networks only
        #[arg(long)]
        strict: bool,
        #[arg(long, requires = "strict", default_value_t = tnl::lattice::DEFAULT_MAX_NETWORK_SIZE)]
        max_network_size: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let start = Instant::now();
    match commands::dispatch(&cli, args) {
        Ok(mut report) => {
            if cli.timing {
                report.elapsed = Some(start.elapsed());
            }
            print!("{}", if cli.json { report.to_json() } else { report.to_text() });
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
