mod commands;
mod schema;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pliable::Error;
use serde_json::Value;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pliable", version, about = "Exact approximation tools for maximum homomorphism problems")]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(short = 'o', long, global = true)]
    out: Option<PathBuf>,
    /// Append decimal approximations (marked with ≈) to rational strings.
    #[arg(long, global = true)]
    human: bool,
    /// Print the JSON schemas of all input formats and exit.
    #[arg(long)]
    schema: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Exact opt(A, B) with a maximizing map.
    Solve {
        a: PathBuf,
        b: PathBuf,
        /// Enumerate every map instead of the tree-decomposition DP.
        #[arg(long)]
        exact: bool,
    },
    /// Sherali-Adams value at a level, next to the exact value when it runs.
    Relax {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        level: usize,
    },
    /// Find an overcast A → factor·B or a structure separating opt.
    Overcast {
        a: PathBuf,
        b: PathBuf,
        /// Target factor 1/(1+eps).
        #[arg(long, value_parser = commands::parse_q)]
        eps: Option<pliable::Rational>,
        /// Check this overcast file instead of searching.
        #[arg(long)]
        verify: Option<PathBuf>,
        #[arg(long, default_value_t = pliable::overcast::OVERCAST_MAP_CAP)]
        cap: u128,
    },
    /// Opt-distance bounds at given epsilons, and the edit distance.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_parser = commands::parse_q, value_delimiter = ',')]
        eps: Vec<pliable::Rational>,
        #[arg(long)]
        edit: bool,
        #[arg(long, default_value_t = pliable::overcast::OVERCAST_MAP_CAP)]
        cap: u128,
    },
    /// Fractional vertex modulators from explicit families.
    Modulator(ModulatorArgs),
    /// B, ω and ω′ from a vertex modulator of A.
    PliableApprox {
        a: PathBuf,
        #[arg(long)]
        modulator: PathBuf,
        /// Widest tuple allowance; defaults to the widest tuple of A.
        #[arg(long)]
        r: Option<usize>,
    },
    /// Size reductions and packing.
    Reduce(ReduceArgs),
    /// Dense-graph quotients and checks.
    Dense {
        #[command(subcommand)]
        op: DenseOp,
    },
    /// Value bounds or constructive solutions.
    Ptas {
        #[arg(long, value_parser = commands::parse_q)]
        eps: pliable::Rational,
        #[arg(long, value_enum)]
        mode: PtasMode,
        a: PathBuf,
        c: PathBuf,
        /// Value mode: a pliable-approx bundle. Construct mode: a modulator.
        witness: Option<PathBuf>,
    },
    /// Instance generators.
    Gen(GenArgs),
    /// Linear programs.
    Lp {
        #[command(subcommand)]
        op: LpOp,
    },
}

#[derive(Args)]
pub struct ModulatorArgs {
    /// Graph or structure file; not needed for grid slabs.
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub layers: usize,
    /// BFS roots by id (Baker); defaults to the first vertex of every component.
    #[arg(long, value_delimiter = ',')]
    pub roots: Vec<String>,
    /// Grid side lengths (slabs).
    #[arg(long, value_delimiter = ',')]
    pub sides: Vec<usize>,
    /// Slab axes; defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub axes: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Family {
    Baker,
    Grid,
}

#[derive(Args)]
pub struct ReduceArgs {
    pub a: PathBuf,
    #[arg(long, value_enum, default_value = "size")]
    pub target: Target,
    /// Source parameter for size reductions.
    #[arg(long, value_enum, default_value = "td")]
    pub from: Source,
    /// Component bound for the cc route; defaults to the largest component.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, value_parser = commands::parse_q)]
    pub eps: Option<pliable::Rational>,
    /// Element to pack.
    #[arg(long)]
    pub element: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Target {
    Size,
    Pack,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Source {
    Cc,
    Td,
}

#[derive(Subcommand)]
pub enum DenseOp {
    Quotient {
        g: PathBuf,
        #[arg(long)]
        partition: PathBuf,
    },
    Homogeneity {
        g: PathBuf,
        #[arg(long, value_delimiter = ',')]
        v1: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        v2: Vec<String>,
        /// Sample this many subsets instead of enumerating.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Counting {
        g: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        /// Part pairs as i-j, 0-based.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        #[arg(long, value_parser = commands::parse_q)]
        eps: Option<pliable::Rational>,
    },
    Extension {
        g: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        #[arg(long)]
        ab: String,
        #[arg(long, value_parser = commands::parse_q)]
        eps: Option<pliable::Rational>,
    },
    /// Quotient overcast or a diagnosis.
    Approx {
        g: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        #[arg(long, value_parser = commands::parse_q)]
        eps: pliable::Rational,
    },
    /// Local search for a low-defect balanced partition.
    Search {
        g: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random-function overcasts between K_n and λK_k.
    Clique {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PtasMode {
    Value,
    Construct,
}

#[derive(Args)]
pub struct GenArgs {
    #[command(subcommand)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Emit graph JSON instead of structure JSON (graph kinds only).
    #[arg(long, global = true)]
    pub graph: bool,
}

#[derive(Subcommand)]
pub enum GenKind {
    Grid {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
    },
    Clique {
        #[arg(long)]
        n: usize,
    },
    Path {
        #[arg(long)]
        n: usize,
    },
    Cycle {
        #[arg(long)]
        n: usize,
    },
    Star {
        #[arg(long)]
        k: usize,
    },
    Gnp {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = commands::parse_q)]
        p: pliable::Rational,
    },
    Bipartite {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, value_parser = commands::parse_q)]
        density: pliable::Rational,
    },
    Multipartite {
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    Matching {
        #[arg(long)]
        k: usize,
    },
    Tree {
        #[arg(long)]
        n: usize,
    },
    Tournament {
        #[arg(long)]
        n: usize,
    },
    /// A triangle glued onto every edge of a base graph file.
    TriangleGlued {
        #[arg(long)]
        base: PathBuf,
    },
    /// Planted rainbow clique and its hardness gadget pair.
    Hardness {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        per_class: usize,
        #[arg(long, value_parser = commands::parse_q)]
        p: pliable::Rational,
    },
}

#[derive(Subcommand)]
pub enum LpOp {
    Solve { lp: PathBuf },
}

pub enum CliError {
    Usage(String),
    Lib(Error),
    /// A check ran and failed; the report is still emitted.
    Failed(Value),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(Error::CapExceeded { .. }) => 3,
            CliError::Lib(Error::Verification(_)) | CliError::Failed(_) => 4,
            CliError::Lib(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if cli.schema {
        println!("{}", serde_json::to_string_pretty(&schema::all()).unwrap());
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let (report, status) = match commands::run(cmd) {
        Ok(r) => (r, Ok(())),
        Err(CliError::Failed(v)) => (v, Err(4)),
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) => m.clone(),
                CliError::Lib(l) => l.to_string(),
                CliError::Failed(v) => v.to_string(),
            };
            eprintln!("error: {msg}");
            return ExitCode::from(e.code());
        }
    };
    let report = if cli.human { commands::humanize(report) } else { report };
    let text = serde_json::to_string_pretty(&report).unwrap() + "\n";
    match &cli.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    match status {
        Ok(()) => ExitCode::SUCCESS,
        Err(c) => ExitCode::from(c),
    }
}
