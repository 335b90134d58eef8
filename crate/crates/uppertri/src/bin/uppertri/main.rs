//! Command line surface over the factorization library: instance
//! generation, factorization and verification, truncation studies, kernel
//! diagnostics, Toeplitz tools, range comparisons, and a packaged
//! counterexample demo. Every run prints exactly one JSON report to stdout;
//! files are written only where asked.
//!
//! Exit codes: 0 success, 1 a verification answered no, 2 infeasible,
//! 3 bad input or usage, 4 no convergence.

mod commands;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "uppertri",
    version = uppertri::VERSION,
    about = "Upper-lower factorization of positive semidefinite operators on ordered index lattices",
    disable_help_subcommand = true
)]
struct Cli {
    /// Indent the JSON report for reading.
    #[arg(long, global = true)]
    pretty: bool,

    /// Leave wall-clock timings out of the report so identical runs are
    /// byte identical.
    #[arg(long, global = true)]
    no_timings: bool,

    /// Generator seed. Falls back to the UPPERTRI_SEED environment
    /// variable, then to 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a banded upper factor on the window [0,n]^d and emit Q = U U*
    /// as an operator document.
    Gen {
        /// Lattice dimension.
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Block size: each lattice position carries a c x c block.
        #[arg(long, default_value_t = 1)]
        c: usize,
        /// Window bound; lattice indices run over [0,n]^d.
        #[arg(long)]
        n: u32,
        /// Band width of the planted factor's support.
        #[arg(long, default_value_t = 1)]
        band: u32,
        /// File for the operator document; without it the document is
        /// embedded in the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Factor a positive semidefinite matrix or operator section.
    Factor {
        #[arg(long, value_enum)]
        method: Method,
        /// Matrix or operator document.
        #[arg(long)]
        input: PathBuf,
        /// Support pattern for the poset and hotel methods.
        #[arg(long, value_enum)]
        pattern: Option<PatternKind>,
        /// Window dimension when the input is a plain matrix.
        #[arg(long)]
        d: Option<usize>,
        /// Window bound; defaults to the operator's support bound.
        #[arg(long)]
        n: Option<u32>,
        /// Fresh lattice columns for the hotel method; defaults to just
        /// enough to hold the rank.
        #[arg(long)]
        extra_cols: Option<usize>,
        /// File for the factor matrix document.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Check a factor against an input: residual, and support when a
    /// pattern is named.
    Verify {
        /// Factor matrix document.
        #[arg(long)]
        factor: PathBuf,
        /// Matrix or operator document the factor claims to factor.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        pattern: Option<PatternKind>,
        /// Window dimension when the input is a plain matrix.
        #[arg(long)]
        d: Option<usize>,
        /// Window bound; defaults to the operator's support bound.
        #[arg(long)]
        n: Option<u32>,
        /// Relative residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },

    /// Factor growing sections and track the factor on a fixed comparison
    /// window.
    Converge {
        /// Operator document (d = 1) or symbol document.
        #[arg(long)]
        input: PathBuf,
        /// Strictly increasing window bounds, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        schedule: Vec<u32>,
        /// Bound of the comparison window.
        #[arg(long)]
        compare_n: u32,
        /// Convergence threshold for the final delta.
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the ladder as a CSV table.
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Kernel-side diagnostics of an operator document.
    Rkhs {
        #[arg(long, value_enum)]
        op: RkhsOp,
        /// Operator document.
        #[arg(long)]
        input: PathBuf,
        /// Multi-index, comma separated coordinates.
        #[arg(long = "J")]
        j: Option<String>,
        /// Window bound for cmin.
        #[arg(long)]
        window: Option<u32>,
        /// Kernel section indices: semicolon separated multi-indices, each
        /// expanded over the standard block directions.
        #[arg(long)]
        basis: Option<String>,
        /// Direction vector, comma separated re:im entries.
        #[arg(long)]
        v: Option<String>,
        /// Target point, comma separated re:im coordinates.
        #[arg(long)]
        point: Option<String>,
    },

    /// Toeplitz symbols: sections, spectral factors, and their checks.
    Toeplitz {
        #[arg(long, value_enum)]
        op: ToeplitzOp,
        /// Symbol document.
        #[arg(long)]
        symbol: PathBuf,
        /// Section size, or verification window size.
        #[arg(long)]
        n: Option<usize>,
        /// Factor document, for verify.
        #[arg(long)]
        factor: Option<PathBuf>,
        /// Convergence threshold for bauer.
        #[arg(long)]
        tol: Option<f64>,
        /// Grid size for the logarithmic mean.
        #[arg(long)]
        grid: Option<usize>,
        /// Ladder CSV output, for bauer.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// File for the computed matrix or factor document.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Range comparisons and majorization constants of factor pairs.
    Range {
        #[arg(long, value_enum)]
        op: RangeOp,
        /// Left factor, a matrix document.
        #[arg(long)]
        a: PathBuf,
        /// Right factor, a matrix document.
        #[arg(long)]
        c: Option<PathBuf>,
        /// Window dimension, for demo.
        #[arg(long)]
        d: Option<usize>,
        /// Window bound, for demo.
        #[arg(long)]
        n: Option<u32>,
        /// Reference factor the demo compares ranges against; defaults to
        /// the identity when Q is invertible.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Fresh lattice columns for the demo's augmentation path.
        #[arg(long)]
        extra_cols: Option<usize>,
        /// Containment tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },

    /// The 4x4 tensor-window instance whose canonical factor leaves the
    /// pattern: prints the factor, the infeasibility certificate, and the
    /// augmented factorization.
    DemoCounterexample,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Cholesky,
    Reverse,
    Poset,
    Hotel,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Cholesky => "cholesky",
            Method::Reverse => "reverse",
            Method::Poset => "poset",
            Method::Hotel => "hotel",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PatternKind {
    NestTensor,
}

impl PatternKind {
    fn name(self) -> &'static str {
        match self {
            PatternKind::NestTensor => "nest-tensor",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RkhsOp {
    Gram,
    Norm,
    Cmin,
    Density,
    Onb,
}

impl RkhsOp {
    fn name(self) -> &'static str {
        match self {
            RkhsOp::Gram => "gram",
            RkhsOp::Norm => "norm",
            RkhsOp::Cmin => "cmin",
            RkhsOp::Density => "density",
            RkhsOp::Onb => "onb",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ToeplitzOp {
    Matrix,
    FejerRiesz,
    Bauer,
    Logint,
    Verify,
}

impl ToeplitzOp {
    fn name(self) -> &'static str {
        match self {
            ToeplitzOp::Matrix => "matrix",
            ToeplitzOp::FejerRiesz => "fejer-riesz",
            ToeplitzOp::Bauer => "bauer",
            ToeplitzOp::Logint => "logint",
            ToeplitzOp::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RangeOp {
    Equal,
    Constants,
    Demo,
}

impl RangeOp {
    fn name(self) -> &'static str {
        match self {
            RangeOp::Equal => "equal",
            RangeOp::Constants => "constants",
            RangeOp::Demo => "demo",
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Gen { .. } => "gen",
        Command::Factor { .. } => "factor",
        Command::Verify { .. } => "verify",
        Command::Converge { .. } => "converge",
        Command::Rkhs { .. } => "rkhs",
        Command::Toeplitz { .. } => "toeplitz",
        Command::Range { .. } => "range",
        Command::DemoCounterexample => "demo-counterexample",
    }
}

fn resolve_seed(flag: Option<u64>) -> uppertri::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("UPPERTRI_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            uppertri::Error::InvalidInput(format!(
                "UPPERTRI_SEED is not an unsigned integer: {text:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(uppertri::Error::InvalidInput(format!("UPPERTRI_SEED: {e}"))),
    }
}

fn error_exit_code(e: &uppertri::Error) -> i32 {
    use uppertri::Error;
    match e {
        Error::RangeMismatch(_) => 1,
        Error::NotFactorable(_) => 2,
        Error::Convergence { .. } => 4,
        _ => 3,
    }
}

fn fail(e: &uppertri::Error) -> ! {
    eprintln!("error: {e}");
    std::process::exit(error_exit_code(e));
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(3);
        }
    };

    let seed = match resolve_seed(cli.seed) {
        Ok(s) => s,
        Err(e) => fail(&e),
    };
    let started = std::time::Instant::now();
    let mut rb = report::ReportBuilder::new(command_name(&cli.command), seed);
    match commands::run(&cli.command, seed, &mut rb) {
        Ok(outcome) => {
            let timings = (!cli.no_timings).then(|| {
                serde_json::json!({"totalMs": started.elapsed().as_secs_f64() * 1e3})
            });
            let text = rb.render(outcome.outputs, outcome.residuals, timings, cli.pretty);
            // a closed pipe downstream is not our error
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = writeln!(stdout, "{text}").and_then(|()| stdout.flush()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error: {e}");
                    std::process::exit(3);
                }
            }
            std::process::exit(outcome.exit);
        }
        Err(e) => fail(&e),
    }
}
