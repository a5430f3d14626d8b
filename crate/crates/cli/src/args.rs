use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "drawcouple", version, about = "Weighted sampling, couplings, exact laws and concentration bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw seeded samples with replacement, without replacement or from a Polya urn.
    Sample(SampleArgs),
    /// Run the screening coupling or the coupled Polya urns.
    Couple(CoupleArgs),
    /// Exact law of the cumulative value of a sample.
    Exact(ExactArgs),
    /// Exact stochastic order check between two sampling schemes.
    OrderCheck(OrderArgs),
    /// Variance factors, and optionally tail and Chernoff bounds.
    Bound(BoundArgs),
    /// Monte Carlo tail check of the without-replacement sum.
    Tail(TailArgs),
    /// Run a pre-registered verification suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    With,
    Without,
    Polya,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Theorem1,
    Theorem2,
    Theorem3,
    Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Small,
    Full,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Run {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "without")]
    pub mode: Mode,
    /// Replacement number of the Polya urn.
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[command(flatten)]
    pub run: Run,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// `without` runs the screening coupling, `polya` the coupled urns.
    #[arg(long, value_enum, default_value = "without")]
    pub mode: Mode,
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long = "D")]
    pub big_d: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[command(flatten)]
    pub run: Run,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "without")]
    pub mode: Mode,
    #[arg(long)]
    pub d: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// `with`/`without` compare the without- and with-replacement sums
    /// (increasing convex order); `polya` compares d- and D-Polya sums
    /// (convex order).
    #[arg(long, value_enum, default_value = "without")]
    pub mode: Mode,
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long = "D")]
    pub big_d: Option<u64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub n: usize,
    /// Thresholds for the sub-Gaussian tail bound.
    #[arg(long, num_args = 1..)]
    pub t: Vec<f64>,
    /// Level for the Chernoff bound on the with-replacement sum.
    #[arg(long)]
    pub a: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[arg(long)]
    pub pop: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, num_args = 1.., required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub replicates: usize,
    #[command(flatten)]
    pub run: Run,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long, value_enum, default_value = "full")]
    pub grid: GridArg,
    #[arg(long, default_value_t = 100_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub run: Run,
    #[command(flatten)]
    pub output: Output,
}
