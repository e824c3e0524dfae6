//! `facred`: generators, solvers, reductions and oracle-checked experiments.
//!
//! Every subcommand prints one JSON document on stdout. Exit status is 0 on
//! success, 1 when a result disagrees with its oracle (or a success threshold
//! is missed) and 2 on usage or input errors.

mod commands;
mod oracle;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "facred", version, about = "Factored problems, average-case reductions and counting algorithms")]
pub struct Cli {
    /// Run seed; every random choice derives from it.
    #[arg(long, global = true, env = "FACRED_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for trial loops. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Count solutions of a factored instance.
    Count(InstanceArg),
    /// Decide whether a factored instance has a solution.
    Detect(InstanceArg),
    /// Apply a count-preserving reduction.
    Reduce(ReduceArgs),
    /// Worst-case solving through an average-case oracle, checked against brute force.
    FrameworkDemo(FrameworkArgs),
    /// Self-correction of a corrupted low-degree polynomial oracle.
    CorrectDemo(CorrectArgs),
    /// Zero-k-clique counting on random instances.
    Zkc(ZkcArgs),
    /// Average-case orthogonal vectors counting.
    Avgov(AvgovArgs),
    /// Labeled subgraph counting through the Erdős–Rényi family.
    Subgraph(SubgraphArgs),
    /// Count regex alignments in a text.
    Regex(RegexArgs),
    /// Count (weighted) longest common subsequence alignments.
    Lcs(LcsArgs),
    /// Cross-check the fast counter on an instance against the expanded oracle.
    Verify(InstanceArg),
    /// Time core kernels.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Fkf,
    Ffkc,
    Zkc,
    Ov,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub g: usize,
    #[arg(long, default_value_t = 2)]
    pub b: usize,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// OV, XOR, SUM_ZERO or SUM_TARGET.
    #[arg(long, default_value = "OV")]
    pub predicate: String,
    /// Weight range for zkc.
    #[arg(long, default_value_t = 1728)]
    pub r: u64,
    /// Dimension for ov.
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InstanceArg {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReduceTo {
    /// Any predicate to XOR.
    Xor,
    /// XOR to OV.
    Ov,
    /// XOR to SUM_TARGET.
    Sum,
    /// SUM_TARGET to SUM_ZERO.
    TargetZero,
    /// SUM to factored zero-k-clique.
    Zkc,
    /// Factored k-clique to factored zero-k-clique.
    Fzkc,
    /// Factored zero-3-clique to partitioned matching triangles.
    Pmt,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub to: ReduceTo,
    /// Also count both sides and fail on a mismatch.
    #[arg(long)]
    pub check: bool,
    /// Write the reduced instance to a file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FrameworkArgs {
    /// fkov2 or fkxor2 (k = 2 with OV or XOR).
    #[arg(long, default_value = "fkov2")]
    pub problem: String,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub g: usize,
    #[arg(long, default_value_t = 2)]
    pub b: usize,
    #[arg(long, default_value_t = 0.0)]
    pub error_rate: f64,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// Exit 1 below this success frequency.
    #[arg(long, default_value_t = 1.0)]
    pub min_success: f64,
}

#[derive(Args, Debug)]
pub struct CorrectArgs {
    #[arg(long, default_value_t = 101)]
    pub p: u64,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub vars: usize,
    #[arg(long, default_value_t = 0.1)]
    pub corruption: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Amplification repetitions; 1 means a single correction.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.0)]
    pub min_success: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ZkcMethod {
    Detection,
    SmallRange,
    Brute,
}

#[derive(Args, Debug)]
pub struct ZkcArgs {
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1728)]
    pub r: u64,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = ZkcMethod::Detection)]
    pub method: ZkcMethod,
}

#[derive(Args, Debug)]
pub struct AvgovArgs {
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
}

#[derive(Args, Debug)]
pub struct SubgraphArgs {
    /// triangle, p3, k4 or an edge list such as "0-1,1-2,2-3".
    #[arg(long, default_value = "triangle")]
    pub pattern: String,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub b: usize,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Count copies with one vertex per partition instead of labeled copies.
    #[arg(long)]
    pub one_per_partition: bool,
}

#[derive(Args, Debug)]
pub struct RegexArgs {
    /// Pattern such as "a[bc]*d|e".
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    pub pattern: Option<String>,
    #[arg(long, default_value = "")]
    pub text: String,
    /// Reduce a k = 2 OV factored instance to a regex and count it.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000_007)]
    pub modulus: u64,
}

#[derive(Args, Debug)]
pub struct LcsArgs {
    /// Two or three strings.
    #[arg(long, num_args = 1.., required = true)]
    pub strings: Vec<String>,
    /// Symbol weights such as "a=2,b=1"; unit weights if omitted.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, default_value_t = 1_000_000_007)]
    pub modulus: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    All,
    Circledcirc,
    BitSlice,
    SmallRange,
    Regex,
    Kwlcs,
    Avgov,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Kernel::All)]
    pub kernel: Kernel,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    match commands::run(cli, argv) {
        Ok(out) => {
            // A closed pipe downstream is not an error of ours.
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&out.json).expect("serializable"));
            ExitCode::from(if out.mismatch { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e }));
            ExitCode::from(2)
        }
    }
}
