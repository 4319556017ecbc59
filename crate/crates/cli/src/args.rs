use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bnnv", version, about = "Exact SAT-based verification of binarized neural networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check local robustness of one image.
    Verify(VerifyArgs),
    /// Check that two models agree on every input.
    Equiv(EquivArgs),
    /// Check that no single perturbation misclassifies a fraction of images.
    Universal(UniversalArgs),
    /// Write a property as DIMACS CNF or an LP-format integer program.
    Export(ExportArgs),
    /// Decide a property by exhaustive enumeration.
    Oracle(OracleArgs),
    /// Write a random model (and optionally an image) from a seed.
    Gen(GenArgs),
    /// Write a directory of random model/image instances.
    GenSuite(GenSuiteArgs),
    /// Run several engines over an instance directory and tabulate results.
    Bench(BenchArgs),
    /// Solve a DIMACS file with the embedded solver.
    Sat(SatArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Sat,
    Ceg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Saliency {
    Off,
    TwoPhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dimacs,
    Ilp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PropertyKind {
    Robustness,
    Universal,
    Equivalence,
}

#[derive(Clone, Debug, Args)]
pub struct SolverArgs {
    /// Wall-clock limit in seconds for the whole run (0 disables it).
    #[arg(long, default_value_t = 300.0)]
    pub timeout: f64,
    /// External DIMACS solver command; the CNF file path is appended.
    #[arg(long, env = "BNNV_SAT_CMD")]
    pub solver_cmd: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub model: PathBuf,
    pub image: PathBuf,
    /// Expected label; defaults to the image file's label, then the prediction.
    #[arg(long)]
    pub label: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub epsilon: i64,
    #[arg(long, value_enum, default_value_t = Engine::Sat)]
    pub engine: Engine,
    /// Block boundary for the ceg engine.
    #[arg(long, default_value_t = 1)]
    pub split_k: usize,
    #[arg(long, value_enum, default_value_t = Saliency::Off)]
    pub saliency: Saliency,
    /// Record per-iteration statistics of the ceg engine.
    #[arg(long)]
    pub trace: bool,
    /// Use full unsat cores as blocking clauses in the ceg engine.
    #[arg(long)]
    pub no_minimize_cores: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    pub model_a: PathBuf,
    pub model_b: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct UniversalArgs {
    pub model: PathBuf,
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub epsilon: i64,
    /// Fraction of images that must be misclassified for a violation.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = PropertyKind::Robustness)]
    pub property: PropertyKind,
    #[arg(long, value_enum, default_value_t = Format::Dimacs)]
    pub format: Format,
    /// Image file; repeat for universal properties.
    #[arg(long = "image")]
    pub images: Vec<PathBuf>,
    #[arg(long)]
    pub label: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub epsilon: i64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Second model of an equivalence property.
    #[arg(long)]
    pub model_b: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(subcommand)]
    pub property: OracleCommand,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    Robustness {
        model: PathBuf,
        image: PathBuf,
        #[arg(long)]
        label: Option<usize>,
        #[arg(long, default_value_t = 1)]
        epsilon: i64,
        #[arg(long, default_value_t = bnnv_core::oracle::DEFAULT_CAP)]
        cap: u64,
    },
    Equiv {
        model_a: PathBuf,
        model_b: PathBuf,
        #[arg(long, default_value_t = bnnv_core::oracle::DEFAULT_CAP)]
        cap: u64,
    },
    Universal {
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        epsilon: i64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = bnnv_core::oracle::DEFAULT_CAP)]
        cap: u64,
    },
}

#[derive(Clone, Debug, Args)]
pub struct ShapeArgs {
    /// Input size, internal block widths and label count, comma separated.
    #[arg(long, default_value = "8,8,8,3", value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Pixel range `LB:UB`, or `binary` for ±1 inputs without a binarizer.
    #[arg(long, default_value = "0:3")]
    pub domain: String,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write a random image labelled with the model's prediction.
    #[arg(long)]
    pub image: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenSuiteArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub shape: ShapeArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub epsilon: i64,
    #[arg(long, value_delimiter = ',', default_value = "sat,ceg,oracle")]
    pub engines: Vec<BenchEngine>,
    #[arg(long, default_value_t = 1)]
    pub split_k: usize,
    /// Per-instance wall-clock limit in seconds (0 disables it).
    #[arg(long, default_value_t = 300.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = bnnv_core::oracle::DEFAULT_CAP)]
    pub oracle_cap: u64,
    /// Worker threads (0 uses every core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Emit JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchEngine {
    Sat,
    Ceg,
    Oracle,
}

#[derive(Debug, Args)]
pub struct SatArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
