use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Geometry of graphs with vanishing Gauss curvature.
///
/// Structured output goes to standard output and diagnostics to standard
/// error. Exit status: 0 success or consistent verdict, 1 hypothesis
/// failure, 2 usage or parse error, 3 evaluation error.
#[derive(Debug, Parser)]
#[command(name = "zerogauss", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value, gradient and Hessian (or a directional jet) at points.
    Eval(EvalArgs),
    /// Curvature report at points.
    Report(ReportArgs),
    /// Trace rulings through points along Hessian kernel directions.
    Rulings(RulingsArgs),
    /// Decay profile and rigidity verdict.
    Rigidity(RigidityArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// List the built-in fields.
    Corpus(CorpusArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Polyline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignatureArg {
    Euclidean,
    Minkowski,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    Laplacian,
    MeanEuclidean,
    MeanMinkowskiTilde,
    MeanMinkowski,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// The Euclidean combination identity on random quartic polynomials.
    EuclidIdentity,
    /// Ruling lemma residuals on developable convex fields.
    Lemmas,
    /// Finite-difference cross-check of derivatives up to order four.
    Crosscheck,
}

/// Where the field comes from and where it lives.
#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Expression in x1..xn, e.g. "0.5*sqrt(x1^2+1)".
    #[arg(long, conflicts_with_all = ["grid", "corpus"])]
    pub field: Option<String>,
    /// Grid CSV file (header "origin,spacing,counts").
    #[arg(long, conflicts_with = "corpus")]
    pub grid: Option<PathBuf>,
    /// Built-in field by name (see `corpus`).
    #[arg(long)]
    pub corpus: Option<String>,
    /// Dimension; required with --field.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Domain box as `lo:hi` for every axis or `lo:hi,lo:hi,...` per axis.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Declare a singular point (repeatable), e.g. `0,0`.
    #[arg(long = "exclude-point", allow_hyphen_values = true)]
    pub exclude_point: Vec<String>,
    /// TOML run configuration; its entries override flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tolerance override `name=value` (repeatable), e.g. `kernel=1e-7`.
    #[arg(long = "tolerance")]
    pub tolerance: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Point as comma-separated coordinates (repeatable).
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub point: Vec<String>,
    /// Emit the jet of t ↦ u(x + t·v) instead of value, gradient and Hessian.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Jet degree, at most 4.
    #[arg(long, default_value_t = 4)]
    pub degree: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub point: Vec<String>,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub signature: SignatureArg,
}

#[derive(Debug, Args)]
pub struct RulingsArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub point: Vec<String>,
    /// Trace only this direction; by default every kernel direction is traced.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Extension step (default 1e-2 of the domain diameter).
    #[arg(long)]
    pub step: Option<f64>,
    /// Endpoint resolution (default 1e-4 of the domain diameter).
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Attach lemma residuals with this η (comma-separated).
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<String>,
}

#[derive(Debug, Args)]
pub struct RigidityArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, value_enum)]
    pub quantity: QuantityArg,
    /// Strictly increasing radius schedule, e.g. `1,10,100`.
    #[arg(long)]
    pub radii: Option<String>,
    /// Samples per sphere.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Samples for the region scans.
    #[arg(long)]
    pub region_samples: Option<usize>,
    /// Scan region in the --domain syntax; defaults to the domain.
    #[arg(long, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Sphere center; defaults to the center of the domain.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
    /// Seed for every sampled computation (mandatory here or in --config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit only the decay profile (no hypothesis scans).
    #[arg(long)]
    pub profile: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Restrict the suite to one field (lemmas and crosscheck only).
    #[command(flatten)]
    pub field: FieldArgs,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Also list this many seeded random cylindrical fields.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}
