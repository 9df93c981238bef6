use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lsym", version, about = "Symmetry-induced structure of network loss landscapes")]
pub struct Cli {
    /// Machine-readable output format; plain text when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (model file for expand/reduce, directory for experiment).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed for sampled specs and probe inputs (default 0); overrides base_seed in experiments.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Pass/fail tolerance; each command documents its default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for experiment seeds. LSYM_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact subspace counts.
    #[command(subcommand)]
    Count(CountCmd),
    /// Embed a model into a wider one without changing its function.
    Expand(ExpandArgs),
    /// Merge duplicate neurons and drop silent ones.
    Reduce(ReduceArgs),
    /// Numerical certificates.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Run a teacher-student experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Label the neurons of a trained student against a teacher.
    Classify(ClassifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum CountCmd {
    /// G(r, m): symmetry-induced critical subspaces.
    G(RmArgs),
    /// T(r, m): affine subspaces of the expansion manifold.
    T(RmArgs),
    /// g(u): groupings of u zero-type neurons.
    Gu {
        #[arg(long)]
        u: u32,
    },
    /// R_k(r*, m) = G(r* - k, m) / T(r*, m).
    Ratio {
        #[arg(long)]
        k: u32,
        #[arg(long = "r-star")]
        r_star: u32,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 12)]
        digits: usize,
    },
    /// Saddle-to-minima ratio table for m = r*+1 ..= m_max (CSV unless --format json).
    Table {
        #[arg(long = "r-star")]
        r_star: u32,
        #[arg(long = "m-max")]
        m_max: u32,
        #[arg(long = "k-max")]
        k_max: u32,
        #[arg(long, value_enum, default_value_t = Weights::Unit)]
        weights: Weights,
        #[arg(long, default_value_t = 12)]
        digits: usize,
    },
    /// Product of per-layer counts.
    Multilayer {
        #[arg(long = "r-vec", value_delimiter = ',', required = true)]
        r_vec: Vec<u32>,
        #[arg(long = "m-vec", value_delimiter = ',', required = true)]
        m_vec: Vec<u32>,
        #[arg(long, value_enum, default_value_t = Kind::T)]
        kind: Kind,
    },
}

#[derive(Debug, Args)]
pub struct RmArgs {
    #[arg(long)]
    pub r: u32,
    #[arg(long)]
    pub m: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Weights {
    Unit,
    Binomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    T,
    G,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Expansion spec JSON (a list of specs, first hidden layer first, for deeper models).
    #[arg(long, conflicts_with_all = ["target_width", "sample"])]
    pub spec: Option<PathBuf>,
    /// Target hidden width(s), comma separated for deeper models.
    #[arg(long = "target-width", value_delimiter = ',', requires = "sample")]
    pub target_width: Vec<usize>,
    /// Draw a random spec (seeded by --seed).
    #[arg(long)]
    pub sample: bool,
    /// Where to write the spec(s) that were used.
    #[arg(long = "spec-out")]
    pub spec_out: Option<PathBuf>,
    /// Irreducibility and zero-type separation tolerance.
    #[arg(long = "expand-tol", default_value_t = 1e-6)]
    pub expand_tol: f64,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Incoming vectors closer than this (sup norm) are merged.
    #[arg(long = "merge-tol", default_value_t = 1e-9)]
    pub merge_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Gradient sup norm at most --tol (default 1e-8).
    Critical(ModelData),
    /// Hessian spectrum; --tol is the null-eigenvalue tolerance (default 1e-4).
    Hessian {
        #[command(flatten)]
        md: ModelData,
        /// Fail unless at least this many eigenvalues are null.
        #[arg(long = "min-null")]
        min_null: Option<usize>,
        /// Eigenvalue CSV (`index,eigenvalue`).
        #[arg(long = "eigen-csv")]
        eigen_csv: Option<PathBuf>,
    },
    /// Loss along a piecewise-linear path stays within --tol (default 1e-10) of its start.
    Path(PathArgs),
    /// Gradient flow keeps the listed unit pairs equal within --tol (default 1e-12).
    Flow(FlowArgs),
}

#[derive(Debug, Args)]
pub struct ModelData {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with input columns then target columns and a header row.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    /// Path JSON (list of segments); otherwise built from --from/--to/--teacher.
    #[arg(long, conflicts_with_all = ["from", "to"])]
    pub path: Option<PathBuf>,
    #[arg(long, requires_all = ["to", "teacher"])]
    pub from: Option<PathBuf>,
    #[arg(long, requires = "from")]
    pub to: Option<PathBuf>,
    /// Irreducible source model of both endpoints.
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    /// Model whose activation and shape decode a --path file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
    /// Matching tolerance for endpoint membership.
    #[arg(long = "match-tol", default_value_t = 1e-6)]
    pub match_tol: f64,
    /// Where to write a constructed path.
    #[arg(long = "path-out")]
    pub path_out: Option<PathBuf>,
    /// Loss profile CSV (`segment,t,loss`).
    #[arg(long = "profile-csv")]
    pub profile_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub md: ModelData,
    /// Unit pairs `i,j`; repeat the flag for several pairs.
    #[arg(long = "pairs", value_parser = parse_pair)]
    pub pairs: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Integration step; defaults to 1e-2 / (1 + |grad|_inf) at the start.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value = "rk4")]
    pub integrator: String,
    /// Trajectory CSV (`t,theta_0,..`).
    #[arg(long = "trajectory-csv")]
    pub trajectory_csv: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub student: PathBuf,
    #[arg(long)]
    pub teacher: PathBuf,
}
