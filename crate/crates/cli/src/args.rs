use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(
    name = "borelknn",
    version,
    about = "k-NN classification with Borel dimension reduction and Hamming-cube k-ANN"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct GlobalArgs {
    /// Master seed for every random choice.
    #[arg(long, global = true, env = "BORELKNN_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "BORELKNN_THREADS")]
    pub threads: Option<usize>,
    /// Progress and timings on stderr.
    #[arg(long, short, global = true, env = "BORELKNN_VERBOSE")]
    pub verbose: bool,
    /// Directory for result files; results go to stdout otherwise.
    #[arg(long, global = true, env = "BORELKNN_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, env = "BORELKNN_FORMAT")]
    pub format: Option<Format>,
    /// TOML file with defaults; command-line flags and environment win.
    #[arg(long, global = true, env = "BORELKNN_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Map each row of a CSV file to its Borel code(s).
    Reduce(ReduceArgs),
    /// Train on one file and predict the rows of another.
    Classify(ClassifyArgs),
    /// Build, query or audit a Hamming-cube k-ANN index.
    Ann(AnnArgs),
    /// Nearest-neighbour radii and ball counts.
    Instability(InstabilityArgs),
    /// k-fold cross-validation for k = 1..kmax.
    Cv(CvArgs),
    /// Error of a rule on a synthetic distribution as the sample grows.
    Consistency(ConsistencyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Reduce(_) => "reduce",
            Command::Classify(_) => "classify",
            Command::Ann(_) => "ann",
            Command::Instability(_) => "instability",
            Command::Cv(_) => "cv",
            Command::Consistency(_) => "consistency",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Original,
    Reduced,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborsArg {
    Brute,
    Sorted,
    Kann,
    Adversarial,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Knn,
    Reduced,
    Kann,
    Adversarial,
}

/// A fixed `k` or `sqrt` for `⌈√n⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(try_from = "KRaw")]
pub enum KArg {
    Sqrt,
    Fixed(usize),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum KRaw {
    Number(usize),
    Text(String),
}

impl TryFrom<KRaw> for KArg {
    type Error = String;

    fn try_from(raw: KRaw) -> Result<Self, String> {
        match raw {
            KRaw::Number(n) => Ok(KArg::Fixed(n)),
            KRaw::Text(s) => s.parse(),
        }
    }
}

impl std::str::FromStr for KArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "sqrt" {
            return Ok(KArg::Sqrt);
        }
        s.parse()
            .map(KArg::Fixed)
            .map_err(|_| format!("expected a positive integer or \"sqrt\", got {s:?}"))
    }
}

/// Fill every unset field of `self` from `lower`.
macro_rules! layered {
    ($ty:ident { $($field:ident),* $(,)? }) => {
        impl $ty {
            pub fn over(self, lower: Self) -> Self {
                $ty { $($field: self.$field.or(lower.$field)),* }
            }
        }
    };
}

impl GlobalArgs {
    pub fn over(self, lower: Self) -> Self {
        GlobalArgs {
            seed: self.seed.or(lower.seed),
            threads: self.threads.or(lower.threads),
            verbose: self.verbose || lower.verbose,
            out_dir: self.out_dir.or(lower.out_dir),
            format: self.format.or(lower.format),
            config: self.config.or(lower.config),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output path; defaults to OUT_DIR/reduce.csv or stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Bits kept per coordinate.
    #[arg(long, env = "BORELKNN_BITS")]
    pub bits: Option<u32>,
    /// Coordinates per code; defaults to all of them.
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Fit the normalization on this CSV instead of the input, e.g. the
    /// training file when reducing a test file.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Label column, by header name or zero-based index; defaults to the last.
    #[arg(long)]
    pub label: Option<String>,
}

layered!(ReduceArgs {
    input,
    output,
    bits,
    group_size,
    fit,
    label
});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyArgs {
    /// Training CSV, or a file written by `reduce`.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test CSV in the same layout as the training file.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Number of neighbours, or `sqrt`.
    #[arg(long, env = "BORELKNN_K")]
    pub k: Option<KArg>,
    /// Space the neighbours are searched in (raw CSV input only).
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Neighbour search.
    #[arg(long, value_enum)]
    pub neighbors: Option<NeighborsArg>,
    #[arg(long, env = "BORELKNN_BITS")]
    pub bits: Option<u32>,
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Thermometer levels per coordinate for `--neighbors kann`.
    #[arg(long)]
    pub levels: Option<u32>,
    /// Approximation factor for `kann` and `adversarial`.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Class the adversarial search favours.
    #[arg(long)]
    pub bias: Option<String>,
    #[arg(long)]
    pub label: Option<String>,
}

layered!(ClassifyArgs {
    train,
    test,
    output,
    k,
    variant,
    neighbors,
    bits,
    group_size,
    levels,
    c,
    delta,
    bias,
    label
});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[command(group(ArgGroup::new("mode").required(true).multiple(true).args(["build", "query", "audit"])))]
pub struct AnnArgs {
    /// Build an index from `--input`.
    #[arg(long)]
    #[serde(skip)]
    pub build: bool,
    /// Answer the rows of `--queries`.
    #[arg(long)]
    #[serde(skip)]
    pub query: bool,
    /// Check the answers for `--queries` against exact search.
    #[arg(long)]
    #[serde(skip)]
    pub audit: bool,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub index_in: Option<PathBuf>,
    #[arg(long)]
    pub index_out: Option<PathBuf>,
    /// Thermometer levels per coordinate.
    #[arg(long, env = "BORELKNN_BITS")]
    pub bits: Option<u32>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Additive distortion; defaults to c/4.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, env = "BORELKNN_K")]
    pub k: Option<usize>,
    /// Constant in the projected dimension.
    #[arg(long)]
    pub const_c: Option<f64>,
    /// Independent draws per range; defaults to ⌈log₂(1/δ)⌉.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub label: Option<String>,
}

impl AnnArgs {
    pub fn over(self, lower: Self) -> Self {
        AnnArgs {
            build: self.build,
            query: self.query,
            audit: self.audit,
            input: self.input.or(lower.input),
            queries: self.queries.or(lower.queries),
            index_in: self.index_in.or(lower.index_in),
            index_out: self.index_out.or(lower.index_out),
            bits: self.bits.or(lower.bits),
            c: self.c.or(lower.c),
            epsilon: self.epsilon.or(lower.epsilon),
            delta: self.delta.or(lower.delta),
            k: self.k.or(lower.k),
            const_c: self.const_c.or(lower.const_c),
            repeats: self.repeats.or(lower.repeats),
            label: self.label.or(lower.label),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstabilityArgs {
    /// CSV file; every row is queried against the others.
    #[arg(long, conflicts_with = "gaussian")]
    pub input: Option<PathBuf>,
    /// Sample this many standard normal points instead of reading a file.
    #[arg(long)]
    pub gaussian: Option<usize>,
    /// Dimension of the gaussian sample.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Fresh gaussian queries.
    #[arg(long)]
    pub queries: Option<usize>,
    #[arg(long, env = "BORELKNN_K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    /// Radii tabulated between 0 and the largest distance.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
}

layered!(InstabilityArgs {
    input,
    gaussian,
    dim,
    queries,
    k,
    c,
    grid,
    output,
    label
});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, env = "BORELKNN_BITS")]
    pub bits: Option<u32>,
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Fit the normalization on each training fold only.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
}

impl CvArgs {
    pub fn over(self, lower: Self) -> Self {
        CvArgs {
            input: self.input.or(lower.input),
            folds: self.folds.or(lower.folds),
            kmax: self.kmax.or(lower.kmax),
            variant: self.variant.or(lower.variant),
            bits: self.bits.or(lower.bits),
            group_size: self.group_size.or(lower.group_size),
            strict: self.strict || lower.strict,
            output: self.output.or(lower.output),
            label: self.label.or(lower.label),
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyArgs {
    /// JSON distribution spec; defaults to the one-dimensional step.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Training sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Bits per coordinate for `reduced`.
    #[arg(long, env = "BORELKNN_BITS")]
    pub bits: Option<u32>,
    /// Thermometer levels for `kann`.
    #[arg(long)]
    pub levels: Option<u32>,
    /// Class id the adversary favours.
    #[arg(long)]
    pub bias: Option<u32>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

layered!(ConsistencyArgs {
    spec,
    rule,
    n_grid,
    trials,
    test_size,
    c,
    delta,
    bits,
    levels,
    bias,
    output
});

/// Contents of a `--config` file: global keys at the top level and one
/// table per subcommand.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub verbose: bool,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub reduce: ReduceArgs,
    pub classify: ClassifyArgs,
    pub ann: AnnArgs,
    pub instability: InstabilityArgs,
    pub cv: CvArgs,
    pub consistency: ConsistencyArgs,
}

impl FileConfig {
    pub fn global(&self) -> GlobalArgs {
        GlobalArgs {
            seed: self.seed,
            threads: self.threads,
            verbose: self.verbose,
            out_dir: self.out_dir.clone(),
            format: self.format,
            config: None,
        }
    }
}
