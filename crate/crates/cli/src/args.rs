//! Command-line surface. Most options can also come from a TOML config
//! file (`--config`); explicit flags win.

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "causal-kit",
    version,
    about = "Statistical causality between time series: Geweke indices, HSNCIC, transfer entropy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic benchmark panel as CSV.
    Gen {
        #[command(subcommand)]
        system: GenSystem,
    },
    /// Run one causality test with a permutation significance level.
    Test(TestArgs),
    /// All-pairs p-value matrix over the panel columns.
    Matrix(MatrixArgs),
    /// Rolling-window p-value series for both directions of a pair.
    Scan(ScanArgs),
    /// Re-run a benchmark experiment end to end into a report directory.
    Reproduce(ReproduceArgs),
}

#[derive(Subcommand, Debug)]
pub enum GenSystem {
    /// Eight correlated series with known lagged dependence structure.
    LinearBench {
        #[arg(long, default_value_t = 250)]
        length: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: String,
    },
    /// Trivariate nonlinear chain x -> y -> z with squared coupling.
    NonlinearBench {
        #[arg(long, default_value_t = 500)]
        length: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0.2)]
        a: f64,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        #[arg(long, default_value_t = 0.8)]
        c: f64,
        #[arg(long, default_value_t = 0.8)]
        d: f64,
        #[arg(long, default_value_t = 0.7)]
        e: f64,
        #[arg(long, default_value_t = 1.0)]
        noise_std: f64,
        /// Output CSV path.
        #[arg(long)]
        out: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureId {
    /// Geweke log variance ratio, linear kernel.
    GewekeLinear,
    /// Geweke log variance ratio, Gaussian kernel.
    GewekeKernel,
    /// Hilbert-Schmidt normalized conditional independence criterion.
    Hsncic,
    /// Histogram transfer entropy (single lag).
    TransferEntropy,
    /// Histogram mutual information (lag 0).
    MutualInformation,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Options shared by every analysis command.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Input CSV panel.
    #[arg(long)]
    pub input: Option<String>,

    /// TOML config file supplying defaults for any option.
    #[arg(long)]
    pub config: Option<String>,

    /// Field delimiter of the input CSV.
    #[arg(long)]
    pub delimiter: Option<char>,

    /// Treat the first CSV column as an ordered label index.
    #[arg(long)]
    pub index_column: bool,

    /// Comma-separated preprocessing steps applied in order:
    /// log-returns, demean, detrend, difference.
    #[arg(long, value_delimiter = ',')]
    pub pre: Vec<String>,

    /// Which measure to evaluate.
    #[arg(long, value_enum)]
    pub measure: Option<MeasureId>,

    /// Comma-separated past lags (0 switches Geweke measures to the
    /// instantaneous variant and selects mutual information over
    /// transfer entropy).
    #[arg(long, value_delimiter = ',')]
    pub lags: Vec<usize>,

    /// Gaussian kernel width: a number, `median`, or `median-sq`.
    #[arg(long)]
    pub sigma: Option<String>,

    /// Ridge regulariser for the Geweke measures.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Operator regulariser for HSNCIC.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Bins per dimension for the histogram measures.
    #[arg(long)]
    pub bins: Option<usize>,

    /// Select gamma (and sigma for the Gaussian kernel) by randomized
    /// k-fold cross-validation on the full-model design before testing.
    #[arg(long)]
    pub cv: bool,

    /// Fold count for --cv.
    #[arg(long)]
    pub cv_folds: Option<usize>,

    /// Explicit gamma grid for --cv (comma-separated), otherwise the
    /// dyadic default 2^-40 ..= 2^-26.
    #[arg(long, value_delimiter = ',')]
    pub cv_gammas: Vec<f64>,

    /// Explicit sigma grid for --cv (comma-separated), otherwise the
    /// dyadic default 2^7 ..= 2^13.
    #[arg(long, value_delimiter = ',')]
    pub cv_sigmas: Vec<f64>,

    /// Include the side information's present value as well as its past.
    #[arg(long)]
    pub side_present: bool,

    /// Number of permutations for the significance test.
    #[arg(long)]
    pub permutations: Option<usize>,

    /// Master seed. Defaults to OS entropy outside `reproduce`.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output file path.
    #[arg(long)]
    pub out: Option<String>,

    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Target column (the effect candidate).
    #[arg(long)]
    pub target: Option<String>,

    /// Cause column(s), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub cause: Vec<String>,

    /// Side-information column(s), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub side: Vec<String>,

    /// Test instantaneous coupling (include the cause's present value).
    #[arg(long)]
    pub instantaneous: bool,
}

#[derive(Args, Debug)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Columns to include (defaults to every panel column).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Target column for the forward direction.
    #[arg(long)]
    pub target: Option<String>,

    /// Cause column for the forward direction.
    #[arg(long)]
    pub cause: Option<String>,

    /// Side-information column(s) for the conditional directions.
    #[arg(long, value_delimiter = ',')]
    pub side: Vec<String>,

    /// Window length in rows; omitted means one full-length window.
    #[arg(long)]
    pub window: Option<usize>,

    /// Offset between window starts.
    #[arg(long)]
    pub step: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// Which experiment: `linear-bench` or `nonlinear-bench`.
    pub experiment: String,

    /// Master seed (required: reproducibility is the point).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Report directory.
    #[arg(long)]
    pub out: String,

    /// Permutations per test.
    #[arg(long, default_value_t = 200)]
    pub permutations: usize,

    /// Series length (linear default 250, nonlinear default 500).
    #[arg(long)]
    pub length: Option<usize>,

    /// Realisation count for the nonlinear experiment.
    #[arg(long, default_value_t = 500)]
    pub realisations: usize,

    /// For linear-bench: `all` lag configurations, `singles` only, or a
    /// comma-separated subset such as `1,2,1-5`.
    #[arg(long, default_value = "all")]
    pub lag_sets: String,
}
