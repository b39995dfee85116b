//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CausalError>;

/// Errors produced by panel ingestion, embedding, estimation and testing.
#[derive(Debug, Error)]
pub enum CausalError {
    /// The input file does not exist or cannot be opened.
    #[error("file not found: {path}")]
    FileNotFound { path: String },

    /// A cell could not be parsed as a finite real number. `row` is the
    /// 0-based data row index (the header row is not counted).
    #[error("cannot parse cell at data row {row}, column '{column}'")]
    ParseError { row: usize, column: String },

    /// Two columns in the header share the same name.
    #[error("duplicate column name '{name}'")]
    DuplicateColumnName { name: String },

    /// The file contains a header but no data rows.
    #[error("file contains no data rows")]
    EmptyFile,

    /// Logarithmic returns require strictly positive values.
    #[error("non-positive value {value} in column '{column}' at row {row}")]
    NonPositiveValue {
        column: String,
        row: usize,
        value: f64,
    },

    /// The panel has too few rows for the requested transform.
    #[error("panel too short: need at least {required} rows, have {actual}")]
    LengthTooShort { required: usize, actual: usize },

    /// Window slice exceeds the panel bounds.
    #[error("window [{start}, {start}+{length}) out of range for panel of length {panel_length}")]
    OutOfRange {
        start: usize,
        length: usize,
        panel_length: usize,
    },

    /// A named column does not exist in the panel.
    #[error("unknown column '{name}'")]
    UnknownColumn { name: String },

    /// The series is too short for the requested lag structure.
    #[error("series too short for lag structure: need more than {max_lag} rows, have {actual}")]
    InsufficientLength { max_lag: usize, actual: usize },

    /// The model variant requires a column group that was left empty.
    #[error("model variant requires a non-empty {group} column group")]
    EmptyVariantGroup { group: &'static str },

    /// A positional shift at least as long as the series itself.
    #[error("shift of {shift} out of range for series of length {length}")]
    ShiftTooLarge { shift: isize, length: usize },

    /// Two objects that must agree in dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Centering was requested on an already-centered Gram matrix.
    #[error("Gram matrix is already centered")]
    AlreadyCentered,

    /// All rows coincide, so the median pairwise distance would be zero,
    /// which is not a valid kernel width.
    #[error("all rows identical: median pairwise distance is zero")]
    AllPointsIdentical,

    /// The regularized system could not be factorized; the regulariser is
    /// too small for the data scale.
    #[error("symmetric positive-definite solve failed (regulariser too small for data scale?)")]
    SolveFailure,

    /// The full model interpolates the target; the variance ratio is
    /// undefined. Signals that the regulariser is too small.
    #[error("full-model residual variance {variance:e} is numerically zero")]
    DegenerateVariance { variance: f64 },

    /// Paired sequences differ in length.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// The requested lag leaves no usable samples.
    #[error("lag {lag} too large for series of length {length}")]
    LagTooLarge { lag: usize, length: usize },

    /// A sample falls outside an explicitly given histogram range.
    #[error("sample {value} outside explicit range [{lo}, {hi}] in dimension {dim}")]
    ExplicitRangeExcludesSample {
        value: f64,
        lo: f64,
        hi: f64,
        dim: usize,
    },

    /// Fewer rows than cross-validation folds.
    #[error("{rows} rows cannot be split into {folds} cross-validation folds")]
    TooFewRows { rows: usize, folds: usize },

    /// Rolling window longer than the panel.
    #[error("window length {window} exceeds panel length {length}")]
    WindowTooLong { window: usize, length: usize },

    /// The requested correlation matrix admits no real square root.
    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,

    /// Catch-all for arguments that violate a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An I/O failure other than a missing file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for CausalError {
    fn from(e: csv::Error) -> Self {
        CausalError::Io(std::io::Error::other(e))
    }
}
