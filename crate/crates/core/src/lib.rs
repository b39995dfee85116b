//! Statistical (Granger-style) causality between time series.
//!
//! Four measures over a shared substrate of lagged designs and kernel
//! machinery:
//!
//! - **Linear Geweke index**: log variance ratio of nested autoregressions,
//!   computed through regularized ridge regression with a linear kernel.
//! - **Kernelised Geweke index**: the same comparison in a reproducing
//!   kernel Hilbert space via dual-form kernel ridge regression.
//! - **HSNCIC**: the Hilbert-Schmidt normalized conditional independence
//!   criterion, a kernel measure of conditional dependence.
//! - **Transfer entropy**: histogram plug-in information transfer, with
//!   mutual information for instantaneous coupling.
//!
//! Significance is assessed by permutation tests that reshuffle the
//! candidate cause, optionally over rolling windows. Hyperparameters come
//! from fixed choices, the median heuristic or randomized k-fold
//! cross-validation. Seeded generators reproduce the two synthetic
//! benchmark systems used to validate the measures.
//!
//! Everything is deterministic under a master seed, including parallel
//! execution.

pub mod embedding;
pub mod error;
pub mod geweke;
pub mod hsncic;
pub mod infotheory;
pub mod kernels;
pub mod krr;
pub mod modelselect;
pub mod panel;
pub mod seeding;
pub mod significance;
pub mod synthetic;

pub use embedding::{build_design, shift_column, LagDesign, LagSpec, ModelVariant};
pub use error::{CausalError, Result};
pub use geweke::{
    geweke_causality, geweke_instantaneous, GewekeIndex, DEFAULT_KERNEL_GAMMA,
    DEFAULT_LINEAR_GAMMA,
};
pub use hsncic::{
    hsic, hsncic, hsncic_causality, hsncic_unconditional, HsncicValue, KernelPolicy,
    OperatorRegularizer,
};
pub use infotheory::{
    entropy, histogram, mutual_information, transfer_entropy, HistogramSpec, JointHistogram,
    RangePolicy,
};
pub use kernels::{
    center, gram, kernel_eval, median_heuristic, median_heuristic_squared, GramMatrix,
    KernelKind, KernelSpec,
};
pub use krr::{fit, fitted_values, predict, residual_variance, RidgeFit};
pub use modelselect::{cross_validate, CvGrid, CvReport};
pub use panel::{CsvOptions, TimeSeriesPanel};
pub use significance::{
    measure_value, p_value_from, permutation_test, permutation_test_detailed, pvalue_matrix,
    rolling_scan, CausalityQuery, GewekeKernelChoice, MeasureResult, MeasureSpec,
    PermutationPlan, ResolvedConfig, SigmaPolicy, WindowPlan,
};
pub use synthetic::{
    generate_linear_benchmark, generate_nonlinear_benchmark, LagRelation, LinearBenchmarkSpec,
    NonlinearBenchmarkSpec,
};
