//! Permutation significance testing, rolling-window scans and pairwise
//! p-value matrices over any of the four causality measures.
//!
//! The null distribution is built by reshuffling the raw cause column(s)
//! before lag embedding, destroying time ordering while keeping the target
//! and side information intact. Hyperparameters (kernel widths, selected
//! regularisers) are resolved once per test on the observed data and held
//! fixed across surrogates. Every surrogate derives its permutation
//! deterministically from `(seed, j)`, so results are reproducible and
//! independent of evaluation order or thread count.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::{build_design, layout, LagSpec, SlotRole};
use crate::error::{CausalError, Result};
use crate::geweke::{index_from_variances, model_variance, variant_pair};
use crate::hsncic::{
    causality_blocks, lagged_block, shrinkage_operator, KernelPolicy, OperatorRegularizer,
};
use crate::infotheory::{mutual_information, te_from_joint, te_joint, HistogramSpec};
use crate::kernels::{
    center_values, gram, median_heuristic, median_heuristic_squared, KernelSpec,
};
use crate::panel::TimeSeriesPanel;
use crate::seeding::{child_seed, name_hash, rng_for, DOMAIN_PAIR, DOMAIN_PERMUTATION, DOMAIN_WINDOW};

/// Permutation count and master seed for one test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PermutationPlan {
    /// Number of surrogate evaluations, at least 1.
    pub n_r: usize,
    /// Master seed; permutation `j` derives from `(seed, j)`.
    pub seed: u64,
}

/// A measure value with its surrogate distribution and p-value.
///
/// `p_value` counts surrogates *strictly* greater than the observed value,
/// divided by the permutation count: ties count as non-exceedance, and 0
/// is attainable.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureResult {
    /// The measure evaluated on the original data.
    pub observed: f64,
    /// Measure values on the reshuffled surrogates, in permutation order.
    pub surrogates: Vec<f64>,
    /// Fraction of surrogates strictly exceeding the observed value.
    pub p_value: f64,
    /// The plan that produced this result.
    pub plan: PermutationPlan,
}

/// Rolling-window geometry.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowPlan {
    /// Rows per window.
    pub window_length: usize,
    /// Offset between consecutive window starts.
    pub step: usize,
}

/// How the Gaussian kernel width is chosen for Geweke measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaPolicy {
    /// A fixed width.
    Fixed(f64),
    /// Median pairwise distance of the full-model design rows.
    Median,
    /// Square root of the median squared pairwise distance.
    MedianSquared,
}

/// Kernel choice for Geweke measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GewekeKernelChoice {
    /// Linear kernel: the (regularized) linear Geweke measure.
    Linear,
    /// Gaussian kernel with the given width policy.
    Gaussian(SigmaPolicy),
}

/// Which measure a query evaluates, with its hyperparameters.
#[derive(Debug, Clone)]
pub enum MeasureSpec {
    /// Geweke log variance ratio via kernel ridge regression.
    Geweke {
        kernel: GewekeKernelChoice,
        gamma: f64,
        /// Instantaneous-coupling variant: the full model's cause block
        /// additionally includes the cause's present value.
        instantaneous: bool,
    },
    /// Hilbert-Schmidt normalized conditional independence criterion.
    Hsncic { lambda: f64, kernel: KernelPolicy },
    /// Histogram transfer entropy. Requires exactly one cause column, a
    /// single lag and no side information.
    TransferEntropy { hist: HistogramSpec },
    /// Histogram mutual information (the lag-0 instantaneous test).
    /// Requires exactly one cause column and no side information.
    MutualInformation { hist: HistogramSpec },
}

/// One causality test, declaratively.
#[derive(Debug, Clone)]
pub struct CausalityQuery {
    /// Column whose future is predicted.
    pub target: String,
    /// Candidate cause column(s).
    pub cause: Vec<String>,
    /// Side-information columns (conditioning set).
    pub side: Vec<String>,
    /// Past lags used for embedding.
    pub lags: LagSpec,
    /// Measure and hyperparameters.
    pub measure: MeasureSpec,
}

/// Hyperparameters as actually used after policy resolution, echoed into
/// output files so reruns are self-describing.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResolvedConfig {
    /// Ridge regulariser (Geweke measures).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Gaussian width of the design kernel (Geweke measures).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Operator regulariser (HSNCIC).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Gaussian width for the (XZ) block (HSNCIC).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_xz: Option<f64>,
    /// Gaussian width for the (YZ) block (HSNCIC).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_yz: Option<f64>,
    /// Gaussian width for the Z block (HSNCIC).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_z: Option<f64>,
    /// Bins per dimension (histogram measures).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins_per_dim: Option<usize>,
}

/// Eq.-style p-value: the fraction of surrogates strictly greater than the
/// observed value. Invariant under any strictly increasing transform
/// applied to observed and surrogates alike.
pub fn p_value_from(observed: f64, surrogates: &[f64]) -> f64 {
    if surrogates.is_empty() {
        return 0.0;
    }
    surrogates.iter().filter(|&&s| s > observed).count() as f64 / surrogates.len() as f64
}

/// A measure bound to one panel, with everything that does not depend on
/// the cause column precomputed. `evaluate` re-embeds a (possibly
/// shuffled) cause and returns the measure value.
enum Prepared {
    Geweke(PreparedGeweke),
    Hsncic(Box<PreparedHsncic>),
    TransferEntropy(PreparedTe),
    MutualInformation(PreparedMi),
}

struct PreparedGeweke {
    restricted_var: f64,
    variant_pair: (crate::embedding::ModelVariant, crate::embedding::ModelVariant),
    design_template: DMatrix<f64>,
    target: nalgebra::DVector<f64>,
    row_times: Vec<usize>,
    /// Design columns owned by the cause block: (column, cause index, lag).
    cause_slots: Vec<(usize, usize, usize)>,
    kernel: KernelSpec,
    gamma: f64,
}

struct PreparedHsncic {
    /// `A - 2 C A + C A C` for the fixed operators A = R_(XZ), C = R_Z.
    fixed_product: DMatrix<f64>,
    z_block: DMatrix<f64>,
    row_times: Vec<usize>,
    lags: Vec<usize>,
    yz_kernel: KernelSpec,
    lambda: f64,
}

struct PreparedTe {
    x: Vec<f64>,
    lag: usize,
    hist: HistogramSpec,
}

struct PreparedMi {
    u: Vec<f64>,
    hist: HistogramSpec,
}

impl Prepared {
    fn evaluate(&self, cause_cols: &[Vec<f64>]) -> Result<f64> {
        match self {
            Prepared::Geweke(p) => p.evaluate(cause_cols),
            Prepared::Hsncic(p) => p.evaluate(cause_cols),
            Prepared::TransferEntropy(p) => {
                te_joint(&p.x, &cause_cols[0], p.lag, &p.hist).map(|j| te_from_joint(&j))
            }
            Prepared::MutualInformation(p) => mutual_information(&p.u, &cause_cols[0], &p.hist),
        }
    }
}

impl PreparedGeweke {
    fn evaluate(&self, cause_cols: &[Vec<f64>]) -> Result<f64> {
        let mut design = self.design_template.clone();
        for &(col, cause_idx, lag) in &self.cause_slots {
            let series = &cause_cols[cause_idx];
            for (i, &t) in self.row_times.iter().enumerate() {
                design[(i, col)] = series[t - lag];
            }
        }
        let full_var = model_variance(&design, &self.target, self.kernel, self.gamma)?;
        Ok(index_from_variances(self.restricted_var, full_var, self.variant_pair)?.value)
    }
}

impl PreparedHsncic {
    fn evaluate(&self, cause_cols: &[Vec<f64>]) -> Result<f64> {
        let series: Vec<&[f64]> = cause_cols.iter().map(Vec::as_slice).collect();
        let y = lagged_block(&series, &self.lags, &self.row_times);
        let n = y.nrows();
        let mut yz = DMatrix::zeros(n, y.ncols() + self.z_block.ncols());
        yz.view_mut((0, 0), (n, y.ncols())).copy_from(&y);
        yz.view_mut((0, y.ncols()), (n, self.z_block.ncols()))
            .copy_from(&self.z_block);
        let k_yz = center_values(gram(self.yz_kernel, &yz)?.values());
        let r_yz = shrinkage_operator(&k_yz, self.lambda)?;
        Ok(self.fixed_product.dot(&r_yz))
    }
}

fn resolve_sigma(policy: SigmaPolicy, rows: &DMatrix<f64>) -> Result<f64> {
    match policy {
        SigmaPolicy::Fixed(sigma) => {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(CausalError::InvalidParameter(format!(
                    "kernel width must be positive and finite, got {sigma}"
                )));
            }
            Ok(sigma)
        }
        SigmaPolicy::Median => median_heuristic(rows),
        SigmaPolicy::MedianSquared => median_heuristic_squared(rows),
    }
}

fn single_cause_name(query: &CausalityQuery, measure: &str) -> Result<()> {
    if query.cause.len() != 1 {
        return Err(CausalError::InvalidParameter(format!(
            "{measure} requires exactly one cause column"
        )));
    }
    if !query.side.is_empty() {
        return Err(CausalError::InvalidParameter(format!(
            "{measure} does not support side information"
        )));
    }
    Ok(())
}

fn prepare(query: &CausalityQuery, panel: &TimeSeriesPanel) -> Result<(Prepared, ResolvedConfig)> {
    let cause: Vec<&str> = query.cause.iter().map(String::as_str).collect();
    let side: Vec<&str> = query.side.iter().map(String::as_str).collect();
    let mut resolved = ResolvedConfig::default();

    match &query.measure {
        MeasureSpec::Geweke {
            kernel,
            gamma,
            instantaneous,
        } => {
            if cause.is_empty() {
                return Err(CausalError::EmptyVariantGroup { group: "cause" });
            }
            let spec = if *instantaneous {
                query.lags.clone().with_present_y()
            } else {
                query.lags.clone()
            };
            let (restricted_variant, full_variant) = variant_pair(&side);
            let restricted =
                build_design(panel, &query.target, &cause, &side, &spec, restricted_variant)?;
            let full = build_design(panel, &query.target, &cause, &side, &spec, full_variant)?;

            let kernel_spec = match kernel {
                GewekeKernelChoice::Linear => KernelSpec::Linear,
                GewekeKernelChoice::Gaussian(policy) => {
                    let sigma = resolve_sigma(*policy, &full.design)?;
                    resolved.sigma = Some(sigma);
                    KernelSpec::Gaussian { sigma }
                }
            };
            resolved.gamma = Some(*gamma);

            let restricted_var =
                model_variance(&restricted.design, &restricted.target, kernel_spec, *gamma)?;
            let slots = layout(&spec, full_variant, cause.len(), side.len());
            let cause_slots = slots
                .iter()
                .enumerate()
                .filter(|(_, s)| s.role == SlotRole::Cause)
                .map(|(col, s)| (col, s.group_idx, s.lag))
                .collect();
            Ok((
                Prepared::Geweke(PreparedGeweke {
                    restricted_var,
                    variant_pair: (restricted_variant, full_variant),
                    design_template: full.design,
                    target: full.target,
                    row_times: full.row_times,
                    cause_slots,
                    kernel: kernel_spec,
                    gamma: *gamma,
                }),
                resolved,
            ))
        }
        MeasureSpec::Hsncic { lambda, kernel } => {
            OperatorRegularizer::new(*lambda)?;
            let blocks = causality_blocks(panel, &query.target, &cause, &side, &query.lags)?;
            let n = blocks.x.nrows();
            if n < 2 {
                return Err(CausalError::InvalidParameter(
                    "hsncic requires at least two samples".into(),
                ));
            }
            // Resolve per-block kernels on the observed extended rows and
            // keep them fixed across surrogates.
            let hstack = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
                let mut out = DMatrix::zeros(n, a.ncols() + b.ncols());
                out.view_mut((0, 0), (n, a.ncols())).copy_from(a);
                out.view_mut((0, a.ncols()), (n, b.ncols())).copy_from(b);
                out
            };
            let xz = hstack(&blocks.x, &blocks.z);
            let yz = hstack(&blocks.y, &blocks.z);
            let resolve = |rows: &DMatrix<f64>| -> Result<(KernelSpec, Option<f64>)> {
                match kernel {
                    KernelPolicy::MedianGaussian => {
                        let s = median_heuristic(rows)?;
                        Ok((KernelSpec::Gaussian { sigma: s }, Some(s)))
                    }
                    KernelPolicy::Fixed(spec) => Ok((
                        *spec,
                        match spec {
                            KernelSpec::Gaussian { sigma } => Some(*sigma),
                            KernelSpec::Linear => None,
                        },
                    )),
                }
            };
            let (k_xz_spec, s_xz) = resolve(&xz)?;
            let (k_yz_spec, s_yz) = resolve(&yz)?;
            let (k_z_spec, s_z) = resolve(&blocks.z)?;
            resolved.lambda = Some(*lambda);
            resolved.sigma_xz = s_xz;
            resolved.sigma_yz = s_yz;
            resolved.sigma_z = s_z;

            let r_xz = shrinkage_operator(&center_values(gram(k_xz_spec, &xz)?.values()), *lambda)?;
            let r_z =
                shrinkage_operator(&center_values(gram(k_z_spec, &blocks.z)?.values()), *lambda)?;
            // A - 2 C A + C A C, so each surrogate only pays for R_(YZ).
            let ca = &r_z * &r_xz;
            let cac = &ca * &r_z;
            let fixed_product = r_xz - 2.0 * ca + cac;

            Ok((
                Prepared::Hsncic(Box::new(PreparedHsncic {
                    fixed_product,
                    z_block: blocks.z,
                    row_times: blocks.row_times,
                    lags: query.lags.lags().to_vec(),
                    yz_kernel: k_yz_spec,
                    lambda: *lambda,
                })),
                resolved,
            ))
        }
        MeasureSpec::TransferEntropy { hist } => {
            single_cause_name(query, "transfer entropy")?;
            if query.lags.lags().len() != 1 {
                return Err(CausalError::InvalidParameter(
                    "transfer entropy analyses one lag at a time".into(),
                ));
            }
            resolved.bins_per_dim = Some(hist.bins_per_dim);
            Ok((
                Prepared::TransferEntropy(PreparedTe {
                    x: panel.column(&query.target)?.to_vec(),
                    lag: query.lags.lags()[0],
                    hist: hist.clone(),
                }),
                resolved,
            ))
        }
        MeasureSpec::MutualInformation { hist } => {
            single_cause_name(query, "mutual information")?;
            resolved.bins_per_dim = Some(hist.bins_per_dim);
            Ok((
                Prepared::MutualInformation(PreparedMi {
                    u: panel.column(&query.target)?.to_vec(),
                    hist: hist.clone(),
                }),
                resolved,
            ))
        }
    }
}

/// Evaluates the measure once on the panel, without permutations.
pub fn measure_value(query: &CausalityQuery, panel: &TimeSeriesPanel) -> Result<(f64, ResolvedConfig)> {
    let (prepared, resolved) = prepare(query, panel)?;
    let cause_cols: Vec<Vec<f64>> = query
        .cause
        .iter()
        .map(|c| panel.column(c).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;
    Ok((prepared.evaluate(&cause_cols)?, resolved))
}

/// Runs a permutation test: the observed measure plus `n_r` surrogate
/// evaluations on reshuffled cause columns. A failed surrogate evaluation
/// aborts the test; nothing is skipped silently.
pub fn permutation_test(
    query: &CausalityQuery,
    panel: &TimeSeriesPanel,
    plan: &PermutationPlan,
) -> Result<MeasureResult> {
    permutation_test_detailed(query, panel, plan).map(|(result, _)| result)
}

/// [`permutation_test`] plus the resolved hyperparameters.
pub fn permutation_test_detailed(
    query: &CausalityQuery,
    panel: &TimeSeriesPanel,
    plan: &PermutationPlan,
) -> Result<(MeasureResult, ResolvedConfig)> {
    if plan.n_r == 0 {
        return Err(CausalError::InvalidParameter(
            "permutation count must be at least 1".into(),
        ));
    }
    let (prepared, resolved) = prepare(query, panel)?;
    let cause_cols: Vec<Vec<f64>> = query
        .cause
        .iter()
        .map(|c| panel.column(c).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;
    let observed = prepared.evaluate(&cause_cols)?;

    let n = panel.len();
    let surrogates: Vec<f64> = (1..=plan.n_r as u64)
        .into_par_iter()
        .map(|j| {
            // The raw cause columns are reshuffled jointly, before lag
            // embedding, with a permutation derived from (seed, j).
            let mut rng = rng_for(plan.seed, DOMAIN_PERMUTATION, j);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let shuffled: Vec<Vec<f64>> = cause_cols
                .iter()
                .map(|col| perm.iter().map(|&i| col[i]).collect())
                .collect();
            prepared.evaluate(&shuffled)
        })
        .collect::<Result<_>>()?;

    let p_value = p_value_from(observed, &surrogates);
    Ok((
        MeasureResult {
            observed,
            surrogates,
            p_value,
            plan: *plan,
        },
        resolved,
    ))
}

/// Runs an independent permutation test on each rolling window. Window `w`
/// starts at `w * step` and uses the sub-seed derived from
/// `(master seed, w)`. Returns `(window_start, result)` pairs.
pub fn rolling_scan(
    query: &CausalityQuery,
    panel: &TimeSeriesPanel,
    wplan: &WindowPlan,
    pplan: &PermutationPlan,
) -> Result<Vec<(usize, MeasureResult)>> {
    if wplan.window_length == 0 || wplan.step == 0 {
        return Err(CausalError::InvalidParameter(
            "window length and step must be at least 1".into(),
        ));
    }
    if wplan.window_length > panel.len() {
        return Err(CausalError::WindowTooLong {
            window: wplan.window_length,
            length: panel.len(),
        });
    }
    let starts: Vec<usize> = (0..)
        .map(|w| w * wplan.step)
        .take_while(|start| start + wplan.window_length <= panel.len())
        .collect();
    starts
        .into_iter()
        .enumerate()
        .map(|(w, start)| {
            let slice = panel.window(start, wplan.window_length)?;
            let sub_plan = PermutationPlan {
                n_r: pplan.n_r,
                seed: child_seed(pplan.seed, DOMAIN_WINDOW, w as u64),
            };
            permutation_test(query, &slice, &sub_plan).map(|r| (start, r))
        })
        .collect()
}

/// Pairwise p-value matrix: entry `(i, j)` tests "column `j` causes column
/// `i`" (the column variable causes the row variable). The diagonal is
/// `NaN`. Pair seeds are keyed by column names, so reordering `columns`
/// permutes the matrix without changing any entry.
pub fn pvalue_matrix(
    panel: &TimeSeriesPanel,
    columns: &[&str],
    lags: &LagSpec,
    measure: &MeasureSpec,
    plan: &PermutationPlan,
) -> Result<DMatrix<f64>> {
    let k = columns.len();
    if k < 2 {
        return Err(CausalError::InvalidParameter(
            "p-value matrix requires at least two columns".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let entries: Vec<((usize, usize), f64)> = pairs
        .into_par_iter()
        .map(|(i, j)| {
            let query = CausalityQuery {
                target: columns[i].to_string(),
                cause: vec![columns[j].to_string()],
                side: Vec::new(),
                lags: lags.clone(),
                measure: measure.clone(),
            };
            let pair_seed = child_seed(
                plan.seed,
                DOMAIN_PAIR,
                name_hash(&[columns[j], columns[i]]),
            );
            let sub_plan = PermutationPlan {
                n_r: plan.n_r,
                seed: pair_seed,
            };
            permutation_test(&query, panel, &sub_plan).map(|r| ((i, j), r.p_value))
        })
        .collect::<Result<_>>()?;

    let mut matrix = DMatrix::from_element(k, k, f64::NAN);
    for ((i, j), p) in entries {
        matrix[(i, j)] = p;
    }
    Ok(matrix)
}
