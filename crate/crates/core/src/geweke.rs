//! Linear and kernelised Geweke causality indices, computed as log ratios
//! of in-sample residual variances of nested kernel-ridge models.
//!
//! The restricted model regresses the target on its own past (plus side
//! information when given); the full model adds the candidate cause. Both
//! models share the same rows, kernel and regulariser, so the ratio
//! isolates the cause's contribution. The linear Geweke measure is the
//! same computation with the linear kernel and a small fixed regulariser;
//! the effect of that regularisation is negligible.

use crate::embedding::{build_design, LagSpec, ModelVariant};
use crate::error::{CausalError, Result};
use crate::kernels::{gram, KernelSpec};
use crate::krr;
use crate::panel::TimeSeriesPanel;

/// Default regulariser for the linear Geweke measure.
pub const DEFAULT_LINEAR_GAMMA: f64 = 1e-8;

/// Default regulariser for the kernelised (Gaussian) Geweke measure. Large
/// enough that a conditional index on an already-explained cause stays
/// near zero instead of rewarding in-sample overfit.
pub const DEFAULT_KERNEL_GAMMA: f64 = 1e-3;

/// Residual variance below this threshold means the full model
/// interpolates and the ratio is meaningless.
const DEGENERATE_VARIANCE: f64 = 1e-15;

/// A Geweke causality (or instantaneous-coupling) index in nats.
///
/// `value = ln(restricted_var / full_var)`; positive values indicate that
/// the cause improves prediction. Values are reported as-is, never
/// clamped: significance comes from the permutation test, not the sign.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GewekeIndex {
    /// Log variance ratio.
    pub value: f64,
    /// Residual variance of the restricted model.
    pub restricted_var: f64,
    /// Residual variance of the full model.
    pub full_var: f64,
    /// The nested `(restricted, full)` variant pair that was compared.
    #[serde(skip)]
    pub variant_pair: (ModelVariant, ModelVariant),
}

/// `G_{Y -> X || Z}`: does the cause's past improve prediction of the
/// target beyond the target's own past and the side information's past?
pub fn geweke_causality(
    panel: &TimeSeriesPanel,
    target: &str,
    cause: &[&str],
    side: &[&str],
    spec: &LagSpec,
    kernel: KernelSpec,
    gamma: f64,
) -> Result<GewekeIndex> {
    compute(panel, target, cause, side, spec.clone(), kernel, gamma)
}

/// `G_{Y . X || Z}`: instantaneous coupling. The full model's cause block
/// uses the cause's present value as well as its past.
pub fn geweke_instantaneous(
    panel: &TimeSeriesPanel,
    target: &str,
    cause: &[&str],
    side: &[&str],
    spec: &LagSpec,
    kernel: KernelSpec,
    gamma: f64,
) -> Result<GewekeIndex> {
    let spec = spec.clone().with_present_y();
    compute(panel, target, cause, side, spec, kernel, gamma)
}

fn compute(
    panel: &TimeSeriesPanel,
    target: &str,
    cause: &[&str],
    side: &[&str],
    spec: LagSpec,
    kernel: KernelSpec,
    gamma: f64,
) -> Result<GewekeIndex> {
    if cause.is_empty() {
        return Err(CausalError::EmptyVariantGroup { group: "cause" });
    }
    let (restricted_variant, full_variant) = variant_pair(side);

    let restricted_design = build_design(panel, target, cause, side, &spec, restricted_variant)?;
    let full_design = build_design(panel, target, cause, side, &spec, full_variant)?;

    let restricted_var = model_variance(&restricted_design.design, &restricted_design.target, kernel, gamma)?;
    let full_var = model_variance(&full_design.design, &full_design.target, kernel, gamma)?;
    index_from_variances(restricted_var, full_var, (restricted_variant, full_variant))
}

/// The nested variant pair for a query with or without side information.
pub(crate) fn variant_pair(side: &[&str]) -> (ModelVariant, ModelVariant) {
    if side.is_empty() {
        (ModelVariant::XOnly, ModelVariant::XAndY)
    } else {
        (ModelVariant::XAndZ, ModelVariant::XYAndZ)
    }
}

pub(crate) fn model_variance(
    design: &nalgebra::DMatrix<f64>,
    target: &nalgebra::DVector<f64>,
    kernel: KernelSpec,
    gamma: f64,
) -> Result<f64> {
    let g = gram(kernel, design)?;
    let fit = krr::fit(&g, target, gamma)?;
    Ok(krr::residual_variance(&fit))
}

pub(crate) fn index_from_variances(
    restricted_var: f64,
    full_var: f64,
    variant_pair: (ModelVariant, ModelVariant),
) -> Result<GewekeIndex> {
    if full_var <= DEGENERATE_VARIANCE {
        return Err(CausalError::DegenerateVariance { variance: full_var });
    }
    Ok(GewekeIndex {
        value: (restricted_var / full_var).ln(),
        restricted_var,
        full_var,
        variant_pair,
    })
}
