//! Lagged design matrices and target vectors for the nested model variants
//! compared by the Geweke-style measures.
//!
//! A design row collects the selected series at the selected lags relative
//! to the target sample time. The column layout is canonical and fixed:
//! lag-major (present values first when enabled, then lags ascending), and
//! within each lag the target's own past, then cause columns, then side
//! columns. Kernel evaluations only see the row through its norm and inner
//! products, but a canonical layout keeps results reproducible.

use nalgebra::{DMatrix, DVector};

use crate::error::{CausalError, Result};
use crate::panel::TimeSeriesPanel;

/// The set of past lags used for embedding, plus the instantaneous flags.
///
/// `include_present_y` adds the cause at lag 0 (the `Y_t` of instantaneous
/// coupling); `include_present_z` conditions on the side information's
/// present value as well as its past, which some authors recommend.
/// Arbitrary lag sets are first class; contiguous ranges are a special case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagSpec {
    lags: Vec<usize>,
    include_present_y: bool,
    include_present_z: bool,
}

impl LagSpec {
    /// A lag set of past lags, sorted internally. Lags must be positive
    /// and distinct, and the set must be non-empty.
    pub fn new(lags: impl Into<Vec<usize>>) -> Result<Self> {
        let mut lags = lags.into();
        if lags.is_empty() {
            return Err(CausalError::InvalidParameter(
                "lag set must be non-empty".into(),
            ));
        }
        lags.sort_unstable();
        if lags[0] == 0 {
            return Err(CausalError::InvalidParameter(
                "lags must be >= 1; instantaneous coupling is a separate flag".into(),
            ));
        }
        if lags.windows(2).any(|w| w[0] == w[1]) {
            return Err(CausalError::InvalidParameter(
                "duplicate lag in lag set".into(),
            ));
        }
        Ok(Self {
            lags,
            include_present_y: false,
            include_present_z: false,
        })
    }

    /// The contiguous range `1..=p`.
    pub fn contiguous(p: usize) -> Result<Self> {
        Self::new((1..=p).collect::<Vec<_>>())
    }

    /// Adds the cause's present value (`Y_t`) to the cause block.
    pub fn with_present_y(mut self) -> Self {
        self.include_present_y = true;
        self
    }

    /// Adds the side information's present value (`Z_t`) to the side block.
    pub fn with_present_z(mut self) -> Self {
        self.include_present_z = true;
        self
    }

    /// Past lags, ascending.
    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    /// Whether the cause block includes lag 0.
    pub fn include_present_y(&self) -> bool {
        self.include_present_y
    }

    /// Whether the side block includes lag 0.
    pub fn include_present_z(&self) -> bool {
        self.include_present_z
    }

    /// The deepest past lag. Present-value flags do not contribute.
    pub fn max_lag(&self) -> usize {
        *self.lags.last().expect("lag set is non-empty")
    }
}

/// Which series enter the regressor set. The target's own past is always
/// included; the four variants toggle the cause and side blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVariant {
    /// Own past only.
    XOnly,
    /// Own past plus the cause block.
    XAndY,
    /// Own past plus the side block.
    XAndZ,
    /// Own past plus both cause and side blocks.
    XYAndZ,
}

impl ModelVariant {
    fn uses_cause(self) -> bool {
        matches!(self, ModelVariant::XAndY | ModelVariant::XYAndZ)
    }

    fn uses_side(self) -> bool {
        matches!(self, ModelVariant::XAndZ | ModelVariant::XYAndZ)
    }
}

/// Which series a design column is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SlotRole {
    TargetPast,
    Cause,
    Side,
}

/// One design-matrix column: a series (by role and position within its
/// group) at a fixed lag.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Slot {
    pub role: SlotRole,
    pub group_idx: usize,
    pub lag: usize,
}

/// Canonical column layout for a design under `spec` and `variant`.
pub(crate) fn layout(
    spec: &LagSpec,
    variant: ModelVariant,
    n_cause: usize,
    n_side: usize,
) -> Vec<Slot> {
    let mut slots = Vec::new();
    let push_lag = |lag: usize, slots: &mut Vec<Slot>| {
        if lag >= 1 {
            slots.push(Slot {
                role: SlotRole::TargetPast,
                group_idx: 0,
                lag,
            });
        }
        if variant.uses_cause() && (lag >= 1 || spec.include_present_y()) {
            for g in 0..n_cause {
                slots.push(Slot {
                    role: SlotRole::Cause,
                    group_idx: g,
                    lag,
                });
            }
        }
        if variant.uses_side() && (lag >= 1 || spec.include_present_z()) {
            for g in 0..n_side {
                slots.push(Slot {
                    role: SlotRole::Side,
                    group_idx: g,
                    lag,
                });
            }
        }
    };
    let wants_present = (spec.include_present_y() && variant.uses_cause())
        || (spec.include_present_z() && variant.uses_side());
    if wants_present {
        push_lag(0, &mut slots);
    }
    for &lag in spec.lags() {
        push_lag(lag, &mut slots);
    }
    slots
}

/// A target vector and its matrix of lagged regressor rows.
#[derive(Debug, Clone)]
pub struct LagDesign {
    /// Target samples, one per design row.
    pub target: DVector<f64>,
    /// Regressor rows, `m x d`.
    pub design: DMatrix<f64>,
    /// Original panel row of each target sample.
    pub row_times: Vec<usize>,
}

impl LagDesign {
    /// Number of samples.
    pub fn num_rows(&self) -> usize {
        self.design.nrows()
    }

    /// Regressor dimension.
    pub fn num_regressors(&self) -> usize {
        self.design.ncols()
    }
}

/// Builds the design for one model variant. All variants built from the
/// same `spec` share the same rows (the maximal lag decides how many rows
/// are dropped), so nested variance ratios compare like-for-like samples.
pub fn build_design(
    panel: &TimeSeriesPanel,
    target_col: &str,
    y_cols: &[&str],
    z_cols: &[&str],
    spec: &LagSpec,
    variant: ModelVariant,
) -> Result<LagDesign> {
    if variant.uses_cause() && y_cols.is_empty() {
        return Err(CausalError::EmptyVariantGroup { group: "cause" });
    }
    if variant.uses_side() && z_cols.is_empty() {
        return Err(CausalError::EmptyVariantGroup { group: "side" });
    }
    let target = panel.column(target_col)?;
    let cause: Vec<&[f64]> = y_cols
        .iter()
        .map(|c| panel.column(c))
        .collect::<Result<_>>()?;
    let side: Vec<&[f64]> = z_cols
        .iter()
        .map(|c| panel.column(c))
        .collect::<Result<_>>()?;

    let n = panel.len();
    let p_max = spec.max_lag();
    if n <= p_max {
        return Err(CausalError::InsufficientLength {
            max_lag: p_max,
            actual: n,
        });
    }
    let m = n - p_max;
    let slots = layout(spec, variant, cause.len(), side.len());

    let mut design = DMatrix::zeros(m, slots.len());
    let mut target_vec = DVector::zeros(m);
    let mut row_times = Vec::with_capacity(m);
    for i in 0..m {
        let t = p_max + i;
        row_times.push(t);
        target_vec[i] = target[t];
        for (j, slot) in slots.iter().enumerate() {
            let series = match slot.role {
                SlotRole::TargetPast => target,
                SlotRole::Cause => cause[slot.group_idx],
                SlotRole::Side => side[slot.group_idx],
            };
            design[(i, j)] = series[t - slot.lag];
        }
    }
    Ok(LagDesign {
        target: target_vec,
        design,
        row_times,
    })
}

/// Positional shift used by the synthetic benchmark generator.
///
/// For `k >= 0` the last `k` values are dropped, so that pairing the
/// result's element `t` with another series' element `t + k` realizes
/// `corr(y_t, x_{t-k})`: the shifted series leads by `k` steps. For
/// `k < 0` the first `|k|` values are dropped, the complementary
/// convention.
pub fn shift_column(series: &[f64], k: isize) -> Result<Vec<f64>> {
    let len = series.len();
    if k.unsigned_abs() >= len {
        return Err(CausalError::ShiftTooLarge { shift: k, length: len });
    }
    if k >= 0 {
        Ok(series[..len - k as usize].to_vec())
    } else {
        Ok(series[k.unsigned_abs()..].to_vec())
    }
}
