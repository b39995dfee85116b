//! Kernel functions, Gram matrices, centering and the median heuristic —
//! shared substrate for the kernelised Geweke measure and HSNCIC.
//!
//! The Gaussian kernel follows the `exp(-||x - y||^2 / sigma^2)` convention
//! (no factor 2 in the denominator). Cross-validation grids and the median
//! heuristic are sensitive to this choice, so it is fixed here once.

use nalgebra::DMatrix;

use crate::error::{CausalError, Result};

/// Kernel family. Linear is the plain dot product; Gaussian uses
/// `exp(-d^2 / sigma^2)` with `sigma > 0` in the units of the inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `k(a, b) = a . b`
    Linear,
    /// `k(a, b) = exp(-||a - b||^2 / sigma^2)`
    Gaussian { sigma: f64 },
}

/// Kernel family without parameters, for configuration surfaces that
/// resolve the width separately (cross-validation, median heuristic).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Gaussian,
}

impl KernelSpec {
    /// Gaussian kernel with validated width.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CausalError::InvalidParameter(format!(
                "gaussian kernel width must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self::Gaussian { sigma })
    }

    /// The family of this kernel.
    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Linear => KernelKind::Linear,
            KernelSpec::Gaussian { .. } => KernelKind::Gaussian,
        }
    }

    fn validate(&self) -> Result<()> {
        if let KernelSpec::Gaussian { sigma } = self {
            if !(*sigma > 0.0 && sigma.is_finite()) {
                return Err(CausalError::InvalidParameter(format!(
                    "gaussian kernel width must be positive and finite, got {sigma}"
                )));
            }
        }
        Ok(())
    }
}

/// Pairwise kernel evaluations over a set of rows.
///
/// Uncentered Gaussian Grams have a unit diagonal with every entry in
/// (0, 1]; centered Grams have row sums within numerical noise of zero.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    values: DMatrix<f64>,
    centered: bool,
}

impl GramMatrix {
    /// The symmetric matrix of kernel evaluations.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Whether the empirical mean embedding has been subtracted.
    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Number of rows (and columns).
    pub fn size(&self) -> usize {
        self.values.nrows()
    }
}

/// Evaluates the kernel on a pair of equal-dimension vectors.
pub fn kernel_eval(spec: KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.validate()?;
    if a.len() != b.len() {
        return Err(CausalError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(match spec {
        KernelSpec::Linear => dot(a, b),
        KernelSpec::Gaussian { sigma } => {
            let d2: f64 = a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = x - y;
                    d * d
                })
                .sum();
            (-d2 / (sigma * sigma)).exp()
        }
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds the Gram matrix over the rows of `rows`. Entries are computed
/// pair by pair, so output is identical under any parallel schedule.
pub fn gram(spec: KernelSpec, rows: &DMatrix<f64>) -> Result<GramMatrix> {
    spec.validate()?;
    let m = rows.nrows();
    if m == 0 {
        return Err(CausalError::InvalidParameter(
            "gram matrix requires at least one row".into(),
        ));
    }
    let mut values = DMatrix::zeros(m, m);
    for i in 0..m {
        let ri = rows.row(i);
        for j in i..m {
            let rj = rows.row(j);
            let k = match spec {
                KernelSpec::Linear => ri.dot(&rj),
                KernelSpec::Gaussian { sigma } => {
                    if i == j {
                        1.0
                    } else {
                        let d2 = (ri - rj).norm_squared();
                        (-d2 / (sigma * sigma)).exp()
                    }
                }
            };
            values[(i, j)] = k;
            values[(j, i)] = k;
        }
    }
    Ok(GramMatrix {
        values,
        centered: false,
    })
}

/// Centers a Gram matrix: `H K H` with `H = I - (1/m) 1 1^T`, computed as
/// `K_ij - r_i - r_j + g` from row means `r` and the grand mean `g`.
pub fn center(g: &GramMatrix) -> Result<GramMatrix> {
    if g.centered {
        return Err(CausalError::AlreadyCentered);
    }
    Ok(GramMatrix {
        values: center_values(&g.values),
        centered: true,
    })
}

pub(crate) fn center_values(k: &DMatrix<f64>) -> DMatrix<f64> {
    let m = k.nrows();
    let row_means: Vec<f64> = (0..m).map(|i| k.row(i).sum() / m as f64).collect();
    let grand = row_means.iter().sum::<f64>() / m as f64;
    DMatrix::from_fn(m, m, |i, j| k[(i, j)] - row_means[i] - row_means[j] + grand)
}

/// The median of the `m(m-1)/2` pairwise Euclidean distances between rows,
/// used as the Gaussian kernel width. Zero distances stay in the pool; an
/// even pool takes the average of the two central values.
pub fn median_heuristic(rows: &DMatrix<f64>) -> Result<f64> {
    median_distance(rows, false)
}

/// Alternative convention for sensitivity studies: the width is the square
/// root of the median of squared pairwise distances.
pub fn median_heuristic_squared(rows: &DMatrix<f64>) -> Result<f64> {
    median_distance(rows, true)
}

fn median_distance(rows: &DMatrix<f64>, squared: bool) -> Result<f64> {
    let m = rows.nrows();
    if m < 2 {
        return Err(CausalError::InvalidParameter(
            "median heuristic requires at least two rows".into(),
        ));
    }
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            let d2 = (rows.row(i) - rows.row(j)).norm_squared();
            dists.push(if squared { d2 } else { d2.sqrt() });
        }
    }
    dists.sort_unstable_by(f64::total_cmp);
    let n = dists.len();
    let median = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    let width = if squared { median.sqrt() } else { median };
    if width <= 0.0 {
        return Err(CausalError::AllPointsIdentical);
    }
    Ok(width)
}
