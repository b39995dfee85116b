//! Plug-in (naive histogram) estimators for Shannon entropy, mutual
//! information and bivariate transfer entropy. All quantities are in nats.
//!
//! Every decomposition is computed from one joint histogram and its
//! marginalizations, never from separately binned data, which makes the
//! plug-in conditional mutual information exactly nonnegative.

use nalgebra::DMatrix;

use crate::error::{CausalError, Result};

/// Binning scheme for the naive histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    /// Bins per dimension, at least 2.
    pub bins_per_dim: usize,
    /// How the bin ranges are chosen.
    pub range_policy: RangePolicy,
}

/// Range selection for histogram bins.
#[derive(Debug, Clone, PartialEq)]
pub enum RangePolicy {
    /// Equal-width bins spanning each dimension's sample min and max.
    SampleMinMax,
    /// Explicit `(lo, hi)` per dimension; samples outside are an error.
    Explicit(Vec<(f64, f64)>),
}

impl HistogramSpec {
    /// Equal-width bins over the sample range.
    pub fn sample_min_max(bins_per_dim: usize) -> Result<Self> {
        if bins_per_dim < 2 {
            return Err(CausalError::InvalidParameter(
                "histogram needs at least 2 bins per dimension".into(),
            ));
        }
        Ok(Self {
            bins_per_dim,
            range_policy: RangePolicy::SampleMinMax,
        })
    }
}

impl Default for HistogramSpec {
    /// Four bins per dimension: with series of a few hundred samples a
    /// three-dimensional joint still keeps a workable count per cell.
    fn default() -> Self {
        Self {
            bins_per_dim: 4,
            range_policy: RangePolicy::SampleMinMax,
        }
    }
}

/// A d-dimensional joint count array.
#[derive(Debug, Clone)]
pub struct JointHistogram {
    /// Bins per dimension.
    dims: Vec<usize>,
    /// Flattened counts, row-major over `dims`.
    counts: Vec<u64>,
    /// Total number of samples.
    total: u64,
}

impl JointHistogram {
    /// Bins per dimension.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Flattened counts, row-major.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total sample count.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sums the joint counts over all axes not listed in `keep`,
    /// preserving the order of the kept axes (which must be ascending).
    pub fn marginalize(&self, keep: &[usize]) -> JointHistogram {
        assert!(keep.windows(2).all(|w| w[0] < w[1]), "keep axes ascending");
        let new_dims: Vec<usize> = keep.iter().map(|&a| self.dims[a]).collect();
        let mut counts = vec![0u64; new_dims.iter().product::<usize>().max(1)];
        for (flat, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let full = self.unflatten(flat);
            let mut idx = 0;
            for (pos, &axis) in keep.iter().enumerate() {
                idx = idx * new_dims[pos].max(1) + full[axis];
            }
            counts[idx] += c;
        }
        JointHistogram {
            dims: new_dims,
            counts,
            total: self.total,
        }
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dims.len()];
        for (axis, &d) in self.dims.iter().enumerate().rev() {
            idx[axis] = flat % d;
            flat /= d;
        }
        idx
    }
}

/// Bins `n x d` samples into a d-dimensional joint histogram. Bins are
/// equal width per dimension; the right edge is inclusive in the last bin;
/// a degenerate dimension (max equals min) collapses to one occupied bin.
pub fn histogram(samples: &DMatrix<f64>, spec: &HistogramSpec) -> Result<JointHistogram> {
    let (n, d) = samples.shape();
    if n == 0 || d == 0 {
        return Err(CausalError::InvalidParameter(
            "histogram requires at least one sample and one dimension".into(),
        ));
    }
    if spec.bins_per_dim < 2 {
        return Err(CausalError::InvalidParameter(
            "histogram needs at least 2 bins per dimension".into(),
        ));
    }
    let bins = spec.bins_per_dim;
    let ranges: Vec<(f64, f64)> = match &spec.range_policy {
        RangePolicy::SampleMinMax => (0..d)
            .map(|j| {
                let col = samples.column(j);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect(),
        RangePolicy::Explicit(ranges) => {
            if ranges.len() != d {
                return Err(CausalError::DimensionMismatch {
                    left: ranges.len(),
                    right: d,
                });
            }
            ranges.clone()
        }
    };

    let mut counts = vec![0u64; bins.pow(d as u32)];
    for i in 0..n {
        let mut flat = 0usize;
        for j in 0..d {
            let v = samples[(i, j)];
            let (lo, hi) = ranges[j];
            if v < lo || v > hi {
                return Err(CausalError::ExplicitRangeExcludesSample {
                    value: v,
                    lo,
                    hi,
                    dim: j,
                });
            }
            let bin = if hi > lo {
                (((v - lo) / (hi - lo)) * bins as f64).floor() as usize
            } else {
                0
            };
            flat = flat * bins + bin.min(bins - 1);
        }
        counts[flat] += 1;
    }
    Ok(JointHistogram {
        dims: vec![bins; d],
        counts,
        total: n as u64,
    })
}

/// Plug-in Shannon entropy in nats, with the `0 ln 0 = 0` convention.
pub fn entropy(h: &JointHistogram) -> f64 {
    let total = h.total as f64;
    h.counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in mutual information `I(U, V) = H(U) + H(V) - H(U, V)`, with the
/// marginals derived from the single 2-D joint histogram.
pub fn mutual_information(u: &[f64], v: &[f64], spec: &HistogramSpec) -> Result<f64> {
    if u.len() != v.len() {
        return Err(CausalError::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let n = u.len();
    let samples = DMatrix::from_fn(n, 2, |i, j| if j == 0 { u[i] } else { v[i] });
    let joint = histogram(&samples, spec)?;
    let hu = entropy(&joint.marginalize(&[0]));
    let hv = entropy(&joint.marginalize(&[1]));
    Ok(hu + hv - entropy(&joint))
}

/// Bivariate transfer entropy with one-lag own-past embedding:
/// `T_{Y->X} = H(X_t | X_{t-1}) - H(X_t | X_{t-1}, Y_{t-lag})`, all four
/// entropies taken from one 3-D joint histogram and its marginalizations.
pub fn transfer_entropy(x: &[f64], y: &[f64], lag: usize, spec: &HistogramSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CausalError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if lag == 0 {
        return Err(CausalError::InvalidParameter(
            "transfer entropy requires lag >= 1; use mutual information at lag 0".into(),
        ));
    }
    if x.len() <= lag {
        return Err(CausalError::LagTooLarge {
            lag,
            length: x.len(),
        });
    }
    let joint = te_joint(x, y, lag, spec)?;
    Ok(te_from_joint(&joint))
}

/// The 3-D joint over `(X_t, X_{t-1}, Y_{t-lag})`.
pub(crate) fn te_joint(
    x: &[f64],
    y: &[f64],
    lag: usize,
    spec: &HistogramSpec,
) -> Result<JointHistogram> {
    let start = lag.max(1);
    let m = x.len() - start;
    let samples = DMatrix::from_fn(m, 3, |i, j| {
        let t = start + i;
        match j {
            0 => x[t],
            1 => x[t - 1],
            _ => y[t - lag],
        }
    });
    histogram(&samples, spec)
}

pub(crate) fn te_from_joint(joint: &JointHistogram) -> f64 {
    let h_x_xp = entropy(&joint.marginalize(&[0, 1]));
    let h_xp = entropy(&joint.marginalize(&[1]));
    let h_xp_y = entropy(&joint.marginalize(&[1, 2]));
    h_x_xp - h_xp - entropy(joint) + h_xp_y
}
