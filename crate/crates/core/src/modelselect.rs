//! Randomized k-fold cross-validation over a `(gamma, sigma)` grid for
//! kernel ridge regression.
//!
//! Rows are shuffled once by a seeded permutation and split into near-equal
//! folds. For each grid point the model is fitted on each fold's
//! complement and scored by mean squared prediction error on the fold,
//! using the rectangular cross-Gram block `K(W_val, W_train)` of the one
//! Gram matrix built per kernel width. Selection is run once per
//! experiment, not per window or per permutation.

use nalgebra::{DMatrix, DVector};

use crate::embedding::LagDesign;
use crate::error::{CausalError, Result};
use crate::kernels::{gram, KernelKind, KernelSpec};
use crate::krr::cholesky_regularized;
use crate::seeding::rng_for;
use rand::seq::SliceRandom;

/// Grid of ridge regularisers and kernel widths to search, with the fold
/// count and shuffle seed.
#[derive(Debug, Clone)]
pub struct CvGrid {
    /// Candidate regularisers, ascending, all positive.
    pub gammas: Vec<f64>,
    /// Candidate Gaussian widths, ascending, all positive. Ignored for the
    /// linear kernel.
    pub sigmas: Vec<f64>,
    /// Number of folds, at least 2.
    pub folds: usize,
    /// Seed for the row shuffle.
    pub seed: u64,
}

impl CvGrid {
    /// The dyadic default grid: regularisers `2^-40 ..= 2^-26` and kernel
    /// widths `2^7 ..= 2^13`, five folds.
    pub fn dyadic_default(seed: u64) -> Self {
        Self {
            gammas: (-40..=-26).map(|e| 2f64.powi(e)).collect(),
            sigmas: (7..=13).map(|e| 2f64.powi(e)).collect(),
            folds: 5,
            seed,
        }
    }

    fn validate(&self, kind: KernelKind) -> Result<()> {
        let check = |values: &[f64], what: &str| -> Result<()> {
            if values.is_empty() {
                return Err(CausalError::InvalidParameter(format!(
                    "{what} grid must be non-empty"
                )));
            }
            if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(CausalError::InvalidParameter(format!(
                    "{what} grid values must be positive and finite"
                )));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CausalError::InvalidParameter(format!(
                    "{what} grid must be strictly ascending"
                )));
            }
            Ok(())
        };
        check(&self.gammas, "gamma")?;
        if kind == KernelKind::Gaussian {
            check(&self.sigmas, "sigma")?;
        }
        if self.folds < 2 {
            return Err(CausalError::InvalidParameter(
                "cross-validation needs at least 2 folds".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a grid search.
#[derive(Debug, Clone)]
pub struct CvReport {
    /// Selected regulariser.
    pub best_gamma: f64,
    /// Selected kernel width; `None` for the linear kernel.
    pub best_sigma: Option<f64>,
    /// Mean validation error per grid point, `|gammas| x |sigmas|`
    /// (one column for the linear kernel). Entries are finite or
    /// `+infinity` for grid points whose solve failed, never `NaN`.
    pub score_surface: DMatrix<f64>,
    /// The shuffled row order; fold `k` is the `k`-th chunk.
    pub fold_assignment: Vec<usize>,
    /// Rows per fold, differing by at most one.
    pub fold_sizes: Vec<usize>,
}

/// Near-equal fold sizes: the first `m % folds` folds get one extra row.
pub(crate) fn fold_sizes(m: usize, folds: usize) -> Vec<usize> {
    let base = m / folds;
    let extra = m % folds;
    (0..folds)
        .map(|k| base + usize::from(k < extra))
        .collect()
}

/// Grid point selection: minimal score, ties broken toward larger gamma,
/// then larger sigma.
pub(crate) fn select_minimum(surface: &DMatrix<f64>) -> (usize, usize) {
    let mut best = (0usize, 0usize);
    let mut best_score = f64::INFINITY;
    for gi in 0..surface.nrows() {
        for si in 0..surface.ncols() {
            let score = surface[(gi, si)];
            if score <= best_score {
                best_score = score;
                best = (gi, si);
            }
        }
    }
    best
}

/// Cross-validates kernel ridge regression over the grid and selects the
/// prediction-error minimizer.
pub fn cross_validate(design: &LagDesign, kind: KernelKind, grid: &CvGrid) -> Result<CvReport> {
    grid.validate(kind)?;
    let m = design.num_rows();
    if m < grid.folds {
        return Err(CausalError::TooFewRows {
            rows: m,
            folds: grid.folds,
        });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng_for(grid.seed, 0, 0));
    let sizes = fold_sizes(m, grid.folds);

    let sigmas: Vec<Option<f64>> = match kind {
        KernelKind::Linear => vec![None],
        KernelKind::Gaussian => grid.sigmas.iter().copied().map(Some).collect(),
    };

    let mut surface = DMatrix::from_element(grid.gammas.len(), sigmas.len(), 0.0);
    for (si, sigma) in sigmas.iter().enumerate() {
        let spec = match sigma {
            Some(s) => KernelSpec::Gaussian { sigma: *s },
            None => KernelSpec::Linear,
        };
        // One Gram matrix per kernel width over the shuffled row order;
        // folds slice blocks out of it.
        let permuted = DMatrix::from_fn(m, design.num_regressors(), |i, j| {
            design.design[(order[i], j)]
        });
        let target = DVector::from_fn(m, |i, _| design.target[order[i]]);
        let full_gram = gram(spec, &permuted)?;

        let mut fold_start = Vec::with_capacity(grid.folds);
        let mut acc = 0;
        for s in &sizes {
            fold_start.push(acc);
            acc += s;
        }

        for (gi, &gamma) in grid.gammas.iter().enumerate() {
            let mut total = 0.0;
            for k in 0..grid.folds {
                match fold_error(
                    full_gram.values(),
                    &target,
                    fold_start[k],
                    sizes[k],
                    gamma,
                ) {
                    Ok(err) => total += err,
                    Err(CausalError::SolveFailure) => {
                        total = f64::INFINITY;
                        break;
                    }
                    Err(other) => return Err(other),
                }
            }
            surface[(gi, si)] = if total.is_finite() {
                total / grid.folds as f64
            } else {
                f64::INFINITY
            };
        }
    }

    let (gi, si) = select_minimum(&surface);
    Ok(CvReport {
        best_gamma: grid.gammas[gi],
        best_sigma: sigmas[si],
        score_surface: surface,
        fold_assignment: order,
        fold_sizes: sizes,
    })
}

/// Mean squared prediction error on one validation fold.
fn fold_error(
    full_gram: &DMatrix<f64>,
    target: &DVector<f64>,
    val_start: usize,
    val_len: usize,
    gamma: f64,
) -> Result<f64> {
    let m = full_gram.nrows();
    let train: Vec<usize> = (0..m)
        .filter(|i| *i < val_start || *i >= val_start + val_len)
        .collect();
    let mt = train.len();

    let k_tt = DMatrix::from_fn(mt, mt, |a, b| full_gram[(train[a], train[b])]);
    let k_vt = DMatrix::from_fn(val_len, mt, |a, b| full_gram[(val_start + a, train[b])]);
    let x_t = DVector::from_fn(mt, |a, _| target[train[a]]);
    let x_v = DVector::from_fn(val_len, |a, _| target[val_start + a]);

    let chol = cholesky_regularized(&k_tt, gamma * mt as f64)?;
    let alpha = chol.solve(&x_t);
    let predicted = k_vt * alpha;
    Ok((predicted - x_v).norm_squared() / val_len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{build_design, LagSpec, ModelVariant};
    use crate::kernels::gram;
    use crate::krr;
    use crate::panel::TimeSeriesPanel;
    use rand::Rng;

    fn noisy_design(seed: u64, n: usize) -> LagDesign {
        let mut rng = rng_for(seed, 98, 0);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|t| {
                let past = if t >= 1 { 0.7 * x[t - 1] } else { 0.0 };
                past + 0.3 * rng.gen_range(-1.0..1.0)
            })
            .collect();
        let panel =
            TimeSeriesPanel::new(vec![("x".into(), x), ("y".into(), y)], None).unwrap();
        build_design(
            &panel,
            "y",
            &["x"],
            &[],
            &LagSpec::new(vec![1]).unwrap(),
            ModelVariant::XAndY,
        )
        .unwrap()
    }

    #[test]
    fn fold_sizes_near_equal() {
        assert_eq!(fold_sizes(103, 5), vec![21, 21, 21, 20, 20]);
        assert_eq!(fold_sizes(10, 5), vec![2, 2, 2, 2, 2]);
        assert_eq!(fold_sizes(7, 3), vec![3, 2, 2]);
    }

    #[test]
    fn folds_partition_the_rows() {
        let design = noisy_design(1, 53);
        let grid = CvGrid {
            gammas: vec![1e-4],
            sigmas: vec![1.0],
            folds: 5,
            seed: 3,
        };
        let report = cross_validate(&design, KernelKind::Gaussian, &grid).unwrap();
        let mut seen = report.fold_assignment.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..52usize).collect::<Vec<_>>());
        assert_eq!(report.fold_sizes.iter().sum::<usize>(), 52);
    }

    #[test]
    fn single_point_grid_returns_it() {
        let design = noisy_design(2, 40);
        let grid = CvGrid {
            gammas: vec![1e-3],
            sigmas: vec![2.0],
            folds: 4,
            seed: 9,
        };
        let report = cross_validate(&design, KernelKind::Gaussian, &grid).unwrap();
        assert_eq!(report.best_gamma, 1e-3);
        assert_eq!(report.best_sigma, Some(2.0));
        assert_eq!(report.score_surface.shape(), (1, 1));
        assert!(report.score_surface[(0, 0)].is_finite());
    }

    #[test]
    fn argmin_recovered_from_synthetic_surface() {
        // Stub score landscape: quadratic bowl with the minimum inside.
        let gammas = [0.1, 0.2, 0.3, 0.4, 0.5];
        let sigmas = [1.0, 2.0, 3.0];
        let surface = DMatrix::from_fn(5, 3, |gi, si| {
            let g = gammas[gi] - 0.3;
            let s = sigmas[si] - 2.0;
            g * g + s * s
        });
        assert_eq!(select_minimum(&surface), (2, 1));
    }

    #[test]
    fn ties_break_toward_larger_gamma_then_sigma() {
        let surface = DMatrix::from_element(3, 2, 1.0);
        assert_eq!(select_minimum(&surface), (2, 1));
        let mut surface = DMatrix::from_element(3, 2, 1.0);
        surface[(0, 0)] = 0.5;
        surface[(1, 1)] = 0.5;
        assert_eq!(select_minimum(&surface), (1, 1));
    }

    #[test]
    fn surface_never_nan() {
        let design = noisy_design(5, 47);
        let grid = CvGrid {
            gammas: vec![1e-12, 1e-6, 1.0],
            sigmas: vec![0.5, 5.0],
            folds: 5,
            seed: 1,
        };
        let report = cross_validate(&design, KernelKind::Gaussian, &grid).unwrap();
        assert!(report.score_surface.iter().all(|v| !v.is_nan()));
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let design = noisy_design(6, 60);
        let grid = CvGrid {
            gammas: vec![1e-6, 1e-3],
            sigmas: vec![1.0, 4.0],
            folds: 5,
            seed: 42,
        };
        let a = cross_validate(&design, KernelKind::Gaussian, &grid).unwrap();
        let b = cross_validate(&design, KernelKind::Gaussian, &grid).unwrap();
        assert_eq!(a.best_gamma, b.best_gamma);
        assert_eq!(a.best_sigma, b.best_sigma);
        assert_eq!(a.fold_assignment, b.fold_assignment);
        for (x, y) in a.score_surface.iter().zip(b.score_surface.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn linear_kernel_ignores_sigmas() {
        let design = noisy_design(7, 45);
        let grid = CvGrid {
            gammas: vec![1e-8, 1e-4, 1e-2],
            sigmas: Vec::new(),
            folds: 3,
            seed: 7,
        };
        let report = cross_validate(&design, KernelKind::Linear, &grid).unwrap();
        assert_eq!(report.score_surface.ncols(), 1);
        assert!(report.best_sigma.is_none());
    }

    #[test]
    fn too_few_rows_rejected() {
        let design = noisy_design(8, 5);
        let grid = CvGrid {
            gammas: vec![1e-3],
            sigmas: vec![1.0],
            folds: 10,
            seed: 0,
        };
        assert!(matches!(
            cross_validate(&design, KernelKind::Gaussian, &grid).unwrap_err(),
            CausalError::TooFewRows { .. }
        ));
    }

    #[test]
    fn selected_point_is_sane_for_final_fit() {
        // The CV winner, refitted on the full design, must be within 5% of
        // the best full-fit residual variance over the whole grid. Pinned
        // on the linear kernel: a Gaussian grid spanning widths of
        // different flexibility makes the in-sample minimum an
        // interpolating fit that CV rightly rejects.
        let design = noisy_design(9, 80);
        let grid = CvGrid {
            gammas: (-40i32..=-26).step_by(2).map(|e| 2f64.powi(e)).collect(),
            sigmas: Vec::new(),
            folds: 5,
            seed: 13,
        };
        let report = cross_validate(&design, KernelKind::Linear, &grid).unwrap();

        let full_var = |gamma: f64| {
            let g = gram(KernelSpec::Linear, &design.design).unwrap();
            krr::residual_variance(&krr::fit(&g, &design.target, gamma).unwrap())
        };
        let selected = full_var(report.best_gamma);
        let best_anywhere = grid
            .gammas
            .iter()
            .map(|&g| full_var(g))
            .fold(f64::INFINITY, f64::min);
        assert!(selected <= 1.05 * best_anywhere.max(1e-12) + 1e-12);
    }
}
