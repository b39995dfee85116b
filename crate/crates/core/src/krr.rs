//! Kernel ridge regression in dual form: the prediction engine behind the
//! linear and kernelised Geweke measures.
//!
//! The dual weights solve `(K + gamma * m * I) alpha = x`, with `m` the
//! training sample count entering the regulariser exactly as written. The
//! system is factorized (symmetric positive definite Cholesky), never
//! inverted explicitly.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{CausalError, Result};
use crate::kernels::GramMatrix;

/// A fitted dual-form ridge regressor.
#[derive(Debug, Clone)]
pub struct RidgeFit {
    alpha: DVector<f64>,
    gamma: f64,
    gram: GramMatrix,
    target: DVector<f64>,
}

impl RidgeFit {
    /// Dual weight vector `alpha`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// The regulariser used for the fit.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The training Gram matrix.
    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// The training target vector.
    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    /// Training sample count.
    pub fn num_samples(&self) -> usize {
        self.alpha.len()
    }
}

pub(crate) fn cholesky_regularized(
    gram: &DMatrix<f64>,
    ridge: f64,
) -> Result<Cholesky<f64, Dyn>> {
    let m = gram.nrows();
    let mut system = gram.clone();
    for i in 0..m {
        system[(i, i)] += ridge;
    }
    system.cholesky().ok_or(CausalError::SolveFailure)
}

/// Fits dual ridge weights on an uncentered training Gram matrix.
pub fn fit(gram: &GramMatrix, target: &DVector<f64>, gamma: f64) -> Result<RidgeFit> {
    if gram.is_centered() {
        return Err(CausalError::InvalidParameter(
            "ridge regression expects an uncentered Gram matrix".into(),
        ));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(CausalError::InvalidParameter(format!(
            "ridge regulariser must be positive and finite, got {gamma}"
        )));
    }
    let m = gram.size();
    if target.len() != m {
        return Err(CausalError::DimensionMismatch {
            left: m,
            right: target.len(),
        });
    }
    let chol = cholesky_regularized(gram.values(), gamma * m as f64)?;
    let alpha = chol.solve(target);
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(CausalError::SolveFailure);
    }
    Ok(RidgeFit {
        alpha,
        gamma,
        gram: gram.clone(),
        target: target.clone(),
    })
}

/// Predicts targets for new points given the rectangular cross-Gram
/// `k(new_row_i, train_row_j)`: `x_hat = K_cross * alpha`.
pub fn predict(fit: &RidgeFit, cross_gram: &DMatrix<f64>) -> Result<DVector<f64>> {
    if cross_gram.ncols() != fit.num_samples() {
        return Err(CausalError::DimensionMismatch {
            left: cross_gram.ncols(),
            right: fit.num_samples(),
        });
    }
    Ok(cross_gram * &fit.alpha)
}

/// In-sample fitted values `K alpha`.
pub fn fitted_values(fit: &RidgeFit) -> DVector<f64> {
    fit.gram.values() * &fit.alpha
}

/// In-sample mean squared prediction error `(1/m) ||K alpha - x||^2`.
pub fn residual_variance(fit: &RidgeFit) -> f64 {
    let residual = fitted_values(fit) - &fit.target;
    residual.norm_squared() / fit.num_samples() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{gram, KernelSpec};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, m: usize, d: usize) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DMatrix::from_fn(m, d, |_, _| rng.gen_range(-1.0..1.0));
        let x = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        (w, x)
    }

    /// Primal-form oracle for the linear kernel:
    /// `beta = (W^T W + gamma m I_d)^{-1} W^T x`, fitted values `W beta`.
    fn primal_fitted(w: &DMatrix<f64>, x: &DVector<f64>, gamma: f64) -> DVector<f64> {
        let m = w.nrows() as f64;
        let d = w.ncols();
        let mut a = w.transpose() * w;
        for i in 0..d {
            a[(i, i)] += gamma * m;
        }
        let beta = a.cholesky().unwrap().solve(&(w.transpose() * x));
        w * beta
    }

    #[test]
    fn zero_target_gives_zero_alpha() {
        let (w, _) = random_instance(3, 8, 2);
        let g = gram(KernelSpec::Linear, &w).unwrap();
        let fit = fit(&g, &DVector::zeros(8), 0.5).unwrap();
        assert!(fit.alpha().iter().all(|&v| v == 0.0));
        assert_eq!(residual_variance(&fit), 0.0);
    }

    #[test]
    fn dual_matches_primal_oracle() {
        for seed in 0..20 {
            let (w, x) = random_instance(seed, 12, 3);
            let g = gram(KernelSpec::Linear, &w).unwrap();
            for gamma in [1e-6, 1e-3, 1.0] {
                let f = fit(&g, &x, gamma).unwrap();
                let dual = fitted_values(&f);
                let primal = primal_fitted(&w, &x, gamma);
                for i in 0..12 {
                    assert_abs_diff_eq!(dual[i], primal[i], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn predict_matches_primal_on_new_points() {
        let (w, x) = random_instance(11, 10, 3);
        let (new_rows, _) = random_instance(99, 4, 3);
        let g = gram(KernelSpec::Linear, &w).unwrap();
        let f = fit(&g, &x, 1e-3).unwrap();
        // Cross-Gram of new points against training rows.
        let cross = &new_rows * w.transpose();
        let predicted = predict(&f, &cross).unwrap();

        let m = w.nrows() as f64;
        let mut a = w.transpose() * &w;
        for i in 0..3 {
            a[(i, i)] += 1e-3 * m;
        }
        let beta = a.cholesky().unwrap().solve(&(w.transpose() * &x));
        let oracle = &new_rows * beta;
        for i in 0..4 {
            assert_abs_diff_eq!(predicted[i], oracle[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn huge_gamma_shrinks_alpha() {
        let (w, x) = random_instance(7, 10, 2);
        let g = gram(KernelSpec::Linear, &w).unwrap();
        let gamma = 1e9;
        let f = fit(&g, &x, gamma).unwrap();
        let bound = x.norm() / (gamma * 10.0);
        assert!(f.alpha().norm() <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn alpha_solves_regularized_system() {
        let (w, x) = random_instance(21, 9, 3);
        let g = gram(KernelSpec::gaussian(1.0).unwrap(), &w).unwrap();
        let f = fit(&g, &x, 0.01).unwrap();
        let mut system = g.values().clone();
        for i in 0..9 {
            system[(i, i)] += 0.01 * 9.0;
        }
        let residual = (system * f.alpha()) - &x;
        assert!(residual.norm() / x.norm() <= 1e-8);
    }

    #[test]
    fn residual_variance_zero_alpha() {
        let (w, x) = random_instance(5, 6, 2);
        let g = gram(KernelSpec::Linear, &w).unwrap();
        let f = RidgeFit {
            alpha: DVector::zeros(6),
            gamma: 1.0,
            gram: g,
            target: x.clone(),
        };
        assert_abs_diff_eq!(
            residual_variance(&f),
            x.norm_squared() / 6.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn residual_variance_matches_dense_oracle() {
        let (w, x) = random_instance(13, 5, 2);
        let g = gram(KernelSpec::Linear, &w).unwrap();
        let f = fit(&g, &x, 0.1).unwrap();
        // Direct dense arithmetic on a hand-rolled copy of the fit.
        let mut a = g.values().clone();
        for i in 0..5 {
            a[(i, i)] += 0.1 * 5.0;
        }
        let alpha = a.try_inverse().unwrap() * &x;
        let resid = g.values() * alpha - &x;
        let expected = resid.norm_squared() / 5.0;
        assert_abs_diff_eq!(residual_variance(&f), expected, epsilon = 1e-10);
    }

    #[test]
    fn residual_variance_monotone_in_gamma() {
        let (w, x) = random_instance(17, 15, 3);
        let g = gram(KernelSpec::gaussian(1.5).unwrap(), &w).unwrap();
        let mut last = -1.0;
        for exp in -8..2 {
            let gamma = 10f64.powi(exp);
            let v = residual_variance(&fit(&g, &x, gamma).unwrap());
            assert!(v >= 0.0);
            assert!(v + 1e-10 >= last, "variance must not decrease with gamma");
            last = v;
        }
    }

    #[test]
    fn centered_gram_rejected() {
        let (w, x) = random_instance(2, 4, 2);
        let g = gram(KernelSpec::Linear, &w).unwrap();
        let c = crate::kernels::center(&g).unwrap();
        assert!(fit(&c, &x, 0.1).is_err());
    }

    #[test]
    fn single_sample_fit() {
        let g = gram(KernelSpec::Linear, &DMatrix::from_row_slice(1, 1, &[2.0])).unwrap();
        let f = fit(&g, &DVector::from_element(1, 3.0), 0.5).unwrap();
        // (4 + 0.5) alpha = 3
        assert_abs_diff_eq!(f.alpha()[0], 3.0 / 4.5, epsilon = 1e-12);
    }
}
