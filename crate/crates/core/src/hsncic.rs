//! Hilbert-Schmidt normalized conditional independence criterion (HSNCIC)
//! and the plain Hilbert-Schmidt independence criterion (HSIC).
//!
//! The estimator is the trace form
//! `Tr[R_(XZ) R_(YZ) - 2 R_(XZ) R_(YZ) R_Z + R_(XZ) R_Z R_(YZ) R_Z]`
//! with `R_U = K_U (K_U + n lambda I)^{-1}` over centered Gram matrices of
//! the extended variables `(XZ)`, `(YZ)` and `Z`. Since `K_U` commutes with
//! `(K_U + n lambda I)^{-1}`, `R_U` is computed by one symmetric
//! positive-definite solve with `K_U` as the right-hand side.

use nalgebra::DMatrix;

use crate::embedding::LagSpec;
use crate::error::{CausalError, Result};
use crate::kernels::{center_values, gram, median_heuristic, KernelSpec};
use crate::krr::cholesky_regularized;
use crate::panel::TimeSeriesPanel;

/// The `lambda` of the `n lambda I` term added before inverting finite-rank
/// operators.
#[derive(Debug, Clone, Copy)]
pub struct OperatorRegularizer {
    lambda: f64,
}

impl OperatorRegularizer {
    /// Validated constructor; `lambda` must be positive and finite.
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CausalError::InvalidParameter(format!(
                "operator regulariser must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    /// The regularisation constant.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for OperatorRegularizer {
    /// The configuration used throughout the benchmark experiments.
    fn default() -> Self {
        Self { lambda: 1e-3 }
    }
}

/// How kernels are chosen for each variable block.
#[derive(Debug, Clone, Copy)]
pub enum KernelPolicy {
    /// Gaussian kernel with width set to the median pairwise distance of
    /// the block's own rows (extended blocks use the concatenated rows).
    MedianGaussian,
    /// One fixed kernel for every block.
    Fixed(KernelSpec),
}

/// An HSNCIC evaluation together with the resolved parameters.
#[derive(Debug, Clone, serde::Serialize)]
pub struct HsncicValue {
    /// The trace-form estimate. An estimator of a squared norm; small
    /// negative values within numerical slack can occur.
    pub value: f64,
    /// Sample count.
    pub n: usize,
    /// Regulariser used.
    pub lambda: f64,
    /// Gaussian width used for the (XZ) block, when applicable.
    pub sigma_x: Option<f64>,
    /// Gaussian width used for the (YZ) block, when applicable.
    pub sigma_y: Option<f64>,
    /// Gaussian width used for the Z block, when applicable.
    pub sigma_z: Option<f64>,
}

fn resolve_kernel(policy: KernelPolicy, rows: &DMatrix<f64>) -> Result<(KernelSpec, Option<f64>)> {
    match policy {
        KernelPolicy::MedianGaussian => {
            let sigma = median_heuristic(rows)?;
            Ok((KernelSpec::Gaussian { sigma }, Some(sigma)))
        }
        KernelPolicy::Fixed(spec) => {
            let sigma = match spec {
                KernelSpec::Gaussian { sigma } => Some(sigma),
                KernelSpec::Linear => None,
            };
            Ok((spec, sigma))
        }
    }
}

fn centered_gram(spec: KernelSpec, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(center_values(gram(spec, rows)?.values()))
}

/// `R = K (K + n lambda I)^{-1}` for a centered PSD Gram matrix.
pub(crate) fn shrinkage_operator(
    k_centered: &DMatrix<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let n = k_centered.nrows();
    let chol = cholesky_regularized(k_centered, n as f64 * lambda)?;
    Ok(chol.solve(k_centered))
}

fn hstack(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let n = left.nrows();
    let mut out = DMatrix::zeros(n, left.ncols() + right.ncols());
    out.view_mut((0, 0), (n, left.ncols())).copy_from(left);
    out.view_mut((0, left.ncols()), (n, right.ncols()))
        .copy_from(right);
    out
}

fn check_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(CausalError::DimensionMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    Ok(())
}

/// The conditional criterion for row samples of X, Y and the conditioning
/// set Z. Rows are observations; all three blocks must share `n >= 2`.
pub fn hsncic(
    x_rows: &DMatrix<f64>,
    y_rows: &DMatrix<f64>,
    z_rows: &DMatrix<f64>,
    reg: OperatorRegularizer,
    policy: KernelPolicy,
) -> Result<HsncicValue> {
    check_rows(x_rows, y_rows)?;
    check_rows(x_rows, z_rows)?;
    let n = x_rows.nrows();
    if n < 2 {
        return Err(CausalError::InvalidParameter(
            "hsncic requires at least two samples".into(),
        ));
    }
    if z_rows.ncols() == 0 {
        return Err(CausalError::InvalidParameter(
            "empty conditioning set: use hsncic_unconditional".into(),
        ));
    }
    let xz = hstack(x_rows, z_rows);
    let yz = hstack(y_rows, z_rows);

    let (spec_xz, sigma_x) = resolve_kernel(policy, &xz)?;
    let (spec_yz, sigma_y) = resolve_kernel(policy, &yz)?;
    let (spec_z, sigma_z) = resolve_kernel(policy, z_rows)?;

    let r_xz = shrinkage_operator(&centered_gram(spec_xz, &xz)?, reg.lambda)?;
    let r_yz = shrinkage_operator(&centered_gram(spec_yz, &yz)?, reg.lambda)?;
    let r_z = shrinkage_operator(&centered_gram(spec_z, z_rows)?, reg.lambda)?;

    Ok(HsncicValue {
        value: conditional_trace(&r_xz, &r_yz, &r_z),
        n,
        lambda: reg.lambda,
        sigma_x,
        sigma_y,
        sigma_z,
    })
}

/// `Tr[A B] - 2 Tr[A B C] + Tr[A C B C]` evaluated through elementwise
/// dot products against `B`, valid because all operators are symmetric.
pub(crate) fn conditional_trace(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    let ca = c * a;
    let cac = &ca * c;
    a.dot(b) - 2.0 * ca.dot(b) + cac.dot(b)
}

/// Degeneration of the criterion with the conditioning term dropped:
/// `Tr[R_X R_Y]` on the un-extended blocks.
pub fn hsncic_unconditional(
    x_rows: &DMatrix<f64>,
    y_rows: &DMatrix<f64>,
    reg: OperatorRegularizer,
    policy: KernelPolicy,
) -> Result<HsncicValue> {
    check_rows(x_rows, y_rows)?;
    let n = x_rows.nrows();
    if n < 2 {
        return Err(CausalError::InvalidParameter(
            "hsncic requires at least two samples".into(),
        ));
    }
    let (spec_x, sigma_x) = resolve_kernel(policy, x_rows)?;
    let (spec_y, sigma_y) = resolve_kernel(policy, y_rows)?;
    let r_x = shrinkage_operator(&centered_gram(spec_x, x_rows)?, reg.lambda)?;
    let r_y = shrinkage_operator(&centered_gram(spec_y, y_rows)?, reg.lambda)?;
    Ok(HsncicValue {
        value: r_x.dot(&r_y),
        n,
        lambda: reg.lambda,
        sigma_x,
        sigma_y,
        sigma_z: None,
    })
}

/// Biased plug-in HSIC estimator `(1/n^2) Tr(K_x~ K_y~)` over centered
/// Gram matrices.
pub fn hsic(x_rows: &DMatrix<f64>, y_rows: &DMatrix<f64>, policy: KernelPolicy) -> Result<f64> {
    check_rows(x_rows, y_rows)?;
    let n = x_rows.nrows();
    if n < 2 {
        return Err(CausalError::InvalidParameter(
            "hsic requires at least two samples".into(),
        ));
    }
    let (spec_x, _) = resolve_kernel(policy, x_rows)?;
    let (spec_y, _) = resolve_kernel(policy, y_rows)?;
    let kx = centered_gram(spec_x, x_rows)?;
    let ky = centered_gram(spec_y, y_rows)?;
    Ok(kx.dot(&ky) / (n * n) as f64)
}

/// The lagged blocks a causality query maps onto the criterion:
/// X = target future values, Y = lagged cause block, Z = target own past
/// plus lagged side columns.
#[derive(Debug, Clone)]
pub(crate) struct CausalityBlocks {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub row_times: Vec<usize>,
}

pub(crate) fn causality_blocks(
    panel: &TimeSeriesPanel,
    target: &str,
    cause: &[&str],
    side: &[&str],
    spec: &LagSpec,
) -> Result<CausalityBlocks> {
    if cause.is_empty() {
        return Err(CausalError::EmptyVariantGroup { group: "cause" });
    }
    let target_values = panel.column(target)?;
    let cause_values: Vec<&[f64]> = cause
        .iter()
        .map(|c| panel.column(c))
        .collect::<Result<_>>()?;
    let side_values: Vec<&[f64]> = side
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
    let lags = spec.lags();
    let row_times: Vec<usize> = (p_max..n).collect();

    let x = DMatrix::from_fn(m, 1, |i, _| target_values[row_times[i]]);
    let y = lagged_block(&cause_values, lags, &row_times);
    let mut z_series: Vec<&[f64]> = vec![target_values];
    z_series.extend(&side_values);
    let z = lagged_block(&z_series, lags, &row_times);
    Ok(CausalityBlocks { x, y, z, row_times })
}

pub(crate) fn lagged_block(
    series: &[&[f64]],
    lags: &[usize],
    row_times: &[usize],
) -> DMatrix<f64> {
    let m = row_times.len();
    DMatrix::from_fn(m, series.len() * lags.len(), |i, j| {
        let (lag_idx, series_idx) = (j / series.len(), j % series.len());
        series[series_idx][row_times[i] - lags[lag_idx]]
    })
}

/// Maps a causality question onto the criterion and evaluates it. The
/// conditioning set is the target's own past plus the lagged side columns,
/// so it is never empty; present-value flags on `spec` are ignored.
pub fn hsncic_causality(
    panel: &TimeSeriesPanel,
    target: &str,
    cause: &[&str],
    side: &[&str],
    spec: &LagSpec,
    reg: OperatorRegularizer,
    policy: KernelPolicy,
) -> Result<HsncicValue> {
    let blocks = causality_blocks(panel, target, cause, side, spec)?;
    hsncic(&blocks.x, &blocks.y, &blocks.z, reg, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.gen_range(-2.0..2.0))
    }

    /// Independent dense re-implementation: explicit inverses via LU and
    /// plain matrix products, no Cholesky anywhere.
    fn hsncic_oracle(
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        z: &DMatrix<f64>,
        lambda: f64,
        sigma: f64,
    ) -> f64 {
        let n = x.nrows();
        let spec = KernelSpec::Gaussian { sigma };
        let centered = |rows: &DMatrix<f64>| {
            let k = gram(spec, rows).unwrap().values().clone();
            let h = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
            &h * k * &h
        };
        let shrink = |k: &DMatrix<f64>| {
            let reg = k + DMatrix::<f64>::identity(n, n) * (n as f64 * lambda);
            k * reg.try_inverse().unwrap()
        };
        let a = shrink(&centered(&hstack(x, z)));
        let b = shrink(&centered(&hstack(y, z)));
        let c = shrink(&centered(z));
        (&a * &b).trace() - 2.0 * (&a * &b * &c).trace() + (&a * &c * &b * &c).trace()
    }

    #[test]
    fn matches_dense_oracle_on_small_instances() {
        for seed in 0..5 {
            let x = random_rows(seed, 8, 1);
            let y = random_rows(seed + 100, 8, 2);
            let z = random_rows(seed + 200, 8, 1);
            let sigma = 1.4;
            let got = hsncic(
                &x,
                &y,
                &z,
                OperatorRegularizer::new(1e-3).unwrap(),
                KernelPolicy::Fixed(KernelSpec::Gaussian { sigma }),
            )
            .unwrap();
            let expected = hsncic_oracle(&x, &y, &z, 1e-3, sigma);
            assert_abs_diff_eq!(got.value, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_samples_finite_and_matches_oracle() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let y = DMatrix::from_row_slice(2, 1, &[2.0, -1.0]);
        let z = DMatrix::from_row_slice(2, 1, &[0.5, 0.7]);
        let got = hsncic(
            &x,
            &y,
            &z,
            OperatorRegularizer::default(),
            KernelPolicy::Fixed(KernelSpec::Gaussian { sigma: 1.0 }),
        )
        .unwrap();
        assert!(got.value.is_finite());
        let expected = hsncic_oracle(&x, &y, &z, 1e-3, 1.0);
        assert_abs_diff_eq!(got.value, expected, epsilon = 1e-10);
    }

    #[test]
    fn identical_blocks_match_oracle() {
        let x = random_rows(42, 6, 1);
        let got = hsncic(
            &x,
            &x,
            &x,
            OperatorRegularizer::default(),
            KernelPolicy::Fixed(KernelSpec::Gaussian { sigma: 0.9 }),
        )
        .unwrap();
        let expected = hsncic_oracle(&x, &x, &x, 1e-3, 0.9);
        assert_abs_diff_eq!(got.value, expected, epsilon = 1e-10);
    }

    #[test]
    fn hsic_constant_column_is_zero() {
        let x = random_rows(1, 10, 1);
        let y = DMatrix::from_element(10, 1, 3.0);
        let v = hsic(&x, &y, KernelPolicy::Fixed(KernelSpec::Linear)).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hsic_self_dependence_is_positive() {
        let x = random_rows(2, 12, 1);
        let v = hsic(
            &x,
            &x,
            KernelPolicy::Fixed(KernelSpec::Gaussian { sigma: 1.0 }),
        )
        .unwrap();
        assert!(v > 1e-6);
    }

    #[test]
    fn hsic_matches_quadruple_loop_oracle() {
        // V-statistic expansion of the kernel-notation lemma, by explicit
        // summation over all index quadruples.
        let x = random_rows(7, 4, 1);
        let y = random_rows(8, 4, 1);
        let n = 4usize;
        let spec = KernelSpec::Gaussian { sigma: 1.2 };
        let k = gram(spec, &x).unwrap();
        let l = gram(spec, &y).unwrap();
        let (k, l) = (k.values(), l.values());

        let nf = n as f64;
        let mut t1 = 0.0;
        for i in 0..n {
            for j in 0..n {
                t1 += k[(i, j)] * l[(i, j)];
            }
        }
        t1 /= nf * nf;
        let mut t2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        t2 += k[(i, j)] * l[(q, r)];
                    }
                }
            }
        }
        t2 /= nf.powi(4);
        let mut t3 = 0.0;
        for i in 0..n {
            let krow: f64 = (0..n).map(|j| k[(i, j)]).sum();
            let lrow: f64 = (0..n).map(|j| l[(i, j)]).sum();
            t3 += krow * lrow;
        }
        t3 *= 2.0 / nf.powi(3);
        let expected = t1 + t2 - t3;

        let got = hsic(&x, &y, KernelPolicy::Fixed(spec)).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-10);
    }

    #[test]
    fn hsic_is_symmetric() {
        let x = random_rows(3, 9, 2);
        let y = random_rows(4, 9, 1);
        let policy = KernelPolicy::Fixed(KernelSpec::Gaussian { sigma: 1.0 });
        let a = hsic(&x, &y, policy).unwrap();
        let b = hsic(&y, &x, policy).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn hsic_nonnegative() {
        for seed in 0..10 {
            let x = random_rows(seed, 8, 1);
            let y = random_rows(seed + 50, 8, 1);
            let v = hsic(&x, &y, KernelPolicy::MedianGaussian).unwrap();
            assert!(v >= -1e-12, "seed {seed}: {v}");
        }
    }

    #[test]
    fn invariant_under_common_row_permutation() {
        let x = random_rows(10, 7, 1);
        let y = random_rows(11, 7, 2);
        let z = random_rows(12, 7, 1);
        let reg = OperatorRegularizer::default();
        let policy = KernelPolicy::Fixed(KernelSpec::Gaussian { sigma: 1.1 });
        let base = hsncic(&x, &y, &z, reg, policy).unwrap().value;

        let perm = [3usize, 0, 6, 1, 5, 2, 4];
        let permute = |m: &DMatrix<f64>| {
            DMatrix::from_fn(7, m.ncols(), |i, j| m[(perm[i], j)])
        };
        let permuted = hsncic(&permute(&x), &permute(&y), &permute(&z), reg, policy)
            .unwrap()
            .value;
        assert_abs_diff_eq!(base, permuted, epsilon = 1e-10);
    }

    #[test]
    fn shrinkage_eigenvalues_in_unit_interval() {
        let rows = random_rows(20, 10, 2);
        let k = centered_gram(KernelSpec::Gaussian { sigma: 1.0 }, &rows).unwrap();
        let r = shrinkage_operator(&k, 1e-3).unwrap();
        let sym = (&r + r.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(sym);
        for ev in eig.eigenvalues.iter() {
            assert!(*ev >= -1e-8 && *ev < 1.0, "eigenvalue {ev} outside [0, 1)");
        }
    }

    #[test]
    fn unconditional_fallback_drops_conditioning_term() {
        let x = random_rows(30, 8, 1);
        let y = random_rows(31, 8, 1);
        let reg = OperatorRegularizer::default();
        let policy = KernelPolicy::Fixed(KernelSpec::Gaussian { sigma: 1.0 });
        let v = hsncic_unconditional(&x, &y, reg, policy).unwrap();
        // Oracle: Tr[R_x R_y] with explicit inverses.
        let n = 8;
        let shrink = |rows: &DMatrix<f64>| {
            let k = centered_gram(KernelSpec::Gaussian { sigma: 1.0 }, rows).unwrap();
            let reg_m = &k + DMatrix::<f64>::identity(n, n) * (n as f64 * 1e-3);
            &k * reg_m.try_inverse().unwrap()
        };
        let expected = (shrink(&x) * shrink(&y)).trace();
        assert_abs_diff_eq!(v.value, expected, epsilon = 1e-10);
        assert!(v.sigma_z.is_none());
    }

    #[test]
    fn causality_blocks_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cols: Vec<(String, Vec<f64>)> = ["x", "y", "z"]
            .iter()
            .map(|c| {
                (
                    c.to_string(),
                    (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let panel = TimeSeriesPanel::new(cols, None).unwrap();
        let spec = LagSpec::new(vec![1, 3]).unwrap();
        let blocks = causality_blocks(&panel, "x", &["y"], &["z"], &spec).unwrap();
        assert_eq!(blocks.x.nrows(), 47);
        assert_eq!(blocks.x.ncols(), 1);
        assert_eq!(blocks.y.ncols(), 2); // one cause column at two lags
        assert_eq!(blocks.z.ncols(), 4); // own past + one side column at two lags
        // X holds future values, Y and Z lagged ones.
        let x_col = panel.column("x").unwrap();
        assert_eq!(blocks.x[(0, 0)], x_col[3]);
        assert_eq!(blocks.z[(0, 0)], x_col[2]); // lag 1 of own past
    }
}
