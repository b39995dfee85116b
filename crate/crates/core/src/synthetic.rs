//! Seeded generators for the two synthetic benchmark systems: the
//! eight-series linear example with shifted correlated Gaussians, and the
//! nonlinear trivariate chain `x -> y -> z` with a squared coupling.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{CausalError, Result};
use crate::panel::TimeSeriesPanel;
use crate::seeding::rng_for;

/// One directed lag relation: `cause` leads `effect` by `lag` steps, so
/// that `corr(cause_{t-lag}, effect_t)` carries the block correlation.
/// `lag` 0 is instantaneous coupling; negative lags state the reverse
/// direction and are accepted for redundancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagRelation {
    /// 0-based index of the effect column (the table's row variable).
    pub effect: usize,
    /// 0-based index of the cause column (the table's column variable).
    pub cause: usize,
    /// Positive: cause precedes effect by this many steps.
    pub lag: i64,
}

/// Configuration of the eight-series linear benchmark.
#[derive(Debug, Clone)]
pub struct LinearBenchmarkSpec {
    /// Output rows per column.
    pub length: usize,
    /// Correlation matrix of the underlying i.i.d. Gaussian vectors:
    /// symmetric, unit diagonal, positive definite.
    pub correlation: DMatrix<f64>,
    /// Sparse shift map; entries absent from the list are unconstrained.
    pub lag_map: Vec<LagRelation>,
    /// Master seed.
    pub seed: u64,
}

impl LinearBenchmarkSpec {
    /// The benchmark defaults: eight series of length 250, correlation 0.7
    /// inside the coupled blocks and 0.1 elsewhere, and the lag pattern
    /// ts1<->ts2 at 0, ts3->ts4 at 1, ts5->ts6 at 1, ts5->ts7 at 2,
    /// ts5->ts8 at 3, ts6->ts7 at 1, ts6->ts8 at 2, ts7->ts8 at 1.
    pub fn new(seed: u64) -> Self {
        let mut correlation = DMatrix::from_element(8, 8, 0.1);
        for i in 0..8 {
            correlation[(i, i)] = 1.0;
        }
        for (a, b) in [(0, 1), (2, 3), (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7)] {
            correlation[(a, b)] = 0.7;
            correlation[(b, a)] = 0.7;
        }
        let lag_map = vec![
            LagRelation { effect: 1, cause: 0, lag: 0 },
            LagRelation { effect: 3, cause: 2, lag: 1 },
            LagRelation { effect: 5, cause: 4, lag: 1 },
            LagRelation { effect: 6, cause: 4, lag: 2 },
            LagRelation { effect: 7, cause: 4, lag: 3 },
            LagRelation { effect: 6, cause: 5, lag: 1 },
            LagRelation { effect: 7, cause: 5, lag: 2 },
            LagRelation { effect: 7, cause: 6, lag: 1 },
        ];
        Self {
            length: 250,
            correlation,
            lag_map,
            seed,
        }
    }
}

/// Configuration of the nonlinear trivariate benchmark
/// `x_t = a x_{t-1} + e_x`, `y_t = b y_{t-1} + d x_{t-1}^2 + e_y`,
/// `z_t = c z_{t-1} + e y_{t-1} + e_z`.
#[derive(Debug, Clone, Copy)]
pub struct NonlinearBenchmarkSpec {
    /// Output rows (after burn-in).
    pub length: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    /// Standard deviation of the i.i.d. Gaussian innovations.
    pub noise_std: f64,
    /// Master seed.
    pub seed: u64,
}

impl NonlinearBenchmarkSpec {
    /// The benchmark defaults: length 500 and coefficients
    /// a = 0.2, b = 0.5, c = 0.8, d = 0.8, e = 0.7 with unit noise.
    pub fn new(seed: u64) -> Self {
        Self {
            length: 500,
            a: 0.2,
            b: 0.5,
            c: 0.8,
            d: 0.8,
            e: 0.7,
            noise_std: 1.0,
            seed,
        }
    }
}

/// Per-column forward offsets realizing a sparse lag map: column `i` reads
/// the raw sample stream at `t + offset[i]`, and `offset[cause] -
/// offset[effect] = lag` for every relation. Offsets are propagated over
/// the relation graph and normalized to start at zero; inconsistent maps
/// are rejected.
fn offsets_from_lag_map(k: usize, lag_map: &[LagRelation]) -> Result<Vec<usize>> {
    let mut offset: Vec<Option<i64>> = vec![None; k];
    // Edges as (from, to, difference): offset[to] = offset[from] + diff.
    let mut edges: Vec<Vec<(usize, i64)>> = vec![Vec::new(); k];
    for rel in lag_map {
        if rel.effect >= k || rel.cause >= k {
            return Err(CausalError::InvalidParameter(format!(
                "lag relation ({}, {}) out of range for {k} series",
                rel.effect, rel.cause
            )));
        }
        edges[rel.effect].push((rel.cause, rel.lag));
        edges[rel.cause].push((rel.effect, -rel.lag));
    }
    for start in 0..k {
        if offset[start].is_some() {
            continue;
        }
        offset[start] = Some(0);
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            let base = offset[node].expect("visited nodes have offsets");
            for &(next, diff) in &edges[node] {
                let value = base + diff;
                match offset[next] {
                    None => {
                        offset[next] = Some(value);
                        stack.push(next);
                    }
                    Some(existing) if existing != value => {
                        return Err(CausalError::InvalidParameter(
                            "lag map is inconsistent: no shift assignment realizes it".into(),
                        ));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let min = offset.iter().map(|o| o.unwrap()).min().unwrap_or(0);
    Ok(offset.iter().map(|o| (o.unwrap() - min) as usize).collect())
}

/// Draws correlated Gaussian vectors through a symmetric square root of
/// the correlation matrix, then shifts columns per the lag map and
/// truncates everything to a common rectangular window.
pub fn generate_linear_benchmark(spec: &LinearBenchmarkSpec) -> Result<TimeSeriesPanel> {
    let k = spec.correlation.nrows();
    if spec.correlation.ncols() != k || k == 0 {
        return Err(CausalError::InvalidParameter(
            "correlation matrix must be square and non-empty".into(),
        ));
    }
    if spec.length == 0 {
        return Err(CausalError::LengthTooShort {
            required: 1,
            actual: 0,
        });
    }
    for i in 0..k {
        if (spec.correlation[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(CausalError::InvalidParameter(
                "correlation matrix must have a unit diagonal".into(),
            ));
        }
        for j in 0..k {
            if (spec.correlation[(i, j)] - spec.correlation[(j, i)]).abs() > 1e-12 {
                return Err(CausalError::InvalidParameter(
                    "correlation matrix must be symmetric".into(),
                ));
            }
        }
    }
    let eigen = nalgebra::SymmetricEigen::new(spec.correlation.clone());
    if eigen.eigenvalues.iter().any(|&ev| ev <= 1e-10) {
        return Err(CausalError::NotPositiveDefinite);
    }
    let sqrt_eig = DMatrix::from_diagonal(&eigen.eigenvalues.map(f64::sqrt));
    let factor = &eigen.eigenvectors * sqrt_eig * eigen.eigenvectors.transpose();

    let offsets = offsets_from_lag_map(k, &spec.lag_map)?;
    let max_offset = offsets.iter().copied().max().unwrap_or(0);
    let raw_len = spec.length + max_offset;

    let mut rng = rng_for(spec.seed, 0, 0);
    let mut raw = vec![vec![0.0f64; raw_len]; k];
    for t in 0..raw_len {
        let g = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = &factor * g;
        for (c, row) in raw.iter_mut().enumerate() {
            row[t] = v[c];
        }
    }

    let columns = (0..k)
        .map(|c| {
            let name = format!("ts{}", c + 1);
            let values = raw[c][offsets[c]..offsets[c] + spec.length].to_vec();
            (name, values)
        })
        .collect();
    TimeSeriesPanel::new(columns, None)
}

/// Iterates the trivariate recursion from zero initial conditions with a
/// 100-step burn-in discarded before emitting `length` samples.
pub fn generate_nonlinear_benchmark(spec: &NonlinearBenchmarkSpec) -> Result<TimeSeriesPanel> {
    for (name, v) in [("a", spec.a), ("b", spec.b), ("c", spec.c)] {
        if v.abs() >= 1.0 {
            return Err(CausalError::InvalidParameter(format!(
                "autoregressive coefficient {name} = {v} is unstable"
            )));
        }
    }
    if spec.noise_std < 0.0 || !spec.noise_std.is_finite() {
        return Err(CausalError::InvalidParameter(
            "noise standard deviation must be finite and nonnegative".into(),
        ));
    }
    if spec.length == 0 {
        return Err(CausalError::LengthTooShort {
            required: 1,
            actual: 0,
        });
    }

    const BURN_IN: usize = 100;
    let total = BURN_IN + spec.length;
    let mut rng = rng_for(spec.seed, 0, 0);
    let mut noise = |std: f64| -> f64 { std * rng.sample::<f64, _>(StandardNormal) };

    let (mut x_prev, mut y_prev, mut z_prev) = (0.0f64, 0.0, 0.0);
    let mut x = Vec::with_capacity(spec.length);
    let mut y = Vec::with_capacity(spec.length);
    let mut z = Vec::with_capacity(spec.length);
    for t in 0..total {
        let x_t = spec.a * x_prev + noise(spec.noise_std);
        let y_t = spec.b * y_prev + spec.d * x_prev * x_prev + noise(spec.noise_std);
        let z_t = spec.c * z_prev + spec.e * y_prev + noise(spec.noise_std);
        if t >= BURN_IN {
            x.push(x_t);
            y.push(y_t);
            z.push(z_t);
        }
        (x_prev, y_prev, z_prev) = (x_t, y_t, z_t);
    }
    TimeSeriesPanel::new(
        vec![("x".into(), x), ("y".into(), y), ("z".into(), z)],
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn default_linear_benchmark_shape() {
        let panel = generate_linear_benchmark(&LinearBenchmarkSpec::new(1)).unwrap();
        assert_eq!(panel.num_columns(), 8);
        assert_eq!(panel.len(), 250);
        let names: Vec<_> = panel.column_names().collect();
        assert_eq!(names[0], "ts1");
        assert_eq!(names[7], "ts8");
    }

    #[test]
    fn instantaneous_pair_correlation() {
        let mut spec = LinearBenchmarkSpec::new(2);
        spec.length = 10_000;
        let panel = generate_linear_benchmark(&spec).unwrap();
        let c = sample_corr(panel.column("ts1").unwrap(), panel.column("ts2").unwrap());
        assert!((c - 0.7).abs() < 0.05, "corr(ts1, ts2) = {c}");
    }

    #[test]
    fn lagged_correlations_match_lag_map() {
        let mut spec = LinearBenchmarkSpec::new(3);
        spec.length = 10_000;
        let panel = generate_linear_benchmark(&spec).unwrap();
        let lagged = |cause: &str, effect: &str, lag: usize| {
            let c = panel.column(cause).unwrap();
            let e = panel.column(effect).unwrap();
            sample_corr(&c[..c.len() - lag], &e[lag..])
        };
        // The seven directed relations all carry correlation 0.7 at their lag.
        for (cause, effect, lag) in [
            ("ts3", "ts4", 1),
            ("ts5", "ts6", 1),
            ("ts5", "ts7", 2),
            ("ts5", "ts8", 3),
            ("ts6", "ts7", 1),
            ("ts6", "ts8", 2),
            ("ts7", "ts8", 1),
        ] {
            let c = lagged(cause, effect, lag);
            assert!((c - 0.7).abs() < 0.05, "{cause}->{effect}@{lag}: {c}");
        }
        // At the wrong alignment the correlation collapses to the residual.
        let c0 = sample_corr(panel.column("ts3").unwrap(), panel.column("ts4").unwrap());
        assert!(c0.abs() < 0.2, "corr(ts3_t, ts4_t) = {c0}");
    }

    #[test]
    fn columns_have_unit_variance() {
        let mut spec = LinearBenchmarkSpec::new(4);
        spec.length = 10_000;
        let panel = generate_linear_benchmark(&spec).unwrap();
        for name in ["ts1", "ts4", "ts8"] {
            let col = panel.column(name).unwrap();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / col.len() as f64;
            assert!((var - 1.0).abs() < 0.1, "{name} variance {var}");
        }
    }

    #[test]
    fn generators_deterministic_under_seed() {
        let a = generate_linear_benchmark(&LinearBenchmarkSpec::new(9)).unwrap();
        let b = generate_linear_benchmark(&LinearBenchmarkSpec::new(9)).unwrap();
        assert_eq!(a.column("ts5").unwrap(), b.column("ts5").unwrap());

        let c = generate_nonlinear_benchmark(&NonlinearBenchmarkSpec::new(9)).unwrap();
        let d = generate_nonlinear_benchmark(&NonlinearBenchmarkSpec::new(9)).unwrap();
        assert_eq!(c.column("z").unwrap(), d.column("z").unwrap());
        let e = generate_nonlinear_benchmark(&NonlinearBenchmarkSpec::new(10)).unwrap();
        assert_ne!(c.column("z").unwrap(), e.column("z").unwrap());
    }

    #[test]
    fn non_positive_definite_rejected() {
        let mut spec = LinearBenchmarkSpec::new(0);
        spec.correlation = DMatrix::from_element(3, 3, 1.0);
        spec.lag_map = Vec::new();
        assert!(matches!(
            generate_linear_benchmark(&spec).unwrap_err(),
            CausalError::NotPositiveDefinite
        ));
    }

    #[test]
    fn inconsistent_lag_map_rejected() {
        let mut spec = LinearBenchmarkSpec::new(0);
        spec.lag_map.push(LagRelation {
            effect: 7,
            cause: 4,
            lag: 1, // conflicts with the default ts5 -> ts8 at lag 3
        });
        assert!(generate_linear_benchmark(&spec).is_err());
    }

    #[test]
    fn nonlinear_default_shape() {
        let panel = generate_nonlinear_benchmark(&NonlinearBenchmarkSpec::new(5)).unwrap();
        assert_eq!(panel.num_columns(), 3);
        assert_eq!(panel.len(), 500);
    }

    #[test]
    fn zero_noise_zero_init_is_fixed_point() {
        let mut spec = NonlinearBenchmarkSpec::new(0);
        spec.noise_std = 0.0;
        let panel = generate_nonlinear_benchmark(&spec).unwrap();
        for name in ["x", "y", "z"] {
            assert!(panel.column(name).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn x_variance_matches_ar1_oracle() {
        let mut spec = NonlinearBenchmarkSpec::new(11);
        spec.length = 100_000;
        let panel = generate_nonlinear_benchmark(&spec).unwrap();
        let x = panel.column("x").unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64;
        // AR(1) stationary variance 1 / (1 - a^2).
        let expected = 1.0 / (1.0 - spec.a * spec.a);
        assert!(
            (var - expected).abs() / expected < 0.03,
            "var {var} vs {expected}"
        );
    }
}
