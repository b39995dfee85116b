//! Config-file overlay and resolution of the raw options into a validated
//! run configuration. Flags override file values; defaults fill the rest.

use causal_kit_core::{
    build_design, cross_validate, CausalError, CvGrid, GewekeKernelChoice, HistogramSpec,
    KernelKind, KernelPolicy, KernelSpec, LagSpec, MeasureSpec, SigmaPolicy, TimeSeriesPanel,
};
use serde::{Deserialize, Serialize};

use crate::args::{CommonArgs, MeasureId, OutputFormat};
use crate::CliError;

/// Optional values read from a TOML config file. Field names match the
/// long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<String>,
    pub delimiter: Option<char>,
    pub index_column: Option<bool>,
    pub pre: Option<Vec<String>>,
    pub measure: Option<String>,
    pub target: Option<String>,
    pub cause: Option<Vec<String>>,
    pub side: Option<Vec<String>>,
    pub lags: Option<Vec<usize>>,
    pub sigma: Option<toml::Value>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub bins: Option<usize>,
    pub cv: Option<bool>,
    pub cv_folds: Option<usize>,
    pub cv_gammas: Option<Vec<f64>>,
    pub cv_sigmas: Option<Vec<f64>>,
    pub side_present: Option<bool>,
    pub permutations: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub window: Option<usize>,
    pub step: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config file {path}: {e}")))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("cannot parse config file {path}: {e}")))
    }
}

/// Merges file values into unset CLI options.
pub fn overlay(args: &mut CommonArgs, file: &FileConfig) -> Result<(), CliError> {
    if args.input.is_none() {
        args.input.clone_from(&file.input);
    }
    if args.delimiter.is_none() {
        args.delimiter = file.delimiter;
    }
    if !args.index_column {
        args.index_column = file.index_column.unwrap_or(false);
    }
    if args.pre.is_empty() {
        if let Some(pre) = &file.pre {
            args.pre.clone_from(pre);
        }
    }
    if args.measure.is_none() {
        args.measure = match file.measure.as_deref() {
            None => None,
            Some("geweke-linear") => Some(MeasureId::GewekeLinear),
            Some("geweke-kernel") => Some(MeasureId::GewekeKernel),
            Some("hsncic") => Some(MeasureId::Hsncic),
            Some("transfer-entropy") => Some(MeasureId::TransferEntropy),
            Some("mutual-information") => Some(MeasureId::MutualInformation),
            Some(other) => {
                return Err(CliError::config(format!("unknown measure '{other}' in config file")))
            }
        };
    }
    if args.lags.is_empty() {
        if let Some(lags) = &file.lags {
            args.lags.clone_from(lags);
        }
    }
    if args.sigma.is_none() {
        args.sigma = match &file.sigma {
            None => None,
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(toml::Value::Float(v)) => Some(v.to_string()),
            Some(toml::Value::Integer(v)) => Some(v.to_string()),
            Some(other) => {
                return Err(CliError::config(format!("invalid sigma in config file: {other}")))
            }
        };
    }
    if args.gamma.is_none() {
        args.gamma = file.gamma;
    }
    if args.lambda.is_none() {
        args.lambda = file.lambda;
    }
    if args.bins.is_none() {
        args.bins = file.bins;
    }
    if !args.cv {
        args.cv = file.cv.unwrap_or(false);
    }
    if args.cv_folds.is_none() {
        args.cv_folds = file.cv_folds;
    }
    if args.cv_gammas.is_empty() {
        if let Some(g) = &file.cv_gammas {
            args.cv_gammas.clone_from(g);
        }
    }
    if args.cv_sigmas.is_empty() {
        if let Some(s) = &file.cv_sigmas {
            args.cv_sigmas.clone_from(s);
        }
    }
    if !args.side_present {
        args.side_present = file.side_present.unwrap_or(false);
    }
    if args.permutations.is_none() {
        args.permutations = file.permutations;
    }
    if args.seed.is_none() {
        args.seed = file.seed;
    }
    if args.out.is_none() {
        args.out.clone_from(&file.out);
    }
    if args.format.is_none() {
        args.format = match file.format.as_deref() {
            None => None,
            Some("csv") => Some(OutputFormat::Csv),
            Some("json") => Some(OutputFormat::Json),
            Some(other) => {
                return Err(CliError::config(format!("unknown format '{other}' in config file")))
            }
        };
    }
    Ok(())
}

/// Echo of the fully resolved configuration, embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub schema_version: u32,
    pub command: String,
    pub input: Option<String>,
    pub measure: String,
    pub target: Option<String>,
    pub cause: Vec<String>,
    pub side: Vec<String>,
    pub lags: Vec<usize>,
    pub instantaneous: bool,
    pub preprocessing: Vec<String>,
    pub permutations: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub resolved: causal_kit_core::ResolvedConfig,
}

pub fn measure_name(id: MeasureId) -> &'static str {
    match id {
        MeasureId::GewekeLinear => "geweke-linear",
        MeasureId::GewekeKernel => "geweke-kernel",
        MeasureId::Hsncic => "hsncic",
        MeasureId::TransferEntropy => "transfer-entropy",
        MeasureId::MutualInformation => "mutual-information",
    }
}

pub fn parse_sigma_policy(raw: &str) -> Result<SigmaPolicy, CliError> {
    match raw {
        "median" => Ok(SigmaPolicy::Median),
        "median-sq" => Ok(SigmaPolicy::MedianSquared),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0 && v.is_finite())
            .map(SigmaPolicy::Fixed)
            .ok_or_else(|| {
                CliError::config(format!(
                    "--sigma must be a positive number, 'median' or 'median-sq', got '{other}'"
                ))
            }),
    }
}

/// Applies the preprocessing pipeline in the order given. `log-returns`
/// applies to every column.
pub fn preprocess(
    panel: TimeSeriesPanel,
    steps: &[String],
) -> Result<TimeSeriesPanel, CausalError> {
    let mut panel = panel;
    for step in steps {
        panel = match step.as_str() {
            "log-returns" => {
                let names: Vec<String> = panel.column_names().map(str::to_owned).collect();
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                panel.log_returns(&refs)?
            }
            "demean" => panel.demean()?,
            "detrend" => panel.detrend()?,
            "difference" => panel.difference()?,
            other => {
                return Err(CausalError::InvalidParameter(format!(
                    "unknown preprocessing step '{other}'"
                )))
            }
        };
    }
    Ok(panel)
}

/// Everything needed to build per-query `MeasureSpec`s.
#[derive(Debug, Clone)]
pub struct MeasureOptions {
    pub id: MeasureId,
    pub sigma: Option<SigmaPolicy>,
    pub gamma: Option<f64>,
    pub lambda: f64,
    pub bins: usize,
    pub cv: bool,
    pub cv_folds: usize,
    pub cv_gammas: Vec<f64>,
    pub cv_sigmas: Vec<f64>,
}

impl MeasureOptions {
    pub fn from_common(args: &CommonArgs) -> Result<Self, CliError> {
        let id = args
            .measure
            .ok_or_else(|| CliError::config("--measure is required".into()))?;
        let sigma = args
            .sigma
            .as_deref()
            .map(parse_sigma_policy)
            .transpose()?;
        if let Some(bins) = args.bins {
            if bins < 2 {
                return Err(CliError::config("--bins must be at least 2".into()));
            }
        }
        Ok(Self {
            id,
            sigma,
            gamma: args.gamma,
            lambda: args.lambda.unwrap_or(1e-3),
            bins: args.bins.unwrap_or(4),
            cv: args.cv,
            cv_folds: args.cv_folds.unwrap_or(5),
            cv_gammas: args.cv_gammas.clone(),
            cv_sigmas: args.cv_sigmas.clone(),
        })
    }

    fn hist(&self) -> Result<HistogramSpec, CliError> {
        HistogramSpec::sample_min_max(self.bins).map_err(CliError::from)
    }

    /// Builds the measure for one (target, cause, side, lags) query,
    /// running cross-validation first when requested. Lag handling:
    /// a lag list containing 0 selects the instantaneous variant for the
    /// Geweke measures and is rejected for transfer entropy and HSNCIC.
    pub fn build(
        &self,
        panel: &TimeSeriesPanel,
        target: &str,
        cause: &[String],
        side: &[String],
        raw_lags: &[usize],
        instantaneous_flag: bool,
        seed: u64,
    ) -> Result<(MeasureSpec, LagSpec, bool), CliError> {
        if raw_lags.is_empty() {
            return Err(CliError::config("--lags is required".into()));
        }
        let wants_lag0 = raw_lags.contains(&0);
        let past: Vec<usize> = raw_lags.iter().copied().filter(|&l| l > 0).collect();

        match self.id {
            MeasureId::MutualInformation => {
                // Lag 0 is implied; past lags are a configuration error.
                if !past.is_empty() {
                    return Err(CliError::config(
                        "mutual-information implies lag 0; remove past lags".into(),
                    ));
                }
                let lags = LagSpec::new(vec![1]).map_err(CliError::from)?;
                Ok((
                    MeasureSpec::MutualInformation { hist: self.hist()? },
                    lags,
                    false,
                ))
            }
            MeasureId::TransferEntropy => {
                if wants_lag0 {
                    return Err(CliError::config(
                        "transfer entropy has no lag-0 variant; use mutual-information".into(),
                    ));
                }
                let lags = LagSpec::new(past).map_err(CliError::from)?;
                Ok((
                    MeasureSpec::TransferEntropy { hist: self.hist()? },
                    lags,
                    false,
                ))
            }
            MeasureId::Hsncic => {
                if wants_lag0 {
                    return Err(CliError::config(
                        "hsncic is not designed for instantaneous coupling (lag 0)".into(),
                    ));
                }
                let lags = LagSpec::new(past).map_err(CliError::from)?;
                let kernel = match self.sigma {
                    None | Some(SigmaPolicy::Median) | Some(SigmaPolicy::MedianSquared) => {
                        KernelPolicy::MedianGaussian
                    }
                    Some(SigmaPolicy::Fixed(sigma)) => {
                        KernelPolicy::Fixed(KernelSpec::Gaussian { sigma })
                    }
                };
                Ok((
                    MeasureSpec::Hsncic {
                        lambda: self.lambda,
                        kernel,
                    },
                    lags,
                    false,
                ))
            }
            MeasureId::GewekeLinear | MeasureId::GewekeKernel => {
                let instantaneous = instantaneous_flag || wants_lag0;
                let lags = if past.is_empty() {
                    LagSpec::new(vec![1]).map_err(CliError::from)?
                } else {
                    LagSpec::new(past).map_err(CliError::from)?
                };
                let kind = match self.id {
                    MeasureId::GewekeLinear => KernelKind::Linear,
                    _ => KernelKind::Gaussian,
                };
                let (gamma, kernel) = self.geweke_params(
                    panel, target, cause, side, &lags, kind, seed,
                )?;
                Ok((
                    MeasureSpec::Geweke {
                        kernel,
                        gamma,
                        instantaneous,
                    },
                    lags,
                    instantaneous,
                ))
            }
        }
    }

    fn geweke_params(
        &self,
        panel: &TimeSeriesPanel,
        target: &str,
        cause: &[String],
        side: &[String],
        lags: &LagSpec,
        kind: KernelKind,
        seed: u64,
    ) -> Result<(f64, GewekeKernelChoice), CliError> {
        if self.cv {
            let cause_refs: Vec<&str> = cause.iter().map(String::as_str).collect();
            let side_refs: Vec<&str> = side.iter().map(String::as_str).collect();
            let variant = if side.is_empty() {
                causal_kit_core::ModelVariant::XAndY
            } else {
                causal_kit_core::ModelVariant::XYAndZ
            };
            let design = build_design(panel, target, &cause_refs, &side_refs, lags, variant)?;
            let mut grid = CvGrid::dyadic_default(seed);
            grid.folds = self.cv_folds;
            if !self.cv_gammas.is_empty() {
                grid.gammas.clone_from(&self.cv_gammas);
            }
            if !self.cv_sigmas.is_empty() {
                grid.sigmas.clone_from(&self.cv_sigmas);
            }
            let report = cross_validate(&design, kind, &grid)?;
            let kernel = match (kind, report.best_sigma) {
                (KernelKind::Linear, _) => GewekeKernelChoice::Linear,
                (KernelKind::Gaussian, Some(sigma)) => {
                    GewekeKernelChoice::Gaussian(SigmaPolicy::Fixed(sigma))
                }
                (KernelKind::Gaussian, None) => {
                    return Err(CliError::config(
                        "cross-validation returned no kernel width".into(),
                    ))
                }
            };
            return Ok((report.best_gamma, kernel));
        }

        let default_gamma = match kind {
            KernelKind::Linear => causal_kit_core::DEFAULT_LINEAR_GAMMA,
            KernelKind::Gaussian => causal_kit_core::DEFAULT_KERNEL_GAMMA,
        };
        let gamma = self.gamma.unwrap_or(default_gamma);
        let kernel = match kind {
            KernelKind::Linear => GewekeKernelChoice::Linear,
            KernelKind::Gaussian => {
                GewekeKernelChoice::Gaussian(self.sigma.unwrap_or(SigmaPolicy::Median))
            }
        };
        Ok((gamma, kernel))
    }
}

