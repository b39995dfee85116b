//! Implementations of the five subcommands.

use std::path::Path;
use std::result::Result;

use causal_kit_core::*;
use rayon::prelude::*;

use crate::args::*;
use crate::config::{measure_name, overlay, preprocess, ConfigEcho, FileConfig, MeasureOptions};
use crate::output::{self, ScanRow};
use crate::CliError;

fn load_panel(common: &CommonArgs) -> Result<TimeSeriesPanel, CliError> {
    let input = common
        .input
        .as_deref()
        .ok_or_else(|| CliError::config("--input is required".into()))?;
    let options = CsvOptions {
        delimiter: common.delimiter.map_or(b',', |c| c as u8),
        first_column_is_index: common.index_column,
    };
    let panel = TimeSeriesPanel::load_csv(input, options)?;
    Ok(preprocess(panel, &common.pre)?)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn apply_config_file(common: &mut CommonArgs) -> Result<(), CliError> {
    if let Some(path) = common.config.clone() {
        let file = FileConfig::load(&path)?;
        overlay(common, &file)?;
    }
    Ok(())
}

pub fn gen(system: GenSystem) -> Result<(), CliError> {
    let (panel, out) = match system {
        GenSystem::LinearBench { length, seed, out } => {
            let mut spec = LinearBenchmarkSpec::new(resolve_seed(seed));
            spec.length = length;
            (generate_linear_benchmark(&spec)?, out)
        }
        GenSystem::NonlinearBench {
            length,
            seed,
            a,
            b,
            c,
            d,
            e,
            noise_std,
            out,
        } => {
            let spec = NonlinearBenchmarkSpec {
                length,
                a,
                b,
                c,
                d,
                e,
                noise_std,
                seed: resolve_seed(seed),
            };
            (generate_nonlinear_benchmark(&spec)?, out)
        }
    };
    let file = std::fs::File::create(&out)
        .map_err(|e| CliError::data(format!("cannot write {out}: {e}")))?;
    panel.write_csv(file)?;
    eprintln!("wrote {out}");
    Ok(())
}

pub fn test(mut args: TestArgs) -> Result<(), CliError> {
    apply_config_file(&mut args.common)?;
    let file = args
        .common
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()?
        .unwrap_or_default();
    if args.target.is_none() {
        args.target.clone_from(&file.target);
    }
    if args.cause.is_empty() {
        if let Some(cause) = &file.cause {
            args.cause.clone_from(cause);
        }
    }
    if args.side.is_empty() {
        if let Some(side) = &file.side {
            args.side.clone_from(side);
        }
    }

    let panel = load_panel(&args.common)?;
    let target = args
        .target
        .ok_or_else(|| CliError::config("--target is required".into()))?;
    if args.cause.is_empty() {
        return Err(CliError::config("--cause is required".into()));
    }
    let options = MeasureOptions::from_common(&args.common)?;
    let seed = resolve_seed(args.common.seed);
    let (measure, lags, instantaneous) = options.build(
        &panel,
        &target,
        &args.cause,
        &args.side,
        &args.common.lags,
        args.instantaneous,
        seed,
    )?;
    let lags_spec = if args.common.side_present {
        lags.with_present_z()
    } else {
        lags
    };

    let query = CausalityQuery {
        target: target.clone(),
        cause: args.cause.clone(),
        side: args.side.clone(),
        lags: lags_spec.clone(),
        measure,
    };
    let plan = PermutationPlan {
        n_r: args.common.permutations.unwrap_or(200),
        seed,
    };
    let (result, resolved) = permutation_test_detailed(&query, &panel, &plan)?;

    let echo = ConfigEcho {
        schema_version: output::SCHEMA_VERSION,
        command: "test".into(),
        input: args.common.input.clone(),
        measure: measure_name(options.id).into(),
        target: Some(target),
        cause: args.cause,
        side: args.side,
        lags: lags_spec.lags().to_vec(),
        instantaneous,
        preprocessing: args.common.pre.clone(),
        permutations: plan.n_r,
        seed,
        window: None,
        step: None,
        resolved,
    };

    let out = args
        .common
        .out
        .ok_or_else(|| CliError::config("--out is required".into()))?;
    match args.common.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => output::write_json(
            Path::new(&out),
            &output::TestDocument {
                config: &echo,
                observed: result.observed,
                p_value: result.p_value,
                surrogates: &result.surrogates,
            },
        )?,
        OutputFormat::Csv => output::write_test_csv(Path::new(&out), &echo, &result)?,
    }
    eprintln!(
        "{}: observed {:.6}, p = {}",
        echo.measure, result.observed, result.p_value
    );
    Ok(())
}

pub fn matrix(mut args: MatrixArgs) -> Result<(), CliError> {
    apply_config_file(&mut args.common)?;
    let panel = load_panel(&args.common)?;
    let columns: Vec<String> = if args.columns.is_empty() {
        panel.column_names().map(str::to_owned).collect()
    } else {
        args.columns.clone()
    };
    if columns.len() < 2 {
        return Err(CliError::config(
            "matrix requires at least two columns".into(),
        ));
    }
    let options = MeasureOptions::from_common(&args.common)?;
    let seed = resolve_seed(args.common.seed);
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    // Hyperparameters resolve per pair inside the core; CV, when asked,
    // runs once on the first pair's design as the experiment-level choice.
    let (measure, lags, instantaneous) = options.build(
        &panel,
        &columns[0],
        &columns[1..2].to_vec(),
        &[],
        &args.common.lags,
        false,
        seed,
    )?;
    let plan = PermutationPlan {
        n_r: args.common.permutations.unwrap_or(200),
        seed,
    };
    let matrix = pvalue_matrix(&panel, &refs, &lags, &measure, &plan)?;

    let echo = ConfigEcho {
        schema_version: output::SCHEMA_VERSION,
        command: "matrix".into(),
        input: args.common.input.clone(),
        measure: measure_name(options.id).into(),
        target: None,
        cause: columns.clone(),
        side: Vec::new(),
        lags: lags.lags().to_vec(),
        instantaneous,
        preprocessing: args.common.pre.clone(),
        permutations: plan.n_r,
        seed,
        window: None,
        step: None,
        resolved: ResolvedConfig::default(),
    };
    let out = args
        .common
        .out
        .ok_or_else(|| CliError::config("--out is required".into()))?;
    let (csv_path, json_path) = output::twin_paths(&out);
    output::write_matrix_csv(&csv_path, &echo, &columns, &matrix)?;
    output::write_json(
        &json_path,
        &output::MatrixDocument {
            config: &echo,
            columns: &columns,
            p_values: output::matrix_to_nullable(&matrix),
        },
    )?;
    eprintln!(
        "wrote {} and {}",
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

pub fn scan(mut args: ScanArgs) -> Result<(), CliError> {
    apply_config_file(&mut args.common)?;
    let file = args
        .common
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()?
        .unwrap_or_default();
    if args.target.is_none() {
        args.target.clone_from(&file.target);
    }
    if args.cause.is_none() {
        args.cause = file.cause.as_ref().and_then(|c| c.first().cloned());
    }
    if args.side.is_empty() {
        if let Some(side) = &file.side {
            args.side.clone_from(side);
        }
    }
    if args.window.is_none() {
        args.window = file.window;
    }
    if args.step.is_none() {
        args.step = file.step;
    }

    let panel = load_panel(&args.common)?;
    let target = args
        .target
        .ok_or_else(|| CliError::config("--target is required".into()))?;
    let cause = args
        .cause
        .ok_or_else(|| CliError::config("--cause is required".into()))?;
    let options = MeasureOptions::from_common(&args.common)?;
    let seed = resolve_seed(args.common.seed);

    // An absent window plan means one full-length window.
    let wplan = WindowPlan {
        window_length: args.window.unwrap_or(panel.len()),
        step: args.step.unwrap_or(25),
    };
    let plan = PermutationPlan {
        n_r: args.common.permutations.unwrap_or(200),
        seed,
    };

    // Forward, reverse, and (with side information) the conditional pair.
    let mut directions: Vec<(String, String, Vec<String>)> = vec![
        (cause.clone(), target.clone(), Vec::new()),
        (target.clone(), cause.clone(), Vec::new()),
    ];
    if !args.side.is_empty() {
        directions.push((cause.clone(), target.clone(), args.side.clone()));
        directions.push((target.clone(), cause.clone(), args.side.clone()));
    }

    let mut rows: Vec<ScanRow> = Vec::new();
    let mut resolved_echo = ResolvedConfig::default();
    let mut lag_list: Vec<usize> = Vec::new();
    let mut instantaneous = false;
    for (dir_cause, dir_target, dir_side) in &directions {
        let (measure, lags, inst) = options.build(
            &panel,
            dir_target,
            std::slice::from_ref(dir_cause),
            dir_side,
            &args.common.lags,
            false,
            seed,
        )?;
        instantaneous = inst;
        lag_list = lags.lags().to_vec();
        let lags = if args.common.side_present {
            lags.with_present_z()
        } else {
            lags
        };
        let query = CausalityQuery {
            target: dir_target.clone(),
            cause: vec![dir_cause.clone()],
            side: dir_side.clone(),
            lags,
            measure,
        };
        let results = rolling_scan(&query, &panel, &wplan, &plan)?;
        let label = if dir_side.is_empty() {
            format!("{dir_cause}->{dir_target}")
        } else {
            format!("{dir_cause}->{dir_target}|{}", dir_side.join("+"))
        };
        // Kernel widths resolve per window; the echo shows the first
        // window's resolution as representative.
        let (_, resolved) = measure_value(&query, &panel.window(0, wplan.window_length)?)?;
        resolved_echo = resolved;
        for (start, result) in results {
            rows.push(ScanRow {
                window_start: start,
                window_end: start + wplan.window_length,
                dir: label.clone(),
                value: result.observed,
                p_value: result.p_value,
            });
        }
    }

    let echo = ConfigEcho {
        schema_version: output::SCHEMA_VERSION,
        command: "scan".into(),
        input: args.common.input.clone(),
        measure: measure_name(options.id).into(),
        target: Some(target),
        cause: vec![cause],
        side: args.side.clone(),
        lags: lag_list,
        instantaneous,
        preprocessing: args.common.pre.clone(),
        permutations: plan.n_r,
        seed,
        window: Some(wplan.window_length),
        step: Some(wplan.step),
        resolved: resolved_echo,
    };
    let out = args
        .common
        .out
        .ok_or_else(|| CliError::config("--out is required".into()))?;
    match args.common.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => output::write_scan_csv(Path::new(&out), &echo, &rows)?,
        OutputFormat::Json => output::write_json(
            Path::new(&out),
            &output::ScanDocument {
                config: &echo,
                rows: &rows,
            },
        )?,
    }
    eprintln!("wrote {out} ({} rows)", rows.len());
    Ok(())
}

pub fn reproduce(args: ReproduceArgs) -> Result<(), CliError> {
    let seed = args.seed.ok_or_else(|| {
        CliError::config("reproduce requires --seed: reproducibility is the point".into())
    })?;
    let out_dir = Path::new(&args.out);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;

    match args.experiment.as_str() {
        "linear-bench" => reproduce_linear(&args, seed, out_dir),
        "nonlinear-bench" => reproduce_nonlinear(&args, seed, out_dir),
        other => Err(CliError::config(format!(
            "unknown experiment '{other}': expected linear-bench or nonlinear-bench"
        ))),
    }
}

fn lag_configs(selection: &str) -> Result<Vec<(String, Vec<usize>)>, CliError> {
    let singles: Vec<(String, Vec<usize>)> = (0..=4)
        .map(|l| (l.to_string(), if l == 0 { vec![0] } else { vec![l] }))
        .collect();
    let ranges: Vec<(String, Vec<usize>)> = [
        (1, 10),
        (1, 20),
        (1, 5),
        (6, 10),
        (11, 15),
        (1, 3),
        (4, 6),
        (7, 9),
    ]
    .iter()
    .map(|&(lo, hi)| (format!("{lo}-{hi}"), (lo..=hi).collect()))
    .collect();

    match selection {
        "all" => Ok(singles.into_iter().chain(ranges).collect()),
        "singles" => Ok(singles),
        list => list
            .split(',')
            .map(|item| {
                let item = item.trim();
                if let Some((lo, hi)) = item.split_once('-') {
                    let lo: usize = lo.parse().map_err(|_| {
                        CliError::config(format!("bad lag range '{item}'"))
                    })?;
                    let hi: usize = hi.parse().map_err(|_| {
                        CliError::config(format!("bad lag range '{item}'"))
                    })?;
                    Ok((item.to_string(), (lo..=hi).collect()))
                } else {
                    let l: usize = item
                        .parse()
                        .map_err(|_| CliError::config(format!("bad lag '{item}'")))?;
                    Ok((item.to_string(), if l == 0 { vec![0] } else { vec![l] }))
                }
            })
            .collect(),
    }
}

fn reproduce_linear(args: &ReproduceArgs, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let mut spec = LinearBenchmarkSpec::new(seed);
    spec.length = args.length.unwrap_or(250);
    let panel = generate_linear_benchmark(&spec)?;
    let panel_path = out_dir.join("panel.csv");
    panel.write_csv(
        std::fs::File::create(&panel_path)
            .map_err(|e| CliError::data(format!("cannot write panel.csv: {e}")))?,
    )?;

    let columns: Vec<String> = panel.column_names().map(str::to_owned).collect();
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let plan = PermutationPlan {
        n_r: args.permutations,
        seed,
    };

    let measure_for = |id: MeasureId, instantaneous: bool| -> MeasureSpec {
        match id {
            MeasureId::GewekeLinear => MeasureSpec::Geweke {
                kernel: GewekeKernelChoice::Linear,
                gamma: DEFAULT_LINEAR_GAMMA,
                instantaneous,
            },
            MeasureId::GewekeKernel => MeasureSpec::Geweke {
                kernel: GewekeKernelChoice::Gaussian(SigmaPolicy::Median),
                gamma: DEFAULT_KERNEL_GAMMA,
                instantaneous,
            },
            MeasureId::Hsncic => MeasureSpec::Hsncic {
                lambda: 1e-3,
                kernel: KernelPolicy::MedianGaussian,
            },
            MeasureId::TransferEntropy => MeasureSpec::TransferEntropy {
                hist: HistogramSpec::default(),
            },
            MeasureId::MutualInformation => MeasureSpec::MutualInformation {
                hist: HistogramSpec::default(),
            },
        }
    };

    let mut jobs: Vec<(String, MeasureSpec, Vec<usize>, &'static str, bool)> = Vec::new();
    for (label, lags) in lag_configs(&args.lag_sets)? {
        if lags == [0] {
            // Lag 0: mutual information plus the instantaneous Geweke
            // indices; HSNCIC is not designed for instantaneous coupling.
            jobs.push((
                format!("mi_lags_{label}"),
                measure_for(MeasureId::MutualInformation, false),
                vec![1],
                "mutual-information",
                false,
            ));
            jobs.push((
                format!("gc_inst_lags_{label}"),
                measure_for(MeasureId::GewekeLinear, true),
                vec![1],
                "geweke-linear",
                true,
            ));
            jobs.push((
                format!("kg_inst_lags_{label}"),
                measure_for(MeasureId::GewekeKernel, true),
                vec![1],
                "geweke-kernel",
                true,
            ));
            continue;
        }
        let multi = lags.len() > 1;
        jobs.push((
            format!("gc_lags_{label}"),
            measure_for(MeasureId::GewekeLinear, false),
            lags.clone(),
            "geweke-linear",
            false,
        ));
        jobs.push((
            format!("kg_lags_{label}"),
            measure_for(MeasureId::GewekeKernel, false),
            lags.clone(),
            "geweke-kernel",
            false,
        ));
        jobs.push((
            format!("hs_lags_{label}"),
            measure_for(MeasureId::Hsncic, false),
            lags.clone(),
            "hsncic",
            false,
        ));
        if !multi {
            // Transfer entropy analyses one lag at a time.
            jobs.push((
                format!("te_lags_{label}"),
                measure_for(MeasureId::TransferEntropy, false),
                lags.clone(),
                "transfer-entropy",
                false,
            ));
        }
    }

    for (stem, measure, lags, measure_label, instantaneous) in jobs {
        let lag_spec = LagSpec::new(lags.clone())?;
        let matrix = pvalue_matrix(&panel, &refs, &lag_spec, &measure, &plan)?;
        let echo = ConfigEcho {
            schema_version: output::SCHEMA_VERSION,
            command: "reproduce linear-bench".into(),
            input: Some(panel_path.display().to_string()),
            measure: measure_label.into(),
            target: None,
            cause: columns.clone(),
            side: Vec::new(),
            lags,
            instantaneous,
            preprocessing: Vec::new(),
            permutations: plan.n_r,
            seed,
            window: None,
            step: None,
            resolved: ResolvedConfig::default(),
        };
        output::write_matrix_csv(&out_dir.join(format!("{stem}.csv")), &echo, &columns, &matrix)?;
        output::write_json(
            &out_dir.join(format!("{stem}.json")),
            &output::MatrixDocument {
                config: &echo,
                columns: &columns,
                p_values: output::matrix_to_nullable(&matrix),
            },
        )?;
        eprintln!("done {stem}");
    }
    write_report_config(out_dir, "linear-bench", args, seed)
}

#[derive(serde::Serialize)]
struct NonlinearRow {
    realisation: usize,
    measure: String,
    conditioning: String,
    value: f64,
}

fn reproduce_nonlinear(args: &ReproduceArgs, seed: u64, out_dir: &Path) -> Result<(), CliError> {
    let length = args.length.unwrap_or(500);
    let lags = LagSpec::new(vec![1, 2])?;

    let rows: Vec<Vec<NonlinearRow>> = (0..args.realisations)
        .into_par_iter()
        .map(|r| -> Result<Vec<NonlinearRow>, CausalError> {
            let mut spec = NonlinearBenchmarkSpec::new(seeding::child_seed(
                seed,
                seeding::DOMAIN_REALISATION,
                r as u64,
            ));
            spec.length = length;
            let panel = generate_nonlinear_benchmark(&spec)?.demean()?;

            let mut out = Vec::new();
            let mut push = |measure: &str, conditioning: &str, value: f64| {
                out.push(NonlinearRow {
                    realisation: r,
                    measure: measure.into(),
                    conditioning: conditioning.into(),
                    value,
                });
            };

            for (name, kernel) in [
                ("geweke-linear", GewekeKernelChoice::Linear),
                (
                    "geweke-gaussian",
                    GewekeKernelChoice::Gaussian(SigmaPolicy::Median),
                ),
            ] {
                for (conditioning, side) in [("none", Vec::new()), ("y", vec!["y".to_string()])] {
                    let query = CausalityQuery {
                        target: "z".into(),
                        cause: vec!["x".into()],
                        side,
                        lags: lags.clone(),
                        measure: MeasureSpec::Geweke {
                            kernel,
                            gamma: DEFAULT_KERNEL_GAMMA,
                            instantaneous: false,
                        },
                    };
                    let (value, _) = measure_value(&query, &panel)?;
                    push(name, conditioning, value);
                }
            }

            for (conditioning, side) in [("none", Vec::new()), ("y", vec!["y".to_string()])] {
                let query = CausalityQuery {
                    target: "z".into(),
                    cause: vec!["x".into()],
                    side,
                    lags: lags.clone(),
                    measure: MeasureSpec::Hsncic {
                        lambda: 1e-3,
                        kernel: KernelPolicy::MedianGaussian,
                    },
                };
                let (value, _) = measure_value(&query, &panel)?;
                push("hsncic", conditioning, value);
            }

            for lag in [1usize, 2] {
                let query = CausalityQuery {
                    target: "z".into(),
                    cause: vec!["x".into()],
                    side: Vec::new(),
                    lags: LagSpec::new(vec![lag])?,
                    measure: MeasureSpec::TransferEntropy {
                        hist: HistogramSpec::default(),
                    },
                };
                let (value, _) = measure_value(&query, &panel)?;
                push(&format!("te-lag{lag}"), "none", value);
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;

    let mut csv = String::from("realisation,measure,conditioning,value\n");
    for row in rows.iter().flatten() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.realisation, row.measure, row.conditioning, row.value
        ));
    }
    std::fs::write(out_dir.join("nonlinear_values.csv"), csv)
        .map_err(|e| CliError::data(e.to_string()))?;
    eprintln!(
        "wrote {} ({} realisations)",
        out_dir.join("nonlinear_values.csv").display(),
        args.realisations
    );
    write_report_config(out_dir, "nonlinear-bench", args, seed)
}

fn write_report_config(
    out_dir: &Path,
    experiment: &str,
    args: &ReproduceArgs,
    seed: u64,
) -> Result<(), CliError> {
    #[derive(serde::Serialize)]
    struct ReportConfig<'a> {
        schema_version: u32,
        command: String,
        experiment: &'a str,
        seed: u64,
        permutations: usize,
        length: Option<usize>,
        realisations: usize,
        lag_sets: &'a str,
    }
    output::write_json(
        &out_dir.join("config.json"),
        &ReportConfig {
            schema_version: output::SCHEMA_VERSION,
            command: "reproduce".into(),
            experiment,
            seed,
            permutations: args.permutations,
            length: args.length,
            realisations: args.realisations,
            lag_sets: &args.lag_sets,
        },
    )
}
