//! Output serialization. Every file embeds the fully resolved
//! configuration: JSON documents carry it as a `config` object, CSV files
//! as a leading `# config: {...}` comment line. stdout and files carry
//! data only; human messages go to stderr.

use std::io::Write;
use std::path::Path;

use causal_kit_core::MeasureResult;
use serde::Serialize;

use crate::config::ConfigEcho;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct TestDocument<'a> {
    pub config: &'a ConfigEcho,
    pub observed: f64,
    pub p_value: f64,
    pub surrogates: &'a [f64],
}

#[derive(Serialize)]
pub struct MatrixDocument<'a> {
    pub config: &'a ConfigEcho,
    pub columns: &'a [String],
    /// Row-major; entry (i, j) is the p-value for "column j causes column
    /// i"; `null` on the diagonal.
    pub p_values: Vec<Vec<Option<f64>>>,
}

#[derive(Serialize)]
pub struct ScanRow {
    pub window_start: usize,
    pub window_end: usize,
    pub dir: String,
    pub value: f64,
    pub p_value: f64,
}

#[derive(Serialize)]
pub struct ScanDocument<'a> {
    pub config: &'a ConfigEcho,
    pub rows: &'a [ScanRow],
}

fn create(path: &Path) -> Result<std::fs::File, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::File::create(path)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, document: &T) -> Result<(), CliError> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, document)
        .map_err(|e| CliError::data(format!("cannot serialize {}: {e}", path.display())))?;
    file.write_all(b"\n")
        .map_err(|e| CliError::data(e.to_string()))
}

fn config_comment(config: &ConfigEcho) -> Result<String, CliError> {
    serde_json::to_string(config)
        .map(|json| format!("# config: {json}\n"))
        .map_err(|e| CliError::data(e.to_string()))
}

pub fn write_test_csv(
    path: &Path,
    config: &ConfigEcho,
    result: &MeasureResult,
) -> Result<(), CliError> {
    let mut out = config_comment(config)?;
    out.push_str("field,index,value\n");
    out.push_str(&format!("observed,,{}\n", result.observed));
    out.push_str(&format!("p_value,,{}\n", result.p_value));
    for (i, s) in result.surrogates.iter().enumerate() {
        out.push_str(&format!("surrogate,{},{s}\n", i + 1));
    }
    create(path)?
        .write_all(out.as_bytes())
        .map_err(|e| CliError::data(e.to_string()))
}

pub fn write_matrix_csv(
    path: &Path,
    config: &ConfigEcho,
    columns: &[String],
    matrix: &nalgebra::DMatrix<f64>,
) -> Result<(), CliError> {
    let mut out = config_comment(config)?;
    out.push_str("target\\cause");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (i, row_name) in columns.iter().enumerate() {
        out.push_str(row_name);
        for j in 0..columns.len() {
            out.push(',');
            if i != j {
                out.push_str(&matrix[(i, j)].to_string());
            }
        }
        out.push('\n');
    }
    create(path)?
        .write_all(out.as_bytes())
        .map_err(|e| CliError::data(e.to_string()))
}

pub fn write_scan_csv(
    path: &Path,
    config: &ConfigEcho,
    rows: &[ScanRow],
) -> Result<(), CliError> {
    let mut out = config_comment(config)?;
    out.push_str("window_start,window_end,dir,value,p_value\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.window_start, row.window_end, row.dir, row.value, row.p_value
        ));
    }
    create(path)?
        .write_all(out.as_bytes())
        .map_err(|e| CliError::data(e.to_string()))
}

/// `out.csv` gets a `out.json` twin; any other path is treated as a stem.
pub fn twin_paths(out: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let path = Path::new(out);
    if path.extension().is_some_and(|e| e == "csv") {
        (path.to_path_buf(), path.with_extension("json"))
    } else if path.extension().is_some_and(|e| e == "json") {
        (path.with_extension("csv"), path.to_path_buf())
    } else {
        (
            path.with_extension("csv"),
            path.with_extension("json"),
        )
    }
}

pub fn matrix_to_nullable(matrix: &nalgebra::DMatrix<f64>) -> Vec<Vec<Option<f64>>> {
    (0..matrix.nrows())
        .map(|i| {
            (0..matrix.ncols())
                .map(|j| {
                    let v = matrix[(i, j)];
                    (!v.is_nan()).then_some(v)
                })
                .collect()
        })
        .collect()
}
