//! Time-series ingestion, alignment and the standard preprocessing
//! transforms (log returns, demeaning, detrending, differencing, window
//! slicing).
//!
//! A [`TimeSeriesPanel`] is a rectangular block of aligned, named, finite
//! real-valued columns with an optional ordered label index. Panels are
//! immutable: every transform returns a new panel, so they can be shared
//! freely across threads.

use std::io::Read;
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{CausalError, Result};

/// Options controlling CSV ingestion.
#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    /// Field delimiter, comma by default.
    pub delimiter: u8,
    /// Treat the first column as an ordered label index instead of data.
    pub first_column_is_index: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            first_column_is_index: false,
        }
    }
}

/// An aligned multivariate time series with named columns.
///
/// Invariants: all columns share the same length (at least 1), names are
/// unique and non-empty, every value is finite, and the label index (when
/// present) is strictly increasing with one label per row. Timestamps are
/// opaque labels used only for output annotation; all lag arithmetic is
/// positional.
#[derive(Debug, Clone)]
pub struct TimeSeriesPanel {
    columns: IndexMap<String, Vec<f64>>,
    index: Option<Vec<String>>,
    length: usize,
}

impl TimeSeriesPanel {
    /// Builds a panel from `(name, values)` pairs, validating every invariant.
    pub fn new(columns: Vec<(String, Vec<f64>)>, index: Option<Vec<String>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(CausalError::InvalidParameter(
                "panel requires at least one column".into(),
            ));
        }
        let length = columns[0].1.len();
        if length == 0 {
            return Err(CausalError::LengthTooShort {
                required: 1,
                actual: 0,
            });
        }
        let mut map = IndexMap::with_capacity(columns.len());
        for (name, values) in columns {
            if name.is_empty() {
                return Err(CausalError::InvalidParameter(
                    "column names must be non-empty".into(),
                ));
            }
            if values.len() != length {
                return Err(CausalError::LengthMismatch {
                    left: length,
                    right: values.len(),
                });
            }
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(CausalError::ParseError { row, column: name });
            }
            if map.insert(name.clone(), values).is_some() {
                return Err(CausalError::DuplicateColumnName { name });
            }
        }
        if let Some(labels) = &index {
            if labels.len() != length {
                return Err(CausalError::LengthMismatch {
                    left: length,
                    right: labels.len(),
                });
            }
            if labels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CausalError::InvalidParameter(
                    "index labels must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            columns: map,
            index,
            length,
        })
    }

    /// Reads a panel from a headed CSV file. Rows with any unparsable,
    /// missing or non-finite cell are an error; nothing is imputed.
    pub fn load_csv<P: AsRef<Path>>(path: P, options: CsvOptions) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CausalError::FileNotFound {
                    path: path.display().to_string(),
                }
            } else {
                CausalError::Io(e)
            }
        })?;
        Self::read_csv(file, options)
    }

    /// Reads a panel in CSV form from any reader. See [`Self::load_csv`].
    pub fn read_csv<R: Read>(reader: R, options: CsvOptions) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(options.delimiter)
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);

        let headers: Vec<String> = rdr
            .headers()
            .map_err(|_| CausalError::EmptyFile)?
            .iter()
            .map(str::to_owned)
            .collect();
        if headers.is_empty() || (options.first_column_is_index && headers.len() < 2) {
            return Err(CausalError::EmptyFile);
        }
        let data_start = usize::from(options.first_column_is_index);
        for (i, name) in headers.iter().enumerate().skip(data_start) {
            if headers[data_start..i].contains(name) {
                return Err(CausalError::DuplicateColumnName { name: name.clone() });
            }
        }

        let mut values: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - data_start];
        let mut labels: Vec<String> = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|_| CausalError::ParseError {
                row,
                column: headers[data_start].clone(),
            })?;
            if record.len() != headers.len() {
                // A short row means a missing cell in the first absent column.
                let col = record.len().min(headers.len() - 1);
                return Err(CausalError::ParseError {
                    row,
                    column: headers[col].clone(),
                });
            }
            if options.first_column_is_index {
                labels.push(record[0].to_string());
            }
            for (i, cell) in record.iter().enumerate().skip(data_start) {
                let parsed = cell.trim().parse::<f64>();
                match parsed {
                    Ok(v) if v.is_finite() => values[i - data_start].push(v),
                    _ => {
                        return Err(CausalError::ParseError {
                            row,
                            column: headers[i].clone(),
                        })
                    }
                }
            }
        }
        if values[0].is_empty() {
            return Err(CausalError::EmptyFile);
        }

        let columns = headers[data_start..]
            .iter()
            .cloned()
            .zip(values)
            .collect();
        Self::new(columns, options.first_column_is_index.then_some(labels))
    }

    /// Writes the panel as CSV. The label index, when present, is emitted
    /// as a leading `index` column.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = Vec::with_capacity(self.columns.len() + 1);
        if self.index.is_some() {
            header.push("index");
        }
        header.extend(self.column_names());
        wtr.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for row in 0..self.length {
            record.clear();
            if let Some(labels) = &self.index {
                record.push(labels[row].clone());
            }
            for values in self.columns.values() {
                record.push(format!("{}", values[row]));
            }
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.length
    }

    /// Always false: a panel has at least one row by construction.
    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    /// Number of columns.
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Column names in panel order.
    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    /// Values of a named column.
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| CausalError::UnknownColumn { name: name.into() })
    }

    /// The label index, when one was ingested.
    pub fn index(&self) -> Option<&[String]> {
        self.index.as_deref()
    }

    /// Returns a panel with the named columns replaced by logarithmic
    /// returns `r_t = ln(c_t / c_{t-1})`. The panel shrinks by one row;
    /// unselected columns drop their first row to stay aligned.
    pub fn log_returns(&self, columns: &[&str]) -> Result<Self> {
        if self.length < 2 {
            return Err(CausalError::LengthTooShort {
                required: 2,
                actual: self.length,
            });
        }
        for &name in columns {
            let values = self.column(name)?;
            if let Some(row) = values.iter().position(|&v| v <= 0.0) {
                return Err(CausalError::NonPositiveValue {
                    column: name.into(),
                    row,
                    value: values[row],
                });
            }
        }
        self.map_columns(|name, values| {
            if columns.contains(&name) {
                values.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
            } else {
                values[1..].to_vec()
            }
        })
    }

    /// Subtracts each column's sample mean.
    pub fn demean(&self) -> Result<Self> {
        let n = self.length as f64;
        let columns = self
            .columns
            .iter()
            .map(|(name, values)| {
                let mean = values.iter().sum::<f64>() / n;
                (name.clone(), values.iter().map(|v| v - mean).collect())
            })
            .collect();
        Self::new(columns, self.index.clone())
    }

    /// Subtracts the per-column least-squares line over the integer time
    /// axis `0..n-1`.
    pub fn detrend(&self) -> Result<Self> {
        if self.length < 2 {
            return Err(CausalError::LengthTooShort {
                required: 2,
                actual: self.length,
            });
        }
        let n = self.length as f64;
        let t_mean = (n - 1.0) / 2.0;
        // Closed form for sum of squared centered integers 0..n-1.
        let t_ss = n * (n * n - 1.0) / 12.0;
        let columns = self
            .columns
            .iter()
            .map(|(name, values)| {
                let mean = values.iter().sum::<f64>() / n;
                let cov: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(t, v)| (t as f64 - t_mean) * (v - mean))
                    .sum();
                let slope = cov / t_ss;
                let detrended = values
                    .iter()
                    .enumerate()
                    .map(|(t, v)| v - mean - slope * (t as f64 - t_mean))
                    .collect();
                (name.clone(), detrended)
            })
            .collect();
        Self::new(columns, self.index.clone())
    }

    /// Replaces each column by its first differences; the panel shrinks by
    /// one row.
    pub fn difference(&self) -> Result<Self> {
        if self.length < 2 {
            return Err(CausalError::LengthTooShort {
                required: 2,
                actual: self.length,
            });
        }
        self.map_columns(|_, values| values.windows(2).map(|w| w[1] - w[0]).collect())
    }

    /// Contiguous row slice keeping every column and the index labels.
    pub fn window(&self, start: usize, length: usize) -> Result<Self> {
        if length == 0 || start + length > self.length {
            return Err(CausalError::OutOfRange {
                start,
                length,
                panel_length: self.length,
            });
        }
        let columns = self
            .columns
            .iter()
            .map(|(name, values)| (name.clone(), values[start..start + length].to_vec()))
            .collect();
        let index = self
            .index
            .as_ref()
            .map(|labels| labels[start..start + length].to_vec());
        Self::new(columns, index)
    }

    /// Applies a per-column transform that drops the first row.
    fn map_columns<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&str, &[f64]) -> Vec<f64>,
    {
        let columns = self
            .columns
            .iter()
            .map(|(name, values)| (name.clone(), f(name, values)))
            .collect();
        let index = self.index.as_ref().map(|labels| labels[1..].to_vec());
        Self::new(columns, index)
    }
}
