//! Datasets and CSV input/output.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Paired inputs and targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array1<f64>,
    /// One label per input column, when known.
    pub column_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, targets: Array1<f64>) -> Result<Self> {
        let d = Dataset {
            inputs,
            targets,
            column_names: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        check_dim(self.n_features(), names.len())?;
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.inputs.nrows(), self.targets.len())?;
        if self.inputs.ncols() == 0 {
            return invalid("dataset needs at least one input column");
        }
        if let Some(names) = &self.column_names {
            check_dim(self.inputs.ncols(), names.len())?;
        }
        if !self.inputs.iter().chain(self.targets.iter()).all(|v| v.is_finite()) {
            return invalid("dataset contains non-finite values");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.inputs.row(i)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            inputs: self.inputs.select(Axis(0), idx),
            targets: self.targets.select(Axis(0), idx),
            column_names: self.column_names.clone(),
        }
    }

    /// Contiguous row range `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Dataset {
        let idx: Vec<usize> = (start..end).collect();
        self.select_rows(&idx)
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<Dataset> {
        if idx.is_empty() {
            return invalid("column selection is empty");
        }
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.n_features()) {
            return invalid(format!("column index {bad} out of range (n = {})", self.n_features()));
        }
        Ok(Dataset {
            inputs: self.inputs.select(Axis(1), idx).as_standard_layout().into_owned(),
            targets: self.targets.clone(),
            column_names: self
                .column_names
                .as_ref()
                .map(|names| idx.iter().map(|&j| names[j].clone()).collect()),
        })
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        check_dim(self.n_features(), other.n_features())?;
        let inputs = ndarray::concatenate(Axis(0), &[self.inputs.view(), other.inputs.view()])
            .expect("matching column counts");
        let targets = ndarray::concatenate(Axis(0), &[self.targets.view(), other.targets.view()])
            .expect("vectors");
        Ok(Dataset {
            inputs,
            targets,
            column_names: self.column_names.clone(),
        })
    }

    pub fn target_range(&self) -> f64 {
        let (lo, hi) = self
            .targets
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

/// How a CSV file maps onto a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Target column index; `None` means the last column.
    pub target_column: Option<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            target_column: None,
        }
    }
}

pub fn read_csv_from<R: Read>(reader: R, opts: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Option<Vec<String>> = if opts.has_header {
        Some(rdr.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return invalid(format!("row {} has {} fields, expected {w}", line + 1, rec.len()));
            }
            _ => {}
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| crate::Error::InvalidInput(format!("row {}: cannot parse {field:?} as a number", line + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let Some(width) = width else {
        return invalid("CSV input has no data rows");
    };
    if width < 2 {
        return invalid("CSV input needs at least one feature column and a target column");
    }
    let target = opts.target_column.unwrap_or(width - 1);
    if target >= width {
        return invalid(format!("target column {target} out of range ({width} columns)"));
    }
    let all = Array2::from_shape_vec((rows, width), values).expect("shape");
    let feature_idx: Vec<usize> = (0..width).filter(|&j| j != target).collect();
    let inputs = all.select(Axis(1), &feature_idx);
    let targets = all.column(target).to_owned();
    let mut d = Dataset::new(inputs, targets)?;
    if let Some(h) = header {
        d.column_names = Some(feature_idx.iter().map(|&j| h[j].clone()).collect());
    }
    Ok(d)
}

pub fn read_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let f = std::fs::File::open(path)?;
    read_csv_from(std::io::BufReader::new(f), opts)
}

/// Writes features then target, with a header row.
pub fn write_csv_to<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match &data.column_names {
        Some(names) => names.clone(),
        None => (0..data.n_features()).map(|j| format!("x{j}")).collect(),
    };
    header.push("y".to_owned());
    w.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for i in 0..data.len() {
        rec.clear();
        rec.extend(data.inputs.row(i).iter().map(|v| format_float(*v)));
        rec.push(format_float(data.targets[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv_to(std::io::BufWriter::new(f), data)
}

/// Shortest decimal representation that round-trips exactly.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Column means and standard deviations (population); zero deviations map to 1.
pub fn column_moments(x: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    // Explicit row-order sums keep the result independent of memory layout.
    let m = x.nrows().max(1) as f64;
    let mut mean = Array1::zeros(x.ncols());
    let mut sd = Array1::zeros(x.ncols());
    for (j, col) in x.axis_iter(Axis(1)).enumerate() {
        mean[j] = col.iter().sum::<f64>() / m;
        let v = col.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / m;
        sd[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
    }
    (mean, sd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_round_trip_preserves_values() {
        let d = Dataset::new(array![[0.1, -2.0], [1e-17, 3.5]], array![1.0 / 3.0, -0.0])
            .unwrap()
            .with_column_names(vec!["a".into(), "b".into()])
            .unwrap();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &d).unwrap();
        let back = read_csv_from(buf.as_slice(), &CsvOptions::default()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn target_column_selection() {
        let text = "1,10,2\n3,30,4\n";
        let opts = CsvOptions {
            has_header: false,
            target_column: Some(1),
        };
        let d = read_csv_from(text.as_bytes(), &opts).unwrap();
        assert_eq!(d.targets, array![10.0, 30.0]);
        assert_eq!(d.inputs, array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let opts = CsvOptions {
            has_header: false,
            target_column: None,
        };
        assert!(read_csv_from("1,2\n3\n".as_bytes(), &opts).is_err());
        assert!(read_csv_from("1,x\n".as_bytes(), &opts).is_err());
        assert!(read_csv_from("".as_bytes(), &opts).is_err());
        let opts = CsvOptions {
            has_header: false,
            target_column: Some(5),
        };
        assert!(read_csv_from("1,2\n".as_bytes(), &opts).is_err());
    }

    #[test]
    fn row_and_column_selection() {
        let d = Dataset::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], array![1.0, 2.0, 3.0]).unwrap();
        let r = d.select_rows(&[2, 0]);
        assert_eq!(r.targets, array![3.0, 1.0]);
        let c = d.select_columns(&[1]).unwrap();
        assert_eq!(c.inputs, array![[2.0], [4.0], [6.0]]);
        assert!(d.select_columns(&[]).is_err());
        let both = d.slice_rows(0, 1).concat(&d.slice_rows(2, 3)).unwrap();
        assert_eq!(both.targets, array![1.0, 3.0]);
    }
}
