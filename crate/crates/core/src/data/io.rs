//! Dataset readers and writers.
//!
//! Two formats are supported:
//!
//! * CSV: comma-separated, first row is a header, decimal-point reals.
//! * Sparse: one sample per line, `<target> <index>:<value> ...` with 1-based,
//!   strictly ascending indices; omitted indices are zero.
//!
//! Writers format every value with the shortest representation that parses
//! back to the same `f64`, so write-then-read is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    /// Sparse index:value lines. `n_features` fixes the width; when `None`
    /// the width is the largest index seen.
    Sparse { n_features: Option<usize> },
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "sparse" | "libsvm" => Ok(DataFormat::Sparse { n_features: None }),
            other => Err(Error::invalid(format!("unknown data format `{other}`"))),
        }
    }
}

/// Which CSV column holds the target. Ignored by the sparse format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    /// Zero-based column index.
    Index(usize),
}

impl FromStr for TargetColumn {
    type Err = Error;

    /// All-digit strings are column indices, anything else a column name.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty target column"));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(s.to_string()),
        })
    }
}

impl Default for TargetColumn {
    fn default() -> Self {
        TargetColumn::Name("y".into())
    }
}

pub fn load_dataset(path: &Path, format: DataFormat, target: &TargetColumn) -> Result<Dataset> {
    let file = File::open(path)?;
    read_dataset(file, path, format, target)
}

/// Reads a dataset from any reader; `origin` only labels error messages.
pub fn read_dataset<R: Read>(
    reader: R,
    origin: &Path,
    format: DataFormat,
    target: &TargetColumn,
) -> Result<Dataset> {
    match format {
        DataFormat::Csv => read_csv(reader, origin, target),
        DataFormat::Sparse { n_features } => read_sparse(reader, origin, n_features),
    }
}

fn parse_err(origin: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_csv<R: Read>(reader: R, origin: &Path, target: &TargetColumn) -> Result<Dataset> {
    let (features, targets, names) = read_csv_parts(reader, origin, target, true)?;
    Dataset::new(features, targets.unwrap_or_default())?.with_feature_names(names)
}

/// Feature rows for prediction. For CSV input the target column may be
/// absent, in which case every column is a feature.
pub fn load_features(
    path: &Path,
    format: DataFormat,
    target: &TargetColumn,
) -> Result<(DMatrix<f64>, Option<Vec<f64>>)> {
    match format {
        DataFormat::Csv => {
            let (features, targets, _) = read_csv_parts(File::open(path)?, path, target, false)?;
            Ok((features, targets))
        }
        DataFormat::Sparse { .. } => {
            let data = load_dataset(path, format, target)?;
            Ok((data.features, Some(data.targets)))
        }
    }
}

type CsvParts = (DMatrix<f64>, Option<Vec<f64>>, Vec<String>);

fn read_csv_parts<R: Read>(reader: R, origin: &Path, target: &TargetColumn, required: bool) -> Result<CsvParts> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::EmptyDataset(origin.to_path_buf()));
    }
    let width = headers.len();
    let target_idx = match target {
        TargetColumn::Name(name) => headers.iter().position(|h| h == name),
        TargetColumn::Index(i) => Some(*i).filter(|&i| i < width),
    };
    if required && target_idx.is_none() {
        return Err(Error::MissingTarget(match target {
            TargetColumn::Name(name) => name.clone(),
            TargetColumn::Index(i) => i.to_string(),
        }));
    }
    let mut n_rows = 0usize;

    let mut values = Vec::new();
    let mut targets = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(parse_err(
                origin,
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        n_rows += 1;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(origin, line, format!("non-numeric value `{cell}` in column `{}`", headers[j]))
            })?;
            if !v.is_finite() {
                return Err(parse_err(origin, line, format!("non-finite value in column `{}`", headers[j])));
            }
            if Some(j) == target_idx {
                targets.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if n_rows == 0 {
        return Err(Error::EmptyDataset(origin.to_path_buf()));
    }
    let d = width - usize::from(target_idx.is_some());
    let features = DMatrix::from_row_slice(n_rows, d, &values);
    let names = headers
        .into_iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != target_idx)
        .map(|(_, h)| h)
        .collect();
    Ok((features, target_idx.map(|_| targets), names))
}

fn read_sparse<R: Read>(reader: R, origin: &Path, n_features: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        let y: f64 = head
            .parse()
            .map_err(|_| parse_err(origin, lineno, format!("non-numeric target `{head}`")))?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(origin, lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(origin, lineno, format!("bad index `{idx}`")))?;
            if idx == 0 || idx <= last {
                return Err(parse_err(origin, lineno, "indices must be 1-based and ascending"));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(origin, lineno, format!("non-numeric value `{val}`")))?;
            if !val.is_finite() || !y.is_finite() {
                return Err(parse_err(origin, lineno, "non-finite value"));
            }
            if let Some(d) = n_features {
                if idx > d {
                    return Err(parse_err(origin, lineno, format!("index {idx} exceeds {d} features")));
                }
            }
            last = idx;
            entries.push((idx - 1, val));
        }
        max_index = max_index.max(last);
        rows.push(entries);
        targets.push(y);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(origin.to_path_buf()));
    }
    let d = n_features.unwrap_or(max_index);
    let mut features = DMatrix::zeros(rows.len(), d);
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            features[(i, j)] = v;
        }
    }
    Dataset::new(features, targets)
}

/// Writes `data` in the given format. CSV puts the target last, under
/// `target_name`; features use the stored names or `x1..xd`.
pub fn write_dataset<W: Write>(
    mut out: W,
    data: &Dataset,
    format: DataFormat,
    target_name: &str,
) -> Result<()> {
    let (n, d) = (data.n_samples(), data.n_features());
    match format {
        DataFormat::Csv => {
            let names: Vec<String> = match &data.feature_names {
                Some(names) => names.clone(),
                None => (1..=d).map(|j| format!("x{j}")).collect(),
            };
            let mut header = names.join(",");
            if !header.is_empty() {
                header.push(',');
            }
            header.push_str(target_name);
            writeln!(out, "{header}")?;
            for i in 0..n {
                let mut line = String::new();
                for j in 0..d {
                    line.push_str(&format!("{},", data.features[(i, j)]));
                }
                line.push_str(&format!("{}", data.targets[i]));
                writeln!(out, "{line}")?;
            }
        }
        DataFormat::Sparse { .. } => {
            for i in 0..n {
                let mut line = format!("{}", data.targets[i]);
                for j in 0..d {
                    let v = data.features[(i, j)];
                    // -0.0 is written so the round trip stays bit-exact
                    if v.to_bits() != 0 {
                        line.push_str(&format!(" {}:{}", j + 1, v));
                    }
                }
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn csv(text: &str, target: &str) -> Result<Dataset> {
        read_dataset(text.as_bytes(), Path::new("t.csv"), DataFormat::Csv, &target.parse().unwrap())
    }

    #[test]
    fn csv_with_header() {
        let ds = csv("a,b,y\n1,2,3\n4,5,6", "y").unwrap();
        assert_eq!(ds.rows(), vec![vec![1.0, 2.0], vec![4.0, 5.0]]);
        assert_eq!(ds.targets, vec![3.0, 6.0]);
        assert_eq!(ds.feature_names.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));
    }

    #[test]
    fn csv_target_by_index() {
        let ds = csv("a,b,y\n1,2,3\n4,5,6", "0").unwrap();
        assert_eq!(ds.targets, vec![1.0, 4.0]);
        assert_eq!(ds.rows(), vec![vec![2.0, 3.0], vec![5.0, 6.0]]);
    }

    #[test]
    fn csv_wrong_width_names_line() {
        let err = csv("a,b,y\n1,2,3\n4,5\n", "y").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(csv("a,b,y\n1,2,3\n4,5\n", "y").unwrap_err().to_string().contains(":3:"));
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(csv("a,b\n1,2\n", "y"), Err(Error::MissingTarget(_))));
        assert!(matches!(csv("a,y\n1,x\n", "y"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(csv("", "y"), Err(Error::EmptyDataset(_))));
        assert!(matches!(csv("a,y\n", "y"), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn sparse_line() {
        let fmt = DataFormat::Sparse { n_features: Some(4) };
        let ds = read_dataset("3 1:0.5 4:1.0\n".as_bytes(), Path::new("s"), fmt, &TargetColumn::default()).unwrap();
        assert_eq!(ds.rows(), vec![vec![0.5, 0.0, 0.0, 1.0]]);
        assert_eq!(ds.targets, vec![3.0]);

        let inferred = DataFormat::Sparse { n_features: None };
        let ds = read_dataset("1 2:1\n2 1:1 3:2\n".as_bytes(), Path::new("s"), inferred, &TargetColumn::default()).unwrap();
        assert_eq!(ds.n_features(), 3);
    }

    #[test]
    fn sparse_rejects_unordered_and_out_of_range() {
        let fmt = DataFormat::Sparse { n_features: Some(2) };
        let t = TargetColumn::default();
        assert!(matches!(
            read_dataset("1 2:1 1:1\n".as_bytes(), Path::new("s"), fmt, &t),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_dataset("1 1:1\n1 3:1\n".as_bytes(), Path::new("s"), fmt, &t),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_dataset("1 0:1\n".as_bytes(), Path::new("s"), fmt, &t).is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6f64,
            Just(0.0),
            Just(-0.0),
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
        ]
    }

    proptest! {
        #[test]
        fn write_read_is_bit_exact(
            rows in prop::collection::vec(prop::collection::vec(finite(), 3), 1..8),
            sparse in any::<bool>(),
        ) {
            let targets: Vec<f64> = rows.iter().map(|r| r[0] * 0.5).collect();
            let ds = Dataset::from_rows(&rows, targets).unwrap();
            let fmt = if sparse { DataFormat::Sparse { n_features: Some(3) } } else { DataFormat::Csv };
            let mut buf = Vec::new();
            write_dataset(&mut buf, &ds, fmt, "y").unwrap();
            let back = read_dataset(&buf[..], Path::new("rt"), fmt, &TargetColumn::default()).unwrap();
            let bits = |d: &Dataset| d.features.iter().chain(&d.targets).map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&ds), bits(&back));
        }
    }
}
