//! Reading and writing transaction databases.
//!
//! Two formats are supported:
//!
//! * **item lines** — one transaction per line, `<response>\t<ids>` with the
//!   item ids separated by spaces. The id list may be empty. Lines starting
//!   with `#` and blank lines are skipped.
//! * **binary csv** — a header `y,f0,f1,…`, then one row per transaction
//!   holding the response followed by `0`/`1` indicators.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use selpat_core::dataset::{DatabaseOptions, Sigma};
use selpat_core::TransactionDatabase;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Database(#[from] selpat_core::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// `<response>\t<item ids>` per line.
    Items,
    /// `y,f0,…` header with 0/1 indicator columns.
    Csv,
}

impl Format {
    /// `.csv` files are read as binary csv, anything else as item lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Items,
        }
    }
}

/// Noise level given on the command line: a number or `sample`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaArg(pub Sigma);

impl FromStr for SigmaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("sample") {
            return Ok(SigmaArg(Sigma::Sample));
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(SigmaArg(Sigma::Known(v))),
            _ => Err(format!("expected a positive number or `sample`, got {s:?}")),
        }
    }
}

/// Raw transactions as read from disk, before validation and centering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub rows: Vec<Vec<u32>>,
    pub y: Vec<f64>,
    /// Number of items declared by the file (csv header), if any.
    pub items: Option<usize>,
}

impl RawData {
    pub fn into_database(self, opts: DatabaseOptions) -> Result<TransactionDatabase, IoError> {
        let opts = DatabaseOptions {
            items: opts.items.or(self.items),
            ..opts
        };
        Ok(TransactionDatabase::new(self.rows, self.y, opts)?)
    }
}

pub fn read_items<R: BufRead>(reader: R) -> Result<RawData, IoError> {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let response = fields.next().unwrap_or_default();
        let value: f64 = response
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid response {response:?}")))?;
        if !value.is_finite() {
            return Err(parse_err(lineno, "response is not finite"));
        }
        let mut items = fields
            .map(|f| {
                f.parse::<u32>()
                    .map_err(|_| parse_err(lineno, format!("invalid item id {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        items.sort_unstable();
        if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
            return Err(parse_err(lineno, format!("item {} listed twice", w[0])));
        }
        rows.push(items);
        y.push(value);
    }
    Ok(RawData {
        rows,
        y,
        items: None,
    })
}

pub fn read_csv<R: Read>(reader: R) -> Result<RawData, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("y") {
        return Err(parse_err(1, "first column must be `y`"));
    }
    let d = header.len() - 1;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let lineno = idx + 2;
        if record.len() != d + 1 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", d + 1, record.len()),
            ));
        }
        let value: f64 = record[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid response {:?}", &record[0])))?;
        let mut items = Vec::new();
        for (j, field) in record.iter().skip(1).enumerate() {
            match field {
                "1" => items.push(j as u32),
                "0" => {}
                other => {
                    return Err(parse_err(
                        lineno,
                        format!("feature f{j} must be 0 or 1, got {other:?}"),
                    ))
                }
            }
        }
        rows.push(items);
        y.push(value);
    }
    Ok(RawData {
        rows,
        y,
        items: Some(d),
    })
}

pub fn read_raw(path: &Path, format: Format) -> Result<RawData, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Items => read_items(BufReader::new(file)),
        Format::Csv => read_csv(file),
    }
}

pub fn load_database(
    path: &Path,
    format: Format,
    opts: DatabaseOptions,
) -> Result<TransactionDatabase, IoError> {
    read_raw(path, format)?.into_database(opts)
}

/// Writes item lines. Responses use the shortest exact decimal form, so
/// reading the output back yields bit-identical values.
pub fn write_items<W: Write>(mut w: W, rows: &[Vec<u32>], y: &[f64]) -> std::io::Result<()> {
    let mut line = String::new();
    for (row, v) in rows.iter().zip(y) {
        line.clear();
        write!(line, "{v}\t").unwrap();
        for (i, item) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            write!(line, "{item}").unwrap();
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(w: W, rows: &[Vec<u32>], y: &[f64], d: usize) -> Result<(), IoError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["y".to_string()];
    header.extend((0..d).map(|j| format!("f{j}")));
    wtr.write_record(&header)?;
    for (row, v) in rows.iter().zip(y) {
        let mut rec = vec![format!("{v}")];
        let mut flags = vec!["0"; d];
        for &i in row {
            flags[i as usize] = "1";
        }
        rec.extend(flags.into_iter().map(String::from));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_arg() {
        assert_eq!("sample".parse::<SigmaArg>().unwrap().0, Sigma::Sample);
        assert_eq!("0.5".parse::<SigmaArg>().unwrap().0, Sigma::Known(0.5));
        assert!("-1".parse::<SigmaArg>().is_err());
        assert!("abc".parse::<SigmaArg>().is_err());
    }

    #[test]
    fn items_sorted_on_read() {
        let raw = read_items("1.0\t3 1 2\n".as_bytes()).unwrap();
        assert_eq!(raw.rows, vec![vec![1, 2, 3]]);
    }

    #[test]
    fn csv_rejects_non_binary() {
        let err = read_csv("y,f0\n1.0,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 2, .. }));
    }
}
